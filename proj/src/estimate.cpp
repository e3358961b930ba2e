#include "defocuskit/estimate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "defocuskit/blur.hpp"
#include "defocuskit/errors.hpp"
#include "defocuskit/parallel.hpp"

namespace dk {

namespace {

// Central differences inside, one-sided at the borders.
double gradient_magnitude(const Image& im, int r, int c) {
    const int r0 = std::max(0, r - 1), r1 = std::min(im.height - 1, r + 1);
    const int c0 = std::max(0, c - 1), c1 = std::min(im.width - 1, c + 1);
    const double gy = (im.at(r1, c) - im.at(r0, c)) / (r1 - r0);
    const double gx = (im.at(r, c1) - im.at(r, c0)) / (c1 - c0);
    return std::sqrt(gx * gx + gy * gy);
}

double reduce_band(std::vector<double>& column, SharpnessStat stat) {
    if (stat == SharpnessStat::MaxGradient) return *std::max_element(column.begin(), column.end());
    std::sort(column.begin(), column.end());
    const double pos = 0.95 * (column.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(lo + 1, column.size() - 1);
    const double frac = pos - lo;
    return column[lo] * (1.0 - frac) + column[hi] * frac;
}

std::vector<double> smooth3(const std::vector<double>& v) {
    std::vector<double> out(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        double acc = v[i];
        int n = 1;
        if (i > 0) { acc += v[i - 1]; ++n; }
        if (i + 1 < v.size()) { acc += v[i + 1]; ++n; }
        out[i] = acc / n;
    }
    return out;
}

// Least-squares slope of values over [begin, end).
double fit_slope(const std::vector<double>& values, int begin, int end) {
    const int n = end - begin;
    if (n < 2) throw EstimationError("slope fit needs at least two samples");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = begin; i < end; ++i) {
        const double x = i - begin;
        sx += x;
        sy += values[i];
        sxx += x * x;
        sxy += x * values[i];
    }
    const double denom = n * sxx - sx * sx;
    return (n * sxy - sx * sy) / denom;
}

double slope_measure(const SharpnessCurve& curve) {
    return std::abs(fit_slope(curve.values, curve.fit_start, curve.fit_end));
}

}  // namespace

SharpnessCurve sharpness_curve(const GuideStar& gs) {
    const Image& region = gs.region;
    if (region.height < 2 || region.width < 2)
        throw std::invalid_argument("sharpness_curve: region must be at least 2x2");

    const bool banded_cols = gs.orientation == Orientation::ColumnBands;
    const int n_band = banded_cols ? region.width : region.height;
    const int n_perp = banded_cols ? region.height : region.width;

    SharpnessCurve curve;
    curve.values.resize(n_band);
    std::vector<double> column(n_perp);
    for (int b = 0; b < n_band; ++b) {
        for (int p = 0; p < n_perp; ++p) {
            const int r = banded_cols ? p : b;
            const int c = banded_cols ? b : p;
            column[p] = gradient_magnitude(region, r, c);
        }
        curve.values[b] = reduce_band(column, gs.stat);
    }
    const int argmax =
        static_cast<int>(std::max_element(curve.values.begin(), curve.values.end()) - curve.values.begin());
    curve.fit_start = argmax;
    curve.fit_end = std::max(argmax + 2, static_cast<int>(0.85 * n_band));
    curve.fit_end = std::min(curve.fit_end, n_band);
    return curve;
}

int estimate_focal_position(const SharpnessCurve& curve, int dof_size) {
    if (curve.values.empty()) throw std::invalid_argument("estimate_focal_position: empty curve");
    if (dof_size < 1) throw std::invalid_argument("estimate_focal_position: dof_size must be >= 1");
    const std::vector<double> smoothed = smooth3(curve.values);
    const auto mm = std::minmax_element(smoothed.begin(), smoothed.end());
    if (*mm.second - *mm.first <= 1e-12 * std::max(1.0, *mm.second))
        throw EstimationError("estimate_focal_position: flat sharpness curve");
    const int argmax = static_cast<int>(mm.second - smoothed.begin());
    const int zone = static_cast<int>(std::lround(static_cast<double>(argmax) / dof_size));
    return std::max(1, zone);
}

BlurEstimate estimate_blur_coefficient(const GuideStar& gs, const std::vector<double>& candidates,
                                       const DefocusModel& model_template) {
    if (candidates.size() < 2) throw std::invalid_argument("estimate_blur_coefficient: need >= 2 candidates");
    if (!std::is_sorted(candidates.begin(), candidates.end()))
        throw std::invalid_argument("estimate_blur_coefficient: candidates must be sorted ascending");
    model_template.validate();

    BlurEstimate est;
    est.guide_slope = slope_measure(sharpness_curve(gs));
    est.candidate_slopes.resize(candidates.size());

    // The simulated edge: a unit step across the perpendicular axis, spanning
    // the full banded extent so every zone crosses it.
    const bool banded_cols = model_template.orientation == Orientation::ColumnBands;
    const int perp = std::max(banded_cols ? gs.region.height : gs.region.width, 8);
    const int banded = model_template.banded_extent();
    const int obj_h = banded_cols ? perp : banded;
    const int obj_w = banded_cols ? banded : perp;
    Image edge(obj_h, obj_w, 0.0);
    for (int r = 0; r < obj_h; ++r)
        for (int c = 0; c < obj_w; ++c) {
            const int p = banded_cols ? r : c;
            if (p >= perp / 2) edge.at(r, c) = 1.0;
        }

    parallel_for(static_cast<int>(candidates.size()), [&](int idx) {
        DefocusModel m = model_template;
        m.blur_coefficient = candidates[idx];
        BlurOperator op(m, obj_h, obj_w);
        const Image data = op.apply(edge);
        GuideStar sim;
        sim.region = central_crop(data, obj_h, obj_w);
        sim.orientation = gs.orientation;
        sim.stat = gs.stat;
        est.candidate_slopes[idx] = slope_measure(sharpness_curve(sim));
    });

    for (std::size_t i = 1; i < est.candidate_slopes.size(); ++i) {
        if (est.candidate_slopes[i] <= est.candidate_slopes[i - 1]) {
            char msg[160];
            std::snprintf(msg, sizeof(msg),
                          "candidate slope curve not increasing between d=%.4g and d=%.4g; "
                          "check PSF sampling",
                          candidates[i - 1], candidates[i]);
            emit_warning(msg);
        }
    }

    const double target = est.guide_slope;
    if (target <= est.candidate_slopes.front()) {
        est.blur_coefficient = candidates.front();
        est.clamped = target < est.candidate_slopes.front();
        if (est.clamped) emit_warning("guide-star slope below candidate range; estimate clamped to smallest d");
        return est;
    }
    if (target >= est.candidate_slopes.back()) {
        est.blur_coefficient = candidates.back();
        est.clamped = target > est.candidate_slopes.back();
        if (est.clamped) emit_warning("guide-star slope above candidate range; estimate clamped to largest d");
        return est;
    }
    for (std::size_t i = 1; i < candidates.size(); ++i) {
        const double s0 = est.candidate_slopes[i - 1], s1 = est.candidate_slopes[i];
        if (target <= s1 && target >= s0 && s1 > s0) {
            const double frac = (target - s0) / (s1 - s0);
            est.blur_coefficient = candidates[i - 1] + frac * (candidates[i] - candidates[i - 1]);
            return est;
        }
    }
    // non-monotone curve: fall back to the closest candidate
    std::size_t best = 0;
    for (std::size_t i = 1; i < candidates.size(); ++i)
        if (std::abs(est.candidate_slopes[i] - target) < std::abs(est.candidate_slopes[best] - target)) best = i;
    est.blur_coefficient = candidates[best];
    return est;
}

}  // namespace dk
