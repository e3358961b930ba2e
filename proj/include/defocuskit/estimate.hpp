#pragma once

#include <vector>

#include "defocuskit/core.hpp"
#include "defocuskit/image.hpp"

namespace dk {

enum class SharpnessStat {
    MaxGradient,    // per band position: max gradient magnitude across the band
    Percentile95    // 95th percentile; more robust to hot pixels
};

// A rectangular sub-image containing the image of a straight sharp edge that
// runs along the banded axis, so every band crosses it.
struct GuideStar {
    Image region;
    Orientation orientation = Orientation::ColumnBands;
    SharpnessStat stat = SharpnessStat::MaxGradient;
};

struct SharpnessCurve {
    std::vector<double> values;       // one per position along the banded axis
    int fit_start = 0, fit_end = 0;   // [fit_start, fit_end) used for slope fits
};

// Central-difference gradient magnitude, reduced across the band per the
// chosen statistic. fit_range defaults to [argmax, 85% of length).
SharpnessCurve sharpness_curve(const GuideStar& gs);

// Zone index (1-based) of the sharpest band: round(argmax / dof_size) after a
// 3-tap moving average, clamped to >= 1. Throws EstimationError on a flat curve.
int estimate_focal_position(const SharpnessCurve& curve, int dof_size);

struct BlurEstimate {
    double blur_coefficient = 0.0;
    double guide_slope = 0.0;                 // |least-squares slope| of the guide star
    std::vector<double> candidate_slopes;     // same measure per candidate d
    bool clamped = false;                     // guide slope fell outside the candidate range
};

// Grid search: a simulated sharp edge is pushed through the forward model for
// every candidate d; the candidate whose sharpness-curve slope matches the
// guide star's (with linear interpolation between brackets) is returned.
// Candidates must be >= 2 and sorted ascending.
BlurEstimate estimate_blur_coefficient(const GuideStar& gs, const std::vector<double>& candidates,
                                       const DefocusModel& model_template);

}  // namespace dk
