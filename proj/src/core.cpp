#include "defocuskit/core.hpp"

#include <cmath>
#include <cstdio>
#include <limits>
#include <random>
#include <stdexcept>

namespace dk {

Orientation parse_orientation(const std::string& s) {
    if (s == "rows" || s == "row" || s == "RowBands") return Orientation::RowBands;
    if (s == "columns" || s == "cols" || s == "column" || s == "ColumnBands") return Orientation::ColumnBands;
    throw std::invalid_argument("unknown orientation '" + s + "' (expected rows|columns)");
}

std::string to_string(Orientation o) { return o == Orientation::RowBands ? "rows" : "columns"; }

void DefocusModel::validate() const {
    if (n_zones < 1) throw std::invalid_argument("DefocusModel: n_zones must be >= 1");
    if (dof_size < 1) throw std::invalid_argument("DefocusModel: dof_size must be >= 1");
    if (psf_size < 1 || psf_size % 2 == 0) throw std::invalid_argument("DefocusModel: psf_size must be odd and >= 1");
    if (aperture.grid_size != psf_size)
        throw std::invalid_argument("DefocusModel: aperture.grid_size must equal psf_size");
    if (!(aperture.pupil_radius_fraction > 0.0) || aperture.pupil_radius_fraction > 1.0)
        throw std::invalid_argument("DefocusModel: pupil_radius_fraction must be in (0,1]");
    if (!std::isfinite(blur_coefficient) || !std::isfinite(focal_position))
        throw std::invalid_argument("DefocusModel: non-finite parameter");
}

DefocusModel DefocusModel::create(int n_zones, int dof_size, double blur_coefficient, double focal_position,
                                  int psf_size, Orientation orientation, double pupil_radius_fraction) {
    DefocusModel m;
    m.n_zones = n_zones;
    m.dof_size = dof_size;
    m.blur_coefficient = blur_coefficient;
    m.focal_position = focal_position;
    m.orientation = orientation;
    m.psf_size = psf_size;
    m.aperture = ApertureSpec{psf_size, pupil_radius_fraction, true};
    m.validate();
    return m;
}

std::vector<ZoneMask> build_masks(const DefocusModel& model, int object_height, int object_width) {
    model.validate();
    const int extent = model.orientation == Orientation::RowBands ? object_height : object_width;
    if (extent != model.banded_extent()) {
        char msg[160];
        std::snprintf(msg, sizeof(msg), "build_masks: banded extent %d != n_zones*dof_size = %d", extent,
                      model.banded_extent());
        throw std::invalid_argument(msg);
    }
    std::vector<ZoneMask> masks;
    masks.reserve(model.n_zones);
    for (int n = 1; n <= model.n_zones; ++n)
        masks.push_back(ZoneMask{n, (n - 1) * model.dof_size, n * model.dof_size});
    return masks;
}

double relative_rms(const Image& estimate, const Image& truth) {
    if (!estimate.same_shape(truth)) throw std::invalid_argument("relative_rms: shape mismatch");
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < truth.data.size(); ++i) {
        const double d = estimate.data[i] - truth.data[i];
        num += d * d;
        den += truth.data[i] * truth.data[i];
    }
    if (den == 0.0) throw std::invalid_argument("relative_rms: truth has zero norm");
    return 100.0 * std::sqrt(num / den);
}

NoiseSpec NoiseSpec::poisson(double peak) {
    NoiseSpec n;
    n.kind = Kind::Poisson;
    n.poisson_peak = peak;
    return n;
}

NoiseSpec NoiseSpec::gaussian(double snr_db) {
    NoiseSpec n;
    n.kind = Kind::Gaussian;
    n.snr_db = snr_db;
    return n;
}

NoiseSpec NoiseSpec::parse(const std::string& text) {
    if (text == "none" || text.empty()) return none();
    const auto colon = text.find(':');
    const std::string head = text.substr(0, colon);
    const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
    if (head == "poisson") return poisson(arg.empty() ? 1e4 : std::stod(arg));
    if (head == "gaussian") {
        if (arg.empty()) throw std::invalid_argument("noise: gaussian requires an SNR, e.g. gaussian:40");
        if (arg == "inf") return gaussian(std::numeric_limits<double>::infinity());
        return gaussian(std::stod(arg));
    }
    throw std::invalid_argument("unknown noise spec '" + text + "' (expected none|poisson:<peak>|gaussian:<snr_db>)");
}

std::string NoiseSpec::to_string() const {
    char buf[64];
    switch (kind) {
        case Kind::None:
            return "none";
        case Kind::Poisson:
            std::snprintf(buf, sizeof(buf), "poisson:%.17g", poisson_peak);
            return buf;
        case Kind::Gaussian:
            if (std::isinf(snr_db)) return "gaussian:inf";
            std::snprintf(buf, sizeof(buf), "gaussian:%.17g", snr_db);
            return buf;
    }
    return "none";
}

Image add_noise(const Image& image, const NoiseSpec& noise, std::uint64_t seed) {
    switch (noise.kind) {
        case NoiseSpec::Kind::None:
            return image;
        case NoiseSpec::Kind::Poisson: {
            if (!(noise.poisson_peak > 0.0)) throw std::invalid_argument("add_noise: poisson peak must be > 0");
            for (double v : image.data)
                if (v < 0.0) throw std::invalid_argument("add_noise: negative pixel in Poisson mode");
            std::mt19937_64 rng(seed);
            Image out(image.height, image.width);
            for (std::size_t i = 0; i < image.data.size(); ++i) {
                const double mean = image.data[i] * noise.poisson_peak;
                if (mean == 0.0) {
                    out.data[i] = 0.0;
                    continue;
                }
                std::poisson_distribution<long long> dist(mean);
                out.data[i] = static_cast<double>(dist(rng)) / noise.poisson_peak;
            }
            return out;
        }
        case NoiseSpec::Kind::Gaussian: {
            if (!(noise.snr_db > 0.0)) throw std::invalid_argument("add_noise: SNR must be > 0 dB");
            if (std::isinf(noise.snr_db)) return image;
            const double sigma = root_mean_square(image) / std::pow(10.0, noise.snr_db / 20.0);
            std::mt19937_64 rng(seed);
            std::normal_distribution<double> dist(0.0, sigma);
            Image out(image.height, image.width);
            for (std::size_t i = 0; i < image.data.size(); ++i) out.data[i] = image.data[i] + dist(rng);
            return out;
        }
    }
    return image;
}

}  // namespace dk
