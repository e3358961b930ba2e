#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "defocuskit/image.hpp"

namespace dk {

// Axis along which the defocus zones are stacked. RowBands: zone n covers
// dof_size consecutive pixel rows. ColumnBands: the analogous columns
// (vertical zones, produced by a camera rotated a quarter turn at capture).
enum class Orientation { RowBands, ColumnBands };

Orientation parse_orientation(const std::string& s);
std::string to_string(Orientation o);

// Binary circular aperture sampled on a square pupil grid. The disk diameter
// is pupil_radius_fraction of the grid; the defocus phase is the Zernike
// (2,0) mode scaled by the zone's normalized depth.
struct ApertureSpec {
    int grid_size = 0;                    // samples per side; equals psf_size
    double pupil_radius_fraction = 0.5;   // in (0, 1]
    bool noll_normalization = true;       // sqrt(3)*(2r^2-1) vs plain (2r^2-1)
};

// Everything needed to build zone masks and the PSF stack.
struct DefocusModel {
    int n_zones = 1;          // N
    int dof_size = 1;         // s, pixel rows (or columns) per zone
    double blur_coefficient = 0.0;  // d, per-zone increment of normalized depth
    double focal_position = 1.0;    // n0, 1-based; real-valued for offset studies
    Orientation orientation = Orientation::RowBands;
    int psf_size = 1;         // rho, odd
    ApertureSpec aperture;

    int banded_extent() const { return n_zones * dof_size; }
    void validate() const;    // throws std::invalid_argument

    static DefocusModel create(int n_zones, int dof_size, double blur_coefficient,
                               double focal_position, int psf_size,
                               Orientation orientation = Orientation::RowBands,
                               double pupil_radius_fraction = 0.5);
};

// Band [band_start, band_end) along the banded axis; the binary mask mu_n is
// 1 inside the band and 0 outside.
struct ZoneMask {
    int zone_index = 0;   // 1-based
    int band_start = 0;
    int band_end = 0;
};

// Partition the object into N contiguous bands. Throws if the banded-axis
// extent differs from n_zones * dof_size.
std::vector<ZoneMask> build_masks(const DefocusModel& model, int object_height, int object_width);

// 100 * ||estimate - truth||_F / ||truth||_F.
double relative_rms(const Image& estimate, const Image& truth);

struct NoiseSpec {
    enum class Kind { None, Poisson, Gaussian };
    Kind kind = Kind::None;
    double poisson_peak = 1e4;   // photon count mapped to intensity 1.0
    double snr_db = 40.0;

    static NoiseSpec none() { return {}; }
    static NoiseSpec poisson(double peak = 1e4);
    static NoiseSpec gaussian(double snr_db);
    // "none" | "poisson:<peak>" | "gaussian:<snr_db>"
    static NoiseSpec parse(const std::string& text);
    std::string to_string() const;
};

// Poisson mode: pixelwise Poisson(pixel*peak)/peak. Gaussian mode: adds white
// noise with sigma = rms(image) / 10^(snr_db/20). Deterministic per seed.
Image add_noise(const Image& image, const NoiseSpec& noise, std::uint64_t seed);

}  // namespace dk
