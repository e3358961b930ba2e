#pragma once

#include <string>
#include <vector>

#include "defocuskit/core.hpp"
#include "defocuskit/image.hpp"

namespace dk {

// N depth-indexed convolution kernels, each rho x rho, nonnegative,
// L1-normalized and centrosymmetric about the center pixel.
struct PsfStack {
    int n_zones = 0;
    int size = 0;                  // rho
    std::vector<double> depths;    // d_n = d * (n0 - n)
    std::vector<Image> kernels;
};

// Zernike mode (n=2, m=0) sampled on a grid whose inscribed disk is the unit
// disk: sqrt(3)*(2r^2 - 1) for r <= 1, 0 outside.
Image zernike_defocus(int grid_size);

// |centered DFT of A .* exp(j*depth*Z)|^2, peak-centered and L1-normalized.
// Emits a warning when the kernel's second-moment radius exceeds 0.45*rho
// (defocus too large for the grid; tail energy is renormalized away).
Image make_psf(const ApertureSpec& aperture, double depth);

PsfStack build_psf_stack(const DefocusModel& model);

// Writes one 16-bit PGM per kernel (each scaled to its own peak) plus a
// metadata.txt listing d, n0 and the per-zone depths.
void export_psf_stack(const PsfStack& stack, const DefocusModel& model, const std::string& directory);

}  // namespace dk
