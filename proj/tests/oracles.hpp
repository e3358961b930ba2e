#pragma once

// Test-only reference implementations, kept deliberately independent of the
// library's banded/FFT code paths: everything here is a literal scalar loop
// over the defining formulas.

#include <random>
#include <vector>

#include "defocuskit/core.hpp"
#include "defocuskit/image.hpp"
#include "defocuskit/psf.hpp"

namespace oracle {

inline dk::Image random_image(int h, int w, std::mt19937& rng, double lo = 0.0, double hi = 1.0) {
    std::uniform_real_distribution<double> u(lo, hi);
    dk::Image im(h, w);
    for (double& v : im.data) v = u(rng);
    return im;
}

// Full 2D convolution of the whole image with one kernel.
inline dk::Image full_convolve(const dk::Image& x, const dk::Image& k) {
    dk::Image out(x.height + k.height - 1, x.width + k.width - 1, 0.0);
    for (int a = 0; a < x.height; ++a)
        for (int b = 0; b < x.width; ++b) {
            const double xv = x.at(a, b);
            if (xv == 0.0) continue;
            for (int i = 0; i < k.height; ++i)
                for (int j = 0; j < k.width; ++j) out.at(a + i, b + j) += xv * k.at(i, j);
        }
    return out;
}

// Valid-mode correlation: out[u,v] = sum_{i,j} y[u+i, v+j] * k[i,j].
inline dk::Image valid_correlate(const dk::Image& y, const dk::Image& k) {
    dk::Image out(y.height - k.height + 1, y.width - k.width + 1, 0.0);
    for (int u = 0; u < out.height; ++u)
        for (int v = 0; v < out.width; ++v) {
            double acc = 0.0;
            for (int i = 0; i < k.height; ++i)
                for (int j = 0; j < k.width; ++j) acc += y.at(u + i, v + j) * k.at(i, j);
            out.at(u, v) = acc;
        }
    return out;
}

// Literal forward model: mask the whole object per zone, convolve at full
// size, and sum. No slab extraction anywhere.
inline dk::Image apply_reference(const dk::Image& x, const std::vector<dk::ZoneMask>& masks,
                                 const dk::PsfStack& stack, dk::Orientation orientation) {
    const int rho = stack.size;
    dk::Image out(x.height + rho - 1, x.width + rho - 1, 0.0);
    for (std::size_t n = 0; n < masks.size(); ++n) {
        dk::Image masked(x.height, x.width, 0.0);
        for (int r = 0; r < x.height; ++r)
            for (int c = 0; c < x.width; ++c) {
                const int band = orientation == dk::Orientation::RowBands ? r : c;
                if (band >= masks[n].band_start && band < masks[n].band_end) masked.at(r, c) = x.at(r, c);
            }
        const dk::Image conv = full_convolve(masked, stack.kernels[n]);
        for (std::size_t i = 0; i < out.data.size(); ++i) out.data[i] += conv.data[i];
    }
    return out;
}

}  // namespace oracle
