#pragma once

// Internal state of BlurOperator, shared with the gradient module. All banded
// algebra happens in row-band space: ColumnBands operators transpose at the
// public boundary.
//
// Geometry, with 0-based zone z in [0, N): the object slab of zone z covers
// rows [z*s, z*s+s); its full convolution with a rho x rho kernel lands in
// image rows [z*s, z*s+s+rho-1). The adjoint reads the same window back and
// writes the valid s x w correlation block into band z. Both directions run
// as circular FFT products at any padded size >= (s+rho-1, w+rho-1), which
// never wraps because kernels occupy [0, rho) of the padded grid.

#include <memory>
#include <vector>

#include "defocuskit/blur.hpp"
#include "fft_conv.hpp"

namespace dk {

struct BlurOperator::Impl {
    DefocusModel model_spec;            // as constructed
    PsfStack stack;
    std::vector<ZoneMask> mask_list;    // original orientation
    ConvBackend conv_backend = ConvBackend::Fft;
    bool transpose_io = false;          // ColumnBands
    int object_h = 0, object_w = 0;     // original orientation

    int l = 0, w = 0;                   // row-banded object dims
    int n_zones = 0, s = 0, rho = 0;

    // FFT state (conv_backend == Fft)
    int ph = 0, pw = 0;
    std::unique_ptr<detail::RealFft2> fft;
    std::vector<detail::CplxBuf> kernel_spec;   // per zone, padded to (ph, pw)

    int image_l() const { return l + rho - 1; }
    int image_w() const { return w + rho - 1; }

    // Per-chunk working set: an output slice covering the chunk's zones plus
    // padded FFT buffers.
    struct ChunkWork {
        Image slice;
        detail::RealBuf pad;
        detail::CplxBuf spec;
    };

    void ensure_chunk_work(std::vector<ChunkWork>& work, int chunks) const;

    // y = sum of zone convolutions (image shape, overwritten). Chunk partials
    // merge in fixed order, so output is deterministic for a given chunking.
    void forward_banded(const Image& x, Image& y, std::vector<ChunkWork>& work) const;
    // g = banded valid correlations of y (object shape, every band written).
    void adjoint_banded(const Image& y, Image& g, std::vector<ChunkWork>& work) const;

    void conv_zone_fft(const Image& x, int zone, ChunkWork& cw, Image& out, int out_row_offset) const;
    void corr_zone_fft(const Image& y, int zone, ChunkWork& cw, Image& g) const;
    void conv_zone_direct(const Image& x, int zone, Image& out, int out_row_offset) const;
    void corr_zone_direct(const Image& y, int zone, Image& g) const;
};

}  // namespace dk
