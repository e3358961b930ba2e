#pragma once

#include <cstdint>
#include <memory>
#include <vector>

#include "defocuskit/core.hpp"
#include "defocuskit/image.hpp"
#include "defocuskit/psf.hpp"

namespace dk {

enum class ConvBackend {
    Direct,   // spatial triple loop; the slow reference
    Fft       // per-zone FFT convolutions; required at experiment scale
};

// The forward operator L(x) = sum_n (mu_n .* x) * p_n with full-size
// convolution: an (l, w) object maps to an (l+rho-1, w+rho-1) image. The
// adjoint is the matching valid-mode correlation. Cheap to copy (shared
// immutable state); safe for concurrent use.
class BlurOperator {
public:
    BlurOperator(const DefocusModel& model, int object_height, int object_width,
                 ConvBackend backend = ConvBackend::Fft);

    const DefocusModel& model() const;
    const PsfStack& psfs() const;
    const std::vector<ZoneMask>& masks() const;
    ConvBackend backend() const;

    int object_height() const;
    int object_width() const;
    int image_height() const;
    int image_width() const;

    // L(x); x must have object shape.
    Image apply(const Image& x) const;
    // L*(y) = sum_n mu_n .* valid_corr(y, p_n); y must have image shape.
    Image apply_adjoint(const Image& y) const;
    // Eq-style data synthesis: apply then add_noise. Object must be in [0,1].
    Image synthesize_data(const Image& object, const NoiseSpec& noise, std::uint64_t seed) const;

    struct Impl;
    const Impl& impl() const { return *impl_; }
    std::shared_ptr<const Impl> impl_shared() const { return impl_; }

private:
    std::shared_ptr<const Impl> impl_;
};

}  // namespace dk
