#include "defocuskit/grad.hpp"

#include <cstring>
#include <stdexcept>

#include "blur_impl.hpp"
#include "defocuskit/parallel.hpp"

namespace dk {

struct GradientWorkspace::Impl {
    std::shared_ptr<const BlurOperator::Impl> op;
    Image residual;                                    // banded image shape
    Image x_banded, g_banded;                          // transpose staging
    std::vector<BlurOperator::Impl::ChunkWork> work;
};

GradientWorkspace::GradientWorkspace(const BlurOperator& op) : impl_(std::make_unique<Impl>()) {
    impl_->op = op.impl_shared();
}

GradientWorkspace::~GradientWorkspace() = default;
GradientWorkspace::GradientWorkspace(GradientWorkspace&&) noexcept = default;
GradientWorkspace& GradientWorkspace::operator=(GradientWorkspace&&) noexcept = default;

namespace {

void check_shapes(const BlurOperator& op, const Image& data, const Image& x) {
    if (x.height != op.object_height() || x.width != op.object_width())
        throw std::invalid_argument("gradient: x must have object shape");
    if (data.height != op.image_height() || data.width != op.image_width())
        throw std::invalid_argument("gradient: data must have image shape");
}

}  // namespace

Image grad_naive(const BlurOperator& op, const Image& data, const Image& x) {
    check_shapes(op, data, x);
    Image r = op.apply(x);
    for (std::size_t i = 0; i < r.data.size(); ++i) r.data[i] -= data.data[i];
    return op.apply_adjoint(r);
}

Image grad_fast(const BlurOperator& op, const Image& data, const Image& x, GradientWorkspace& ws) {
    check_shapes(op, data, x);
    const BlurOperator::Impl& im = op.impl();
    GradientWorkspace::Impl& w = ws.impl();
    if (w.op.get() != &im) throw std::invalid_argument("grad_fast: workspace bound to a different operator");

    const Image* xb = &x;
    const Image* db = &data;
    if (im.transpose_io) {
        w.x_banded = transposed(x);
        xb = &w.x_banded;
    }
    if (w.residual.height != im.image_l() || w.residual.width != im.image_w())
        w.residual = Image(im.image_l(), im.image_w());

    im.forward_banded(*xb, w.residual, w.work);
    if (im.transpose_io) {
        // subtract data without materializing its transpose
        for (int r = 0; r < w.residual.height; ++r) {
            double* row = w.residual.row(r);
            for (int c = 0; c < w.residual.width; ++c) row[c] -= data.at(c, r);
        }
        (void)db;
    } else {
        for (std::size_t i = 0; i < w.residual.data.size(); ++i) w.residual.data[i] -= data.data[i];
    }

    if (w.g_banded.height != im.l || w.g_banded.width != im.w) w.g_banded = Image(im.l, im.w);
    im.adjoint_banded(w.residual, w.g_banded, w.work);
    return im.transpose_io ? transposed(w.g_banded) : w.g_banded;
}

double objective_value(const BlurOperator& op, const Image& data, const Image& x) {
    check_shapes(op, data, x);
    const Image y = op.apply(x);
    double acc = 0.0;
    for (std::size_t i = 0; i < y.data.size(); ++i) {
        const double d = data.data[i] - y.data[i];
        acc += d * d;
    }
    return 0.5 * acc;
}

struct DenseGradient::Impl {
    std::shared_ptr<const BlurOperator::Impl> op;
    int qh = 0, qw = 0;
    std::unique_ptr<detail::RealFft2> fft;
    std::vector<detail::CplxBuf> kernel_spec;
    detail::RealBuf pad;
    detail::CplxBuf spec;
    Image residual, x_banded, g_banded;
};

DenseGradient::DenseGradient(const BlurOperator& op) : impl_(std::make_unique<Impl>()) {
    Impl& im = *impl_;
    im.op = op.impl_shared();
    const auto& b = *im.op;
    im.qh = detail::next_fast_size(b.image_l());
    im.qw = detail::next_fast_size(b.image_w());
    im.fft = std::make_unique<detail::RealFft2>(im.qh, im.qw);
    im.pad = detail::RealBuf(im.fft->real_count());
    im.spec = detail::CplxBuf(im.fft->spec_count());
    im.kernel_spec.resize(b.n_zones);
    for (int z = 0; z < b.n_zones; ++z) {
        im.pad.zero();
        const Image& k = b.stack.kernels[z];
        for (int i = 0; i < b.rho; ++i)
            std::memcpy(im.pad.p + static_cast<std::size_t>(i) * im.qw, k.row(i), sizeof(double) * b.rho);
        im.kernel_spec[z] = detail::CplxBuf(im.fft->spec_count());
        im.fft->forward(im.pad.p, im.kernel_spec[z].p);
    }
    im.residual = Image(b.image_l(), b.image_w());
    im.g_banded = Image(b.l, b.w);
}

DenseGradient::~DenseGradient() = default;
DenseGradient::DenseGradient(DenseGradient&&) noexcept = default;

Image DenseGradient::eval(const Image& data, const Image& x) {
    Impl& im = *impl_;
    const auto& b = *im.op;
    if (x.height != b.object_h || x.width != b.object_w)
        throw std::invalid_argument("DenseGradient: x must have object shape");
    const Image* xb = &x;
    if (b.transpose_io) {
        im.x_banded = transposed(x);
        xb = &im.x_banded;
    }
    const double scale = im.fft->scale();

    std::fill(im.residual.data.begin(), im.residual.data.end(), 0.0);
    for (int z = 0; z < b.n_zones; ++z) {
        // mask the full image to zone z, then convolve at full size
        im.pad.zero();
        for (int a = 0; a < b.s; ++a)
            std::memcpy(im.pad.p + static_cast<std::size_t>(z * b.s + a) * im.qw, xb->row(z * b.s + a),
                        sizeof(double) * b.w);
        im.fft->forward(im.pad.p, im.spec.p);
        detail::cplx_mul(im.spec.p, im.kernel_spec[z].p, im.spec.p, im.fft->spec_count());
        im.fft->inverse(im.spec.p, im.pad.p);
        for (int u = 0; u < b.image_l(); ++u) {
            double* dst = im.residual.row(u);
            const double* src = im.pad.p + static_cast<std::size_t>(u) * im.qw;
            for (int v = 0; v < b.image_w(); ++v) dst[v] += src[v] * scale;
        }
    }
    if (b.transpose_io) {
        for (int r = 0; r < im.residual.height; ++r) {
            double* row = im.residual.row(r);
            for (int c = 0; c < im.residual.width; ++c) row[c] -= data.at(c, r);
        }
    } else {
        for (std::size_t i = 0; i < im.residual.data.size(); ++i) im.residual.data[i] -= data.data[i];
    }

    for (int z = 0; z < b.n_zones; ++z) {
        // correlate the whole residual at full size, keep only band z
        im.pad.zero();
        for (int u = 0; u < b.image_l(); ++u)
            std::memcpy(im.pad.p + static_cast<std::size_t>(u) * im.qw, im.residual.row(u),
                        sizeof(double) * b.image_w());
        im.fft->forward(im.pad.p, im.spec.p);
        detail::cplx_mul_conj(im.spec.p, im.kernel_spec[z].p, im.spec.p, im.fft->spec_count());
        im.fft->inverse(im.spec.p, im.pad.p);
        for (int u = 0; u < b.s; ++u) {
            double* dst = im.g_banded.row(z * b.s + u);
            const double* src = im.pad.p + static_cast<std::size_t>(z * b.s + u) * im.qw;
            for (int v = 0; v < b.w; ++v) dst[v] = src[v] * scale;
        }
    }
    return b.transpose_io ? transposed(im.g_banded) : im.g_banded;
}

}  // namespace dk
