#include "defocuskit/blur.hpp"

#include <cstring>
#include <stdexcept>

#include "blur_impl.hpp"
#include "defocuskit/parallel.hpp"

namespace dk {

namespace {

void check_object_range(const Image& object) {
    for (double v : object.data)
        if (!(v >= 0.0 && v <= 1.0)) throw std::invalid_argument("synthesize_data: object must be in [0,1]");
}

}  // namespace

BlurOperator::BlurOperator(const DefocusModel& model, int object_height, int object_width, ConvBackend backend) {
    auto impl = std::make_shared<Impl>();
    impl->model_spec = model;
    impl->mask_list = build_masks(model, object_height, object_width);  // validates
    impl->stack = build_psf_stack(model);
    impl->conv_backend = backend;
    impl->transpose_io = model.orientation == Orientation::ColumnBands;
    impl->object_h = object_height;
    impl->object_w = object_width;
    impl->l = impl->transpose_io ? object_width : object_height;
    impl->w = impl->transpose_io ? object_height : object_width;
    impl->n_zones = model.n_zones;
    impl->s = model.dof_size;
    impl->rho = model.psf_size;

    if (backend == ConvBackend::Fft) {
        impl->ph = detail::next_fast_size(impl->s + impl->rho - 1);
        impl->pw = detail::next_fast_size(impl->w + impl->rho - 1);
        impl->fft = std::make_unique<detail::RealFft2>(impl->ph, impl->pw);
        impl->kernel_spec.resize(impl->n_zones);
        detail::RealBuf pad(impl->fft->real_count());
        for (int z = 0; z < impl->n_zones; ++z) {
            pad.zero();
            const Image& k = impl->stack.kernels[z];
            for (int i = 0; i < impl->rho; ++i)
                std::memcpy(pad.p + static_cast<std::size_t>(i) * impl->pw, k.row(i), sizeof(double) * impl->rho);
            impl->kernel_spec[z] = detail::CplxBuf(impl->fft->spec_count());
            impl->fft->forward(pad.p, impl->kernel_spec[z].p);
        }
    }
    impl_ = std::move(impl);
}

const DefocusModel& BlurOperator::model() const { return impl_->model_spec; }
const PsfStack& BlurOperator::psfs() const { return impl_->stack; }
const std::vector<ZoneMask>& BlurOperator::masks() const { return impl_->mask_list; }
ConvBackend BlurOperator::backend() const { return impl_->conv_backend; }
int BlurOperator::object_height() const { return impl_->object_h; }
int BlurOperator::object_width() const { return impl_->object_w; }
int BlurOperator::image_height() const { return impl_->object_h + impl_->rho - 1; }
int BlurOperator::image_width() const { return impl_->object_w + impl_->rho - 1; }

void BlurOperator::Impl::ensure_chunk_work(std::vector<ChunkWork>& work, int chunks) const {
    if (static_cast<int>(work.size()) < chunks) work.resize(chunks);
    for (int c = 0; c < chunks; ++c) {
        const int zb = static_cast<int>(static_cast<long long>(n_zones) * c / chunks);
        const int ze = static_cast<int>(static_cast<long long>(n_zones) * (c + 1) / chunks);
        const int rows = (ze - zb) * s + rho - 1;
        if (chunks > 1 && (work[c].slice.height != rows || work[c].slice.width != image_w()))
            work[c].slice = Image(rows, image_w());
        if (conv_backend == ConvBackend::Fft) {
            if (work[c].pad.n != fft->real_count()) work[c].pad = detail::RealBuf(fft->real_count());
            if (work[c].spec.n != fft->spec_count()) work[c].spec = detail::CplxBuf(fft->spec_count());
        }
    }
}

void BlurOperator::Impl::conv_zone_fft(const Image& x, int zone, ChunkWork& cw, Image& out,
                                       int out_row_offset) const {
    cw.pad.zero();
    for (int a = 0; a < s; ++a)
        std::memcpy(cw.pad.p + static_cast<std::size_t>(a) * pw, x.row(zone * s + a), sizeof(double) * w);
    fft->forward(cw.pad.p, cw.spec.p);
    detail::cplx_mul(cw.spec.p, kernel_spec[zone].p, cw.spec.p, fft->spec_count());
    fft->inverse(cw.spec.p, cw.pad.p);
    const double scale = fft->scale();
    const int out_rows = s + rho - 1;
    const int out_cols = image_w();
    for (int u = 0; u < out_rows; ++u) {
        double* dst = out.row(out_row_offset + u);
        const double* src = cw.pad.p + static_cast<std::size_t>(u) * pw;
        for (int v = 0; v < out_cols; ++v) dst[v] += src[v] * scale;
    }
}

void BlurOperator::Impl::corr_zone_fft(const Image& y, int zone, ChunkWork& cw, Image& g) const {
    cw.pad.zero();
    const int win_rows = s + rho - 1;
    for (int u = 0; u < win_rows; ++u)
        std::memcpy(cw.pad.p + static_cast<std::size_t>(u) * pw, y.row(zone * s + u), sizeof(double) * image_w());
    fft->forward(cw.pad.p, cw.spec.p);
    detail::cplx_mul_conj(cw.spec.p, kernel_spec[zone].p, cw.spec.p, fft->spec_count());
    fft->inverse(cw.spec.p, cw.pad.p);
    const double scale = fft->scale();
    for (int u = 0; u < s; ++u) {
        double* dst = g.row(zone * s + u);
        const double* src = cw.pad.p + static_cast<std::size_t>(u) * pw;
        for (int v = 0; v < w; ++v) dst[v] = src[v] * scale;
    }
}

void BlurOperator::Impl::conv_zone_direct(const Image& x, int zone, Image& out, int out_row_offset) const {
    const Image& k = stack.kernels[zone];
    for (int a = 0; a < s; ++a) {
        const double* xr = x.row(zone * s + a);
        for (int i = 0; i < rho; ++i) {
            double* dst = out.row(out_row_offset + a + i);
            const double* kr = k.row(i);
            for (int b = 0; b < w; ++b) {
                const double xv = xr[b];
                if (xv == 0.0) continue;
                double* d = dst + b;
                for (int j = 0; j < rho; ++j) d[j] += xv * kr[j];
            }
        }
    }
}

void BlurOperator::Impl::corr_zone_direct(const Image& y, int zone, Image& g) const {
    const Image& k = stack.kernels[zone];
    for (int u = 0; u < s; ++u) {
        double* dst = g.row(zone * s + u);
        for (int v = 0; v < w; ++v) {
            double acc = 0.0;
            for (int i = 0; i < rho; ++i) {
                const double* yr = y.row(zone * s + u + i) + v;
                const double* kr = k.row(i);
                for (int j = 0; j < rho; ++j) acc += yr[j] * kr[j];
            }
            dst[v] = acc;
        }
    }
}

void BlurOperator::Impl::forward_banded(const Image& x, Image& y, std::vector<ChunkWork>& work) const {
    const int chunks = parallel_chunk_count(n_zones);
    ensure_chunk_work(work, chunks);
    std::fill(y.data.begin(), y.data.end(), 0.0);
    if (chunks == 1) {
        for (int z = 0; z < n_zones; ++z) {
            if (conv_backend == ConvBackend::Fft)
                conv_zone_fft(x, z, work[0], y, z * s);
            else
                conv_zone_direct(x, z, y, z * s);
        }
        return;
    }
    parallel_for(chunks, [&](int c) {
        const int zb = static_cast<int>(static_cast<long long>(n_zones) * c / chunks);
        const int ze = static_cast<int>(static_cast<long long>(n_zones) * (c + 1) / chunks);
        ChunkWork& cw = work[c];
        std::fill(cw.slice.data.begin(), cw.slice.data.end(), 0.0);
        for (int z = zb; z < ze; ++z) {
            if (conv_backend == ConvBackend::Fft)
                conv_zone_fft(x, z, cw, cw.slice, (z - zb) * s);
            else
                conv_zone_direct(x, z, cw.slice, (z - zb) * s);
        }
    });
    // fixed merge order keeps the accumulation deterministic
    for (int c = 0; c < chunks; ++c) {
        const int zb = static_cast<int>(static_cast<long long>(n_zones) * c / chunks);
        const int ze = static_cast<int>(static_cast<long long>(n_zones) * (c + 1) / chunks);
        const Image& slice = work[c].slice;
        const int row0 = zb * s;
        const int rows = (ze - zb) * s + rho - 1;
        for (int u = 0; u < rows; ++u) {
            double* dst = y.row(row0 + u);
            const double* src = slice.row(u);
            for (int v = 0; v < image_w(); ++v) dst[v] += src[v];
        }
    }
}

void BlurOperator::Impl::adjoint_banded(const Image& y, Image& g, std::vector<ChunkWork>& work) const {
    const int chunks = parallel_chunk_count(n_zones);
    ensure_chunk_work(work, chunks);
    parallel_for(chunks, [&](int c) {
        const int zb = static_cast<int>(static_cast<long long>(n_zones) * c / chunks);
        const int ze = static_cast<int>(static_cast<long long>(n_zones) * (c + 1) / chunks);
        for (int z = zb; z < ze; ++z) {
            if (conv_backend == ConvBackend::Fft)
                corr_zone_fft(y, z, work[c], g);
            else
                corr_zone_direct(y, z, g);
        }
    });
}

Image BlurOperator::apply(const Image& x) const {
    const Impl& im = *impl_;
    if (x.height != im.object_h || x.width != im.object_w)
        throw std::invalid_argument("apply: input must have object shape");
    const Image xb = im.transpose_io ? transposed(x) : x;
    Image yb(im.image_l(), im.image_w());
    std::vector<Impl::ChunkWork> work;
    im.forward_banded(xb, yb, work);
    return im.transpose_io ? transposed(yb) : yb;
}

Image BlurOperator::apply_adjoint(const Image& y) const {
    const Impl& im = *impl_;
    if (y.height != image_height() || y.width != image_width())
        throw std::invalid_argument("apply_adjoint: input must have image shape");
    const Image yb = im.transpose_io ? transposed(y) : y;
    Image gb(im.l, im.w);
    std::vector<Impl::ChunkWork> work;
    im.adjoint_banded(yb, gb, work);
    return im.transpose_io ? transposed(gb) : gb;
}

Image BlurOperator::synthesize_data(const Image& object, const NoiseSpec& noise, std::uint64_t seed) const {
    check_object_range(object);
    return add_noise(apply(object), noise, seed);
}

}  // namespace dk
