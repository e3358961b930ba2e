#include "fft_conv.hpp"

#include <cstring>
#include <mutex>
#include <stdexcept>

namespace dk::detail {

namespace {
// FFTW plan creation/destruction is not thread-safe; execution is.
std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace

int next_fast_size(int n) {
    if (n <= 1) return 1;
    for (int m = n;; ++m) {
        int r = m;
        for (int f : {2, 3, 5, 7})
            while (r % f == 0) r /= f;
        if (r == 1) return m;
    }
}

void RealBuf::zero() { std::memset(p, 0, n * sizeof(double)); }
void CplxBuf::zero() { std::memset(p, 0, n * sizeof(fftw_complex)); }

RealFft2::RealFft2(int h, int w) : h_(h), w_(w) {
    RealBuf r(real_count());
    CplxBuf c(spec_count());
    std::lock_guard<std::mutex> lock(planner_mutex());
    fwd_ = fftw_plan_dft_r2c_2d(h_, w_, r.p, c.p, FFTW_ESTIMATE);
    inv_ = fftw_plan_dft_c2r_2d(h_, w_, c.p, r.p, FFTW_ESTIMATE);
    if (!fwd_ || !inv_) throw std::runtime_error("fftw plan creation failed");
}

RealFft2::~RealFft2() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(fwd_);
    fftw_destroy_plan(inv_);
}

void RealFft2::forward(double* in, fftw_complex* out) const { fftw_execute_dft_r2c(fwd_, in, out); }

void RealFft2::inverse(fftw_complex* in, double* out) const { fftw_execute_dft_c2r(inv_, in, out); }

ComplexFft2::ComplexFft2(int h, int w) {
    CplxBuf a(static_cast<std::size_t>(h) * w), b(static_cast<std::size_t>(h) * w);
    std::lock_guard<std::mutex> lock(planner_mutex());
    plan_ = fftw_plan_dft_2d(h, w, a.p, b.p, FFTW_FORWARD, FFTW_ESTIMATE);
    if (!plan_) throw std::runtime_error("fftw plan creation failed");
}

ComplexFft2::~ComplexFft2() {
    std::lock_guard<std::mutex> lock(planner_mutex());
    fftw_destroy_plan(plan_);
}

void ComplexFft2::forward(fftw_complex* in, fftw_complex* out) const { fftw_execute_dft(plan_, in, out); }

void cplx_mul(const fftw_complex* a, const fftw_complex* b, fftw_complex* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double re = a[i][0] * b[i][0] - a[i][1] * b[i][1];
        const double im = a[i][0] * b[i][1] + a[i][1] * b[i][0];
        out[i][0] = re;
        out[i][1] = im;
    }
}

void cplx_mul_conj(const fftw_complex* a, const fftw_complex* b, fftw_complex* out, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
        const double re = a[i][0] * b[i][0] + a[i][1] * b[i][1];
        const double im = a[i][1] * b[i][0] - a[i][0] * b[i][1];
        out[i][0] = re;
        out[i][1] = im;
    }
}

}  // namespace dk::detail
