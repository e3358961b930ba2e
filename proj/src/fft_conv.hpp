#pragma once

// FFTW-backed 2D transform helpers, internal to the library. Plans are
// created once per shape under a global planner lock and executed through the
// new-array interface, so a single plan serves any number of threads as long
// as every buffer comes from fftw_malloc (equal alignment).

#include <fftw3.h>

#include <complex>
#include <cstddef>

namespace dk::detail {

// Smallest m >= n whose factors are all in {2,3,5,7}.
int next_fast_size(int n);

struct RealBuf {
    double* p = nullptr;
    std::size_t n = 0;

    RealBuf() = default;
    explicit RealBuf(std::size_t count) : p(fftw_alloc_real(count)), n(count) {}
    ~RealBuf() { fftw_free(p); }
    RealBuf(RealBuf&& o) noexcept : p(o.p), n(o.n) { o.p = nullptr; o.n = 0; }
    RealBuf& operator=(RealBuf&& o) noexcept {
        if (this != &o) {
            fftw_free(p);
            p = o.p;
            n = o.n;
            o.p = nullptr;
            o.n = 0;
        }
        return *this;
    }
    RealBuf(const RealBuf&) = delete;
    RealBuf& operator=(const RealBuf&) = delete;

    void zero();
};

struct CplxBuf {
    fftw_complex* p = nullptr;
    std::size_t n = 0;

    CplxBuf() = default;
    explicit CplxBuf(std::size_t count) : p(fftw_alloc_complex(count)), n(count) {}
    ~CplxBuf() { fftw_free(p); }
    CplxBuf(CplxBuf&& o) noexcept : p(o.p), n(o.n) { o.p = nullptr; o.n = 0; }
    CplxBuf& operator=(CplxBuf&& o) noexcept {
        if (this != &o) {
            fftw_free(p);
            p = o.p;
            n = o.n;
            o.p = nullptr;
            o.n = 0;
        }
        return *this;
    }
    CplxBuf(const CplxBuf&) = delete;
    CplxBuf& operator=(const CplxBuf&) = delete;

    void zero();
};

// Real-to-complex 2D transform pair for one padded shape.
class RealFft2 {
public:
    RealFft2(int h, int w);
    ~RealFft2();
    RealFft2(const RealFft2&) = delete;
    RealFft2& operator=(const RealFft2&) = delete;

    int h() const { return h_; }
    int w() const { return w_; }
    int spec_w() const { return w_ / 2 + 1; }
    std::size_t real_count() const { return static_cast<std::size_t>(h_) * w_; }
    std::size_t spec_count() const { return static_cast<std::size_t>(h_) * spec_w(); }
    double scale() const { return 1.0 / (static_cast<double>(h_) * w_); }

    void forward(double* in, fftw_complex* out) const;   // preserves in
    void inverse(fftw_complex* in, double* out) const;   // destroys in, unnormalized

private:
    int h_, w_;
    fftw_plan fwd_, inv_;
};

// Complex 2D forward transform (PSF synthesis).
class ComplexFft2 {
public:
    ComplexFft2(int h, int w);
    ~ComplexFft2();
    ComplexFft2(const ComplexFft2&) = delete;
    ComplexFft2& operator=(const ComplexFft2&) = delete;

    void forward(fftw_complex* in, fftw_complex* out) const;

private:
    fftw_plan plan_;
};

// out[i] = a[i] * b[i] (complex).
void cplx_mul(const fftw_complex* a, const fftw_complex* b, fftw_complex* out, std::size_t n);
// out[i] = a[i] * conj(b[i]).
void cplx_mul_conj(const fftw_complex* a, const fftw_complex* b, fftw_complex* out, std::size_t n);

}  // namespace dk::detail
