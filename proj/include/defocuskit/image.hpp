#pragma once

#include <cstddef>
#include <vector>

namespace dk {

// 2D real intensity array, row-major. The universal pixel container: objects,
// data images, iterates and residuals all live here. Object intensities are
// nominally in [0,1]; data images may exceed 1 after noise.
struct Image {
    int height = 0;
    int width = 0;
    std::vector<double> data;

    Image() = default;
    Image(int h, int w, double fill = 0.0)
        : height(h), width(w), data(static_cast<std::size_t>(h) * static_cast<std::size_t>(w), fill) {}

    double& at(int r, int c) { return data[static_cast<std::size_t>(r) * width + c]; }
    double at(int r, int c) const { return data[static_cast<std::size_t>(r) * width + c]; }

    double* row(int r) { return data.data() + static_cast<std::size_t>(r) * width; }
    const double* row(int r) const { return data.data() + static_cast<std::size_t>(r) * width; }

    std::size_t size() const { return data.size(); }
    bool same_shape(const Image& other) const { return height == other.height && width == other.width; }
};

// Frobenius norm.
double norm(const Image& a);
double dot(const Image& a, const Image& b);
// sqrt(mean of squares); used by the Gaussian noise model.
double root_mean_square(const Image& a);
double max_abs(const Image& a);
double max_abs_diff(const Image& a, const Image& b);
bool all_finite(const Image& a);

Image transposed(const Image& a);
// Centered crop; (height - h) and (width - w) must both be even and >= 0.
Image central_crop(const Image& a, int h, int w);

}  // namespace dk
