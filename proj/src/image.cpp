#include "defocuskit/image.hpp"

#include <cmath>
#include <stdexcept>

namespace dk {

double norm(const Image& a) {
    double acc = 0.0;
    for (double v : a.data) acc += v * v;
    return std::sqrt(acc);
}

double dot(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("dot: shape mismatch");
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) acc += a.data[i] * b.data[i];
    return acc;
}

double root_mean_square(const Image& a) {
    if (a.data.empty()) return 0.0;
    double acc = 0.0;
    for (double v : a.data) acc += v * v;
    return std::sqrt(acc / static_cast<double>(a.data.size()));
}

double max_abs(const Image& a) {
    double m = 0.0;
    for (double v : a.data) m = std::max(m, std::abs(v));
    return m;
}

double max_abs_diff(const Image& a, const Image& b) {
    if (!a.same_shape(b)) throw std::invalid_argument("max_abs_diff: shape mismatch");
    double m = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) m = std::max(m, std::abs(a.data[i] - b.data[i]));
    return m;
}

bool all_finite(const Image& a) {
    for (double v : a.data)
        if (!std::isfinite(v)) return false;
    return true;
}

Image transposed(const Image& a) {
    Image out(a.width, a.height);
    for (int r = 0; r < a.height; ++r)
        for (int c = 0; c < a.width; ++c) out.at(c, r) = a.at(r, c);
    return out;
}

Image central_crop(const Image& a, int h, int w) {
    const int dr = a.height - h;
    const int dc = a.width - w;
    if (dr < 0 || dc < 0 || dr % 2 != 0 || dc % 2 != 0)
        throw std::invalid_argument("central_crop: target must fit with even margins");
    Image out(h, w);
    for (int r = 0; r < h; ++r)
        for (int c = 0; c < w; ++c) out.at(r, c) = a.at(r + dr / 2, c + dc / 2);
    return out;
}

}  // namespace dk
