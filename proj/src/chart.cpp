#include <algorithm>
#include <cmath>
#include <random>

#include "defocuskit/bench.hpp"

namespace dk {

namespace {

void fill_rect(Image& im, int r0, int c0, int r1, int c1, double v) {
    r0 = std::max(r0, 0);
    c0 = std::max(c0, 0);
    r1 = std::min(r1, im.height);
    c1 = std::min(c1, im.width);
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) im.at(r, c) = v;
}

void fill_disk(Image& im, double cr, double cc, double radius, double v) {
    const int r0 = std::max(0, static_cast<int>(cr - radius) - 1);
    const int r1 = std::min(im.height, static_cast<int>(cr + radius) + 2);
    const int c0 = std::max(0, static_cast<int>(cc - radius) - 1);
    const int c1 = std::min(im.width, static_cast<int>(cc + radius) + 2);
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c)
            if ((r - cr) * (r - cr) + (c - cc) * (c - cc) <= radius * radius) im.at(r, c) = v;
}

// Raised-cosine bump; the dominant structure of the chart. Smooth content
// keeps the degradation level tracking the blur coefficient and behaves like
// photographed material under restoration.
void fill_blob(Image& im, double cr, double cc, double radius, double amplitude) {
    const int r0 = std::max(0, static_cast<int>(cr - radius) - 1);
    const int r1 = std::min(im.height, static_cast<int>(cr + radius) + 2);
    const int c0 = std::max(0, static_cast<int>(cc - radius) - 1);
    const int c1 = std::min(im.width, static_cast<int>(cc + radius) + 2);
    for (int r = r0; r < r1; ++r)
        for (int c = c0; c < c1; ++c) {
            const double rr = std::sqrt((r - cr) * (r - cr) + (c - cc) * (c - cc)) / radius;
            if (rr < 1.0) {
                const double wgt = 0.5 * (1.0 + std::cos(3.14159265358979 * rr));
                im.at(r, c) = std::clamp(im.at(r, c) + amplitude * wgt, 0.0, 1.0);
            }
        }
}

// Blocky pseudo-glyphs; reads like heavy dot-matrix print.
void fill_text_block(Image& im, std::mt19937& rng, int r0, int c0, int r1, int c1, int cell, double ink) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const int line_h = cell * 3;
    for (int lr = r0; lr + line_h <= r1; lr += line_h + cell) {
        for (int gc = c0; gc + cell * 2 <= c1; gc += cell * 2 + cell / 2 + 1) {
            if (u(rng) < 0.2) continue;  // word gaps
            for (int br = 0; br < 3; ++br)
                for (int bc = 0; bc < 2; ++bc)
                    if (u(rng) < 0.5)
                        fill_rect(im, lr + br * cell, gc + bc * cell, lr + (br + 1) * cell, gc + (bc + 1) * cell, ink);
        }
    }
}

// Separable Gaussian pass: the chart stands in for a photographed scene, so
// it should not carry spatial frequencies an in-focus camera could not have
// recorded.
Image band_limit(const Image& im, double sigma) {
    const int rad = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
    std::vector<double> k(2 * rad + 1);
    double sum = 0.0;
    for (int i = -rad; i <= rad; ++i) sum += k[i + rad] = std::exp(-0.5 * i * i / (sigma * sigma));
    for (double& v : k) v /= sum;
    Image tmp(im.height, im.width), out(im.height, im.width);
    for (int r = 0; r < im.height; ++r)
        for (int c = 0; c < im.width; ++c) {
            double acc = 0.0;
            for (int i = -rad; i <= rad; ++i) acc += k[i + rad] * im.at(r, std::clamp(c + i, 0, im.width - 1));
            tmp.at(r, c) = acc;
        }
    for (int r = 0; r < im.height; ++r)
        for (int c = 0; c < im.width; ++c) {
            double acc = 0.0;
            for (int i = -rad; i <= rad; ++i) acc += k[i + rad] * tmp.at(std::clamp(r + i, 0, im.height - 1), c);
            out.at(r, c) = std::clamp(acc, 0.0, 1.0);
        }
    return out;
}

}  // namespace

// Photographed-chart stand-in: smooth tonal structure carries most of the
// energy, with coarse shapes, bars and text blocks for recognizable detail.
Image make_test_chart(int height, int width) {
    const double bg = 0.75;
    Image im(height, width, bg);
    std::mt19937 rng(20240811u);

    if (height < 48 || width < 48) {
        const int p = std::max(2, std::min(height, width) / 6);
        for (int r = 0; r < height; ++r)
            for (int c = 0; c < width; ++c)
                if (((r / p) + (c / p)) % 2 == 0) im.at(r, c) = 0.25;
        fill_disk(im, height / 2.0, width / 2.0, std::min(height, width) / 5.0, 0.95);
        return band_limit(im, 1.0);
    }

    const int cells = 4;
    const int ch = height / cells;
    const int cw = width / cells;

    for (int cy = 0; cy < cells; ++cy) {
        for (int cx = 0; cx < cells; ++cx) {
            const int r0 = cy * ch, c0 = cx * cw;
            const int r1 = r0 + ch, c1 = c0 + cw;
            const int m = std::max(3, ch / 10);
            const double scale = std::min(ch, cw) / 100.0;
            const double mid_r = (r0 + r1) / 2.0, mid_c = (c0 + c1) / 2.0;
            switch ((cy * cells + cx) % 8) {
                case 0:
                case 2:
                    fill_blob(im, mid_r, mid_c, 50 * scale, (cy + cx) % 4 ? -0.62 : -0.45);
                    fill_blob(im, r0 + 0.22 * ch, c1 - 0.22 * cw, 24 * scale, 0.24);
                    break;
                case 4:
                case 6:
                    fill_blob(im, mid_r, mid_c - 0.18 * cw, 44 * scale, -0.58);
                    fill_blob(im, mid_r, mid_c + 0.3 * cw, 30 * scale, 0.22);
                    break;
                case 1:  // soft-edged disk and ring
                    fill_disk(im, mid_r, mid_c, 30 * scale, 0.2);
                    fill_disk(im, mid_r, mid_c, 17 * scale, 0.92);
                    break;
                case 3: {  // wide bars
                    const int p = std::max(8, static_cast<int>(24 * scale));
                    for (int r = r0 + m; r < r1 - m; ++r)
                        if (((r - r0 - m) / p) % 2 == 0)
                            for (int c = c0 + m; c < c1 - m; ++c) im.at(r, c) = 0.3;
                    break;
                }
                case 5:  // text paragraph
                    fill_text_block(im, rng, r0 + m, c0 + m, r1 - m, c1 - m,
                                    std::max(6, static_cast<int>(14 * scale)), 0.22);
                    break;
                case 7: {  // step wedge
                    const int bands = 5;
                    for (int b = 0; b < bands; ++b)
                        fill_rect(im, r0 + m + b * (ch - 2 * m) / bands, c0 + m + cw / 6,
                                  r0 + m + (b + 1) * (ch - 2 * m) / bands, c1 - m - cw / 6,
                                  0.25 + 0.65 * b / (bands - 1.0));
                    break;
                }
            }
        }
    }
    return band_limit(im, 2.0);
}

}  // namespace dk
