#include "defocuskit/psf.hpp"

#include <cmath>
#include <complex>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <stdexcept>

#include "defocuskit/errors.hpp"
#include "defocuskit/parallel.hpp"
#include "defocuskit/pgm.hpp"
#include "fft_conv.hpp"

namespace dk {

namespace {

// Z_2^0 sampled with the unit disk scaled to disk_radius pixels.
Image zernike_defocus_scaled(int grid_size, double disk_radius, double normalization) {
    Image z(grid_size, grid_size, 0.0);
    const double c = 0.5 * (grid_size - 1);
    for (int i = 0; i < grid_size; ++i) {
        for (int j = 0; j < grid_size; ++j) {
            const double dy = i - c;
            const double dx = j - c;
            const double r = disk_radius > 0.0 ? std::sqrt(dx * dx + dy * dy) / disk_radius
                                               : std::sqrt(dx * dx + dy * dy);
            if (r <= 1.0) z.at(i, j) = normalization * (2.0 * r * r - 1.0);
        }
    }
    return z;
}

}  // namespace

Image zernike_defocus(int grid_size) {
    if (grid_size < 1) throw std::invalid_argument("zernike_defocus: grid_size must be >= 1");
    return zernike_defocus_scaled(grid_size, 0.5 * (grid_size - 1), std::sqrt(3.0));
}

Image make_psf(const ApertureSpec& aperture, double depth) {
    const int g = aperture.grid_size;
    if (g < 1) throw std::invalid_argument("make_psf: grid_size must be >= 1");
    if (!(aperture.pupil_radius_fraction > 0.0) || aperture.pupil_radius_fraction > 1.0)
        throw std::invalid_argument("make_psf: pupil_radius_fraction must be in (0,1]");
    if (g == 1) return Image(1, 1, 1.0);

    const double c = 0.5 * (g - 1);
    const double disk_radius = aperture.pupil_radius_fraction * c;
    const double znorm = aperture.noll_normalization ? std::sqrt(3.0) : 1.0;

    // Pupil A .* exp(j*depth*Z). Input shift is irrelevant to |F|^2; only the
    // output is recentred so the zero-depth peak lands on the center pixel.
    detail::CplxBuf in(static_cast<std::size_t>(g) * g), out(static_cast<std::size_t>(g) * g);
    in.zero();
    for (int i = 0; i < g; ++i) {
        for (int j = 0; j < g; ++j) {
            const double dy = i - c;
            const double dx = j - c;
            const double r = std::sqrt(dx * dx + dy * dy) / disk_radius;
            if (r <= 1.0) {
                const double phase = depth * znorm * (2.0 * r * r - 1.0);
                in.p[static_cast<std::size_t>(i) * g + j][0] = std::cos(phase);
                in.p[static_cast<std::size_t>(i) * g + j][1] = std::sin(phase);
            }
        }
    }
    detail::ComplexFft2 fft(g, g);
    fft.forward(in.p, out.p);

    Image psf(g, g);
    const int cc = (g - 1) / 2;
    double sum = 0.0;
    for (int k = 0; k < g; ++k) {
        const int fk = ((k - cc) % g + g) % g;
        for (int l = 0; l < g; ++l) {
            const int fl = ((l - cc) % g + g) % g;
            const fftw_complex& v = out.p[static_cast<std::size_t>(fk) * g + fl];
            const double m2 = v[0] * v[0] + v[1] * v[1];
            psf.at(k, l) = m2;
            sum += m2;
        }
    }
    for (double& v : psf.data) v /= sum;

    double moment = 0.0;
    for (int k = 0; k < g; ++k)
        for (int l = 0; l < g; ++l)
            moment += psf.at(k, l) * ((k - cc) * double(k - cc) + (l - cc) * double(l - cc));
    const double radius = std::sqrt(moment);
    if (radius > 0.45 * g) {
        char msg[160];
        std::snprintf(msg, sizeof(msg),
                      "psf at depth %.4g barely fits the %dx%d grid (second-moment radius %.1f px); "
                      "tail energy renormalized",
                      depth, g, g, radius);
        emit_warning(msg);
    }
    return psf;
}

PsfStack build_psf_stack(const DefocusModel& model) {
    model.validate();
    PsfStack stack;
    stack.n_zones = model.n_zones;
    stack.size = model.psf_size;
    stack.depths.resize(model.n_zones);
    stack.kernels.resize(model.n_zones);
    for (int n = 1; n <= model.n_zones; ++n)
        stack.depths[n - 1] = model.blur_coefficient * (model.focal_position - n);
    parallel_for(model.n_zones, [&](int idx) { stack.kernels[idx] = make_psf(model.aperture, stack.depths[idx]); });
    return stack;
}

void export_psf_stack(const PsfStack& stack, const DefocusModel& model, const std::string& directory) {
    namespace fs = std::filesystem;
    fs::create_directories(directory);
    for (int n = 0; n < stack.n_zones; ++n) {
        Image scaled = stack.kernels[n];
        const double peak = max_abs(scaled);
        if (peak > 0.0)
            for (double& v : scaled.data) v /= peak;
        char name[64];
        std::snprintf(name, sizeof(name), "psf_%03d.pgm", n + 1);
        save_pgm(scaled, (fs::path(directory) / name).string(), 16);
    }
    std::ofstream meta(fs::path(directory) / "metadata.txt");
    if (!meta) throw IoError("export_psf_stack: cannot write metadata.txt");
    meta << "n_zones=" << stack.n_zones << "\n";
    meta << "psf_size=" << stack.size << "\n";
    meta << "blur_coefficient=" << model.blur_coefficient << "\n";
    meta << "focal_position=" << model.focal_position << "\n";
    meta << "depths=";
    for (int n = 0; n < stack.n_zones; ++n) meta << (n ? "," : "") << stack.depths[n];
    meta << "\n";
}

}  // namespace dk
