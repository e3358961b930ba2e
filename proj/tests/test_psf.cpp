#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <vector>

#include "defocuskit/errors.hpp"
#include "defocuskit/psf.hpp"

using namespace dk;

namespace {

double kernel_sum(const Image& k) {
    double s = 0.0;
    for (double v : k.data) s += v;
    return s;
}

double second_moment_radius(const Image& k) {
    const int cc = (k.height - 1) / 2;
    double m = 0.0;
    for (int i = 0; i < k.height; ++i)
        for (int j = 0; j < k.width; ++j)
            m += k.at(i, j) * ((i - cc) * double(i - cc) + (j - cc) * double(j - cc));
    return std::sqrt(m);
}

double reflection_error(const Image& k) {
    double e = 0.0;
    for (int i = 0; i < k.height; ++i)
        for (int j = 0; j < k.width; ++j)
            e = std::max(e, std::abs(k.at(i, j) - k.at(k.height - 1 - i, k.width - 1 - j)));
    return e;
}

}  // namespace

TEST_SUITE("psf.zernike") {
    TEST_CASE("center and disk edge take the closed-form values") {
        const Image z = zernike_defocus(65);
        const double s3 = std::sqrt(3.0);
        CHECK(z.at(32, 32) == doctest::Approx(-s3).epsilon(1e-12));
        CHECK(z.at(32, 64) == doctest::Approx(s3).epsilon(1e-12));  // r = 1 on the axis
        CHECK(z.at(0, 0) == 0.0);                                   // outside the disk
    }

    TEST_CASE("unit mean square over the disk (quadrature oracle)") {
        const int g = 129;
        const Image z = zernike_defocus(g);
        const double c = 0.5 * (g - 1);
        double acc = 0.0;
        long count = 0;
        for (int i = 0; i < g; ++i)
            for (int j = 0; j < g; ++j) {
                const double r = std::sqrt((i - c) * (i - c) + (j - c) * (j - c)) / c;
                if (r <= 1.0) {
                    acc += z.at(i, j) * z.at(i, j);
                    ++count;
                }
            }
        CHECK(acc / count == doctest::Approx(1.0).epsilon(0.02));
    }
}

TEST_SUITE("psf.kernels") {
    TEST_CASE("kernels are normalized, nonnegative and centrosymmetric") {
        const ApertureSpec ap{65, 0.5, true};
        for (double depth : {0.0, 0.7, 2.0, -3.5, 7.0}) {
            const Image p = make_psf(ap, depth);
            CHECK(std::abs(kernel_sum(p) - 1.0) < 1e-12);
            CHECK(reflection_error(p) < 1e-12);
            for (double v : p.data) CHECK(v >= 0.0);
        }
    }

    TEST_CASE("depth enters only through its magnitude") {
        const ApertureSpec ap{33, 0.5, true};
        for (double depth : {0.5, 1.75, 4.0}) {
            const Image plus = make_psf(ap, depth);
            const Image minus = make_psf(ap, -depth);
            CHECK(max_abs_diff(plus, minus) < 1e-12);
        }
    }

    TEST_CASE("zero depth gives a strict central maximum") {
        const Image p = make_psf(ApertureSpec{65, 0.5, true}, 0.0);
        const double center = p.at(32, 32);
        for (int i = 0; i < 65; ++i)
            for (int j = 0; j < 65; ++j)
                if (i != 32 || j != 32) CHECK(p.at(i, j) < center);
    }

    TEST_CASE("support radius grows monotonically with defocus") {
        const ApertureSpec ap{65, 0.5, true};
        double prev = -1.0;
        for (int t = 0; t <= 7; ++t) {
            const double r = second_moment_radius(make_psf(ap, t));
            CHECK(r > prev);
            prev = r;
        }
    }

    TEST_CASE("single-sample grid degenerates to a delta") {
        const Image p = make_psf(ApertureSpec{1, 0.5, true}, 3.0);
        REQUIRE(p.size() == 1);
        CHECK(p.at(0, 0) == doctest::Approx(1.0));
    }

    TEST_CASE("truncation warning fires only for oversized defocus") {
        std::vector<std::string> warnings;
        set_warning_handler([&](const std::string& w) { warnings.push_back(w); });
        const ApertureSpec ap{65, 0.5, true};
        (void)make_psf(ap, 1.0);
        CHECK(warnings.empty());
        (void)make_psf(ap, 14.0);
        CHECK(!warnings.empty());
        set_warning_handler(nullptr);
    }
}

TEST_SUITE("psf.stack") {
    TEST_CASE("depth law d_n = d(n0 - n)") {
        auto model = DefocusModel::create(141, 3, 0.1, 71, 65);
        const PsfStack stack = build_psf_stack(model);
        CHECK(stack.depths[70] == doctest::Approx(0.0));       // n = 71
        CHECK(stack.depths[0] == doctest::Approx(7.0));        // n = 1
        CHECK(stack.depths[140] == doctest::Approx(-7.0));     // n = 141
    }

    TEST_CASE("experiment-table depths: N=116, d=0.0296, n0=8") {
        auto model = DefocusModel::create(116, 5, 0.0296, 8, 23, Orientation::ColumnBands);
        const PsfStack stack = build_psf_stack(model);
        CHECK(stack.depths.front() == doctest::Approx(0.2072).epsilon(1e-12));
        CHECK(stack.depths.back() == doctest::Approx(-3.1968).epsilon(1e-12));
    }

    TEST_CASE("zero blur coefficient collapses to one diffraction kernel") {
        auto model = DefocusModel::create(5, 2, 0.0, 3, 9);
        const PsfStack stack = build_psf_stack(model);
        for (int n = 1; n < 5; ++n) CHECK(max_abs_diff(stack.kernels[n], stack.kernels[0]) == 0.0);
    }

    TEST_CASE("export writes kernels plus metadata") {
        namespace fs = std::filesystem;
        const fs::path dir = fs::temp_directory_path() / "dk_psf_export_test";
        fs::remove_all(dir);
        auto model = DefocusModel::create(3, 2, 0.2, 2, 9);
        export_psf_stack(build_psf_stack(model), model, dir.string());
        CHECK(fs::exists(dir / "psf_001.pgm"));
        CHECK(fs::exists(dir / "psf_003.pgm"));
        std::ifstream meta(dir / "metadata.txt");
        REQUIRE(meta.good());
        std::string all((std::istreambuf_iterator<char>(meta)), std::istreambuf_iterator<char>());
        CHECK(all.find("blur_coefficient=0.2") != std::string::npos);
        CHECK(all.find("depths=") != std::string::npos);
        fs::remove_all(dir);
    }
}
