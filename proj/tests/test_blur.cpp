#include <doctest.h>

#include <cmath>
#include <random>

#include "defocuskit/blur.hpp"
#include "oracles.hpp"

using namespace dk;

namespace {

BlurOperator make_op(int N, int s, int rho, int w, ConvBackend backend = ConvBackend::Fft, double d = 0.17,
                     Orientation orient = Orientation::RowBands) {
    auto model = DefocusModel::create(N, s, d, (N + 1) / 2.0, rho, orient);
    const int h = orient == Orientation::RowBands ? N * s : w;
    const int ww = orient == Orientation::RowBands ? w : N * s;
    return BlurOperator(model, h, ww);
}

}  // namespace

TEST_SUITE("blur.forward") {
    TEST_CASE("single zone reduces to an ordinary full convolution") {
        std::mt19937 rng(21);
        auto op = make_op(1, 12, 7, 15);
        Image x = oracle::random_image(12, 15, rng);
        Image expected = oracle::full_convolve(x, op.psfs().kernels[0]);
        CHECK(max_abs_diff(op.apply(x), expected) < 1e-12);
    }

    TEST_CASE("zero in, zero out") {
        auto op = make_op(4, 3, 5, 10);
        Image x(12, 10, 0.0);
        CHECK(norm(op.apply(x)) == 0.0);
        Image y(12 + 4, 10 + 4, 0.0);
        CHECK(norm(op.apply_adjoint(y)) == 0.0);
    }

    TEST_CASE("matches the scalar masked-convolution oracle") {
        std::mt19937 rng(22);
        auto op = make_op(8, 4, 9, 32);
        Image x = oracle::random_image(32, 32, rng);
        Image expected = oracle::apply_reference(x, op.masks(), op.psfs(), Orientation::RowBands);
        CHECK(max_abs_diff(op.apply(x), expected) < 1e-10);

        auto direct = BlurOperator(op.model(), 32, 32, ConvBackend::Direct);
        CHECK(max_abs_diff(direct.apply(x), expected) < 1e-10);
    }

    TEST_CASE("linearity to machine precision") {
        std::mt19937 rng(23);
        auto op = make_op(5, 2, 7, 14);
        Image x = oracle::random_image(10, 14, rng), y = oracle::random_image(10, 14, rng);
        const double a = 0.37, b = -1.21;
        Image combo(10, 14);
        for (std::size_t i = 0; i < combo.data.size(); ++i) combo.data[i] = a * x.data[i] + b * y.data[i];
        Image lhs = op.apply(combo);
        Image lx = op.apply(x), ly = op.apply(y);
        for (std::size_t i = 0; i < lhs.data.size(); ++i)
            CHECK(lhs.data[i] == doctest::Approx(a * lx.data[i] + b * ly.data[i]).epsilon(1e-12));
    }

    TEST_CASE("operator is a contraction on model stacks") {
        std::mt19937 rng(24);
        for (int trial = 0; trial < 10; ++trial) {
            auto op = make_op(6 + static_cast<int>(rng() % 8), 1 + static_cast<int>(rng() % 4),
                              2 * static_cast<int>(rng() % 6) + 3, 10 + static_cast<int>(rng() % 20));
            Image x = oracle::random_image(op.object_height(), op.object_width(), rng, -1.0, 1.0);
            CHECK(norm(op.apply(x)) <= norm(x) * (1.0 + 1e-12));
        }
    }

    TEST_CASE("backends agree at tight tolerance") {
        std::mt19937 rng(25);
        auto fft = make_op(7, 3, 9, 26, ConvBackend::Fft);
        auto direct = BlurOperator(fft.model(), 21, 26, ConvBackend::Direct);
        Image x = oracle::random_image(21, 26, rng);
        Image a = fft.apply(x), b = direct.apply(x);
        CHECK(max_abs_diff(a, b) / std::max(1.0, max_abs(a)) < 1e-9);
        Image y = oracle::random_image(fft.image_height(), fft.image_width(), rng);
        CHECK(max_abs_diff(fft.apply_adjoint(y), direct.apply_adjoint(y)) < 1e-9);
    }

    TEST_CASE("shape mismatches are rejected") {
        auto op = make_op(4, 3, 5, 10);
        CHECK_THROWS_AS(op.apply(Image(11, 10, 0.0)), std::invalid_argument);
        CHECK_THROWS_AS(op.apply_adjoint(Image(12, 10, 0.0)), std::invalid_argument);
    }
}

TEST_SUITE("blur.adjoint") {
    TEST_CASE("inner-product identity across shapes and backends") {
        std::mt19937 rng(26);
        const int Ns[] = {1, 4, 16};
        const int ss[] = {1, 3, 8};
        const int rhos[] = {3, 9, 17};
        for (int t = 0; t < 20; ++t) {
            const int N = Ns[rng() % 3], s = ss[rng() % 3], rho = rhos[rng() % 3];
            const int w = 8 + static_cast<int>(rng() % 25);
            auto backend = (t % 2 == 0) ? ConvBackend::Fft : ConvBackend::Direct;
            auto model = DefocusModel::create(N, s, 0.05 + 0.2 * (t % 4), (N + 1) / 2.0, rho);
            BlurOperator op(model, N * s, w, backend);
            Image x = oracle::random_image(N * s, w, rng, -1.0, 1.0);
            Image y = oracle::random_image(N * s + rho - 1, w + rho - 1, rng, -1.0, 1.0);
            const double lhs = dot(op.apply(x), y);
            const double rhs = dot(x, op.apply_adjoint(y));
            CHECK(std::abs(lhs - rhs) / (norm(x) * norm(y)) < 1e-10);
        }
    }

    TEST_CASE("single zone adjoint equals valid correlation") {
        std::mt19937 rng(27);
        auto op = make_op(1, 9, 5, 11);
        Image y = oracle::random_image(13, 15, rng);
        Image expected = oracle::valid_correlate(y, op.psfs().kernels[0]);
        CHECK(max_abs_diff(op.apply_adjoint(y), expected) < 1e-12);
    }

    TEST_CASE("column-banded operators satisfy the identity too") {
        std::mt19937 rng(28);
        auto op = make_op(6, 4, 7, 19, ConvBackend::Fft, 0.2, Orientation::ColumnBands);
        Image x = oracle::random_image(19, 24, rng);
        Image y = oracle::random_image(19 + 6, 24 + 6, rng);
        const double lhs = dot(op.apply(x), y);
        const double rhs = dot(x, op.apply_adjoint(y));
        CHECK(std::abs(lhs - rhs) / (norm(x) * norm(y)) < 1e-10);
        Image expected = oracle::apply_reference(x, op.masks(), op.psfs(), Orientation::ColumnBands);
        CHECK(max_abs_diff(op.apply(x), expected) < 1e-10);
    }
}

TEST_SUITE("blur.synthesize") {
    TEST_CASE("noiseless synthesis equals apply") {
        std::mt19937 rng(29);
        auto op = make_op(4, 3, 7, 13);
        Image x = oracle::random_image(12, 13, rng);
        CHECK(max_abs_diff(op.synthesize_data(x, NoiseSpec::none(), 1), op.apply(x)) == 0.0);
    }

    TEST_CASE("zero blur coefficient degenerates to one shared PSF") {
        std::mt19937 rng(30);
        auto model = DefocusModel::create(6, 2, 0.0, 4, 7);
        BlurOperator op(model, 12, 16);
        Image x = oracle::random_image(12, 16, rng);
        Image expected = oracle::full_convolve(x, op.psfs().kernels[0]);
        CHECK(max_abs_diff(op.apply(x), expected) < 1e-12);
    }

    TEST_CASE("object outside the box is rejected") {
        auto op = make_op(4, 3, 7, 13);
        Image x(12, 13, 0.5);
        x.at(0, 0) = 1.4;
        CHECK_THROWS_AS(op.synthesize_data(x, NoiseSpec::none(), 1), std::invalid_argument);
    }
}
