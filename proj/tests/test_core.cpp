#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "defocuskit/core.hpp"
#include "oracles.hpp"

using namespace dk;

TEST_SUITE("core.masks") {
    TEST_CASE("three zones of two rows partition a six-row object") {
        auto model = DefocusModel::create(3, 2, 0.1, 2, 3);
        auto masks = build_masks(model, 6, 10);
        REQUIRE(masks.size() == 3);
        CHECK(masks[0].band_start == 0);
        CHECK(masks[0].band_end == 2);
        CHECK(masks[1].band_start == 2);
        CHECK(masks[1].band_end == 4);
        CHECK(masks[2].band_start == 4);
        CHECK(masks[2].band_end == 6);
    }

    TEST_CASE("experiment-scale banding: 141 zones of 3 rows") {
        auto model = DefocusModel::create(141, 3, 0.1, 71, 65);
        auto masks = build_masks(model, 423, 423);
        REQUIRE(masks.size() == 141);
        for (const auto& m : masks) CHECK(m.band_end - m.band_start == 3);
        CHECK(masks.back().band_end == 423);
    }

    TEST_CASE("dimension mismatch is rejected") {
        auto model = DefocusModel::create(2, 2, 0.1, 1, 3);
        CHECK_THROWS_AS(build_masks(model, 5, 8), std::invalid_argument);
    }

    TEST_CASE("column bands partition the width") {
        auto model = DefocusModel::create(4, 5, 0.1, 2, 3, Orientation::ColumnBands);
        auto masks = build_masks(model, 9, 20);
        REQUIRE(masks.size() == 4);
        CHECK(masks.back().band_end == 20);
        CHECK_THROWS_AS(build_masks(model, 20, 9), std::invalid_argument);
    }

    TEST_CASE("masks form a partition of the banded axis") {
        std::mt19937 rng(11);
        for (int trial = 0; trial < 20; ++trial) {
            const int n = 1 + static_cast<int>(rng() % 12);
            const int s = 1 + static_cast<int>(rng() % 7);
            auto model = DefocusModel::create(n, s, 0.1, 1, 3);
            auto masks = build_masks(model, n * s, 8);
            std::vector<int> cover(n * s, 0);
            for (const auto& m : masks)
                for (int r = m.band_start; r < m.band_end; ++r) cover[r]++;
            for (int c : cover) CHECK(c == 1);
        }
    }

    TEST_CASE("model invariants are enforced") {
        CHECK_THROWS_AS(DefocusModel::create(0, 1, 0.1, 1, 3), std::invalid_argument);
        CHECK_THROWS_AS(DefocusModel::create(1, 0, 0.1, 1, 3), std::invalid_argument);
        CHECK_THROWS_AS(DefocusModel::create(1, 1, 0.1, 1, 4), std::invalid_argument);  // even psf
        CHECK_THROWS_AS(DefocusModel::create(1, 1, 0.1, 1, 3, Orientation::RowBands, 1.5), std::invalid_argument);
        CHECK_THROWS_AS(DefocusModel::create(1, 1, 0.1, 1, 3, Orientation::RowBands, 0.0), std::invalid_argument);
    }
}

TEST_SUITE("core.relative_rms") {
    TEST_CASE("identity gives zero") {
        std::mt19937 rng(1);
        Image a = oracle::random_image(13, 9, rng, 0.1, 1.0);
        CHECK(relative_rms(a, a) == doctest::Approx(0.0));
    }

    TEST_CASE("scaling by 1.1 gives exactly 10 percent") {
        std::mt19937 rng(2);
        Image truth = oracle::random_image(17, 11, rng, 0.1, 1.0);
        Image est = truth;
        for (double& v : est.data) v *= 1.1;
        CHECK(relative_rms(est, truth) == doctest::Approx(10.0).epsilon(1e-10));
    }

    TEST_CASE("matches an independently coded formula on a noisy pair") {
        std::mt19937 rng(3);
        Image truth = oracle::random_image(31, 29, rng, 0.2, 1.0);
        Image est = add_noise(truth, NoiseSpec::gaussian(25.0), 99);
        double num = 0.0, den = 0.0;
        for (std::size_t i = 0; i < truth.data.size(); ++i) {
            num += (est.data[i] - truth.data[i]) * (est.data[i] - truth.data[i]);
            den += truth.data[i] * truth.data[i];
        }
        const double expected = 100.0 * std::sqrt(num) / std::sqrt(den);
        CHECK(relative_rms(est, truth) == doctest::Approx(expected).epsilon(1e-12));
    }

    TEST_CASE("invariant under simultaneous scaling") {
        std::mt19937 rng(4);
        Image truth = oracle::random_image(8, 8, rng, 0.1, 1.0);
        Image est = oracle::random_image(8, 8, rng, 0.0, 1.0);
        const double base = relative_rms(est, truth);
        for (double s : {0.25, 3.0, 117.0}) {
            Image ts = truth, es = est;
            for (double& v : ts.data) v *= s;
            for (double& v : es.data) v *= s;
            CHECK(relative_rms(es, ts) == doctest::Approx(base).epsilon(1e-12));
        }
    }

    TEST_CASE("error cases") {
        Image a(4, 4, 0.5), b(4, 5, 0.5), z(4, 4, 0.0);
        CHECK_THROWS_AS(relative_rms(a, b), std::invalid_argument);
        CHECK_THROWS_AS(relative_rms(a, z), std::invalid_argument);
    }
}

TEST_SUITE("core.noise") {
    TEST_CASE("infinite SNR leaves the image unchanged") {
        std::mt19937 rng(5);
        Image a = oracle::random_image(16, 16, rng);
        Image b = add_noise(a, NoiseSpec::gaussian(std::numeric_limits<double>::infinity()), 7);
        CHECK(max_abs_diff(a, b) == 0.0);
    }

    TEST_CASE("realized SNR is within half a dB of the request") {
        std::mt19937 rng(6);
        Image a = oracle::random_image(256, 256, rng, 0.2, 1.0);
        for (double snr : {30.0, 45.0}) {
            Image b = add_noise(a, NoiseSpec::gaussian(snr), 1234);
            Image noise(256, 256);
            for (std::size_t i = 0; i < a.data.size(); ++i) noise.data[i] = b.data[i] - a.data[i];
            const double realized = 20.0 * std::log10(root_mean_square(a) / root_mean_square(noise));
            CHECK(std::abs(realized - snr) < 0.5);
        }
    }

    TEST_CASE("poisson converges to the input at huge peak") {
        std::mt19937 rng(7);
        Image a = oracle::random_image(64, 64, rng, 0.05, 1.0);
        Image b = add_noise(a, NoiseSpec::poisson(1e8), 5);
        CHECK(max_abs_diff(a, b) < 1e-3);
    }

    TEST_CASE("fixed seed reproduces bit-identically") {
        std::mt19937 rng(8);
        Image a = oracle::random_image(32, 32, rng);
        for (auto spec : {NoiseSpec::poisson(1e4), NoiseSpec::gaussian(35.0)}) {
            Image b1 = add_noise(a, spec, 42);
            Image b2 = add_noise(a, spec, 42);
            CHECK(max_abs_diff(b1, b2) == 0.0);
            Image b3 = add_noise(a, spec, 43);
            CHECK(max_abs_diff(b1, b3) > 0.0);
        }
    }

    TEST_CASE("error cases") {
        Image a(4, 4, 0.5);
        a.at(1, 1) = -0.2;
        CHECK_THROWS_AS(add_noise(a, NoiseSpec::poisson(1e4), 1), std::invalid_argument);
        Image b(4, 4, 0.5);
        CHECK_THROWS_AS(add_noise(b, NoiseSpec::poisson(0.0), 1), std::invalid_argument);
        CHECK_THROWS_AS(add_noise(b, NoiseSpec::gaussian(-3.0), 1), std::invalid_argument);
    }

    TEST_CASE("spec strings parse and round trip") {
        CHECK(NoiseSpec::parse("none").kind == NoiseSpec::Kind::None);
        auto p = NoiseSpec::parse("poisson:2e5");
        CHECK(p.kind == NoiseSpec::Kind::Poisson);
        CHECK(p.poisson_peak == doctest::Approx(2e5));
        auto g = NoiseSpec::parse("gaussian:42");
        CHECK(g.kind == NoiseSpec::Kind::Gaussian);
        CHECK(g.snr_db == doctest::Approx(42.0));
        CHECK(NoiseSpec::parse(g.to_string()).snr_db == doctest::Approx(42.0));
        CHECK_THROWS_AS(NoiseSpec::parse("salt"), std::invalid_argument);
    }
}
