#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include "defocuskit/bench.hpp"
#include "defocuskit/errors.hpp"
#include "defocuskit/grad.hpp"
#include "defocuskit/solve.hpp"
#include "oracles.hpp"

using namespace dk;

TEST_SUITE("solve.projection") {
    TEST_CASE("clamp cases from the projection formula") {
        Image x(1, 3);
        x.at(0, 0) = -0.5;
        x.at(0, 1) = 0.3;
        x.at(0, 2) = 1.7;
        Image p = project_box(x);
        CHECK(p.at(0, 0) == 0.0);
        CHECK(p.at(0, 1) == 0.3);
        CHECK(p.at(0, 2) == 1.0);
    }

    TEST_CASE("idempotent and identity on feasible points") {
        std::mt19937 rng(61);
        Image x = oracle::random_image(9, 7, rng, -2.0, 3.0);
        Image p1 = project_box(x);
        Image p2 = project_box(p1);
        CHECK(max_abs_diff(p1, p2) == 0.0);
        Image inside = oracle::random_image(9, 7, rng);
        CHECK(max_abs_diff(project_box(inside), inside) == 0.0);
    }
}

TEST_SUITE("solve.initial_guess") {
    TEST_CASE("psf size one means the data is the guess") {
        auto model = DefocusModel::create(4, 3, 0.0, 2, 1);
        BlurOperator op(model, 12, 9);
        std::mt19937 rng(62);
        Image data = oracle::random_image(12, 9, rng);
        CHECK(max_abs_diff(initial_guess(op, data), data) == 0.0);
    }

    TEST_CASE("central crop has the right offset") {
        auto model = DefocusModel::create(3, 3, 0.1, 2, 5);
        BlurOperator op(model, 9, 9);
        Image data(13, 13, 0.0);
        for (int r = 0; r < 13; ++r)
            for (int c = 0; c < 13; ++c) data.at(r, c) = r * 100 + c;
        Image g = initial_guess(op, data);
        REQUIRE(g.height == 9);
        // clamped to [0,1], so compare against the clamped sample
        CHECK(g.at(0, 0) == doctest::Approx(std::min(1.0, 2.0 * 100 + 2.0)));
    }

    TEST_CASE("crop of a constant is the constant") {
        auto model = DefocusModel::create(3, 3, 0.1, 2, 5);
        BlurOperator op(model, 9, 9);
        Image data(13, 13, 0.6);
        Image g = initial_guess(op, data);
        for (double v : g.data) CHECK(v == 0.6);
    }
}

namespace {

struct SmallScene {
    BlurOperator op;
    Image truth;
    Image data;
};

SmallScene make_scene(unsigned seed, double d = 0.2, bool noiseless = true) {
    std::mt19937 rng(seed);
    auto model = DefocusModel::create(8, 4, d, 4.5, 9);
    BlurOperator op(model, 32, 32);
    Image truth = make_test_chart(32, 32);
    Image data = noiseless ? op.apply(truth) : op.synthesize_data(truth, NoiseSpec::poisson(1e6), seed);
    return SmallScene{std::move(op), std::move(truth), std::move(data)};
}

}  // namespace

TEST_SUITE("solve.iteration") {
    TEST_CASE("zero iterations returns the initial guess") {
        auto sc = make_scene(70);
        SolverConfig cfg;
        cfg.max_iterations = 0;
        auto rr = restore_dr(sc.op, sc.data, cfg);
        CHECK(max_abs_diff(rr.estimate, initial_guess(sc.op, sc.data)) == 0.0);
        CHECK(rr.trace.iterations == 0);
    }

    TEST_CASE("first DR iteration equals first PG iteration when t0 = 1") {
        auto sc = make_scene(71);
        SolverConfig cfg;
        cfg.stepsize = safe_stepsize(9);
        cfg.t0 = 1.0;
        cfg.max_iterations = 1;
        auto dr = restore_dr(sc.op, sc.data, cfg);
        auto pg = restore_pg(sc.op, sc.data, cfg);
        CHECK(max_abs_diff(dr.estimate, pg.estimate) == 0.0);
    }

    TEST_CASE("identity operator makes the initial guess a fixed point") {
        auto model = DefocusModel::create(1, 6, 0.0, 1, 1);  // rho = 1: L = I
        BlurOperator op(model, 6, 6);
        std::mt19937 rng(72);
        Image truth = oracle::random_image(6, 6, rng, 0.1, 0.9);
        SolverConfig cfg;
        cfg.stepsize = 1.0;
        cfg.max_iterations = 5;
        auto rr = restore_pg(op, truth, cfg);
        CHECK(max_abs_diff(rr.estimate, truth) < 1e-14);
        for (double c : rr.trace.change) CHECK(c < 1e-14);
    }

    TEST_CASE("iterates stay inside the box exactly") {
        auto sc = make_scene(73, 0.3, false);
        SolverConfig cfg;
        cfg.stepsize = 1.0;
        cfg.max_iterations = 25;
        auto rr = restore_dr(sc.op, sc.data, cfg);
        for (double v : rr.estimate.data) {
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }

    TEST_CASE("acceleration sequence grows like (k+2)/2") {
        double t = 1.0;
        for (int k = 1; k <= 200; ++k) {
            t = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            CHECK(t >= (k + 2) / 2.0);
        }
    }

    TEST_CASE("PG with the safe stepsize decreases the objective monotonically") {
        auto sc = make_scene(74, 0.25, false);
        SolverConfig cfg;
        cfg.stepsize = safe_stepsize(9);
        cfg.max_iterations = 40;
        auto rr = restore_pg(sc.op, sc.data, cfg);
        for (std::size_t k = 1; k < rr.trace.objective.size(); ++k)
            CHECK(rr.trace.objective[k] <= rr.trace.objective[k - 1] + 1e-12);
    }

    TEST_CASE("DR eventually beats PG at matched budgets") {
        auto sc = make_scene(75, 0.25, false);
        SolverConfig cfg;
        cfg.stepsize = safe_stepsize(9);
        cfg.max_iterations = 60;
        auto dr = restore_dr(sc.op, sc.data, cfg);
        auto pg = restore_pg(sc.op, sc.data, cfg);
        for (std::size_t k = 49; k < dr.trace.objective.size(); ++k)
            CHECK(dr.trace.objective[k] <= pg.trace.objective[k]);
    }

    TEST_CASE("guaranteed-rate bound holds on a noiseless scene") {
        auto sc = make_scene(76, 0.2, true);
        SolverConfig cfg;
        cfg.stepsize = safe_stepsize(9);
        cfg.max_iterations = 100;
        auto rr = restore_dr(sc.op, sc.data, cfg, &sc.truth);
        Image o0 = initial_guess(sc.op, sc.data);
        double dist2 = 0.0;
        for (std::size_t i = 0; i < o0.data.size(); ++i)
            dist2 += (o0.data[i] - sc.truth.data[i]) * (o0.data[i] - sc.truth.data[i]);
        for (int k = 1; k <= rr.trace.iterations; ++k)
            CHECK(rr.trace.objective[k - 1] <= 2.0 * 9 * dist2 / ((k + 1.0) * (k + 1.0)) + 1e-12);
    }

    TEST_CASE("change tolerance stops the loop early") {
        auto sc = make_scene(77);
        SolverConfig cfg;
        cfg.stepsize = safe_stepsize(9);
        cfg.max_iterations = 500;
        cfg.change_tolerance = 1e-3;
        auto rr = restore_dr(sc.op, sc.data, cfg);
        CHECK(rr.trace.iterations < 500);
        CHECK(rr.trace.reason == StopReason::ChangeTolerance);
    }

    TEST_CASE("oracle stall stops once improvement dries up") {
        auto sc = make_scene(78, 0.2, false);
        SolverConfig cfg;
        cfg.stepsize = 1.0;
        cfg.max_iterations = 400;
        cfg.oracle_tolerance = 1e-4;
        auto rr = restore_dr(sc.op, sc.data, cfg, &sc.truth);
        CHECK(rr.trace.iterations < 400);
        CHECK(rr.trace.reason == StopReason::OracleStall);
    }

    TEST_CASE("non-finite data aborts with a numerical error") {
        auto sc = make_scene(79);
        Image bad = sc.data;
        bad.at(0, 0) = std::numeric_limits<double>::quiet_NaN();
        SolverConfig cfg;
        cfg.stepsize = safe_stepsize(9);
        cfg.max_iterations = 3;
        CHECK_THROWS_AS(restore_dr(sc.op, bad, cfg), NumericalError);
    }

    TEST_CASE("restoration actually restores") {
        auto sc = make_scene(80, 0.25, false);
        SolverConfig cfg;
        cfg.stepsize = 1.0;
        cfg.max_iterations = 120;
        auto rr = restore_dr(sc.op, sc.data, cfg, &sc.truth);
        const double input_rms = relative_rms(central_crop(sc.data, 32, 32), sc.truth);
        CHECK(rr.trace.rms_vs_truth.back() < input_rms);
    }
}

TEST_SUITE("solve.trace") {
    TEST_CASE("trace CSV carries the expected columns") {
        namespace fs = std::filesystem;
        auto sc = make_scene(81, 0.2, false);
        SolverConfig cfg;
        cfg.stepsize = 1.0;
        cfg.max_iterations = 8;
        auto rr = restore_dr(sc.op, sc.data, cfg, &sc.truth);
        const std::string path = (fs::temp_directory_path() / "dk_trace_test.csv").string();
        write_trace_csv(rr.trace, path);
        std::ifstream in(path);
        std::string header;
        std::getline(in, header);
        CHECK(header == "iteration,objective,change,rms_vs_truth");
        int rows = 0;
        std::string line;
        while (std::getline(in, line))
            if (!line.empty()) ++rows;
        CHECK(rows == rr.trace.iterations);
        fs::remove(path);
    }

    TEST_CASE("tail slope of the change curve is negative") {
        auto sc = make_scene(82, 0.2, false);
        SolverConfig cfg;
        cfg.stepsize = 1.0;
        cfg.max_iterations = 150;
        cfg.record_objective = false;
        auto rr = restore_dr(sc.op, sc.data, cfg);
        CHECK(tail_log_slope(rr.trace.change) < 0.0);
    }
}
