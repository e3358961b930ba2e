#include "defocuskit/solve.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

#include "defocuskit/core.hpp"
#include "defocuskit/errors.hpp"
#include "defocuskit/grad.hpp"

namespace dk {

void SolverConfig::validate() const {
    if (!(stepsize > 0.0)) throw std::invalid_argument("SolverConfig: stepsize must be > 0");
    if (t0 < 1.0) throw std::invalid_argument("SolverConfig: t0 must be >= 1");
    if (max_iterations < 0) throw std::invalid_argument("SolverConfig: max_iterations must be >= 0");
}

std::string to_string(StopReason r) {
    switch (r) {
        case StopReason::IterationBudget: return "iteration_budget";
        case StopReason::ChangeTolerance: return "change_tolerance";
        case StopReason::OracleStall: return "oracle_stall";
    }
    return "iteration_budget";
}

Image project_box(Image x) {
    for (double& v : x.data) v = std::clamp(v, 0.0, 1.0);
    return x;
}

Image initial_guess(const BlurOperator& op, const Image& data) {
    if (data.height != op.image_height() || data.width != op.image_width())
        throw std::invalid_argument("initial_guess: data must have image shape");
    return project_box(central_crop(data, op.object_height(), op.object_width()));
}

namespace {

double change_norm(const Image& a, const Image& b) {
    double acc = 0.0;
    for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double d = a.data[i] - b.data[i];
        acc += d * d;
    }
    return std::sqrt(acc);
}

// Shared FISTA/PG loop; momentum=false gives projected gradient.
RestoreResult run_solver(const BlurOperator& op, const Image& data, const SolverConfig& cfg, const Image* truth,
                         bool momentum) {
    cfg.validate();
    if (truth && (truth->height != op.object_height() || truth->width != op.object_width()))
        throw std::invalid_argument("restore: truth must have object shape");

    RestoreResult result;
    Image x = initial_guess(op, data);
    if (cfg.max_iterations == 0) {
        result.estimate = std::move(x);
        return result;
    }

    GradientWorkspace ws(op);
    Image o = x;        // extrapolated point (equals x when momentum is off)
    Image x_prev = x;
    double t = cfg.t0;
    SolverTrace& trace = result.trace;
    double prev_rms = truth ? relative_rms(x, *truth) : 0.0;

    for (int k = 1; k <= cfg.max_iterations; ++k) {
        const Image& eval_point = momentum ? o : x_prev;
        Image g = grad_fast(op, data, eval_point, ws);
        x = eval_point;
        for (std::size_t i = 0; i < x.data.size(); ++i)
            x.data[i] = std::clamp(x.data[i] - cfg.stepsize * g.data[i], 0.0, 1.0);

        if (momentum) {
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const double beta = (t - 1.0) / t_next;
            o = x;
            for (std::size_t i = 0; i < o.data.size(); ++i) o.data[i] += beta * (x.data[i] - x_prev.data[i]);
            t = t_next;
        }

        const double change = change_norm(x, x_prev);
        trace.change.push_back(change);
        trace.iterations = k;
        x_prev = x;

        if (cfg.record_objective) {
            const double f = objective_value(op, data, x);
            if (!std::isfinite(f)) {
                char msg[128];
                std::snprintf(msg, sizeof(msg), "restore: non-finite objective at iteration %d (stepsize %.3g)", k,
                              cfg.stepsize);
                throw NumericalError(msg);
            }
            trace.objective.push_back(f);
        } else if (!std::isfinite(change)) {
            char msg[128];
            std::snprintf(msg, sizeof(msg), "restore: non-finite iterate change at iteration %d (stepsize %.3g)", k,
                          cfg.stepsize);
            throw NumericalError(msg);
        }

        if (truth) {
            const double rms = relative_rms(x, *truth);
            trace.rms_vs_truth.push_back(rms);
            // momentum overshoot can wobble the RMS in the first few
            // iterations; the stall test only arms after that
            if (cfg.oracle_tolerance && k >= 10 && (prev_rms - rms) / 100.0 < *cfg.oracle_tolerance) {
                trace.reason = StopReason::OracleStall;
                break;
            }
            prev_rms = rms;
        }
        if (cfg.change_tolerance && change < *cfg.change_tolerance) {
            trace.reason = StopReason::ChangeTolerance;
            break;
        }
    }
    result.estimate = std::move(x);
    return result;
}

}  // namespace

RestoreResult restore_dr(const BlurOperator& op, const Image& data, const SolverConfig& cfg, const Image* truth) {
    return run_solver(op, data, cfg, truth, true);
}

RestoreResult restore_pg(const BlurOperator& op, const Image& data, const SolverConfig& cfg, const Image* truth) {
    return run_solver(op, data, cfg, truth, false);
}

void write_trace_csv(const SolverTrace& trace, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_trace_csv: cannot open " + path);
    const bool has_obj = !trace.objective.empty();
    const bool has_rms = !trace.rms_vs_truth.empty();
    out << "iteration";
    if (has_obj) out << ",objective";
    out << ",change";
    if (has_rms) out << ",rms_vs_truth";
    out << "\n";
    char buf[64];
    for (int k = 0; k < trace.iterations; ++k) {
        out << (k + 1);
        if (has_obj) {
            std::snprintf(buf, sizeof(buf), ",%.17g", trace.objective[k]);
            out << buf;
        }
        std::snprintf(buf, sizeof(buf), ",%.17g", trace.change[k]);
        out << buf;
        if (has_rms) {
            std::snprintf(buf, sizeof(buf), ",%.17g", trace.rms_vs_truth[k]);
            out << buf;
        }
        out << "\n";
    }
}

}  // namespace dk
