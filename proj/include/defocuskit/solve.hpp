#pragma once

#include <optional>
#include <string>
#include <vector>

#include "defocuskit/blur.hpp"
#include "defocuskit/image.hpp"

namespace dk {

struct SolverConfig {
    double stepsize = 1.0;              // lambda; experiments use 1, safe mode 1/rho
    double t0 = 1.0;                    // initial acceleration parameter
    int max_iterations = 100;           // K
    // Stop when ||x^k - x^(k-1)||_F falls below this.
    std::optional<double> change_tolerance;
    // Ground-truth-aware stall test (harness only): stop when the per-iteration
    // drop of the relative RMS (as a fraction, not %) falls below this.
    std::optional<double> oracle_tolerance;
    bool record_objective = true;

    void validate() const;
};

// Conservative stepsize from the smoothness bound Gamma = rho.
inline double safe_stepsize(int psf_size) { return 1.0 / psf_size; }

enum class StopReason { IterationBudget, ChangeTolerance, OracleStall };
std::string to_string(StopReason r);

struct SolverTrace {
    std::vector<double> objective;     // f(x^k); empty when not recorded
    std::vector<double> change;        // ||x^k - x^(k-1)||_F
    std::vector<double> rms_vs_truth;  // %, empty when no truth supplied
    int iterations = 0;
    StopReason reason = StopReason::IterationBudget;
};

// Elementwise clamp to [0,1] (the projection onto Omega).
Image project_box(Image x);

// Central (l, w) crop of the data image, clamped to [0,1].
Image initial_guess(const BlurOperator& op, const Image& data);

struct RestoreResult {
    Image estimate;      // last projected iterate, guaranteed inside [0,1]
    SolverTrace trace;
};

// FISTA with constant stepsize and box projection (the accelerated method).
RestoreResult restore_dr(const BlurOperator& op, const Image& data, const SolverConfig& cfg,
                         const Image* truth = nullptr);

// Projected gradient: the same loop without momentum.
RestoreResult restore_pg(const BlurOperator& op, const Image& data, const SolverConfig& cfg,
                         const Image* truth = nullptr);

// Columns: iteration, objective (if recorded), change, rms_vs_truth (if present).
void write_trace_csv(const SolverTrace& trace, const std::string& path);

}  // namespace dk
