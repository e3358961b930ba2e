#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "defocuskit/core.hpp"
#include "defocuskit/image.hpp"
#include "defocuskit/solve.hpp"

namespace dk {

enum class SweepKind { Solvability, NoiseSNR, Convergence, FocalOffset, BlurCoeffOffset, Timing };

std::string to_string(SweepKind k);
SweepKind parse_sweep_kind(const std::string& s);

// Grid semantics per kind: Solvability -> blur coefficients; NoiseSNR -> SNR in
// dB; FocalOffset -> offsets in DoF; BlurCoeffOffset -> absolute d offsets;
// Convergence/Timing -> single entry (iteration budget taken from solver).
struct SweepSpec {
    SweepKind kind = SweepKind::Solvability;
    DefocusModel base_model;
    std::vector<double> grid;
    SolverConfig solver;
    NoiseSpec noise;
    std::uint64_t seed = 1;

    void validate() const;
};

struct SweepRecord {
    double param = 0.0;
    double input_rms = std::nan("");
    double restored_rms = std::nan("");
    int iterations = 0;
    double wall_time_s = 0.0;
    // Secondary method (PG) columns, noise/convergence sweeps only.
    double pg_rms = std::nan("");
    int pg_iterations = 0;
    double pg_wall_time_s = 0.0;
    // Timing sweep columns.
    double fast_seconds = std::nan("");
    double dense_seconds = std::nan("");
    double speedup = std::nan("");
};

struct SweepResult {
    SweepKind kind = SweepKind::Solvability;
    std::vector<SweepRecord> records;            // one per grid point
    std::vector<std::pair<std::string, SolverTrace>> traces;  // convergence study only
    std::uint64_t seed = 0;
    std::string config_hash;
};

// Deterministic 423x423-style ground-truth chart (shapes, gratings, dot-matrix
// text blocks); stands in for the unavailable photographic scene.
Image make_test_chart(int height, int width);

SweepResult run_solvability_sweep(const SweepSpec& spec, const Image& truth_object);
SweepResult run_noise_sweep(const SweepSpec& spec, const Image& truth_object);
SweepResult run_convergence_study(const SweepSpec& spec, const Image& truth_object);
SweepResult run_sensitivity_sweep(const SweepSpec& spec, const Image& truth_object);
SweepResult run_timing_comparison(const SweepSpec& spec, const Image& truth_object);

// Dispatch by spec.kind.
SweepResult run_sweep(const SweepSpec& spec, const Image& truth_object);

void write_sweep_csv(const SweepResult& result, const std::string& path);
SweepResult read_sweep_csv(const std::string& path);

std::string sweep_config_hash(const SweepSpec& spec);
void write_sweep_manifest(const SweepSpec& spec, const SweepResult& result,
                          const std::vector<std::string>& output_files, const std::string& path);

// Dataset distortion/correction pipeline: every image in input_dir is padded,
// blurred through the forward model, noise-corrupted and cropped into
// distorted/ (the B set); the DR-corrected counterpart goes to corrected/
// (the C set). Color images are processed per channel with a shared stack.
struct PipelineOptions {
    double blur_coefficient = 0.2;
    std::uint64_t seed = 1;
    NoiseSpec noise = NoiseSpec::poisson(1e4);
    int iterations = 20;
    double stepsize = 1.0;
    double threshold = 0.0;      // tau; 0 disables data thresholding
    int pad = 16;                // padding per side before blurring
    int psf_size = 9;
    int focal_position = 16;
};

struct PipelineImageRecord {
    std::string name;
    bool skipped = false;
    std::string distorted_path, corrected_path;
    std::string distorted_hash, corrected_hash;
    double distorted_rms = std::nan("");   // vs original
    double corrected_rms = std::nan("");
};

struct PipelineManifest {
    PipelineOptions options;
    std::vector<PipelineImageRecord> images;
    double mean_distorted_rms = std::nan("");
    double mean_corrected_rms = std::nan("");
};

PipelineManifest run_classification_pipeline(const std::string& input_dir, const std::string& output_dir,
                                             const PipelineOptions& options);

void write_pipeline_manifest(const PipelineManifest& manifest, const std::string& path);

// Least-squares slope of log10(values) over the trailing fraction of the
// curve; the convergence study's tail-slope diagnostic.
double tail_log_slope(const std::vector<double>& values, double tail_fraction = 0.3);

std::uint64_t fnv1a64(const void* bytes, std::size_t n);
std::string fnv1a64_hex(const std::string& text);
std::string file_hash_hex(const std::string& path);

}  // namespace dk
