// defocuskit command line: simulate nonuniform defocus blur, remove it, fit
// model parameters from guide stars, and reproduce the benchmark sweeps.

#include <CLI11.hpp>

#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>

#include "defocuskit/bench.hpp"
#include "defocuskit/blur.hpp"
#include "defocuskit/errors.hpp"
#include "defocuskit/estimate.hpp"
#include "defocuskit/pgm.hpp"
#include "defocuskit/psf.hpp"
#include "defocuskit/solve.hpp"

namespace fs = std::filesystem;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;
constexpr int kExitIo = 4;

struct ModelFlags {
    int n_zones = 141;
    int dof_size = 3;
    double blur_coeff = 0.1;
    double focal_pos = 71.0;
    int psf_size = 65;
    std::string orientation = "rows";
    double aperture_fraction = 0.5;
    std::string zernike = "noll";

    void add_to(CLI::App* app) {
        app->add_option("--model-n", n_zones, "number of defocus zones N");
        app->add_option("--dof-size", dof_size, "pixels per zone s");
        app->add_option("--blur-coeff", blur_coeff, "blur coefficient d");
        app->add_option("--focal-pos", focal_pos, "in-focus zone index n0 (1-based)");
        app->add_option("--psf-size", psf_size, "PSF side length rho (odd)");
        app->add_option("--orientation", orientation, "band orientation: rows|columns");
        app->add_option("--aperture-fraction", aperture_fraction, "pupil disk diameter / grid");
        app->add_option("--zernike", zernike, "defocus mode normalization: noll|plain");
    }

    dk::DefocusModel to_model() const {
        dk::DefocusModel m = dk::DefocusModel::create(n_zones, dof_size, blur_coeff, focal_pos, psf_size,
                                                      dk::parse_orientation(orientation), aperture_fraction);
        if (zernike == "plain")
            m.aperture.noll_normalization = false;
        else if (zernike != "noll")
            throw std::invalid_argument("--zernike expects noll|plain, got '" + zernike + "'");
        return m;
    }
};

struct SolverFlags {
    std::string stepsize = "safe";
    double t0 = 1.0;
    int iters = 100;
    double change_tol = 0.0;

    void add_to(CLI::App* app) {
        app->add_option("--stepsize", stepsize, "paper|safe|<value> (paper: 1, safe: 1/rho)");
        app->add_option("--t0", t0, "initial acceleration parameter");
        app->add_option("--iters", iters, "iteration budget K");
        app->add_option("--change-tol", change_tol, "stop when iterate change drops below this");
    }

    dk::SolverConfig to_config(int rho, bool quiet = false) const {
        dk::SolverConfig cfg;
        if (stepsize == "paper") {
            cfg.stepsize = 1.0;
        } else if (stepsize == "safe") {
            cfg.stepsize = dk::safe_stepsize(rho);
            if (!quiet) std::printf("stepsize: safe mode, lambda = 1/%d = %.6g\n", rho, cfg.stepsize);
        } else {
            try {
                cfg.stepsize = std::stod(stepsize);
            } catch (const std::exception&) {
                throw std::invalid_argument("--stepsize expects paper|safe|<value>, got '" + stepsize + "'");
            }
        }
        cfg.t0 = t0;
        cfg.max_iterations = iters;
        if (change_tol > 0.0) cfg.change_tolerance = change_tol;
        return cfg;
    }
};

std::string model_hash(const dk::DefocusModel& m) {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%d|%d|%.17g|%.17g|%d|%s|%.17g|%d", m.n_zones, m.dof_size, m.blur_coefficient,
                  m.focal_position, m.psf_size, dk::to_string(m.orientation).c_str(),
                  m.aperture.pupil_radius_fraction, m.aperture.noll_normalization ? 1 : 0);
    return dk::fnv1a64_hex(buf);
}

void write_sidecar(const dk::DefocusModel& m, const std::string& noise, std::uint64_t seed,
                   const std::string& path) {
    std::ofstream out(path);
    if (!out) throw dk::IoError("cannot write sidecar " + path);
    out << "model-n=" << m.n_zones << "\n";
    out << "dof-size=" << m.dof_size << "\n";
    char buf[64];
    std::snprintf(buf, sizeof(buf), "%.17g", m.blur_coefficient);
    out << "blur-coeff=" << buf << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", m.focal_position);
    out << "focal-pos=" << buf << "\n";
    out << "psf-size=" << m.psf_size << "\n";
    out << "orientation=" << dk::to_string(m.orientation) << "\n";
    std::snprintf(buf, sizeof(buf), "%.17g", m.aperture.pupil_radius_fraction);
    out << "aperture-fraction=" << buf << "\n";
    out << "zernike=" << (m.aperture.noll_normalization ? "noll" : "plain") << "\n";
    out << "noise=" << noise << "\n";
    out << "seed=" << seed << "\n";
    out << "model-hash=" << model_hash(m) << "\n";
}

std::map<std::string, std::string> read_sidecar(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("sidecar not found: " + path);
    std::map<std::string, std::string> kv;
    std::string line;
    while (std::getline(in, line)) {
        const auto eq = line.find('=');
        if (eq == std::string::npos || line.empty() || line[0] == '#') continue;
        kv[line.substr(0, eq)] = line.substr(eq + 1);
    }
    return kv;
}

void require_input_file(const std::string& path) {
    if (!fs::exists(path)) throw std::invalid_argument("input path does not exist: " + path);
}

void require_fresh_output(const std::string& path, bool force) {
    if (!force && fs::exists(path))
        throw std::invalid_argument("output exists: " + path + " (pass --force to overwrite)");
}

// ---------------------------------------------------------------- blur -----

int cmd_blur(const std::string& input, const std::string& out, const ModelFlags& mf, const std::string& noise_text,
             std::uint64_t seed, bool force, const std::string& export_psf_dir) {
    require_input_file(input);
    require_fresh_output(out, force);
    const dk::DefocusModel model = mf.to_model();
    const dk::Image object = dk::load_pgm(input);
    const dk::BlurOperator op(model, object.height, object.width);
    const dk::NoiseSpec noise = dk::NoiseSpec::parse(noise_text);
    const dk::Image data = op.synthesize_data(object, noise, seed);
    dk::save_pgm(data, out, 16);
    write_sidecar(model, noise.to_string(), seed, out + ".meta");
    if (!export_psf_dir.empty()) dk::export_psf_stack(op.psfs(), model, export_psf_dir);
    std::printf("wrote %s (%dx%d), sidecar %s.meta, model_hash=%s\n", out.c_str(), data.height, data.width,
                out.c_str(), model_hash(model).c_str());
    return 0;
}

// -------------------------------------------------------------- restore ----

int cmd_restore(const std::string& input, const std::string& out, ModelFlags mf, const SolverFlags& sf,
                const std::string& sidecar, const std::string& truth_path, const std::string& trace_path,
                double threshold, bool force, const CLI::App* sub) {
    require_input_file(input);
    require_fresh_output(out, force);
    if (!sidecar.empty()) {
        const auto kv = read_sidecar(sidecar);
        const auto take = [&](const char* key, const char* flag, auto setter) {
            if (kv.count(key) && sub->count(flag) == 0) setter(kv.at(key));
        };
        take("model-n", "--model-n", [&](const std::string& v) { mf.n_zones = std::stoi(v); });
        take("dof-size", "--dof-size", [&](const std::string& v) { mf.dof_size = std::stoi(v); });
        take("blur-coeff", "--blur-coeff", [&](const std::string& v) { mf.blur_coeff = std::stod(v); });
        take("focal-pos", "--focal-pos", [&](const std::string& v) { mf.focal_pos = std::stod(v); });
        take("psf-size", "--psf-size", [&](const std::string& v) { mf.psf_size = std::stoi(v); });
        take("orientation", "--orientation", [&](const std::string& v) { mf.orientation = v; });
        take("aperture-fraction", "--aperture-fraction",
             [&](const std::string& v) { mf.aperture_fraction = std::stod(v); });
        take("zernike", "--zernike", [&](const std::string& v) { mf.zernike = v; });
    }
    const dk::DefocusModel model = mf.to_model();

    dk::Image data = dk::load_pgm(input);
    if (threshold > 0.0)
        for (double& v : data.data)
            if (v < threshold) v = 0.0;

    const int obj_h = model.orientation == dk::Orientation::RowBands
                          ? model.banded_extent()
                          : data.height - model.psf_size + 1;
    const int obj_w = model.orientation == dk::Orientation::RowBands ? data.width - model.psf_size + 1
                                                                     : model.banded_extent();
    const dk::BlurOperator op(model, obj_h, obj_w);
    if (data.height != op.image_height() || data.width != op.image_width())
        throw std::invalid_argument("data image size does not match model (expected " +
                                    std::to_string(op.image_height()) + "x" + std::to_string(op.image_width()) + ")");

    dk::Image truth;
    const dk::Image* truth_ptr = nullptr;
    if (!truth_path.empty()) {
        require_input_file(truth_path);
        truth = dk::load_pgm(truth_path);
        truth_ptr = &truth;
    }

    const dk::SolverConfig cfg = sf.to_config(model.psf_size);
    const dk::RestoreResult rr = dk::restore_dr(op, data, cfg, truth_ptr);
    dk::save_pgm(rr.estimate, out, 16);
    write_sidecar(model, "none", 0, out + ".meta");
    if (!trace_path.empty()) dk::write_trace_csv(rr.trace, trace_path);
    std::printf("wrote %s (%dx%d) after %d iterations (%s), model_hash=%s\n", out.c_str(), rr.estimate.height,
                rr.estimate.width, rr.trace.iterations, dk::to_string(rr.trace.reason).c_str(),
                model_hash(model).c_str());
    if (truth_ptr && rr.trace.iterations > 0)
        std::printf("final rms vs truth: %.4g%%\n", rr.trace.rms_vs_truth.back());
    return 0;
}

// ------------------------------------------------------------- estimate ----

int cmd_estimate(const std::string& input, const ModelFlags& mf, const std::string& orientation, double d_min,
                 double d_max, int d_count, const std::string& out_prefix) {
    require_input_file(input);
    dk::GuideStar gs;
    gs.region = dk::load_pgm(input);
    gs.orientation = dk::parse_orientation(orientation);

    const dk::SharpnessCurve curve = dk::sharpness_curve(gs);
    const int n0 = dk::estimate_focal_position(curve, mf.dof_size);

    ModelFlags tf = mf;
    tf.focal_pos = n0;
    tf.orientation = orientation;
    const dk::DefocusModel model_template = tf.to_model();

    std::vector<double> candidates(d_count);
    for (int i = 0; i < d_count; ++i) candidates[i] = d_min + (d_max - d_min) * i / (d_count - 1.0);
    const dk::BlurEstimate est = dk::estimate_blur_coefficient(gs, candidates, model_template);

    std::printf("estimated focal position n0 = %d (dof size %d)\n", n0, mf.dof_size);
    std::printf("estimated blur coefficient d = %.6g%s\n", est.blur_coefficient,
                est.clamped ? " (clamped to candidate range)" : "");

    if (!out_prefix.empty()) {
        {
            std::ofstream out(out_prefix + "sharpness.csv");
            if (!out) throw dk::IoError("cannot write " + out_prefix + "sharpness.csv");
            out << "position,sharpness\n";
            for (std::size_t i = 0; i < curve.values.size(); ++i) out << i << ',' << curve.values[i] << "\n";
        }
        {
            std::ofstream out(out_prefix + "gridsearch.csv");
            if (!out) throw dk::IoError("cannot write " + out_prefix + "gridsearch.csv");
            out << "blur_coefficient,slope\n";
            for (std::size_t i = 0; i < candidates.size(); ++i)
                out << candidates[i] << ',' << est.candidate_slopes[i] << "\n";
            out << "guide_star," << est.guide_slope << "\n";
        }
    }
    return 0;
}

// ---------------------------------------------------------------- sweep ----

int cmd_sweep(const std::string& kind_text, const std::string& out_dir, const ModelFlags& mf, const SolverFlags& sf,
              const std::string& noise_text, std::uint64_t seed, const std::string& object_path,
              std::vector<double> grid, bool force) {
    const dk::SweepKind kind = dk::parse_sweep_kind(kind_text);

    dk::SweepSpec spec;
    spec.kind = kind;
    spec.base_model = mf.to_model();
    spec.solver = sf.to_config(spec.base_model.psf_size);
    spec.solver.record_objective = kind == dk::SweepKind::Convergence;
    if (kind == dk::SweepKind::NoiseSNR) spec.solver.oracle_tolerance = 1e-4;
    spec.noise = dk::NoiseSpec::parse(noise_text);
    spec.seed = seed;

    if (grid.empty()) {
        switch (kind) {
            case dk::SweepKind::Solvability:
                for (int i = 0; i < 15; ++i) grid.push_back(0.1 + 0.025 * i);
                break;
            case dk::SweepKind::NoiseSNR:
                for (int i = 0; i < 11; ++i) grid.push_back(30.0 + 3.0 * i);
                break;
            case dk::SweepKind::FocalOffset:
                for (int i = 0; i < 9; ++i) grid.push_back(-2.0 + 0.5 * i);
                break;
            case dk::SweepKind::BlurCoeffOffset:
                for (int i = 0; i < 13; ++i) grid.push_back(-0.012 + 0.002 * i);
                break;
            case dk::SweepKind::Convergence:
            case dk::SweepKind::Timing:
                grid.push_back(spec.base_model.blur_coefficient);
                break;
        }
    }
    spec.grid = grid;

    fs::create_directories(out_dir);
    const std::string csv_path = (fs::path(out_dir) / (dk::to_string(kind) + ".csv")).string();
    require_fresh_output(csv_path, force);

    dk::Image object;
    if (!object_path.empty()) {
        require_input_file(object_path);
        object = dk::load_pgm(object_path);
    } else {
        const int extent = spec.base_model.banded_extent();
        object = dk::make_test_chart(
            spec.base_model.orientation == dk::Orientation::RowBands ? extent : 423,
            spec.base_model.orientation == dk::Orientation::RowBands ? 423 : extent);
    }
    const std::string chart_path = (fs::path(out_dir) / "object.pgm").string();
    dk::save_pgm(object, chart_path, 16);

    const dk::SweepResult result = dk::run_sweep(spec, object);
    dk::write_sweep_csv(result, csv_path);
    std::vector<std::string> outputs{csv_path, chart_path};
    for (const auto& [label, trace] : result.traces) {
        const std::string trace_path = (fs::path(out_dir) / (label + "_trace.csv")).string();
        dk::write_trace_csv(trace, trace_path);
        outputs.push_back(trace_path);
    }
    dk::write_sweep_manifest(spec, result, outputs, (fs::path(out_dir) / "manifest.json").string());
    std::printf("sweep %s: %zu grid points -> %s\n", kind_text.c_str(), result.records.size(), csv_path.c_str());
    return 0;
}

// ------------------------------------------------------------- pipeline ----

int cmd_pipeline(const std::string& input_dir, const std::string& out_dir, double d, std::uint64_t seed,
                 const std::string& noise_text, int iters, double threshold, bool force) {
    if (!fs::is_directory(input_dir)) throw std::invalid_argument("input path does not exist: " + input_dir);
    require_fresh_output((fs::path(out_dir) / "manifest.json").string(), force);
    dk::PipelineOptions opt;
    opt.blur_coefficient = d;
    opt.seed = seed;
    opt.noise = dk::NoiseSpec::parse(noise_text);
    opt.iterations = iters;
    opt.threshold = threshold;
    fs::create_directories(out_dir);
    const dk::PipelineManifest manifest = dk::run_classification_pipeline(input_dir, out_dir, opt);
    dk::write_pipeline_manifest(manifest, (fs::path(out_dir) / "manifest.json").string());
    std::printf("pipeline d=%.3g: %zu images, mean rms distorted %.3g%% -> corrected %.3g%%\n", d,
                manifest.images.size(), manifest.mean_distorted_rms, manifest.mean_corrected_rms);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"defocuskit: nonuniform defocus simulation and removal"};
    app.require_subcommand(1);

    // blur
    auto* blur = app.add_subcommand("blur", "synthesize a defocus-degraded data image from an object");
    std::string blur_in, blur_out = "data.pgm", blur_noise = "none", blur_psf_dir;
    std::uint64_t blur_seed = 1;
    bool blur_force = false;
    ModelFlags blur_mf;
    blur->add_option("input", blur_in, "object image (PGM)")->required();
    blur->add_option("--out", blur_out, "output data image");
    blur->add_option("--noise", blur_noise, "none|poisson:<peak>|gaussian:<snr_db>");
    blur->add_option("--seed", blur_seed, "noise seed");
    blur->add_option("--export-psf", blur_psf_dir, "also export the PSF stack to this directory");
    blur->add_flag("--force", blur_force, "overwrite existing outputs");
    blur_mf.add_to(blur);
    blur->set_config("--config");

    // restore
    auto* restore = app.add_subcommand("restore", "remove nonuniform defocus from a data image");
    std::string rst_in, rst_out = "restored.pgm", rst_sidecar, rst_truth, rst_trace;
    double rst_threshold = 0.0;
    bool rst_force = false;
    ModelFlags rst_mf;
    SolverFlags rst_sf;
    restore->add_option("input", rst_in, "data image (PGM)")->required();
    restore->add_option("--out", rst_out, "restored image path");
    restore->add_option("--sidecar", rst_sidecar, "read model parameters from a blur sidecar");
    restore->add_option("--truth", rst_truth, "ground-truth object; adds an RMS column to the trace");
    restore->add_option("--trace", rst_trace, "write per-iteration trace CSV here");
    restore->add_option("--threshold", rst_threshold, "zero data below this intensity before restoring");
    restore->add_flag("--force", rst_force, "overwrite existing outputs");
    rst_mf.add_to(restore);
    rst_sf.add_to(restore);
    restore->set_config("--config");

    // estimate
    auto* estimate = app.add_subcommand("estimate", "estimate (n0, d) from a guide-star image");
    std::string est_in, est_orientation = "columns", est_prefix;
    double est_dmin = 0.01, est_dmax = 0.05;
    int est_dcount = 17;
    ModelFlags est_mf;
    est_mf.n_zones = 116;
    est_mf.dof_size = 5;
    est_mf.psf_size = 23;
    estimate->add_option("input", est_in, "guide-star region (PGM)")->required();
    estimate->add_option("--d-min", est_dmin, "grid search lower bound");
    estimate->add_option("--d-max", est_dmax, "grid search upper bound");
    estimate->add_option("--d-count", est_dcount, "grid size");
    estimate->add_option("--out-prefix", est_prefix, "write sharpness.csv / gridsearch.csv with this prefix");
    est_mf.add_to(estimate);
    estimate->add_option("--edge-orientation", est_orientation, "banded axis of the guide star: rows|columns");
    estimate->set_config("--config");

    // sweep
    auto* sweep = app.add_subcommand("sweep", "run a benchmark sweep and emit CSV + manifest");
    std::string sweep_kind, sweep_dir = "sweep_out", sweep_noise = "poisson:1e10", sweep_object;
    std::uint64_t sweep_seed = 1;
    std::vector<double> sweep_grid;
    bool sweep_force = false;
    ModelFlags sweep_mf;
    sweep_mf.zernike = "plain";
    SolverFlags sweep_sf;
    sweep_sf.stepsize = "paper";
    sweep_sf.iters = 250;
    sweep->add_option("kind", sweep_kind, "solvability|noise|convergence|focal-offset|blur-offset|timing")
        ->required();
    sweep->add_option("--out-dir", sweep_dir, "output directory");
    sweep->add_option("--noise", sweep_noise, "noise spec for data synthesis");
    sweep->add_option("--seed", sweep_seed, "sweep seed");
    sweep->add_option("--object", sweep_object, "ground-truth object (default: built-in chart)");
    sweep->add_option("--grid", sweep_grid, "explicit grid values")->delimiter(',');
    sweep->add_flag("--force", sweep_force, "overwrite existing outputs");
    sweep_mf.add_to(sweep);
    sweep_sf.add_to(sweep);
    sweep->set_config("--config");

    // pipeline
    auto* pipeline = app.add_subcommand("pipeline", "distort + correct an image directory (B and C sets)");
    std::string pl_in, pl_dir = "pipeline_out", pl_noise = "poisson:1e4";
    double pl_d = 0.2, pl_threshold = 0.0;
    std::uint64_t pl_seed = 1;
    int pl_iters = 20;
    bool pl_force = false;
    pipeline->add_option("input_dir", pl_in, "directory of PGM/PPM images")->required();
    pipeline->add_option("--out-dir", pl_dir, "output directory");
    pipeline->add_option("--blur-coeff", pl_d, "blur coefficient d");
    pipeline->add_option("--seed", pl_seed, "pipeline seed");
    pipeline->add_option("--noise", pl_noise, "noise spec");
    pipeline->add_option("--iters", pl_iters, "DR iterations per image");
    pipeline->add_option("--threshold", pl_threshold, "zero data below this intensity before restoring");
    pipeline->add_flag("--force", pl_force, "overwrite existing outputs");
    pipeline->set_config("--config");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : kExitUsage;
    }

    try {
        if (blur->parsed())
            return cmd_blur(blur_in, blur_out, blur_mf, blur_noise, blur_seed, blur_force, blur_psf_dir);
        if (restore->parsed())
            return cmd_restore(rst_in, rst_out, rst_mf, rst_sf, rst_sidecar, rst_truth, rst_trace, rst_threshold,
                               rst_force, restore);
        if (estimate->parsed())
            return cmd_estimate(est_in, est_mf, est_orientation, est_dmin, est_dmax, est_dcount, est_prefix);
        if (sweep->parsed())
            return cmd_sweep(sweep_kind, sweep_dir, sweep_mf, sweep_sf, sweep_noise, sweep_seed, sweep_object,
                             sweep_grid, sweep_force);
        if (pipeline->parsed())
            return cmd_pipeline(pl_in, pl_dir, pl_d, pl_seed, pl_noise, pl_iters, pl_threshold, pl_force);
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const dk::IoError& e) {
        std::cerr << "io error: " << e.what() << "\n";
        return kExitIo;
    } catch (const dk::NumericalError& e) {
        std::cerr << "numerical error: " << e.what() << "\n";
        return kExitNumerical;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitNumerical;
    }
    return 0;
}
