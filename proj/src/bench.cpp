#include "defocuskit/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "defocuskit/blur.hpp"
#include "defocuskit/errors.hpp"
#include "defocuskit/grad.hpp"
#include "defocuskit/parallel.hpp"

namespace dk {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
    return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t index) {
    // splitmix64 step keeps per-point streams well separated
    std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (index + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

struct PointResult {
    double input_rms = 0.0;
    double restored_rms = 0.0;
    int iterations = 0;
    double wall_time_s = 0.0;
    SolverTrace trace;
};

// Synthesize data from synth_model, restore with restore_model (they differ
// only in the sensitivity sweeps).
PointResult restore_point(const DefocusModel& synth_model, const DefocusModel& restore_model, const Image& truth,
                          const NoiseSpec& noise, std::uint64_t seed, const SolverConfig& solver, bool use_pg) {
    BlurOperator synth_op(synth_model, truth.height, truth.width);
    const Image data = synth_op.synthesize_data(truth, noise, seed);

    BlurOperator op(restore_model, truth.height, truth.width);
    PointResult out;
    out.input_rms = relative_rms(central_crop(data, truth.height, truth.width), truth);

    const auto t0 = Clock::now();
    RestoreResult rr = use_pg ? restore_pg(op, data, solver, &truth) : restore_dr(op, data, solver, &truth);
    out.wall_time_s = seconds_since(t0);
    out.restored_rms = relative_rms(rr.estimate, truth);
    out.iterations = rr.trace.iterations;
    out.trace = std::move(rr.trace);
    return out;
}

const char* csv_header(SweepKind kind) {
    switch (kind) {
        case SweepKind::Solvability:
            return "blur_coefficient,input_rms_pct,restored_rms_pct,iterations,wall_time_s";
        case SweepKind::NoiseSNR:
            return "snr_db,input_rms_pct,dr_rms_pct,dr_iterations,dr_wall_time_s,pg_rms_pct,pg_iterations,"
                   "pg_wall_time_s";
        case SweepKind::Convergence:
            return "blur_coefficient,input_rms_pct,dr_rms_pct,dr_iterations,dr_wall_time_s,pg_rms_pct,"
                   "pg_iterations,pg_wall_time_s";
        case SweepKind::FocalOffset:
            return "focal_offset_dof,input_rms_pct,restored_rms_pct,iterations,wall_time_s";
        case SweepKind::BlurCoeffOffset:
            return "blur_coeff_offset,input_rms_pct,restored_rms_pct,iterations,wall_time_s";
        case SweepKind::Timing:
            return "iterations,fast_seconds,dense_seconds,speedup";
    }
    return "";
}

}  // namespace

std::string to_string(SweepKind k) {
    switch (k) {
        case SweepKind::Solvability: return "solvability";
        case SweepKind::NoiseSNR: return "noise";
        case SweepKind::Convergence: return "convergence";
        case SweepKind::FocalOffset: return "focal-offset";
        case SweepKind::BlurCoeffOffset: return "blur-offset";
        case SweepKind::Timing: return "timing";
    }
    return "solvability";
}

SweepKind parse_sweep_kind(const std::string& s) {
    if (s == "solvability") return SweepKind::Solvability;
    if (s == "noise") return SweepKind::NoiseSNR;
    if (s == "convergence") return SweepKind::Convergence;
    if (s == "focal-offset") return SweepKind::FocalOffset;
    if (s == "blur-offset") return SweepKind::BlurCoeffOffset;
    if (s == "timing") return SweepKind::Timing;
    throw std::invalid_argument("unknown sweep kind '" + s +
                                "' (solvability|noise|convergence|focal-offset|blur-offset|timing)");
}

void SweepSpec::validate() const {
    base_model.validate();
    solver.validate();
    if (grid.empty()) throw std::invalid_argument("SweepSpec: grid must be nonempty");
}

std::string sweep_config_hash(const SweepSpec& spec) {
    std::ostringstream os;
    os << to_string(spec.kind) << '|' << spec.base_model.n_zones << '|' << spec.base_model.dof_size << '|'
       << fmt_double(spec.base_model.blur_coefficient) << '|' << fmt_double(spec.base_model.focal_position) << '|'
       << to_string(spec.base_model.orientation) << '|' << spec.base_model.psf_size << '|'
       << fmt_double(spec.base_model.aperture.pupil_radius_fraction) << '|' << fmt_double(spec.solver.stepsize)
       << '|' << fmt_double(spec.solver.t0) << '|' << spec.solver.max_iterations << '|'
       << (spec.solver.oracle_tolerance ? fmt_double(*spec.solver.oracle_tolerance) : "-") << '|'
       << (spec.solver.change_tolerance ? fmt_double(*spec.solver.change_tolerance) : "-") << '|'
       << spec.noise.to_string() << '|' << spec.seed;
    for (double g : spec.grid) os << '|' << fmt_double(g);
    return fnv1a64_hex(os.str());
}

SweepResult run_solvability_sweep(const SweepSpec& spec, const Image& truth_object) {
    spec.validate();
    SweepResult result{spec.kind, {}, {}, spec.seed, sweep_config_hash(spec)};
    result.records.resize(spec.grid.size());
    parallel_for(static_cast<int>(spec.grid.size()), [&](int i) {
        DefocusModel m = spec.base_model;
        m.blur_coefficient = spec.grid[i];
        const PointResult p =
            restore_point(m, m, truth_object, spec.noise, mix_seed(spec.seed, i), spec.solver, false);
        result.records[i] = SweepRecord{spec.grid[i], p.input_rms, p.restored_rms, p.iterations, p.wall_time_s};
    });
    return result;
}

SweepResult run_noise_sweep(const SweepSpec& spec, const Image& truth_object) {
    spec.validate();
    SweepResult result{SweepKind::NoiseSNR, {}, {}, spec.seed, sweep_config_hash(spec)};
    result.records.resize(spec.grid.size());
    parallel_for(static_cast<int>(spec.grid.size()), [&](int i) {
        const NoiseSpec noise = NoiseSpec::gaussian(spec.grid[i]);
        const std::uint64_t seed = mix_seed(spec.seed, i);
        const PointResult dr =
            restore_point(spec.base_model, spec.base_model, truth_object, noise, seed, spec.solver, false);
        const PointResult pg =
            restore_point(spec.base_model, spec.base_model, truth_object, noise, seed, spec.solver, true);
        SweepRecord rec{spec.grid[i], dr.input_rms, dr.restored_rms, dr.iterations, dr.wall_time_s};
        rec.pg_rms = pg.restored_rms;
        rec.pg_iterations = pg.iterations;
        rec.pg_wall_time_s = pg.wall_time_s;
        result.records[i] = rec;
    });
    return result;
}

SweepResult run_convergence_study(const SweepSpec& spec, const Image& truth_object) {
    spec.validate();
    SweepResult result{SweepKind::Convergence, {}, {}, spec.seed, sweep_config_hash(spec)};
    DefocusModel m = spec.base_model;
    m.blur_coefficient = spec.grid.front();
    SolverConfig solver = spec.solver;
    solver.record_objective = true;
    const std::uint64_t seed = mix_seed(spec.seed, 0);
    const PointResult dr = restore_point(m, m, truth_object, spec.noise, seed, solver, false);
    const PointResult pg = restore_point(m, m, truth_object, spec.noise, seed, solver, true);
    SweepRecord rec{m.blur_coefficient, dr.input_rms, dr.restored_rms, dr.iterations, dr.wall_time_s};
    rec.pg_rms = pg.restored_rms;
    rec.pg_iterations = pg.iterations;
    rec.pg_wall_time_s = pg.wall_time_s;
    result.records.push_back(rec);
    result.traces.emplace_back("dr", dr.trace);
    result.traces.emplace_back("pg", pg.trace);
    return result;
}

SweepResult run_sensitivity_sweep(const SweepSpec& spec, const Image& truth_object) {
    spec.validate();
    if (spec.kind != SweepKind::FocalOffset && spec.kind != SweepKind::BlurCoeffOffset)
        throw std::invalid_argument("run_sensitivity_sweep: kind must be focal-offset or blur-offset");
    SweepResult result{spec.kind, {}, {}, spec.seed, sweep_config_hash(spec)};
    result.records.resize(spec.grid.size());
    // one data realization, corrected with offset models
    const std::uint64_t seed = mix_seed(spec.seed, 0);
    parallel_for(static_cast<int>(spec.grid.size()), [&](int i) {
        DefocusModel restore_model = spec.base_model;
        if (spec.kind == SweepKind::FocalOffset)
            restore_model.focal_position += spec.grid[i];
        else
            restore_model.blur_coefficient += spec.grid[i];
        const PointResult p =
            restore_point(spec.base_model, restore_model, truth_object, spec.noise, seed, spec.solver, false);
        result.records[i] = SweepRecord{spec.grid[i], p.input_rms, p.restored_rms, p.iterations, p.wall_time_s};
    });
    return result;
}

SweepResult run_timing_comparison(const SweepSpec& spec, const Image& truth_object) {
    spec.validate();
    SweepResult result{SweepKind::Timing, {}, {}, spec.seed, sweep_config_hash(spec)};

    BlurOperator op(spec.base_model, truth_object.height, truth_object.width);
    const Image data = op.synthesize_data(truth_object, spec.noise, mix_seed(spec.seed, 0));
    const Image x = initial_guess(op, data);
    GradientWorkspace ws(op);
    DenseGradient dense(op);

    const int reps = std::max(1, spec.solver.max_iterations);
    SerialSection serial;  // measure both paths single-threaded
    Image g = grad_fast(op, data, x, ws);   // warm-up
    auto t0 = Clock::now();
    for (int k = 0; k < reps; ++k) g = grad_fast(op, data, x, ws);
    const double fast_s = seconds_since(t0) / reps;

    Image gd = dense.eval(data, x);         // warm-up
    t0 = Clock::now();
    for (int k = 0; k < reps; ++k) gd = dense.eval(data, x);
    const double dense_s = seconds_since(t0) / reps;

    if (max_abs_diff(g, gd) > 1e-8 * std::max(1.0, max_abs(g)))
        throw NumericalError("timing comparison: fast and dense gradients disagree");

    SweepRecord rec;
    rec.param = reps;
    rec.iterations = reps;
    rec.fast_seconds = fast_s;
    rec.dense_seconds = dense_s;
    rec.speedup = dense_s / fast_s;
    result.records.push_back(rec);
    return result;
}

SweepResult run_sweep(const SweepSpec& spec, const Image& truth_object) {
    switch (spec.kind) {
        case SweepKind::Solvability: return run_solvability_sweep(spec, truth_object);
        case SweepKind::NoiseSNR: return run_noise_sweep(spec, truth_object);
        case SweepKind::Convergence: return run_convergence_study(spec, truth_object);
        case SweepKind::FocalOffset:
        case SweepKind::BlurCoeffOffset: return run_sensitivity_sweep(spec, truth_object);
        case SweepKind::Timing: return run_timing_comparison(spec, truth_object);
    }
    throw std::invalid_argument("run_sweep: unknown kind");
}

void write_sweep_csv(const SweepResult& result, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw IoError("write_sweep_csv: cannot open " + path);
    out << csv_header(result.kind) << "\n";
    for (const SweepRecord& r : result.records) {
        switch (result.kind) {
            case SweepKind::Solvability:
            case SweepKind::FocalOffset:
            case SweepKind::BlurCoeffOffset:
                out << fmt_double(r.param) << ',' << fmt_double(r.input_rms) << ',' << fmt_double(r.restored_rms)
                    << ',' << r.iterations << ',' << fmt_double(r.wall_time_s) << "\n";
                break;
            case SweepKind::NoiseSNR:
            case SweepKind::Convergence:
                out << fmt_double(r.param) << ',' << fmt_double(r.input_rms) << ',' << fmt_double(r.restored_rms)
                    << ',' << r.iterations << ',' << fmt_double(r.wall_time_s) << ',' << fmt_double(r.pg_rms) << ','
                    << r.pg_iterations << ',' << fmt_double(r.pg_wall_time_s) << "\n";
                break;
            case SweepKind::Timing:
                out << r.iterations << ',' << fmt_double(r.fast_seconds) << ',' << fmt_double(r.dense_seconds) << ','
                    << fmt_double(r.speedup) << "\n";
                break;
        }
    }
}

SweepResult read_sweep_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw IoError("read_sweep_csv: cannot open " + path);
    std::string header;
    if (!std::getline(in, header)) throw IoError("read_sweep_csv: empty file " + path);
    SweepResult result;
    bool found = false;
    for (SweepKind k : {SweepKind::Solvability, SweepKind::NoiseSNR, SweepKind::Convergence, SweepKind::FocalOffset,
                        SweepKind::BlurCoeffOffset, SweepKind::Timing}) {
        if (header == csv_header(k)) {
            result.kind = k;
            found = true;
            break;
        }
    }
    if (!found) throw IoError("read_sweep_csv: unrecognized header in " + path);

    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> fields;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) fields.push_back(std::stod(tok));
        SweepRecord r;
        switch (result.kind) {
            case SweepKind::Solvability:
            case SweepKind::FocalOffset:
            case SweepKind::BlurCoeffOffset:
                if (fields.size() != 5) throw IoError("read_sweep_csv: bad row in " + path);
                r.param = fields[0];
                r.input_rms = fields[1];
                r.restored_rms = fields[2];
                r.iterations = static_cast<int>(fields[3]);
                r.wall_time_s = fields[4];
                break;
            case SweepKind::NoiseSNR:
            case SweepKind::Convergence:
                if (fields.size() != 8) throw IoError("read_sweep_csv: bad row in " + path);
                r.param = fields[0];
                r.input_rms = fields[1];
                r.restored_rms = fields[2];
                r.iterations = static_cast<int>(fields[3]);
                r.wall_time_s = fields[4];
                r.pg_rms = fields[5];
                r.pg_iterations = static_cast<int>(fields[6]);
                r.pg_wall_time_s = fields[7];
                break;
            case SweepKind::Timing:
                if (fields.size() != 4) throw IoError("read_sweep_csv: bad row in " + path);
                r.param = fields[0];
                r.iterations = static_cast<int>(fields[0]);
                r.fast_seconds = fields[1];
                r.dense_seconds = fields[2];
                r.speedup = fields[3];
                break;
        }
        result.records.push_back(r);
    }
    return result;
}

void write_sweep_manifest(const SweepSpec& spec, const SweepResult& result,
                          const std::vector<std::string>& output_files, const std::string& path) {
    nlohmann::json j;
    j["kind"] = to_string(spec.kind);
    j["seed"] = spec.seed;
    j["config_hash"] = result.config_hash;
    j["model"] = {{"n_zones", spec.base_model.n_zones},
                  {"dof_size", spec.base_model.dof_size},
                  {"blur_coefficient", spec.base_model.blur_coefficient},
                  {"focal_position", spec.base_model.focal_position},
                  {"orientation", to_string(spec.base_model.orientation)},
                  {"psf_size", spec.base_model.psf_size},
                  {"pupil_radius_fraction", spec.base_model.aperture.pupil_radius_fraction}};
    j["solver"] = {{"stepsize", spec.solver.stepsize},
                   {"t0", spec.solver.t0},
                   {"max_iterations", spec.solver.max_iterations}};
    if (spec.solver.oracle_tolerance) j["solver"]["oracle_tolerance"] = *spec.solver.oracle_tolerance;
    if (spec.solver.change_tolerance) j["solver"]["change_tolerance"] = *spec.solver.change_tolerance;
    j["noise"] = spec.noise.to_string();
    j["grid"] = spec.grid;
    nlohmann::json files = nlohmann::json::array();
    for (const std::string& f : output_files) files.push_back({{"path", f}, {"fnv1a64", file_hash_hex(f)}});
    j["outputs"] = files;
    std::ofstream out(path);
    if (!out) throw IoError("write_sweep_manifest: cannot open " + path);
    out << j.dump(2) << "\n";
}

double tail_log_slope(const std::vector<double>& values, double tail_fraction) {
    const int n = static_cast<int>(values.size());
    const int tail = std::max(2, static_cast<int>(std::ceil(tail_fraction * n)));
    const int begin = n - tail;
    if (begin < 0 || n < 2) throw std::invalid_argument("tail_log_slope: curve too short");
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (int i = begin; i < n; ++i) {
        const double x = i - begin;
        const double y = std::log10(std::max(values[i], 1e-300));
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
    }
    const double cnt = tail;
    return (cnt * sxy - sx * sy) / (cnt * sxx - sx * sx);
}

std::uint64_t fnv1a64(const void* bytes, std::size_t n) {
    const unsigned char* p = static_cast<const unsigned char*>(bytes);
    std::uint64_t h = 14695981039346656037ULL;
    for (std::size_t i = 0; i < n; ++i) {
        h ^= p[i];
        h *= 1099511628211ULL;
    }
    return h;
}

std::string fnv1a64_hex(const std::string& text) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a64(text.data(), text.size())));
    return buf;
}

std::string file_hash_hex(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("file_hash_hex: cannot open " + path);
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return fnv1a64_hex(content);
}

}  // namespace dk
