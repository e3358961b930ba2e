#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

#include <json.hpp>

#include "defocuskit/bench.hpp"
#include "defocuskit/blur.hpp"
#include "defocuskit/errors.hpp"
#include "defocuskit/parallel.hpp"
#include "defocuskit/pgm.hpp"
#include "defocuskit/solve.hpp"

namespace dk {

namespace {

namespace fs = std::filesystem;

Image pad_replicate(const Image& im, int pad) {
    Image out(im.height + 2 * pad, im.width + 2 * pad);
    for (int r = 0; r < out.height; ++r) {
        const int sr = std::clamp(r - pad, 0, im.height - 1);
        for (int c = 0; c < out.width; ++c) out.at(r, c) = im.at(sr, std::clamp(c - pad, 0, im.width - 1));
    }
    return out;
}

void threshold_below(Image& im, double tau) {
    if (tau <= 0.0) return;
    for (double& v : im.data)
        if (v < tau) v = 0.0;
}

// Joint relative RMS across channels.
double channels_rms(const std::vector<Image>& est, const std::vector<Image>& truth) {
    double num = 0.0, den = 0.0;
    for (std::size_t ch = 0; ch < truth.size(); ++ch)
        for (std::size_t i = 0; i < truth[ch].data.size(); ++i) {
            const double d = est[ch].data[i] - truth[ch].data[i];
            num += d * d;
            den += truth[ch].data[i] * truth[ch].data[i];
        }
    return 100.0 * std::sqrt(num / den);
}

}  // namespace

PipelineManifest run_classification_pipeline(const std::string& input_dir, const std::string& output_dir,
                                             const PipelineOptions& options) {
    std::vector<std::string> names;
    for (const auto& entry : fs::directory_iterator(input_dir)) {
        if (!entry.is_regular_file()) continue;
        const std::string ext = entry.path().extension().string();
        if (ext == ".pgm" || ext == ".ppm" || ext == ".PGM" || ext == ".PPM")
            names.push_back(entry.path().filename().string());
    }
    std::sort(names.begin(), names.end());
    if (names.empty()) throw IoError("pipeline: no .pgm/.ppm images in " + input_dir);

    const fs::path dist_dir = fs::path(output_dir) / "distorted";
    const fs::path corr_dir = fs::path(output_dir) / "corrected";
    fs::create_directories(dist_dir);
    fs::create_directories(corr_dir);

    PipelineManifest manifest;
    manifest.options = options;
    manifest.images.resize(names.size());

    parallel_for(static_cast<int>(names.size()), [&](int idx) {
        PipelineImageRecord& rec = manifest.images[idx];
        rec.name = names[idx];
        std::vector<Image> channels;
        try {
            channels = load_image_channels((fs::path(input_dir) / rec.name).string());
        } catch (const IoError& e) {
            rec.skipped = true;
            emit_warning(std::string("pipeline: skipping ") + rec.name + ": " + e.what());
            return;
        }

        const int h = channels[0].height, w = channels[0].width;
        const int padded_h = h + 2 * options.pad;
        const int padded_w = w + 2 * options.pad;
        const DefocusModel model =
            DefocusModel::create(padded_h, 1, options.blur_coefficient, options.focal_position, options.psf_size);
        BlurOperator op(model, padded_h, padded_w);

        SolverConfig solver;
        solver.stepsize = options.stepsize;
        solver.t0 = 1.0;
        solver.max_iterations = options.iterations;
        solver.record_objective = false;

        const std::uint64_t image_seed = options.seed ^ fnv1a64(rec.name.data(), rec.name.size());
        std::vector<Image> distorted(channels.size()), corrected(channels.size());
        for (std::size_t ch = 0; ch < channels.size(); ++ch) {
            for (double& v : channels[ch].data) v = std::clamp(v, 0.0, 1.0);
            const Image padded = pad_replicate(channels[ch], options.pad);
            const Image full = op.synthesize_data(padded, options.noise, image_seed + ch);
            distorted[ch] = central_crop(full, h, w);

            // The solver input is the padded-size central part: boundary
            // information is lost, then reconstituted by edge replication.
            Image solver_data = pad_replicate(central_crop(full, padded_h, padded_w), (options.psf_size - 1) / 2);
            threshold_below(solver_data, options.threshold);
            RestoreResult rr = restore_dr(op, solver_data, solver);
            corrected[ch] = central_crop(rr.estimate, h, w);
        }

        rec.distorted_path = (dist_dir / rec.name).string();
        rec.corrected_path = (corr_dir / rec.name).string();
        save_image_channels(distorted, rec.distorted_path);
        save_image_channels(corrected, rec.corrected_path);
        rec.distorted_hash = file_hash_hex(rec.distorted_path);
        rec.corrected_hash = file_hash_hex(rec.corrected_path);
        rec.distorted_rms = channels_rms(distorted, channels);
        rec.corrected_rms = channels_rms(corrected, channels);
    });

    double sum_d = 0.0, sum_c = 0.0;
    int counted = 0;
    for (const auto& rec : manifest.images) {
        if (rec.skipped) continue;
        sum_d += rec.distorted_rms;
        sum_c += rec.corrected_rms;
        ++counted;
    }
    if (counted > 0) {
        manifest.mean_distorted_rms = sum_d / counted;
        manifest.mean_corrected_rms = sum_c / counted;
    }
    return manifest;
}

void write_pipeline_manifest(const PipelineManifest& manifest, const std::string& path) {
    nlohmann::json j;
    j["blur_coefficient"] = manifest.options.blur_coefficient;
    j["seed"] = manifest.options.seed;
    j["noise"] = manifest.options.noise.to_string();
    j["iterations"] = manifest.options.iterations;
    j["stepsize"] = manifest.options.stepsize;
    j["threshold"] = manifest.options.threshold;
    j["pad"] = manifest.options.pad;
    j["psf_size"] = manifest.options.psf_size;
    j["focal_position"] = manifest.options.focal_position;
    j["mean_distorted_rms"] = manifest.mean_distorted_rms;
    j["mean_corrected_rms"] = manifest.mean_corrected_rms;
    nlohmann::json imgs = nlohmann::json::array();
    for (const auto& rec : manifest.images) {
        nlohmann::json r;
        r["name"] = rec.name;
        r["skipped"] = rec.skipped;
        if (!rec.skipped) {
            r["distorted"] = {{"path", rec.distorted_path}, {"fnv1a64", rec.distorted_hash}, {"rms", rec.distorted_rms}};
            r["corrected"] = {{"path", rec.corrected_path}, {"fnv1a64", rec.corrected_hash}, {"rms", rec.corrected_rms}};
        }
        imgs.push_back(r);
    }
    j["images"] = imgs;
    std::ofstream out(path);
    if (!out) throw IoError("write_pipeline_manifest: cannot open " + path);
    out << j.dump(2) << "\n";
}

}  // namespace dk
