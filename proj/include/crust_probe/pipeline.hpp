/*******************************************************************************
* Copyright 2026 The crust-probe Authors
*
* Licensed under the Apache License, Version 2.0 (the "License");
* you may not use this file except in compliance with the License.
* You may obtain a copy of the License at
*
*     http://www.apache.org/licenses/LICENSE-2.0
*
* Unless required by applicable law or agreed to in writing, software
* distributed under the License is distributed on an "AS IS" BASIS,
* WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
* See the License for the specific language governing permissions and
* limitations under the License.
*******************************************************************************/

#ifndef CRUST_PROBE_PIPELINE_HPP
#define CRUST_PROBE_PIPELINE_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "autoencoder.hpp"
#include "core.hpp"
#include "evaluation.hpp"
#include "geo.hpp"
#include "io.hpp"
#include "survey.hpp"
#include "svm.hpp"
#include "synth.hpp"
#include "thickness.hpp"
#include "tiles.hpp"

namespace crust_probe::pipeline {

namespace fs = std::filesystem;

/// Artifact file names. Relative entries resolve against the output directory.
struct Paths {
    fs::path survey = "survey.cpsv";
    fs::path truth = "truth.csv";
    fs::path cells = "cells.csv";
    fs::path nav = "nav.csv";
    fs::path colocation = "colocation.csv";
    fs::path tiles = "tiles.cptl";
    fs::path ae_model = "autoencoder.txt";
    fs::path ae_log = "autoencoder_log.csv";
    fs::path latents = "latents.csv";
    fs::path split = "split.csv";
    fs::path svm_model = "svm.txt";
    fs::path predictions = "predictions.csv";
    fs::path confusion = "confusion.csv";
    fs::path metrics = "metrics.txt";
    fs::path thickness = "thickness.csv";
    fs::path report = "report.txt";
    fs::path echogram = "echogram.pgm";
};

struct PipelineConfig {
    std::uint64_t seed = 1;
    fs::path out = "crust-probe-out";
    Paths paths;

    synth::SceneSpec scene = default_scene();
    thickness::SoundSpeed sound;

    double tile_spacing = 0.15;
    tiles::TileConfig tile;

    int latent_dim = 16;
    ae::TrainConfig ae;

    svm::SvmConfig svm;

    double split_ratio = 0.7;
    bool stratified = false;
    std::optional<std::uint64_t> split_seed;

    thickness::EstimatorConfig estimator;

    /// Three equal patches, one per class.
    static synth::SceneSpec default_scene() {
        synth::SceneSpec s;
        s.patches = {{0.0, 5.0, SeafloorClass::MnCrust, 0.05},
                     {5.0, 10.0, SeafloorClass::Sediment, std::nullopt},
                     {10.0, 15.0, SeafloorClass::Nodules, std::nullopt}};
        return s;
    }

    fs::path resolve(const fs::path& p) const { return p.is_absolute() ? p : out / p; }

    /// Pushes the global seed into every stage that has not pinned its own.
    void apply_seed(std::uint64_t s, bool force) {
        seed = s;
        if (force || !scene_seed_pinned) scene.seed = s;
        if (force || !ae_seed_pinned) ae.seed = s;
        if (force || !svm_seed_pinned) svm.seed = s;
        if (force) split_seed.reset();
    }

    std::uint64_t effective_split_seed() const { return split_seed.value_or(seed); }

    bool scene_seed_pinned = false;
    bool ae_seed_pinned = false;
    bool svm_seed_pinned = false;
};

// ---------------------------------------------------------------------------
// JSON configuration

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, std::string_view section, std::initializer_list<std::string_view> allowed) {
    if (!j.is_object()) throw ValidationError("config: '" + std::string(section) + "' must be an object");
    for (const auto& [k, v] : j.items())
        if (std::find(allowed.begin(), allowed.end(), k) == allowed.end())
            throw ValidationError("config: unknown key '" + k + "' in '" + std::string(section) + "'");
}

template <class T>
void get(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const nlohmann::json::exception&) {
        throw ValidationError(std::string("config: bad value for '") + key + "'");
    }
}

/// Numbers, or the string "inf" for values JSON cannot spell.
inline void get_real(const json& j, const char* key, double& out) {
    if (!j.contains(key)) return;
    const auto& v = j.at(key);
    if (v.is_number()) {
        out = v.get<double>();
        return;
    }
    if (v.is_string() && v.get<std::string>() == "inf") {
        out = std::numeric_limits<double>::infinity();
        return;
    }
    throw ValidationError(std::string("config: '") + key + "' must be a number");
}

inline SeafloorClass get_class(const json& v) {
    if (v.is_number_integer()) return class_from_int(v.get<int>());
    if (v.is_string()) return parse_class(v.get<std::string>());
    throw ValidationError("config: patch class must be a name or code");
}

} // namespace detail

/// Rejects out-of-range settings up front, whichever stage will run.
inline void validate(const PipelineConfig& c) {
    synth::validate(c.scene);
    c.sound.validate();
    c.ae.validate();
    c.svm.validate();
    if (c.latent_dim < 1) throw ValidationError("config: latent_dim must be >= 1");
    if (!(c.tile_spacing >= tiles::kMinTileSpacing - 1e-12))
        throw ValidationError("config: tile spacing must be at least " + io::fmt(tiles::kMinTileSpacing) + " m");
    if (!(c.split_ratio > 0.0 && c.split_ratio < 1.0))
        throw ValidationError("config: split ratio must lie in (0, 1), got " + io::fmt(c.split_ratio));
    if (!(c.estimator.min_prominence > 0.0 && c.estimator.min_prominence < 1.0))
        throw ValidationError("config: min_prominence must lie in (0, 1)");
    if (!(c.estimator.max_thickness_m > 0.0)) throw ValidationError("config: max_thickness must be positive");
}

inline PipelineConfig config_from_json(const nlohmann::json& j) {
    using detail::get;
    using detail::get_real;
    PipelineConfig c;
    detail::check_keys(j, "top level",
                       {"seed", "out", "paths", "scene", "sound", "tiles", "autoencoder", "svm", "split", "thickness"});

    if (j.contains("seed")) get(j, "seed", c.seed);
    if (j.contains("out")) {
        std::string o;
        get(j, "out", o);
        c.out = o;
    }

    if (j.contains("paths")) {
        const auto& p = j.at("paths");
        detail::check_keys(p, "paths",
                           {"survey", "truth", "cells", "nav", "colocation", "tiles", "autoencoder",
                            "autoencoder_log", "latents", "split", "svm", "predictions", "confusion", "metrics",
                            "thickness", "report", "echogram"});
        const std::pair<const char*, fs::path*> slots[] = {
            {"survey", &c.paths.survey},       {"truth", &c.paths.truth},
            {"cells", &c.paths.cells},         {"nav", &c.paths.nav},
            {"colocation", &c.paths.colocation}, {"tiles", &c.paths.tiles},
            {"autoencoder", &c.paths.ae_model}, {"autoencoder_log", &c.paths.ae_log},
            {"latents", &c.paths.latents},     {"split", &c.paths.split},
            {"svm", &c.paths.svm_model},       {"predictions", &c.paths.predictions},
            {"confusion", &c.paths.confusion}, {"metrics", &c.paths.metrics},
            {"thickness", &c.paths.thickness}, {"report", &c.paths.report},
            {"echogram", &c.paths.echogram}};
        for (const auto& [k, dst] : slots) {
            std::string v;
            get(p, k, v);
            if (!v.empty()) *dst = v;
        }
    }

    if (j.contains("sound")) {
        const auto& s = j.at("sound");
        detail::check_keys(s, "sound", {"value", "uncertainty", "two_way_factor"});
        get_real(s, "value", c.sound.value);
        get_real(s, "uncertainty", c.sound.uncertainty);
        get_real(s, "two_way_factor", c.sound.two_way_factor);
    }

    if (j.contains("scene")) {
        const auto& s = j.at("scene");
        detail::check_keys(s, "scene",
                           {"transect_length", "patches", "auv_velocity", "auv_altitude", "ping_rate",
                            "sample_rate", "samples_per_ping", "snr_db", "seed", "track_y", "samples_per_meter",
                            "range_offset_samples", "nav_interval", "echo"});
        auto& sc = c.scene;
        get_real(s, "transect_length", sc.transect_length);
        get_real(s, "auv_velocity", sc.auv_velocity);
        get_real(s, "auv_altitude", sc.auv_altitude);
        get_real(s, "ping_rate", sc.ping_rate);
        get_real(s, "sample_rate", sc.sample_rate);
        get(s, "samples_per_ping", sc.samples_per_ping);
        get_real(s, "snr_db", sc.snr_db);
        get_real(s, "track_y", sc.track_y);
        get_real(s, "samples_per_meter", sc.samples_per_meter);
        get_real(s, "range_offset_samples", sc.range_offset_samples);
        get_real(s, "nav_interval", sc.nav_interval);
        if (s.contains("seed")) {
            get(s, "seed", sc.seed);
            c.scene_seed_pinned = true;
        }
        if (s.contains("patches")) {
            if (!s.at("patches").is_array()) throw ValidationError("config: 'patches' must be an array");
            sc.patches.clear();
            for (const auto& p : s.at("patches")) {
                detail::check_keys(p, "patch", {"start", "end", "class", "thickness"});
                synth::Patch patch;
                get_real(p, "start", patch.start_m);
                get_real(p, "end", patch.end_m);
                if (!p.contains("class")) throw ValidationError("config: patch without 'class'");
                patch.cls = detail::get_class(p.at("class"));
                if (p.contains("thickness") && !p.at("thickness").is_null()) {
                    double t = 0.0;
                    get_real(p, "thickness", t);
                    patch.thickness_m = t;
                }
                sc.patches.push_back(patch);
            }
        }
        if (s.contains("echo")) {
            const auto& e = s.at("echo");
            detail::check_keys(e, "echo",
                               {"pulse_sigma", "truncate_sigmas", "primary_amplitude", "secondary_ratio",
                                "sediment_broadening", "sediment_amplitude", "nodule_amplitude",
                                "nodule_min_peaks", "nodule_max_peaks", "nodule_spread", "nodule_sigma",
                                "nodule_min_gap", "nodule_max_gap", "amplitude_jitter"});
            auto& em = sc.echo;
            get_real(e, "pulse_sigma", em.pulse_sigma);
            get_real(e, "truncate_sigmas", em.truncate_sigmas);
            get_real(e, "primary_amplitude", em.primary_amplitude);
            get_real(e, "secondary_ratio", em.secondary_ratio);
            get_real(e, "sediment_broadening", em.sediment_broadening);
            get_real(e, "sediment_amplitude", em.sediment_amplitude);
            get_real(e, "nodule_amplitude", em.nodule_amplitude);
            get(e, "nodule_min_peaks", em.nodule_min_peaks);
            get(e, "nodule_max_peaks", em.nodule_max_peaks);
            get_real(e, "nodule_spread", em.nodule_spread);
            get_real(e, "nodule_sigma", em.nodule_sigma);
            get_real(e, "nodule_min_gap", em.nodule_min_gap);
            get_real(e, "nodule_max_gap", em.nodule_max_gap);
            get_real(e, "amplitude_jitter", em.amplitude_jitter);
        }
    }
    c.scene.sound = c.sound;

    if (j.contains("tiles")) {
        const auto& t = j.at("tiles");
        detail::check_keys(t, "tiles", {"spacing", "pre_offset", "threshold_k", "noise_fraction", "local_window"});
        get_real(t, "spacing", c.tile_spacing);
        get(t, "pre_offset", c.tile.pre_offset);
        get_real(t, "threshold_k", c.tile.detector.threshold_k);
        get_real(t, "noise_fraction", c.tile.detector.noise_fraction);
        get(t, "local_window", c.tile.detector.local_window);
    }
    c.estimator.detector = c.tile.detector;

    if (j.contains("autoencoder")) {
        const auto& a = j.at("autoencoder");
        detail::check_keys(a, "autoencoder",
                           {"latent_dim", "epochs", "batch_size", "learning_rate", "proximity_weight",
                            "proximity_scale", "proximity_cutoff", "seed"});
        get(a, "latent_dim", c.latent_dim);
        get(a, "epochs", c.ae.epochs);
        get(a, "batch_size", c.ae.batch_size);
        get_real(a, "learning_rate", c.ae.learning_rate);
        get_real(a, "proximity_weight", c.ae.proximity_weight);
        get_real(a, "proximity_scale", c.ae.proximity_scale);
        get_real(a, "proximity_cutoff", c.ae.proximity_cutoff);
        if (a.contains("seed")) {
            get(a, "seed", c.ae.seed);
            c.ae_seed_pinned = true;
        }
    }

    if (j.contains("svm")) {
        const auto& s = j.at("svm");
        detail::check_keys(s, "svm", {"kernel", "gamma", "C", "tolerance", "max_passes", "seed"});
        if (s.contains("kernel")) {
            const auto k = s.at("kernel").get<std::string>();
            if (k == "rbf") c.svm.kernel.type = svm::KernelType::Rbf;
            else if (k == "linear") c.svm.kernel.type = svm::KernelType::Linear;
            else throw ValidationError("config: unknown kernel '" + k + "'");
        }
        get_real(s, "gamma", c.svm.kernel.gamma);
        get_real(s, "C", c.svm.C);
        get_real(s, "tolerance", c.svm.tolerance);
        get(s, "max_passes", c.svm.max_passes);
        if (s.contains("seed")) {
            get(s, "seed", c.svm.seed);
            c.svm_seed_pinned = true;
        }
    }

    if (j.contains("split")) {
        const auto& s = j.at("split");
        detail::check_keys(s, "split", {"ratio", "stratified", "seed"});
        get_real(s, "ratio", c.split_ratio);
        get(s, "stratified", c.stratified);
        if (s.contains("seed")) {
            std::uint64_t v = 0;
            get(s, "seed", v);
            c.split_seed = v;
        }
    }

    if (j.contains("thickness")) {
        const auto& t = j.at("thickness");
        detail::check_keys(t, "thickness", {"min_prominence", "max_thickness"});
        get_real(t, "min_prominence", c.estimator.min_prominence);
        get_real(t, "max_thickness", c.estimator.max_thickness_m);
    }

    c.apply_seed(c.seed, false);
    validate(c);
    return c;
}

inline PipelineConfig load_config(const fs::path& path) {
    const auto text = io::read_file(path);
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw FormatError("config '" + path.string() + "': " + e.what(), static_cast<std::int64_t>(e.byte));
    }
    return config_from_json(j);
}

// ---------------------------------------------------------------------------
// Staged outputs: contents are buffered and committed together. A failure at
// any point leaves none of the stage's outputs behind.

class OutputSet {
public:
    void add(fs::path path, std::string contents) { files_.emplace_back(std::move(path), std::move(contents)); }

    std::vector<fs::path> commit() {
        std::vector<fs::path> temps, done;
        try {
            for (const auto& [path, contents] : files_) {
                auto tmp = path;
                tmp += ".partial";
                temps.push_back(tmp);
                io::write_file(tmp, contents);
            }
            for (std::size_t i = 0; i < files_.size(); ++i) {
                std::error_code ec;
                fs::rename(temps[i], files_[i].first, ec);
                if (ec) throw IoError("cannot move output into place at '" + files_[i].first.string() + "': " + ec.message());
                done.push_back(files_[i].first);
            }
        } catch (...) {
            std::error_code ec;
            for (const auto& t : temps) fs::remove(t, ec);
            for (const auto& d : done) fs::remove(d, ec);
            throw;
        }
        std::vector<fs::path> out;
        for (const auto& f : files_) out.push_back(f.first);
        return out;
    }

private:
    std::vector<std::pair<fs::path, std::string>> files_;
};

struct StageResult {
    std::vector<fs::path> outputs;
    std::string summary;
};

// ---------------------------------------------------------------------------
// Artifact readers that name the stage and the file on failure.

namespace detail {

template <class F>
auto load(std::string_view stage, const fs::path& path, F&& reader) {
    try {
        return reader(path);
    } catch (const Error& e) {
        throw Error(std::string(stage) + ": input '" + path.string() + "': " + e.what(), e.exit_code());
    }
}

inline std::string text(const fs::path& p) { return io::read_file(p); }

struct Prediction {
    std::uint64_t center_ping = 0;
    double x = 0.0;
    double y = 0.0;
    std::optional<SeafloorClass> label;
    SeafloorClass predicted = SeafloorClass::MnCrust;
};

inline std::string predictions_to_csv(std::span<const Prediction> p) {
    std::string s = "index,center_ping,x,y,label,predicted\n";
    for (std::size_t i = 0; i < p.size(); ++i) {
        s += std::to_string(i) + "," + std::to_string(p[i].center_ping) + "," + io::fmt(p[i].x) + "," +
             io::fmt(p[i].y) + ",";
        if (p[i].label) s += std::string(class_name(*p[i].label));
        s += "," + std::string(class_name(p[i].predicted)) + "\n";
    }
    return s;
}

inline std::vector<Prediction> predictions_from_csv(std::string_view text) {
    auto t = io::parse_csv(text, {"index", "center_ping", "x", "y", "label", "predicted"}, "predictions");
    std::vector<Prediction> out;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto& row = t.rows[r];
        if (io::parse_int(row[0], "index") != static_cast<long long>(r))
            throw FormatError("predictions: indices must be 0..n-1 in order");
        Prediction p;
        p.center_ping = static_cast<std::uint64_t>(io::parse_int(row[1], "center_ping"));
        p.x = io::parse_double(row[2], "x");
        p.y = io::parse_double(row[3], "y");
        if (!row[4].empty()) p.label = parse_class(row[4]);
        p.predicted = parse_class(row[5]);
        out.push_back(p);
    }
    return out;
}

inline std::string ae_log_to_csv(std::span<const ae::EpochLoss> log) {
    std::string s = "epoch,total,reconstruction,proximity\n";
    for (std::size_t i = 0; i < log.size(); ++i)
        s += std::to_string(i) + "," + io::fmt(log[i].total) + "," + io::fmt(log[i].reconstruction) + "," +
             io::fmt(log[i].proximity) + "\n";
    return s;
}

} // namespace detail

// ---------------------------------------------------------------------------
// Stages

inline StageResult simulate(const PipelineConfig& c) {
    auto spec = c.scene;
    spec.sound = c.sound;
    const auto r = synth::synthesize_survey(spec);
    OutputSet out;
    out.add(c.resolve(c.paths.survey), encode_survey(r.survey));
    out.add(c.resolve(c.paths.truth), synth::truth_to_csv(r.truth));
    out.add(c.resolve(c.paths.cells), geo::cells_to_csv(r.cells));
    out.add(c.resolve(c.paths.nav), geo::nav_to_csv(r.nav));
    return {out.commit(), std::to_string(r.survey.pings.size()) + " pings, " + std::to_string(r.cells.size()) +
                              " labeled cells"};
}

inline StageResult colocate(const PipelineConfig& c) {
    constexpr std::string_view st = "colocate";
    const auto survey = detail::load(st, c.resolve(c.paths.survey), read_survey);
    const auto nav = detail::load(st, c.resolve(c.paths.nav),
                                  [](const fs::path& p) { return geo::nav_from_csv(io::read_file(p), p.string()); });
    const auto cells = detail::load(st, c.resolve(c.paths.cells),
                                    [](const fs::path& p) { return geo::cells_from_csv(io::read_file(p), p.string()); });
    const auto col = geo::co_locate(survey.pings, nav, cells);
    OutputSet out;
    out.add(c.resolve(c.paths.colocation), geo::colocation_to_csv(col));
    return {out.commit(), std::to_string(geo::labeled_count(col)) + " of " + std::to_string(col.size()) +
                              " pings labeled"};
}

inline StageResult extract(const PipelineConfig& c) {
    constexpr std::string_view st = "extract";
    const auto survey = detail::load(st, c.resolve(c.paths.survey), read_survey);
    const auto col = detail::load(st, c.resolve(c.paths.colocation), [](const fs::path& p) {
        return geo::colocation_from_csv(io::read_file(p), p.string());
    });
    const tiles::Echogram eg(survey);
    std::vector<std::uint64_t> skipped;
    const auto ts = tiles::sample_tiles(eg, col, c.tile_spacing, c.tile, &skipped);
    OutputSet out;
    out.add(c.resolve(c.paths.tiles), tiles::encode_tiles(ts));
    return {out.commit(), std::to_string(ts.size()) + " tiles, " + std::to_string(skipped.size()) + " pings skipped"};
}

inline StageResult train_ae(const PipelineConfig& c) {
    constexpr std::string_view st = "train-ae";
    const auto ts = detail::load(st, c.resolve(c.paths.tiles), tiles::read_tiles);
    const auto r = ae::train(ts, c.ae, c.latent_dim);
    OutputSet out;
    out.add(c.resolve(c.paths.ae_model), ae::model_to_text(r.model));
    out.add(c.resolve(c.paths.ae_log), detail::ae_log_to_csv(r.log));
    return {out.commit(), "reconstruction " + io::fmt(r.log.front().reconstruction) + " -> " +
                              io::fmt(r.log.back().reconstruction)};
}

inline StageResult encode(const PipelineConfig& c) {
    constexpr std::string_view st = "encode";
    const auto model = detail::load(st, c.resolve(c.paths.ae_model), ae::load_model);
    const auto ts = detail::load(st, c.resolve(c.paths.tiles), tiles::read_tiles);
    const auto lv = ae::encode(model, ts);
    OutputSet out;
    out.add(c.resolve(c.paths.latents), ae::latents_to_csv(lv, model.latent_dim));
    return {out.commit(), std::to_string(lv.size()) + " latent vectors of length " + std::to_string(model.latent_dim)};
}

inline StageResult train_svm(const PipelineConfig& c) {
    constexpr std::string_view st = "train-svm";
    const auto lv = detail::load(st, c.resolve(c.paths.latents), [](const fs::path& p) {
        return ae::latents_from_csv(io::read_file(p), p.string());
    });
    std::vector<SeafloorClass> labels;
    for (std::size_t i = 0; i < lv.size(); ++i) {
        if (!lv[i].label) throw ValidationError("train-svm: latent row " + std::to_string(i) + " has no label");
        labels.push_back(*lv[i].label);
    }
    auto sp = c.stratified ? eval::stratified_split(labels, c.split_ratio, c.effective_split_seed())
                           : eval::split(labels.size(), c.split_ratio, c.effective_split_seed());
    std::sort(sp.train.begin(), sp.train.end());
    std::sort(sp.test.begin(), sp.test.end());

    std::vector<svm::Vec> x;
    std::vector<SeafloorClass> y;
    for (auto i : sp.train) {
        x.push_back(lv[i].values);
        y.push_back(labels[i]);
    }
    const auto model = svm::train_multiclass(x, y, c.svm);
    OutputSet out;
    out.add(c.resolve(c.paths.split), eval::split_to_csv(sp));
    out.add(c.resolve(c.paths.svm_model), svm::model_to_text(model));
    return {out.commit(), std::to_string(sp.train.size()) + " train / " + std::to_string(sp.test.size()) + " test, " +
                              std::to_string(model.machines.size()) + " pairwise machines"};
}

inline StageResult classify(const PipelineConfig& c) {
    constexpr std::string_view st = "classify";
    const auto model = detail::load(st, c.resolve(c.paths.svm_model), svm::load_model);
    const auto lv = detail::load(st, c.resolve(c.paths.latents), [](const fs::path& p) {
        return ae::latents_from_csv(io::read_file(p), p.string());
    });
    std::vector<svm::Vec> x;
    for (const auto& v : lv) x.push_back(v.values);
    std::vector<SeafloorClass> pred;
    try {
        pred = svm::predict(model, x);
    } catch (const ValidationError& e) {
        throw ValidationError("classify: " + std::string(e.what()));
    }
    std::vector<detail::Prediction> rows;
    for (std::size_t i = 0; i < lv.size(); ++i) rows.push_back({lv[i].center_ping, lv[i].x, lv[i].y, lv[i].label, pred[i]});
    OutputSet out;
    out.add(c.resolve(c.paths.predictions), detail::predictions_to_csv(rows));
    return {out.commit(), std::to_string(rows.size()) + " tiles classified"};
}

inline StageResult evaluate(const PipelineConfig& c) {
    constexpr std::string_view st = "evaluate";
    const auto pred = detail::load(st, c.resolve(c.paths.predictions),
                                   [](const fs::path& p) { return detail::predictions_from_csv(io::read_file(p)); });
    const auto sp = detail::load(st, c.resolve(c.paths.split), [](const fs::path& p) {
        return eval::split_from_csv(io::read_file(p), p.string());
    });
    if (sp.train.size() + sp.test.size() != pred.size())
        throw ValidationError("evaluate: split covers " + std::to_string(sp.train.size() + sp.test.size()) +
                              " rows but there are " + std::to_string(pred.size()) + " predictions");
    std::vector<SeafloorClass> truth, guess;
    for (auto i : sp.test) {
        if (!pred[i].label) throw ValidationError("evaluate: test row " + std::to_string(i) + " has no label");
        truth.push_back(*pred[i].label);
        guess.push_back(pred[i].predicted);
    }
    const auto cm = eval::confusion(truth, guess);
    const auto m = eval::metrics(cm);
    OutputSet out;
    out.add(c.resolve(c.paths.confusion), eval::confusion_to_csv(cm));
    out.add(c.resolve(c.paths.metrics), eval::metrics_to_text(cm, m));
    return {out.commit(), "test accuracy " + io::fmt(m.accuracy) + " on " + std::to_string(cm.total()) + " tiles"};
}

inline StageResult estimate_thickness(const PipelineConfig& c) {
    constexpr std::string_view st = "thickness";
    const auto survey = detail::load(st, c.resolve(c.paths.survey), read_survey);
    const auto rows = thickness::estimate_survey(survey, c.sound, c.estimator);
    const auto n = std::count_if(rows.begin(), rows.end(), [](const auto& r) { return r.estimate.has_value(); });
    OutputSet out;
    out.add(c.resolve(c.paths.thickness), thickness::thickness_to_csv(rows));
    return {out.commit(), std::to_string(n) + " of " + std::to_string(rows.size()) + " pings with a layer"};
}

inline StageResult report(const PipelineConfig& c) {
    constexpr std::string_view st = "report";
    const auto survey = detail::load(st, c.resolve(c.paths.survey), read_survey);
    const auto pred = detail::load(st, c.resolve(c.paths.predictions),
                                   [](const fs::path& p) { return detail::predictions_from_csv(io::read_file(p)); });
    const tiles::Echogram eg(survey);

    std::map<std::uint64_t, std::size_t> column_of;
    for (std::size_t col = 0; col < eg.cols(); ++col) column_of[eg.info(col).ping_index] = col;

    std::vector<std::optional<SeafloorClass>> bands(eg.cols());
    std::array<std::size_t, kNumClasses> predicted_counts{};
    for (const auto& p : pred) {
        ++predicted_counts[static_cast<std::size_t>(to_int(p.predicted))];
        auto it = column_of.find(p.center_ping);
        if (it == column_of.end())
            throw ValidationError("report: predicted tile centered on ping " + std::to_string(p.center_ping) +
                                  " is not in the survey");
        const std::size_t col = it->second;
        const std::size_t lo = col >= tiles::kLeftContext ? col - tiles::kLeftContext : 0;
        const std::size_t hi = std::min(eg.cols() - 1, col + tiles::kRightContext);
        for (std::size_t k = lo; k <= hi; ++k) bands[k] = p.predicted;
    }

    // Window from a little above the shallowest detected seafloor.
    std::size_t top = eg.rows();
    for (std::size_t col = 0; col < eg.cols(); ++col) {
        try {
            top = std::min(top, tiles::detect_seafloor(eg.column(col), c.tile.detector));
        } catch (const NoSeafloorError&) {
        }
    }
    if (top == eg.rows()) top = 0;
    const std::size_t row_begin = top > 16 ? top - 16 : 0;
    const std::size_t row_count = 96;

    std::string r;
    r += "crust-probe survey report\n";
    r += "pings=" + std::to_string(survey.pings.size()) + "\n";
    r += "samples_per_ping=" + std::to_string(survey.header.samples_per_ping) + "\n";
    if (!survey.pings.empty()) {
        r += "track_start_x=" + io::fmt(survey.pings.front().x) + "\n";
        r += "track_end_x=" + io::fmt(survey.pings.back().x) + "\n";
    }
    r += "tiles_classified=" + std::to_string(pred.size()) + "\n";
    for (auto cls : kAllClasses)
        r += "predicted_" + std::string(class_name(cls)) + "=" +
             std::to_string(predicted_counts[static_cast<std::size_t>(to_int(cls))]) + "\n";

    const auto metrics_path = c.resolve(c.paths.metrics);
    if (fs::exists(metrics_path)) r += "\n[test metrics]\n" + detail::load(st, metrics_path, detail::text);

    const auto thick_path = c.resolve(c.paths.thickness);
    if (fs::exists(thick_path)) {
        const auto t = detail::load(st, thick_path, [](const fs::path& p) {
            return io::parse_csv(io::read_file(p), {"ping_index", "x", "y", "thickness_m", "uncertainty_m", "confidence"},
                                 p.string());
        });
        std::size_t any = 0;
        std::vector<double> v; // under tiles predicted MnCrust
        for (const auto& row : t.rows) {
            if (row[3].empty()) continue;
            ++any;
            auto it = column_of.find(static_cast<std::uint64_t>(io::parse_int(row[0], "ping_index")));
            if (it != column_of.end() && bands[it->second] == SeafloorClass::MnCrust)
                v.push_back(io::parse_double(row[3], "thickness_m"));
        }
        r += "\n[thickness]\n";
        r += "pings_with_layer=" + std::to_string(any) + "\n";
        r += "crust_pings_with_layer=" + std::to_string(v.size()) + "\n";
        if (!v.empty()) {
            std::sort(v.begin(), v.end());
            double sum = 0.0;
            for (double d : v) sum += d;
            r += "crust_mean_thickness_m=" + io::fmt(sum / static_cast<double>(v.size())) + "\n";
            r += "crust_median_thickness_m=" + io::fmt(v[v.size() / 2]) + "\n";
            r += "crust_max_thickness_m=" + io::fmt(v.back()) + "\n";
        }
    }

    OutputSet out;
    out.add(c.resolve(c.paths.report), r);
    out.add(c.resolve(c.paths.echogram), tiles::render_pgm(eg, row_begin, row_count, bands));
    return {out.commit(), "report for " + std::to_string(survey.pings.size()) + " pings"};
}

// ---------------------------------------------------------------------------

using StageFn = StageResult (*)(const PipelineConfig&);

/// Subcommands in flowchart order.
inline const std::vector<std::pair<std::string_view, StageFn>>& stages() {
    static const std::vector<std::pair<std::string_view, StageFn>> s = {
        {"simulate", simulate},   {"colocate", colocate},       {"extract", extract},
        {"train-ae", train_ae},   {"encode", encode},           {"train-svm", train_svm},
        {"classify", classify},   {"thickness", estimate_thickness}, {"evaluate", evaluate},
        {"report", report}};
    return s;
}

inline StageResult run_stage(std::string_view name, const PipelineConfig& c) {
    for (const auto& [n, fn] : stages()) {
        if (n != name) continue;
        try {
            return fn(c);
        } catch (const Error& e) {
            const std::string what = e.what();
            if (what.rfind(std::string(name) + ":", 0) == 0) throw;
            throw Error(std::string(name) + ": " + what, e.exit_code());
        }
    }
    throw ValidationError("unknown subcommand '" + std::string(name) + "'");
}

/// Every stage in order; stops at the first failure.
inline std::vector<StageResult> run_all(const PipelineConfig& c) {
    std::vector<StageResult> out;
    for (const auto& [n, fn] : stages()) out.push_back(run_stage(n, c));
    return out;
}

} // namespace crust_probe::pipeline

#endif // CRUST_PROBE_PIPELINE_HPP
