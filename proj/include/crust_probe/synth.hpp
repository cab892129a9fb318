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

#ifndef CRUST_PROBE_SYNTH_HPP
#define CRUST_PROBE_SYNTH_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "geo.hpp"
#include "io.hpp"
#include "survey.hpp"
#include "thickness.hpp"

namespace crust_probe::synth {

struct Patch {
    double start_m = 0.0;
    double end_m = 0.0;
    SeafloorClass cls = SeafloorClass::MnCrust;
    std::optional<double> thickness_m; // Mn-crust only
};

/// Shape of the echo returned by each seafloor class. All widths are in samples.
struct EchoModel {
    double pulse_sigma = 3.0;         // Gaussian envelope std of a single echo
    double truncate_sigmas = 4.0;     // pulses are exactly zero beyond this many std
    double primary_amplitude = 0.8;   // Mn-crust primary; also the SNR reference
    double secondary_ratio = 0.5;     // crust/substrate echo relative to primary
    double sediment_broadening = 3.0; // sediment pulse std = pulse_sigma * this
    double sediment_amplitude = 0.35;
    double nodule_amplitude = 0.7;
    int nodule_min_peaks = 2;
    int nodule_max_peaks = 4;
    double nodule_spread = 8.0;  // sub-peaks stay within +/- this of the seafloor
    double nodule_sigma = 4.0;
    double nodule_min_gap = 3.0; // spacing between consecutive sub-peaks
    double nodule_max_gap = 6.0;
    double amplitude_jitter = 0.1; // per-ping gain drawn from 1 +/- this
};

struct SceneSpec {
    double transect_length = 15.0; // m
    std::vector<Patch> patches;
    double auv_velocity = 0.1;  // m/s
    double auv_altitude = 1.5;  // m
    double ping_rate = 20.0;    // Hz
    double sample_rate = 2.0e6; // Hz
    std::uint32_t samples_per_ping = 4096;
    double snr_db = 30.0; // +inf disables noise
    std::uint64_t seed = 1;

    double track_y = 0.05;             // lateral track position, m
    double samples_per_meter = 1000.0; // linear range-to-sample map
    double range_offset_samples = 0.0;
    double nav_interval = 1.0; // s between navigation fixes
    thickness::SoundSpeed sound;
    EchoModel echo;
};

struct GroundTruthRecord {
    std::uint64_t ping_index = 0;
    SeafloorClass cls = SeafloorClass::MnCrust;
    std::optional<double> thickness_m;
    std::uint32_t seafloor_index = 0;

    bool operator==(const GroundTruthRecord&) const = default;
};

struct SynthResult {
    Survey survey;
    std::vector<GroundTruthRecord> truth;
    geo::CellTable cells;
    geo::NavTrack nav;
};

inline std::uint64_t ping_count(const SceneSpec& s) {
    return static_cast<std::uint64_t>(std::llround(s.transect_length / s.auv_velocity * s.ping_rate));
}

/// Sample index of the seafloor for a given altitude.
inline std::uint32_t seafloor_index(const SceneSpec& s, double altitude) {
    return static_cast<std::uint32_t>(std::llround(s.range_offset_samples + altitude * s.samples_per_meter));
}

/// Delay of the crust/substrate echo in (fractional) samples.
inline double secondary_delay_samples(const SceneSpec& s, double thickness_m) {
    return thickness::thickness_to_delay(thickness_m, s.sound) * s.sample_rate;
}

inline void validate(const SceneSpec& s) {
    auto positive = [](double v, const char* name) {
        if (!(v > 0.0) || !std::isfinite(v))
            throw ValidationError(std::string(name) + " must be positive and finite, got " + io::fmt(v));
    };
    positive(s.transect_length, "transect_length");
    positive(s.auv_velocity, "auv_velocity");
    positive(s.auv_altitude, "auv_altitude");
    positive(s.ping_rate, "ping_rate");
    positive(s.sample_rate, "sample_rate");
    positive(s.samples_per_meter, "samples_per_meter");
    positive(s.nav_interval, "nav_interval");
    positive(s.echo.pulse_sigma, "echo.pulse_sigma");
    positive(s.echo.nodule_sigma, "echo.nodule_sigma");
    positive(s.echo.sediment_broadening, "echo.sediment_broadening");
    s.sound.validate();
    if (std::isnan(s.snr_db) || s.snr_db == -std::numeric_limits<double>::infinity())
        throw ValidationError("snr_db must be a number or +inf");
    if (s.samples_per_ping < tiles::kMinPingSamples)
        throw ValidationError("samples_per_ping must be at least 64");
    if (s.echo.nodule_min_peaks < 1 || s.echo.nodule_max_peaks < s.echo.nodule_min_peaks)
        throw ValidationError("invalid nodule peak count range");
    if (!(s.echo.nodule_min_gap >= 0.0) || s.echo.nodule_max_gap < s.echo.nodule_min_gap)
        throw ValidationError("invalid nodule gap range");
    if (!(s.echo.amplitude_jitter >= 0.0 && s.echo.amplitude_jitter < 1.0))
        throw ValidationError("amplitude_jitter must lie in [0, 1)");

    if (s.patches.empty()) throw ValidationError("scene has no patches");
    std::vector<Patch> sorted = s.patches;
    std::sort(sorted.begin(), sorted.end(),
              [](const Patch& a, const Patch& b) { return a.start_m < b.start_m; });
    if (sorted.front().start_m != 0.0)
        throw ValidationError("patches must start at 0 m, first starts at " + io::fmt(sorted.front().start_m));
    for (std::size_t i = 0; i < sorted.size(); ++i) {
        const auto& p = sorted[i];
        if (!(p.end_m > p.start_m))
            throw ValidationError("patch [" + io::fmt(p.start_m) + ", " + io::fmt(p.end_m) + ") is empty");
        if (i + 1 < sorted.size() && sorted[i + 1].start_m != p.end_m)
            throw ValidationError("patches overlap or leave a gap at " + io::fmt(p.end_m) + " m");
        if (p.cls == SeafloorClass::MnCrust) {
            if (!p.thickness_m || !(*p.thickness_m > 0.0))
                throw ValidationError("Mn-crust patch at " + io::fmt(p.start_m) + " m needs thickness > 0");
        } else if (p.thickness_m) {
            throw ValidationError("only Mn-crust patches carry a thickness (patch at " +
                                  io::fmt(p.start_m) + " m)");
        }
    }
    if (sorted.back().end_m != s.transect_length)
        throw ValidationError("patches end at " + io::fmt(sorted.back().end_m) +
                              " m, transect is " + io::fmt(s.transect_length) + " m");

    // every echo has to fit inside the ping
    const double floor_idx = seafloor_index(s, s.auv_altitude);
    double reach = s.echo.truncate_sigmas *
                   std::max({s.echo.pulse_sigma, s.echo.pulse_sigma * s.echo.sediment_broadening,
                             s.echo.nodule_sigma}) +
                   s.echo.nodule_spread;
    for (const auto& p : sorted)
        if (p.thickness_m)
            reach = std::max(reach, secondary_delay_samples(s, *p.thickness_m) +
                                        s.echo.truncate_sigmas * s.echo.pulse_sigma);
    if (floor_idx - reach < 0.0 || floor_idx + reach >= s.samples_per_ping)
        throw ValidationError("echoes around seafloor sample " + io::fmt(floor_idx) +
                              " do not fit in " + std::to_string(s.samples_per_ping) + " samples");
}

inline const Patch& patch_at(const SceneSpec& s, double x) {
    for (const auto& p : s.patches)
        if (x >= p.start_m && x < p.end_m) return p;
    // x at or past the end of the transect
    return *std::max_element(s.patches.begin(), s.patches.end(),
                             [](const Patch& a, const Patch& b) { return a.end_m < b.end_m; });
}

namespace detail {

inline void add_pulse(std::vector<double>& buf, double center, double sigma, double amplitude,
                      double truncate_sigmas) {
    const double half = truncate_sigmas * sigma;
    const auto lo = static_cast<std::int64_t>(std::ceil(center - half));
    const auto hi = static_cast<std::int64_t>(std::floor(center + half));
    for (auto i = std::max<std::int64_t>(lo, 0);
         i <= hi && i < static_cast<std::int64_t>(buf.size()); ++i) {
        const double d = (static_cast<double>(i) - center) / sigma;
        buf[static_cast<std::size_t>(i)] += amplitude * std::exp(-0.5 * d * d);
    }
}

} // namespace detail

/// Deterministic survey for a scene. Returns pings, per-ping ground truth,
/// the labeled 10 cm cells under the track, and the navigation track.
inline SynthResult synthesize_survey(const SceneSpec& spec) {
    validate(spec);
    const auto& em = spec.echo;
    Rng rng(spec.seed);

    const double noise_sigma =
        std::isinf(spec.snr_db) ? 0.0 : em.primary_amplitude / std::pow(10.0, spec.snr_db / 20.0);

    Survey survey;
    survey.header = {spec.sample_rate, spec.ping_rate, spec.samples_per_ping};
    std::vector<GroundTruthRecord> truth;
    const auto n = ping_count(spec);
    survey.pings.reserve(n);
    truth.reserve(n);

    std::vector<double> buf(spec.samples_per_ping);
    for (std::uint64_t i = 0; i < n; ++i) {
        std::fill(buf.begin(), buf.end(), 0.0);
        const double t = static_cast<double>(i) / spec.ping_rate;
        const double x = spec.auv_velocity * t;
        const auto& patch = patch_at(spec, x);
        const std::uint32_t floor_idx = seafloor_index(spec, spec.auv_altitude);
        const double base = floor_idx;
        const double gain = 1.0 + em.amplitude_jitter * (2.0 * rng.uniform() - 1.0);

        GroundTruthRecord gt{i, patch.cls, patch.thickness_m, floor_idx};
        switch (patch.cls) {
        case SeafloorClass::MnCrust: {
            const double a = em.primary_amplitude * gain;
            detail::add_pulse(buf, base, em.pulse_sigma, a, em.truncate_sigmas);
            detail::add_pulse(buf, base + secondary_delay_samples(spec, *patch.thickness_m),
                              em.pulse_sigma, a * em.secondary_ratio, em.truncate_sigmas);
            break;
        }
        case SeafloorClass::Sediment:
            detail::add_pulse(buf, base, em.pulse_sigma * em.sediment_broadening,
                              em.sediment_amplitude * gain, em.truncate_sigmas);
            break;
        case SeafloorClass::Nodules: {
            const int peaks = em.nodule_min_peaks +
                              static_cast<int>(rng.below(static_cast<std::uint64_t>(
                                  em.nodule_max_peaks - em.nodule_min_peaks + 1)));
            std::vector<double> offsets{0.0};
            for (int k = 1; k < peaks; ++k)
                offsets.push_back(offsets.back() + rng.uniform(em.nodule_min_gap, em.nodule_max_gap));
            const double span = offsets.back();
            const double shift = span >= 2.0 * em.nodule_spread
                                     ? -0.5 * span
                                     : rng.uniform(-em.nodule_spread, em.nodule_spread - span);
            for (auto& o : offsets) {
                o += base + shift;
                const double a = em.nodule_amplitude * gain * rng.uniform(0.6, 1.0);
                detail::add_pulse(buf, o, em.nodule_sigma, a, em.truncate_sigmas);
            }
            gt.seafloor_index = static_cast<std::uint32_t>(std::llround(offsets.front()));
            break;
        }
        }

        Ping p;
        p.index = i;
        p.timestamp = t;
        p.x = x;
        p.y = spec.track_y;
        p.altitude = spec.auv_altitude;
        p.samples.resize(spec.samples_per_ping);
        for (std::size_t k = 0; k < buf.size(); ++k) {
            double v = buf[k];
            if (noise_sigma > 0.0) v += noise_sigma * rng.normal();
            p.samples[k] = static_cast<float>(std::clamp(v, -1.0, 1.0));
        }
        survey.pings.push_back(std::move(p));
        truth.push_back(gt);
    }

    // cells whose centers lie on the track
    geo::CellTable cells;
    const auto iy = geo::cell_of(0.0, spec.track_y).iy;
    const auto cell_count = static_cast<std::int64_t>(std::ceil(spec.transect_length * geo::kCellsPerMeter - 1e-9));
    for (std::int64_t ix = 0; ix < cell_count; ++ix) {
        const auto [cx, cy] = geo::cell_center({ix, iy});
        cells.insert({{ix, iy}, patch_at(spec, cx).cls, geo::LabelSource::Synthetic});
    }

    // navigation fixes every nav_interval seconds plus one at the last ping
    std::vector<geo::NavSample> nav;
    const double t_end = n > 0 ? static_cast<double>(n - 1) / spec.ping_rate : 0.0;
    for (std::uint64_t k = 0;; ++k) {
        const double t = static_cast<double>(k) * spec.nav_interval;
        if (t > t_end) break;
        nav.push_back({t, spec.auv_velocity * t, spec.track_y, spec.auv_altitude});
    }
    if (nav.empty() || nav.back().timestamp < t_end)
        nav.push_back({t_end, spec.auv_velocity * t_end, spec.track_y, spec.auv_altitude});
    if (nav.size() < 2)
        nav.push_back({t_end + spec.nav_interval, spec.auv_velocity * (t_end + spec.nav_interval),
                       spec.track_y, spec.auv_altitude});

    return {std::move(survey), std::move(truth), std::move(cells), geo::NavTrack(std::move(nav))};
}

/// ping_index,class,thickness_m,seafloor_index
inline std::string truth_to_csv(std::span<const GroundTruthRecord> truth) {
    std::string s = "ping_index,class,thickness_m,seafloor_index\n";
    for (const auto& g : truth)
        s += std::to_string(g.ping_index) + "," + std::to_string(to_int(g.cls)) + "," +
             (g.thickness_m ? io::fmt(*g.thickness_m) : std::string()) + "," +
             std::to_string(g.seafloor_index) + "\n";
    return s;
}

inline std::vector<GroundTruthRecord> truth_from_csv(std::string_view text,
                                                     const std::string& source = "ground truth") {
    auto t = io::parse_csv(text, {"ping_index", "class", "thickness_m", "seafloor_index"}, source);
    std::vector<GroundTruthRecord> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        GroundTruthRecord g;
        g.ping_index = static_cast<std::uint64_t>(io::parse_int(r[0], "ping_index"));
        g.cls = parse_class(r[1]);
        if (!r[2].empty()) g.thickness_m = io::parse_double(r[2], "thickness_m");
        g.seafloor_index = static_cast<std::uint32_t>(io::parse_int(r[3], "seafloor_index"));
        out.push_back(g);
    }
    return out;
}

} // namespace crust_probe::synth

#endif // CRUST_PROBE_SYNTH_HPP
