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

#ifndef CRUST_PROBE_THICKNESS_HPP
#define CRUST_PROBE_THICKNESS_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "io.hpp"
#include "survey.hpp"
#include "tiles.hpp"

namespace crust_probe::thickness {

/// Sound speed in Mn-crust. `two_way_factor` scales delay x speed into
/// thickness; 1.0 applies delay x speed as is, 0.5 halves it for a two-way path.
struct SoundSpeed {
    double value = 2932.0;      // m/s
    double uncertainty = 179.0; // m/s
    double two_way_factor = 1.0;

    void validate() const {
        if (!(value > 0.0) || !std::isfinite(value))
            throw ValidationError("sound speed must be positive, got " + io::fmt(value));
        if (!(uncertainty >= 0.0) || !std::isfinite(uncertainty))
            throw ValidationError("sound speed uncertainty must be >= 0, got " + io::fmt(uncertainty));
        if (!(two_way_factor > 0.0) || !std::isfinite(two_way_factor))
            throw ValidationError("two_way_factor must be positive, got " + io::fmt(two_way_factor));
    }
};

/// Layer thickness for a delay in seconds.
inline double delay_to_thickness(double delay_s, const SoundSpeed& c) {
    return delay_s * c.value * c.two_way_factor;
}

/// Inverse of delay_to_thickness.
inline double thickness_to_delay(double thickness_m, const SoundSpeed& c) {
    return thickness_m / (c.value * c.two_way_factor);
}

/// Thickness resolution of one sample.
inline double sample_quantum(double sample_rate, const SoundSpeed& c) {
    return delay_to_thickness(1.0 / sample_rate, c);
}

struct ThicknessEstimate {
    double thickness_m = 0.0;
    double uncertainty_m = 0.0;
    std::size_t primary_idx = 0;
    std::size_t secondary_idx = 0;
    double confidence = 0.0; // secondary prominence / primary height, clipped to [0, 1]
};

struct EstimatorConfig {
    double min_prominence = 0.3;
    double max_thickness_m = 0.2; // bounds the secondary-echo search window
    tiles::DetectorConfig detector;
};

/// Height of the peak at `p` above the higher of its two bases, looking only
/// inside [lo, hi].
inline double peak_prominence(std::span<const float> x, std::size_t p, std::size_t lo,
                              std::size_t hi) {
    const float h = x[p];
    float left_min = h;
    for (std::size_t i = p; i-- > lo;) {
        if (x[i] > h) break;
        left_min = std::min(left_min, x[i]);
    }
    float right_min = h;
    for (std::size_t i = p + 1; i <= hi; ++i) {
        if (x[i] > h) break;
        right_min = std::min(right_min, x[i]);
    }
    return static_cast<double>(h) - static_cast<double>(std::max(left_min, right_min));
}

/// Primary echo from the seafloor detector, secondary echo as the most
/// prominent later peak. Returns nullopt when no later peak reaches
/// `min_prominence` times the primary height.
inline std::optional<ThicknessEstimate> estimate_thickness(std::span<const float> samples,
                                                           double sample_rate,
                                                           const SoundSpeed& sound,
                                                           const EstimatorConfig& cfg = {}) {
    sound.validate();
    if (!(cfg.min_prominence > 0.0 && cfg.min_prominence < 1.0))
        throw ValidationError("min_prominence must lie in (0, 1), got " + io::fmt(cfg.min_prominence));
    if (!(sample_rate > 0.0)) throw ValidationError("sample_rate must be positive");

    const std::size_t primary = tiles::detect_seafloor(samples, cfg.detector);
    const double primary_height = samples[primary];
    if (!(primary_height > 0.0)) return std::nullopt;

    const auto max_delay = static_cast<std::size_t>(
        std::ceil(thickness_to_delay(cfg.max_thickness_m, sound) * sample_rate));
    const std::size_t hi = std::min(samples.size() - 1, primary + std::max<std::size_t>(1, max_delay));

    std::optional<std::size_t> best;
    double best_ratio = 0.0;
    for (std::size_t i = primary + 1; i < hi; ++i) {
        if (!(samples[i] > samples[i - 1] && samples[i] >= samples[i + 1])) continue;
        const double ratio = peak_prominence(samples, i, primary, hi) / primary_height;
        if (ratio >= cfg.min_prominence && ratio > best_ratio) {
            best = i;
            best_ratio = ratio;
        }
    }
    if (!best) return std::nullopt;

    ThicknessEstimate e;
    e.primary_idx = primary;
    e.secondary_idx = *best;
    e.thickness_m = delay_to_thickness(static_cast<double>(*best - primary) / sample_rate, sound);
    e.uncertainty_m = e.thickness_m * (sound.uncertainty / sound.value);
    e.confidence = std::clamp(best_ratio, 0.0, 1.0);
    return e;
}

/// Rejects a primary/secondary pair that does not describe a layer.
inline std::optional<ThicknessEstimate> thickness_from_indices(std::size_t primary_idx,
                                                               std::size_t secondary_idx,
                                                               double sample_rate,
                                                               const SoundSpeed& sound) {
    sound.validate();
    if (secondary_idx <= primary_idx) return std::nullopt;
    ThicknessEstimate e;
    e.primary_idx = primary_idx;
    e.secondary_idx = secondary_idx;
    e.thickness_m = delay_to_thickness(static_cast<double>(secondary_idx - primary_idx) / sample_rate, sound);
    e.uncertainty_m = e.thickness_m * (sound.uncertainty / sound.value);
    e.confidence = 1.0;
    return e;
}

struct ThicknessRow {
    std::uint64_t ping_index = 0;
    double x = 0.0;
    double y = 0.0;
    std::optional<ThicknessEstimate> estimate;
};

/// Per-ping estimates for a whole survey. Silent pings yield no estimate.
inline std::vector<ThicknessRow> estimate_survey(const Survey& survey, const SoundSpeed& sound,
                                                 const EstimatorConfig& cfg = {}) {
    std::vector<ThicknessRow> rows;
    rows.reserve(survey.pings.size());
    for (const auto& p : survey.pings) {
        ThicknessRow r{p.index, p.x, p.y, std::nullopt};
        try {
            r.estimate = estimate_thickness(p.samples, survey.header.sample_rate, sound, cfg);
        } catch (const NoSeafloorError&) {
        }
        rows.push_back(r);
    }
    return rows;
}

/// ping_index,x,y,thickness_m,uncertainty_m,confidence (empty fields for none)
inline std::string thickness_to_csv(std::span<const ThicknessRow> rows) {
    std::string s = "ping_index,x,y,thickness_m,uncertainty_m,confidence\n";
    for (const auto& r : rows) {
        s += std::to_string(r.ping_index) + "," + io::fmt(r.x) + "," + io::fmt(r.y) + ",";
        if (r.estimate)
            s += io::fmt(r.estimate->thickness_m) + "," + io::fmt(r.estimate->uncertainty_m) + "," +
                 io::fmt(r.estimate->confidence);
        else
            s += ",,";
        s += "\n";
    }
    return s;
}

} // namespace crust_probe::thickness

#endif // CRUST_PROBE_THICKNESS_HPP
