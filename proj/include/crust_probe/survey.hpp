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

#ifndef CRUST_PROBE_SURVEY_HPP
#define CRUST_PROBE_SURVEY_HPP

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "core.hpp"
#include "io.hpp"

namespace crust_probe {

/// One sonar return.
struct Ping {
    std::uint64_t index = 0;
    double timestamp = 0.0; // seconds
    double x = 0.0;         // meters
    double y = 0.0;
    double altitude = 0.0;  // meters
    std::vector<float> samples;

    bool operator==(const Ping&) const = default;
};

struct SurveyHeader {
    double sample_rate = 2.0e6; // Hz
    double ping_rate = 20.0;    // Hz
    std::uint32_t samples_per_ping = 4096;

    bool operator==(const SurveyHeader&) const = default;
};

struct Survey {
    SurveyHeader header;
    std::vector<Ping> pings;

    bool operator==(const Survey&) const = default;
};

/// Checks sample counts and timestamp ordering.
inline void validate(const Survey& s) {
    for (std::size_t i = 0; i < s.pings.size(); ++i) {
        const auto& p = s.pings[i];
        if (p.samples.size() != s.header.samples_per_ping)
            throw ValidationError("ping " + std::to_string(p.index) + " has " +
                                  std::to_string(p.samples.size()) + " samples, header says " +
                                  std::to_string(s.header.samples_per_ping));
        if (i > 0 && !(p.timestamp > s.pings[i - 1].timestamp))
            throw ValidationError("ping timestamps not strictly increasing at ping " +
                                  std::to_string(p.index));
    }
}

// ---------------------------------------------------------------------------
// Survey file (CPSV, version 1), little-endian:
//   "CPSV" u32 version f64 sample_rate f64 ping_rate u32 samples_per_ping u64 ping_count
//   per ping: u64 index f64 timestamp f64 x f64 y f64 altitude f32[samples_per_ping]

inline constexpr char kSurveyMagic[4] = {'C', 'P', 'S', 'V'};
inline constexpr std::uint32_t kSurveyVersion = 1;
inline constexpr std::size_t kSurveyHeaderBytes = 4 + 4 + 8 + 8 + 4 + 8;

inline std::string encode_survey(const Survey& s) {
    validate(s);
    io::BinaryWriter w;
    w.bytes(std::string_view(kSurveyMagic, 4));
    w.u32(kSurveyVersion);
    w.f64(s.header.sample_rate);
    w.f64(s.header.ping_rate);
    w.u32(s.header.samples_per_ping);
    w.u64(s.pings.size());
    for (const auto& p : s.pings) {
        w.u64(p.index);
        w.f64(p.timestamp);
        w.f64(p.x);
        w.f64(p.y);
        w.f64(p.altitude);
        for (float v : p.samples) w.f32(v);
    }
    return w.data();
}

inline Survey decode_survey(std::string_view bytes) {
    io::BinaryReader r(bytes);
    auto magic = r.bytes(4, "magic");
    if (magic != std::string_view(kSurveyMagic, 4))
        throw FormatError("bad survey magic, expected \"CPSV\"", 0);
    const auto version_at = static_cast<std::int64_t>(r.offset());
    const auto version = r.u32("version");
    if (version != kSurveyVersion)
        throw FormatError("unsupported survey version " + std::to_string(version), version_at);
    Survey s;
    s.header.sample_rate = r.f64("sample_rate");
    s.header.ping_rate = r.f64("ping_rate");
    s.header.samples_per_ping = r.u32("samples_per_ping");
    const auto count_at = r.offset();
    const auto count = r.u64("ping_count");

    const std::uint64_t record = 8 * 5 + 4ull * s.header.samples_per_ping;
    const std::uint64_t expected = kSurveyHeaderBytes + count * record;
    if (count != 0 && record != 0 && count > (UINT64_MAX - kSurveyHeaderBytes) / record)
        throw FormatError("implausible ping_count " + std::to_string(count),
                          static_cast<std::int64_t>(count_at));
    if (bytes.size() != expected)
        throw FormatError("survey length mismatch: expected " + std::to_string(expected) +
                              " bytes for " + std::to_string(count) + " pings, found " +
                              std::to_string(bytes.size()),
                          static_cast<std::int64_t>(std::min<std::uint64_t>(bytes.size(), expected)));

    s.pings.resize(count);
    for (auto& p : s.pings) {
        p.index = r.u64("ping index");
        p.timestamp = r.f64("timestamp");
        p.x = r.f64("x");
        p.y = r.f64("y");
        p.altitude = r.f64("altitude");
        p.samples.resize(s.header.samples_per_ping);
        for (auto& v : p.samples) v = r.f32("sample");
    }
    return s;
}

inline void write_survey(const std::filesystem::path& path, const Survey& s) {
    io::write_file(path, encode_survey(s));
}

inline Survey read_survey(const std::filesystem::path& path) {
    return decode_survey(io::read_file(path));
}

} // namespace crust_probe

#endif // CRUST_PROBE_SURVEY_HPP
