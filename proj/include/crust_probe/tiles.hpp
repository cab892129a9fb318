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

#ifndef CRUST_PROBE_TILES_HPP
#define CRUST_PROBE_TILES_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "core.hpp"
#include "geo.hpp"
#include "io.hpp"
#include "survey.hpp"

namespace crust_probe::tiles {

inline constexpr int kTileRows = 30; // time samples
inline constexpr int kTileCols = 30; // pings
inline constexpr int kTileSize = kTileRows * kTileCols;
inline constexpr int kLeftContext = 14;  // columns left of the center ping
inline constexpr int kRightContext = 15; // columns right of the center ping

/// Vertical size of a tile in meters: rows / fs * c * factor.
inline double vertical_extent_m(double sample_rate, double sound_speed, double two_way_factor = 1.0) {
    return kTileRows / sample_rate * sound_speed * two_way_factor;
}

/// Horizontal size of a tile in meters at constant speed: cols / ping_rate * v.
inline double horizontal_extent_m(double ping_rate, double velocity) {
    return kTileCols / ping_rate * velocity;
}

// ---------------------------------------------------------------------------
// Echogram: rows are time samples, columns are pings.

struct ColumnInfo {
    std::uint64_t ping_index = 0;
    double timestamp = 0.0;
    double x = 0.0;
    double y = 0.0;
};

class Echogram {
public:
    Echogram() = default;

    explicit Echogram(const Survey& survey)
        : sample_rate_(survey.header.sample_rate), rows_(survey.header.samples_per_ping) {
        validate(survey);
        data_.reserve(survey.pings.size() * rows_);
        columns_.reserve(survey.pings.size());
        for (const auto& p : survey.pings) {
            data_.insert(data_.end(), p.samples.begin(), p.samples.end());
            columns_.push_back({p.index, p.timestamp, p.x, p.y});
        }
    }

    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return columns_.size(); }
    double sample_rate() const noexcept { return sample_rate_; }

    float at(std::size_t row, std::size_t col) const { return data_[col * rows_ + row]; }
    std::span<const float> column(std::size_t col) const {
        return {data_.data() + col * rows_, rows_};
    }
    const ColumnInfo& info(std::size_t col) const { return columns_[col]; }

private:
    double sample_rate_ = 0.0;
    std::size_t rows_ = 0;
    std::vector<float> data_; // column-major
    std::vector<ColumnInfo> columns_;
};

// ---------------------------------------------------------------------------
// Seafloor detection

struct DetectorConfig {
    double threshold_k = 5.0;    // multiples of the noise RMS
    double noise_fraction = 0.1; // leading part of the ping used for the RMS
    int local_window = 3;        // +/- samples for the local-maximum test
};

inline constexpr std::size_t kMinPingSamples = 64;

/// First sample above k * noise RMS that is also a local maximum within
/// +/- local_window; global argmax when the threshold is never crossed.
inline std::size_t detect_seafloor(std::span<const float> samples, const DetectorConfig& cfg = {}) {
    const std::size_t n = samples.size();
    if (n < kMinPingSamples)
        throw ValidationError("detect_seafloor: ping has " + std::to_string(n) +
                              " samples, need at least " + std::to_string(kMinPingSamples));
    const bool silent =
        std::all_of(samples.begin(), samples.end(), [](float v) { return v == 0.0f; });
    if (silent) throw NoSeafloorError("no seafloor: ping is all zeros");

    const auto noise_n = std::max<std::size_t>(1, static_cast<std::size_t>(cfg.noise_fraction * n));
    double ss = 0.0;
    for (std::size_t i = 0; i < noise_n; ++i) ss += static_cast<double>(samples[i]) * samples[i];
    const double threshold = cfg.threshold_k * std::sqrt(ss / static_cast<double>(noise_n));

    const auto w = static_cast<std::size_t>(std::max(0, cfg.local_window));
    for (std::size_t i = 0; i < n; ++i) {
        const double v = samples[i];
        if (!(v > threshold)) continue;
        bool is_max = true;
        const std::size_t lo = i >= w ? i - w : 0;
        const std::size_t hi = std::min(n - 1, i + w);
        for (std::size_t j = lo; j <= hi && is_max; ++j) {
            if (j < i) is_max = v > samples[j]; // plateaus resolve to their first sample
            else if (j > i) is_max = v >= samples[j];
        }
        if (is_max) return i;
    }
    return static_cast<std::size_t>(std::max_element(samples.begin(), samples.end()) -
                                    samples.begin());
}

// ---------------------------------------------------------------------------
// Tiles

struct AcousticTile {
    std::array<float, kTileSize> values{}; // row-major, min-max normalized
    std::uint64_t center_ping = 0;
    std::uint32_t seafloor_row = 0;
    double x = 0.0;
    double y = 0.0;
    std::optional<SeafloorClass> label;

    float at(int row, int col) const { return values[static_cast<std::size_t>(row * kTileCols + col)]; }
    bool operator==(const AcousticTile&) const = default;
};

struct TileConfig {
    int pre_offset = 5; // rows kept above the detected seafloor
    DetectorConfig detector;
};

/// Per-tile min-max normalization; a constant window becomes all 0.5.
inline void normalize_tile(std::array<float, kTileSize>& v) {
    const auto [lo_it, hi_it] = std::minmax_element(v.begin(), v.end());
    const double lo = *lo_it;
    const double hi = *hi_it;
    if (!(hi > lo)) {
        v.fill(0.5f);
        return;
    }
    const double range = hi - lo;
    for (auto& x : v) x = static_cast<float>((static_cast<double>(x) - lo) / range);
}

/// Cuts columns [center-14, center+15] and rows [seafloor-pre_offset, +30).
inline AcousticTile cut_tile(const Echogram& eg, std::size_t center_col, const TileConfig& cfg = {}) {
    if (center_col < static_cast<std::size_t>(kLeftContext) ||
        center_col + kRightContext >= eg.cols())
        throw EdgeTruncationError("tile at column " + std::to_string(center_col) + " needs " +
                                  std::to_string(kLeftContext) + " columns left and " +
                                  std::to_string(kRightContext) + " right of it; echogram has " +
                                  std::to_string(eg.cols()) + " columns");
    const std::size_t seafloor = detect_seafloor(eg.column(center_col), cfg.detector);
    const auto start = static_cast<std::int64_t>(seafloor) - cfg.pre_offset;
    if (start < 0 || static_cast<std::size_t>(start) + kTileRows > eg.rows())
        throw EdgeTruncationError("tile rows [" + std::to_string(start) + ", " +
                                  std::to_string(start + kTileRows) + ") outside ping of " +
                                  std::to_string(eg.rows()) + " samples");

    AcousticTile t;
    const std::size_t first_col = center_col - kLeftContext;
    for (int r = 0; r < kTileRows; ++r)
        for (int c = 0; c < kTileCols; ++c)
            t.values[static_cast<std::size_t>(r * kTileCols + c)] =
                eg.at(static_cast<std::size_t>(start + r), first_col + static_cast<std::size_t>(c));
    normalize_tile(t.values);
    const auto& info = eg.info(center_col);
    t.center_ping = info.ping_index;
    t.seafloor_row = static_cast<std::uint32_t>(seafloor);
    t.x = info.x;
    t.y = info.y;
    return t;
}

/// Nominal tile width: 30 pings at 20 Hz and 0.1 m/s.
inline constexpr double kMinTileSpacing = 0.15;

/// Greedy left-to-right choice of labeled center pings at least `spacing_m`
/// apart along track and never sharing a ping column. Pings whose tile cannot
/// be cut are skipped and reported through `skipped`.
inline std::vector<AcousticTile> sample_tiles(const Echogram& eg, const geo::CoLocation& colocation,
                                              double spacing_m, const TileConfig& cfg = {},
                                              std::vector<std::uint64_t>* skipped = nullptr) {
    if (!(spacing_m >= kMinTileSpacing - 1e-12))
        throw ValidationError("tile spacing " + io::fmt(spacing_m) + " m is below the tile width " +
                              io::fmt(kMinTileSpacing) + " m");

    std::unordered_map<std::uint64_t, SeafloorClass> labels;
    for (const auto& c : colocation)
        if (c.match) labels.emplace(c.ping_index, c.match->label);

    std::vector<AcousticTile> out;
    if (labels.empty() || eg.cols() == 0) return out;

    // cumulative along-track distance per column
    std::vector<double> along(eg.cols(), 0.0);
    for (std::size_t i = 1; i < eg.cols(); ++i)
        along[i] = along[i - 1] + std::hypot(eg.info(i).x - eg.info(i - 1).x,
                                             eg.info(i).y - eg.info(i - 1).y);

    std::optional<std::size_t> last;
    for (std::size_t col = 0; col < eg.cols(); ++col) {
        auto it = labels.find(eg.info(col).ping_index);
        if (it == labels.end()) continue;
        // 1e-9 m absorbs rounding in the running sum of ping-to-ping steps
        if (last && (along[col] - along[*last] < spacing_m - 1e-9 || col - *last < kTileCols)) continue;
        try {
            auto tile = cut_tile(eg, col, cfg);
            tile.label = it->second;
            out.push_back(std::move(tile));
            last = col;
        } catch (const EdgeTruncationError&) {
            if (skipped) skipped->push_back(eg.info(col).ping_index);
        } catch (const NoSeafloorError&) {
            if (skipped) skipped->push_back(eg.info(col).ping_index);
        }
    }
    return out;
}

// ---------------------------------------------------------------------------
// Tile file (CPTL, version 1), little-endian:
//   "CPTL" u32 version u64 tile_count u32 rows u32 cols
//   per tile: u64 center_ping u32 seafloor_row f64 x f64 y i8 label f32[rows*cols]

inline constexpr char kTileMagic[4] = {'C', 'P', 'T', 'L'};
inline constexpr std::uint32_t kTileVersion = 1;

inline std::string encode_tiles(std::span<const AcousticTile> tiles) {
    io::BinaryWriter w;
    w.bytes(std::string_view(kTileMagic, 4));
    w.u32(kTileVersion);
    w.u64(tiles.size());
    w.u32(kTileRows);
    w.u32(kTileCols);
    for (const auto& t : tiles) {
        w.u64(t.center_ping);
        w.u32(t.seafloor_row);
        w.f64(t.x);
        w.f64(t.y);
        w.i8(t.label ? static_cast<std::int8_t>(to_int(*t.label)) : std::int8_t{-1});
        for (float v : t.values) w.f32(v);
    }
    return w.data();
}

inline std::vector<AcousticTile> decode_tiles(std::string_view bytes) {
    io::BinaryReader r(bytes);
    if (r.bytes(4, "magic") != std::string_view(kTileMagic, 4))
        throw FormatError("bad tile-file magic, expected \"CPTL\"", 0);
    const auto version_at = static_cast<std::int64_t>(r.offset());
    const auto version = r.u32("version");
    if (version != kTileVersion)
        throw FormatError("unsupported tile-file version " + std::to_string(version), version_at);
    const auto count = r.u64("tile_count");
    const auto dims_at = static_cast<std::int64_t>(r.offset());
    const auto rows = r.u32("rows");
    const auto cols = r.u32("cols");
    if (rows != kTileRows || cols != kTileCols)
        throw FormatError("tile shape " + std::to_string(rows) + "x" + std::to_string(cols) +
                              ", expected 30x30",
                          dims_at);
    constexpr std::uint64_t record = 8 + 4 + 8 + 8 + 1 + 4ull * kTileSize;
    const std::uint64_t header = 4 + 4 + 8 + 4 + 4;
    if (count > (UINT64_MAX - header) / record || bytes.size() != header + count * record)
        throw FormatError("tile-file length mismatch: expected " +
                              std::to_string(header + count * record) + " bytes for " +
                              std::to_string(count) + " tiles, found " + std::to_string(bytes.size()),
                          static_cast<std::int64_t>(r.offset()));
    std::vector<AcousticTile> tiles(count);
    for (auto& t : tiles) {
        t.center_ping = r.u64("center_ping");
        t.seafloor_row = r.u32("seafloor_row");
        t.x = r.f64("x");
        t.y = r.f64("y");
        const auto label_at = static_cast<std::int64_t>(r.offset());
        const auto label = r.i8("label");
        if (label < -1 || label >= kNumClasses)
            throw FormatError("invalid tile label " + std::to_string(label), label_at);
        if (label >= 0) t.label = static_cast<SeafloorClass>(label);
        for (auto& v : t.values) v = r.f32("tile values");
    }
    return tiles;
}

inline void write_tiles(const std::filesystem::path& path, std::span<const AcousticTile> tiles) {
    io::write_file(path, encode_tiles(tiles));
}

inline std::vector<AcousticTile> read_tiles(const std::filesystem::path& path) {
    return decode_tiles(io::read_file(path));
}

// ---------------------------------------------------------------------------
// 8-bit PGM rendering of an echogram window, optionally topped by one gray
// band per column encoding a class.

inline std::uint8_t class_gray(std::optional<SeafloorClass> c) {
    if (!c) return 0;
    switch (*c) {
    case SeafloorClass::MnCrust: return 255;
    case SeafloorClass::Sediment: return 170;
    case SeafloorClass::Nodules: return 85;
    }
    return 0;
}

inline std::string render_pgm(const Echogram& eg, std::size_t row_begin, std::size_t row_count,
                              std::span<const std::optional<SeafloorClass>> column_classes = {},
                              std::size_t band_height = 8) {
    row_begin = std::min(row_begin, eg.rows());
    row_count = std::min(row_count, eg.rows() - row_begin);
    const bool bands = !column_classes.empty();
    if (bands && column_classes.size() != eg.cols())
        throw ValidationError("render_pgm: " + std::to_string(column_classes.size()) +
                              " class entries for " + std::to_string(eg.cols()) + " columns");
    const std::size_t w = eg.cols();
    const std::size_t h = row_count + (bands ? band_height : 0);

    float lo = 0.0f, hi = 0.0f;
    bool first = true;
    for (std::size_t c = 0; c < w; ++c)
        for (std::size_t r = row_begin; r < row_begin + row_count; ++r) {
            const float v = eg.at(r, c);
            if (first || v < lo) lo = v;
            if (first || v > hi) hi = v;
            first = false;
        }
    const double range = hi > lo ? static_cast<double>(hi) - lo : 1.0;

    std::string out = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
    out.reserve(out.size() + w * h);
    if (bands)
        for (std::size_t r = 0; r < band_height; ++r)
            for (std::size_t c = 0; c < w; ++c) out.push_back(static_cast<char>(class_gray(column_classes[c])));
    for (std::size_t r = row_begin; r < row_begin + row_count; ++r)
        for (std::size_t c = 0; c < w; ++c) {
            const double g = std::round((eg.at(r, c) - lo) / range * 255.0);
            out.push_back(static_cast<char>(static_cast<std::uint8_t>(std::clamp(g, 0.0, 255.0))));
        }
    return out;
}

} // namespace crust_probe::tiles

#endif // CRUST_PROBE_TILES_HPP
