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

#ifndef CRUST_PROBE_GEO_HPP
#define CRUST_PROBE_GEO_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "core.hpp"
#include "io.hpp"
#include "survey.hpp"

namespace crust_probe::geo {

// ---------------------------------------------------------------------------
// Navigation track

struct NavSample {
    double timestamp = 0.0;
    double x = 0.0;
    double y = 0.0;
    double altitude = 0.0;

    bool operator==(const NavSample&) const = default;
};

struct Position {
    double x = 0.0;
    double y = 0.0;
    double altitude = 0.0;

    bool operator==(const Position&) const = default;
};

/// Fused navigation solution; timestamps strictly increasing, at least two samples.
class NavTrack {
public:
    explicit NavTrack(std::vector<NavSample> samples) : samples_(std::move(samples)) {
        if (samples_.size() < 2)
            throw ValidationError("navigation track needs at least 2 samples, got " +
                                  std::to_string(samples_.size()));
        for (std::size_t i = 0; i < samples_.size(); ++i) {
            const auto& s = samples_[i];
            if (!std::isfinite(s.timestamp) || !std::isfinite(s.x) || !std::isfinite(s.y) ||
                !std::isfinite(s.altitude))
                throw ValidationError("navigation sample " + std::to_string(i) + " is not finite");
            if (i > 0 && !(s.timestamp > samples_[i - 1].timestamp))
                throw ValidationError("navigation timestamps not strictly increasing at sample " +
                                      std::to_string(i));
        }
    }

    const std::vector<NavSample>& samples() const noexcept { return samples_; }
    double start_time() const noexcept { return samples_.front().timestamp; }
    double end_time() const noexcept { return samples_.back().timestamp; }

private:
    std::vector<NavSample> samples_;
};

/// Piecewise-linear interpolation. Knot times return the knot exactly;
/// anything outside [start, end] is an ExtrapolationError.
inline Position position_at(const NavTrack& track, double t) {
    const auto& s = track.samples();
    if (!(t >= track.start_time() && t <= track.end_time()))
        throw ExtrapolationError("time " + io::fmt(t) + " s outside navigation track [" +
                                 io::fmt(track.start_time()) + ", " + io::fmt(track.end_time()) +
                                 "]");
    auto hi = std::upper_bound(s.begin(), s.end(), t,
                               [](double v, const NavSample& n) { return v < n.timestamp; });
    // hi is the first knot strictly after t; t >= start so hi != begin
    const auto& a = *(hi - 1);
    if (a.timestamp == t || hi == s.end()) return {a.x, a.y, a.altitude};
    const auto& b = *hi;
    const double f = (t - a.timestamp) / (b.timestamp - a.timestamp);
    return {a.x + f * (b.x - a.x), a.y + f * (b.y - a.y), a.altitude + f * (b.altitude - a.altitude)};
}

// ---------------------------------------------------------------------------
// 10 cm grid

inline constexpr double kCellSize = 0.10; // meters
inline constexpr double kCellsPerMeter = 10.0;

struct CellIndex {
    std::int64_t ix = 0;
    std::int64_t iy = 0;

    auto operator<=>(const CellIndex&) const = default;
};

namespace detail {
// floor(v / 0.1) with values within 1e-9 cells of an edge snapped onto it, so
// that decimal coordinates such as 0.3 land in the higher cell.
inline std::int64_t quantize(double v) {
    const double r = v * kCellsPerMeter;
    const double n = std::nearbyint(r);
    if (std::abs(r - n) <= 1e-9 * std::max(1.0, std::abs(r))) return static_cast<std::int64_t>(n);
    return static_cast<std::int64_t>(std::floor(r));
}
} // namespace detail

/// Half-open cells: a point on an edge belongs to the higher cell.
inline CellIndex cell_of(double x, double y) {
    if (!std::isfinite(x) || !std::isfinite(y))
        throw ValidationError("cell_of: non-finite coordinate (" + io::fmt(x) + ", " + io::fmt(y) +
                              ")");
    return {detail::quantize(x), detail::quantize(y)};
}

inline std::pair<double, double> cell_center(CellIndex c) {
    return {(static_cast<double>(c.ix) + 0.5) * kCellSize,
            (static_cast<double>(c.iy) + 0.5) * kCellSize};
}

enum class LabelSource : std::uint8_t { VisualClassifier, Synthetic };

inline std::string_view source_name(LabelSource s) {
    return s == LabelSource::VisualClassifier ? "visual-classifier" : "synthetic";
}

inline LabelSource parse_source(std::string_view s) {
    if (s == "visual-classifier") return LabelSource::VisualClassifier;
    if (s == "synthetic") return LabelSource::Synthetic;
    throw FormatError("unknown label source '" + std::string(s) + "'");
}

struct GridCell {
    CellIndex index;
    SeafloorClass label = SeafloorClass::MnCrust;
    LabelSource source = LabelSource::Synthetic;

    bool operator==(const GridCell&) const = default;
};

/// Labeled cells keyed by (ix, iy); duplicate keys are rejected.
class CellTable {
public:
    CellTable() = default;
    explicit CellTable(const std::vector<GridCell>& cells) {
        for (const auto& c : cells) insert(c);
    }

    void insert(const GridCell& c) {
        auto [it, fresh] = cells_.emplace(c.index, c);
        if (!fresh)
            throw ValidationError("duplicate grid cell (" + std::to_string(c.index.ix) + ", " +
                                  std::to_string(c.index.iy) + ")");
    }

    const GridCell* find(CellIndex idx) const {
        auto it = cells_.find(idx);
        return it == cells_.end() ? nullptr : &it->second;
    }

    std::size_t size() const noexcept { return cells_.size(); }

    /// Cells in (ix, iy) order.
    std::vector<GridCell> cells() const {
        std::vector<GridCell> out;
        out.reserve(cells_.size());
        for (const auto& [k, v] : cells_) out.push_back(v);
        return out;
    }

private:
    std::map<CellIndex, GridCell> cells_;
};

// ---------------------------------------------------------------------------
// Co-location

struct CellMatch {
    CellIndex cell;
    SeafloorClass label = SeafloorClass::MnCrust;

    bool operator==(const CellMatch&) const = default;
};

struct CoLocatedPing {
    std::uint64_t ping_index = 0;
    std::optional<CellMatch> match;

    bool operator==(const CoLocatedPing&) const = default;
};

using CoLocation = std::vector<CoLocatedPing>;

/// Positions every ping on the track and joins it against the labeled cells.
/// Pings over unlabeled cells get no match.
inline CoLocation co_locate(std::span<const Ping> pings, const NavTrack& track,
                            const CellTable& cells) {
    CoLocation out;
    out.reserve(pings.size());
    for (const auto& p : pings) {
        Position pos;
        try {
            pos = position_at(track, p.timestamp);
        } catch (const ExtrapolationError& e) {
            throw ExtrapolationError("ping " + std::to_string(p.index) + ": " + e.what());
        }
        const auto idx = cell_of(pos.x, pos.y);
        CoLocatedPing c{p.index, std::nullopt};
        if (const auto* cell = cells.find(idx)) c.match = CellMatch{idx, cell->label};
        out.push_back(c);
    }
    return out;
}

inline std::size_t labeled_count(const CoLocation& c) {
    return static_cast<std::size_t>(
        std::count_if(c.begin(), c.end(), [](const CoLocatedPing& p) { return p.match.has_value(); }));
}

// ---------------------------------------------------------------------------
// CSV formats
//   nav track:  timestamp,x,y,altitude
//   cell table: ix,iy,label,source
//   colocation: ping_index,ix,iy,label   (empty ix,iy,label for no match)

inline std::string nav_to_csv(const NavTrack& track) {
    std::string s = "timestamp,x,y,altitude\n";
    for (const auto& n : track.samples())
        s += io::fmt(n.timestamp) + "," + io::fmt(n.x) + "," + io::fmt(n.y) + "," +
             io::fmt(n.altitude) + "\n";
    return s;
}

inline NavTrack nav_from_csv(std::string_view text, const std::string& source = "nav track") {
    auto t = io::parse_csv(text, {"timestamp", "x", "y", "altitude"}, source);
    std::vector<NavSample> v;
    v.reserve(t.rows.size());
    for (const auto& r : t.rows)
        v.push_back({io::parse_double(r[0], "timestamp"), io::parse_double(r[1], "x"),
                     io::parse_double(r[2], "y"), io::parse_double(r[3], "altitude")});
    return NavTrack(std::move(v));
}

inline std::string cells_to_csv(const CellTable& table) {
    std::string s = "ix,iy,label,source\n";
    for (const auto& c : table.cells())
        s += std::to_string(c.index.ix) + "," + std::to_string(c.index.iy) + "," +
             std::to_string(to_int(c.label)) + "," + std::string(source_name(c.source)) + "\n";
    return s;
}

inline CellTable cells_from_csv(std::string_view text, const std::string& source = "cell table") {
    auto t = io::parse_csv(text, {"ix", "iy", "label", "source"}, source);
    CellTable table;
    for (const auto& r : t.rows)
        table.insert({{io::parse_int(r[0], "ix"), io::parse_int(r[1], "iy")},
                      parse_class(r[2]),
                      parse_source(r[3])});
    return table;
}

inline std::string colocation_to_csv(const CoLocation& c) {
    std::string s = "ping_index,ix,iy,label\n";
    for (const auto& p : c) {
        s += std::to_string(p.ping_index);
        if (p.match)
            s += "," + std::to_string(p.match->cell.ix) + "," + std::to_string(p.match->cell.iy) +
                 "," + std::to_string(to_int(p.match->label)) + "\n";
        else
            s += ",,,\n";
    }
    return s;
}

inline CoLocation colocation_from_csv(std::string_view text,
                                      const std::string& source = "colocation") {
    auto t = io::parse_csv(text, {"ping_index", "ix", "iy", "label"}, source);
    CoLocation out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        CoLocatedPing p{static_cast<std::uint64_t>(io::parse_int(r[0], "ping_index")), std::nullopt};
        if (!r[1].empty() || !r[2].empty() || !r[3].empty())
            p.match = CellMatch{{io::parse_int(r[1], "ix"), io::parse_int(r[2], "iy")},
                                parse_class(r[3])};
        out.push_back(p);
    }
    return out;
}

} // namespace crust_probe::geo

#endif // CRUST_PROBE_GEO_HPP
