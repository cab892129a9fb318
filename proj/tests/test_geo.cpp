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

#include <gtest/gtest.h>

#include <cmath>

#include "support.hpp"

using namespace crust_probe;

namespace {

geo::NavTrack random_track(std::uint64_t seed, int n) {
    Rng r(seed);
    std::vector<geo::NavSample> v;
    double t = r.uniform(0, 3);
    for (int i = 0; i < n; ++i) {
        v.push_back({t, r.uniform(-20, 20), r.uniform(-20, 20), r.uniform(1, 3)});
        t += r.uniform(0.05, 2.0);
    }
    return geo::NavTrack(v);
}

// Segment scan written independently of the library's binary search.
geo::Position scan_position(const std::vector<geo::NavSample>& s, double t) {
    for (std::size_t i = 0; i + 1 < s.size(); ++i) {
        const auto& a = s[i];
        const auto& b = s[i + 1];
        if (t < a.timestamp || t > b.timestamp) continue;
        const double span = b.timestamp - a.timestamp;
        const double wa = (b.timestamp - t) / span, wb = (t - a.timestamp) / span;
        return {wa * a.x + wb * b.x, wa * a.y + wb * b.y, wa * a.altitude + wb * b.altitude};
    }
    throw std::logic_error("outside");
}

std::int64_t floor_div(std::int64_t a, std::int64_t b) {
    std::int64_t q = a / b;
    if ((a % b != 0) && ((a < 0) != (b < 0))) --q;
    return q;
}

} // namespace

TEST(NavTrack, InterpolationMatchesSegmentScan) {
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const auto track = random_track(seed, 40);
        Rng r(seed + 100);
        for (int k = 0; k < 2000; ++k) {
            const double t = r.uniform(track.start_time(), track.end_time());
            const auto got = geo::position_at(track, t);
            const auto want = scan_position(track.samples(), t);
            EXPECT_NEAR(got.x, want.x, 1e-9);
            EXPECT_NEAR(got.y, want.y, 1e-9);
            EXPECT_NEAR(got.altitude, want.altitude, 1e-9);
        }
    }
}

TEST(NavTrack, KnotsAreExact) {
    const auto track = random_track(9, 20);
    for (const auto& s : track.samples()) {
        const auto p = geo::position_at(track, s.timestamp);
        EXPECT_EQ(p.x, s.x);
        EXPECT_EQ(p.y, s.y);
        EXPECT_EQ(p.altitude, s.altitude);
    }
}

TEST(NavTrack, OutsideTrackIsExtrapolationError) {
    const auto track = random_track(10, 5);
    EXPECT_THROW(geo::position_at(track, track.start_time() - 1e-9), ExtrapolationError);
    EXPECT_THROW(geo::position_at(track, track.end_time() + 1e-9), ExtrapolationError);
    EXPECT_THROW(geo::position_at(track, std::nan("")), ExtrapolationError);
}

TEST(NavTrack, ConstructionValidates) {
    EXPECT_THROW(geo::NavTrack({{0, 0, 0, 1}}), ValidationError);
    EXPECT_THROW(geo::NavTrack({{0, 0, 0, 1}, {0, 1, 0, 1}}), ValidationError);
    EXPECT_THROW(geo::NavTrack({{1, 0, 0, 1}, {0, 1, 0, 1}}), ValidationError);
    EXPECT_THROW(geo::NavTrack({{0, 0, 0, 1}, {1, std::nan(""), 0, 1}}), ValidationError);
}

TEST(Grid, CellOfMatchesIntegerArithmetic) {
    // Coordinates on a 1 mm lattice; the oracle works in integer millimeters.
    Rng r(21);
    for (int k = 0; k < 50000; ++k) {
        const auto mx = static_cast<std::int64_t>(r.below(200001)) - 100000;
        const auto my = static_cast<std::int64_t>(r.below(200001)) - 100000;
        const auto c = geo::cell_of(static_cast<double>(mx) / 1000.0, static_cast<double>(my) / 1000.0);
        EXPECT_EQ(c.ix, floor_div(mx, 100)) << mx;
        EXPECT_EQ(c.iy, floor_div(my, 100)) << my;
    }
}

TEST(Grid, EdgesBelongToHigherCell) {
    for (int k = -50; k <= 50; ++k) {
        const double v = k / 10.0;
        EXPECT_EQ(geo::cell_of(v, 0.0).ix, k);
        EXPECT_EQ(geo::cell_of(std::nextafter(v, -1e9) - 1e-6, 0.0).ix, k - 1);
    }
    EXPECT_EQ(geo::cell_of(0.3, 0.7).ix, 3);
    EXPECT_EQ(geo::cell_of(0.3, 0.7).iy, 7);
}

TEST(Grid, NonFiniteRejected) {
    EXPECT_THROW(geo::cell_of(std::nan(""), 0.0), ValidationError);
    EXPECT_THROW(geo::cell_of(0.0, INFINITY), ValidationError);
}

TEST(Grid, CellCenterFallsInsideCell) {
    for (std::int64_t ix = -20; ix <= 20; ++ix) {
        const auto [x, y] = geo::cell_center({ix, -ix});
        EXPECT_EQ(geo::cell_of(x, y), (geo::CellIndex{ix, -ix}));
    }
}

TEST(CellTable, DuplicatesRejected) {
    geo::CellTable t;
    t.insert({{1, 2}, SeafloorClass::Sediment, geo::LabelSource::Synthetic});
    EXPECT_THROW(t.insert({{1, 2}, SeafloorClass::Nodules, geo::LabelSource::Synthetic}), ValidationError);
    ASSERT_NE(t.find({1, 2}), nullptr);
    EXPECT_EQ(t.find({1, 2})->label, SeafloorClass::Sediment);
    EXPECT_EQ(t.find({2, 1}), nullptr);
}

TEST(CoLocation, MatchesExhaustiveJoin) {
    const auto track = random_track(31, 30);
    Rng r(32);
    geo::CellTable cells;
    std::vector<geo::GridCell> all;
    for (int i = 0; i < 400; ++i) {
        geo::GridCell c{{static_cast<std::int64_t>(r.below(400)) - 200, static_cast<std::int64_t>(r.below(400)) - 200},
                        class_from_int(static_cast<long long>(r.below(3))),
                        geo::LabelSource::VisualClassifier};
        if (cells.find(c.index)) continue;
        cells.insert(c);
        all.push_back(c);
    }
    std::vector<Ping> pings;
    for (int i = 0; i < 3000; ++i) {
        Ping p;
        p.index = static_cast<std::uint64_t>(i);
        p.timestamp = track.start_time() + (track.end_time() - track.start_time()) * i / 2999.0;
        pings.push_back(p);
    }
    const auto col = geo::co_locate(pings, track, cells);
    ASSERT_EQ(col.size(), pings.size());
    std::size_t matched = 0;
    for (std::size_t i = 0; i < pings.size(); ++i) {
        const auto pos = scan_position(track.samples(), pings[i].timestamp);
        const geo::GridCell* hit = nullptr;
        for (const auto& c : all) {
            const double x0 = c.index.ix * 0.1, y0 = c.index.iy * 0.1;
            if (pos.x >= x0 && pos.x < x0 + 0.1 && pos.y >= y0 && pos.y < y0 + 0.1) hit = &c;
        }
        EXPECT_EQ(col[i].ping_index, pings[i].index);
        EXPECT_EQ(col[i].match.has_value(), hit != nullptr) << i;
        if (hit && col[i].match) {
            EXPECT_EQ(col[i].match->cell, hit->index);
            EXPECT_EQ(col[i].match->label, hit->label);
            ++matched;
        }
    }
    EXPECT_EQ(geo::labeled_count(col), matched);
}

TEST(CoLocation, PingOutsideTrackNamesPing) {
    const auto track = random_track(33, 4);
    Ping p;
    p.index = 77;
    p.timestamp = track.end_time() + 1.0;
    std::vector<Ping> pings{p};
    try {
        geo::co_locate(pings, track, geo::CellTable{});
        FAIL();
    } catch (const ExtrapolationError& e) {
        EXPECT_NE(std::string(e.what()).find("ping 77"), std::string::npos);
    }
}

TEST(GeoCsv, RoundTrips) {
    const auto track = random_track(40, 12);
    const auto nav_back = geo::nav_from_csv(geo::nav_to_csv(track));
    EXPECT_EQ(nav_back.samples(), track.samples());

    geo::CellTable cells({{{0, 0}, SeafloorClass::MnCrust, geo::LabelSource::Synthetic},
                          {{-3, 5}, SeafloorClass::Nodules, geo::LabelSource::VisualClassifier}});
    const auto cells_back = geo::cells_from_csv(geo::cells_to_csv(cells));
    EXPECT_EQ(cells_back.cells(), cells.cells());

    geo::CoLocation col = {{0, std::nullopt}, {1, geo::CellMatch{{-3, 5}, SeafloorClass::Nodules}}};
    EXPECT_EQ(geo::colocation_from_csv(geo::colocation_to_csv(col)), col);
}

TEST(GeoCsv, CorruptRowsRejected) {
    EXPECT_THROW(geo::nav_from_csv("timestamp,x,y,altitude\n0,1,2\n"), FormatError);
    EXPECT_THROW(geo::cells_from_csv("ix,iy,label,source\n1,2,Gravel,synthetic\n"), ValidationError);
    EXPECT_THROW(geo::cells_from_csv("ix,iy,label,source\n1,2,0,guess\n"), Error);
}
