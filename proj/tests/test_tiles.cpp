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

#include <algorithm>
#include <cmath>
#include <sstream>

#include "support.hpp"

using namespace crust_probe;

TEST(TileGeometry, PhysicalExtents) {
    // 30 samples at 2 MHz through 2932 m/s, and 30 pings at 20 Hz moving 0.1 m/s
    EXPECT_NEAR(tiles::vertical_extent_m(2.0e6, 2932.0), 0.04398, 1e-9);
    EXPECT_NEAR(tiles::horizontal_extent_m(20.0, 0.1), 0.150, 1e-9);
    EXPECT_NEAR(tiles::vertical_extent_m(2.0e6, 2932.0, 0.5), 0.02199, 1e-9);
}

TEST(Detector, SingleImpulse) {
    std::vector<float> p(4096, 0.0f);
    p[1000] = 1.0f;
    EXPECT_EQ(tiles::detect_seafloor(p), 1000u);
}

TEST(Detector, AllZeroAndShortPings) {
    std::vector<float> zero(4096, 0.0f);
    EXPECT_THROW(tiles::detect_seafloor(zero), NoSeafloorError);
    std::vector<float> shortp(63, 1.0f);
    EXPECT_THROW(tiles::detect_seafloor(shortp), ValidationError);
}

TEST(Detector, FallsBackToArgmaxWhenThresholdNeverCrossed) {
    // Flat noise-like ping: first 10% has the same energy as the rest.
    std::vector<float> p(1000);
    Rng r(2);
    for (auto& v : p) v = static_cast<float>(r.uniform(-1, 1));
    const auto want = static_cast<std::size_t>(std::max_element(p.begin(), p.end()) - p.begin());
    EXPECT_EQ(tiles::detect_seafloor(p), want);
}

TEST(Detector, FirstLocalMaximumAboveThreshold) {
    std::vector<float> p(1000, 0.0f);
    Rng r(3);
    for (std::size_t i = 0; i < 100; ++i) p[i] = static_cast<float>(r.uniform(-0.01, 0.01));
    p[500] = 0.3f;
    p[501] = 0.4f; // local max of the first bump
    p[502] = 0.2f;
    p[600] = 1.0f; // larger, later
    EXPECT_EQ(tiles::detect_seafloor(p), 501u);
}

TEST(Detector, NoiselessSyntheticPingsWithinOneSample) {
    auto spec = fixture::small_scene(6.0, 4, INFINITY);
    const auto r = synth::synthesize_survey(spec);
    for (std::size_t i = 0; i < r.survey.pings.size(); ++i) {
        const auto got = static_cast<long long>(tiles::detect_seafloor(r.survey.pings[i].samples));
        const auto want = static_cast<long long>(r.truth[i].seafloor_index);
        // merged nodule sub-peaks may hide the first one; the group spans at most 16 samples
        const long long tol = r.truth[i].cls == SeafloorClass::Nodules ? 16 : 1;
        ASSERT_LE(std::llabs(got - want), tol) << "ping " << i << " class " << class_name(r.truth[i].cls);
    }
}

TEST(Tiles, CutMatchesWindowOracle) {
    const auto r = synth::synthesize_survey(fixture::small_scene(3.0, 5));
    tiles::Echogram eg(r.survey);
    for (std::size_t col : {std::size_t{14}, std::size_t{500}, eg.cols() - 16}) {
        const auto t = tiles::cut_tile(eg, col);
        const auto sf = tiles::detect_seafloor(r.survey.pings[col].samples);
        EXPECT_EQ(t.seafloor_row, sf);
        EXPECT_EQ(t.center_ping, r.survey.pings[col].index);
        double lo = 1e300, hi = -1e300;
        for (int dr = 0; dr < 30; ++dr)
            for (int dc = -14; dc <= 15; ++dc) {
                const double v = r.survey.pings[col + dc].samples[sf - 5 + dr];
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
        for (int dr = 0; dr < 30; ++dr)
            for (int dc = -14; dc <= 15; ++dc) {
                const double v = r.survey.pings[col + dc].samples[sf - 5 + dr];
                EXPECT_NEAR(t.at(dr, dc + 14), (v - lo) / (hi - lo), 1e-6);
            }
        const auto [mn, mx] = std::minmax_element(t.values.begin(), t.values.end());
        EXPECT_EQ(*mn, 0.0f);
        EXPECT_EQ(*mx, 1.0f);
    }
}

TEST(Tiles, EdgeColumnsAreTruncationErrors) {
    const auto r = synth::synthesize_survey(fixture::small_scene(3.0, 5));
    tiles::Echogram eg(r.survey);
    EXPECT_THROW(tiles::cut_tile(eg, 13), EdgeTruncationError);
    EXPECT_THROW(tiles::cut_tile(eg, eg.cols() - 15), EdgeTruncationError);
    EXPECT_NO_THROW(tiles::cut_tile(eg, eg.cols() - 16));
}

TEST(Tiles, SeafloorTooCloseToPingStartIsTruncation) {
    Survey s;
    s.header.samples_per_ping = 128;
    for (int i = 0; i < 40; ++i) {
        Ping p;
        p.index = static_cast<std::uint64_t>(i);
        p.timestamp = i * 0.05;
        p.samples.assign(128, 0.0f);
        p.samples[2] = 1.0f;
        s.pings.push_back(p);
    }
    tiles::Echogram eg(s);
    EXPECT_THROW(tiles::cut_tile(eg, 20), EdgeTruncationError);
}

TEST(Tiles, NormalizationScaleInvariance) {
    Rng r(8);
    std::array<float, tiles::kTileSize> base{};
    for (auto& v : base) v = static_cast<float>(r.uniform(-1, 1));
    auto ref = base;
    tiles::normalize_tile(ref);
    // powers of two scale exactly in binary floating point
    for (float g : {0.25f, 2.0f, 1024.0f}) {
        auto scaled = base;
        for (auto& v : scaled) v *= g;
        tiles::normalize_tile(scaled);
        EXPECT_EQ(scaled, ref) << g;
    }
    for (float g : {0.3f, 7.1f, 1234.5f}) {
        auto scaled = base;
        for (auto& v : scaled) v = v * g + 3.0f;
        tiles::normalize_tile(scaled);
        for (std::size_t i = 0; i < scaled.size(); ++i) EXPECT_NEAR(scaled[i], ref[i], 1e-6) << g;
    }
}

TEST(Tiles, ConstantWindowNormalizesToHalf) {
    std::array<float, tiles::kTileSize> v;
    v.fill(3.0f);
    tiles::normalize_tile(v);
    for (float x : v) EXPECT_EQ(x, 0.5f);
}

TEST(Tiles, SamplingRespectsSpacingPairwise) {
    const auto st = fixture::scene_tiles(fixture::small_scene(6.0, 6));
    const auto& ts = st.tiles;
    ASSERT_GT(ts.size(), 20u);
    for (std::size_t i = 0; i < ts.size(); ++i)
        for (std::size_t j = i + 1; j < ts.size(); ++j) {
            EXPECT_GE(std::hypot(ts[i].x - ts[j].x, ts[i].y - ts[j].y), 0.15 - 1e-9);
            const auto a = ts[i].center_ping, b = ts[j].center_ping;
            EXPECT_GE(a > b ? a - b : b - a, 30u);
        }
    // labels come from the colocation of the center ping
    for (const auto& t : ts) {
        const auto& c = st.colocation[t.center_ping];
        ASSERT_TRUE(c.match.has_value());
        ASSERT_TRUE(t.label.has_value());
        EXPECT_EQ(*t.label, c.match->label);
    }
}

TEST(Tiles, SamplingUsesGreedyLeftToRightOrder) {
    const auto st = fixture::scene_tiles(fixture::small_scene(6.0, 6));
    // nearly uniform intervals: first tile at the first valid column, and
    // consecutive centers exactly 30 pings apart on a flat, fully labeled track
    ASSERT_FALSE(st.tiles.empty());
    EXPECT_EQ(st.tiles.front().center_ping, 14u);
    for (std::size_t i = 1; i < st.tiles.size(); ++i)
        EXPECT_EQ(st.tiles[i].center_ping - st.tiles[i - 1].center_ping, 30u);
}

TEST(Tiles, SpacingBelowTileWidthRejected) {
    const auto r = synth::synthesize_survey(fixture::small_scene(3.0, 5));
    tiles::Echogram eg(r.survey);
    EXPECT_THROW(tiles::sample_tiles(eg, {}, 0.1), ValidationError);
}

TEST(Tiles, WiderSpacingGivesFewerTiles) {
    const auto r = synth::synthesize_survey(fixture::small_scene(6.0, 6));
    const auto col = geo::co_locate(r.survey.pings, r.nav, r.cells);
    tiles::Echogram eg(r.survey);
    const auto a = tiles::sample_tiles(eg, col, 0.15);
    const auto b = tiles::sample_tiles(eg, col, 0.45);
    EXPECT_LT(b.size(), a.size());
    for (std::size_t i = 1; i < b.size(); ++i) EXPECT_GE(b[i].x - b[i - 1].x, 0.45 - 1e-9);
}

namespace {

std::vector<tiles::AcousticTile> some_tiles(std::size_t n, std::uint64_t seed) {
    Rng r(seed);
    std::vector<tiles::AcousticTile> v(n);
    for (std::size_t i = 0; i < n; ++i) {
        auto& t = v[i];
        t.center_ping = r.below(100000);
        t.seafloor_row = static_cast<std::uint32_t>(r.below(4000));
        t.x = r.uniform(-100, 100);
        t.y = r.uniform(-100, 100);
        if (i % 4 != 3) t.label = class_from_int(static_cast<long long>(r.below(3)));
        for (auto& x : t.values) x = static_cast<float>(r.uniform());
    }
    return v;
}

} // namespace

TEST(TileFormat, RoundTripIncludingUnlabeled) {
    const auto ts = some_tiles(9, 1);
    ASSERT_FALSE(ts[3].label.has_value());
    const auto bytes = tiles::encode_tiles(ts);
    EXPECT_EQ(bytes.size(), 24u + 9u * (8 + 4 + 8 + 8 + 1 + 3600));
    const auto back = tiles::decode_tiles(bytes);
    EXPECT_EQ(back, ts);
    EXPECT_EQ(tiles::encode_tiles(back), bytes);
    EXPECT_TRUE(tiles::decode_tiles(tiles::encode_tiles({})).empty());
}

TEST(TileFormat, CorruptionReportsOffsets) {
    const auto bytes = tiles::encode_tiles(some_tiles(2, 2));
    auto bad = bytes;
    bad[1] = 'X';
    try {
        tiles::decode_tiles(bad);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), 0);
    }
    bad = bytes;
    const std::size_t label_at = 24 + 28;
    bad[label_at] = 9;
    try {
        tiles::decode_tiles(bad);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), static_cast<std::int64_t>(label_at));
    }
    bad = bytes;
    bad[16] = 31; // rows
    try {
        tiles::decode_tiles(bad);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), 16);
    }
    EXPECT_THROW(tiles::decode_tiles(bytes.substr(0, bytes.size() - 1)), FormatError);
    EXPECT_THROW(tiles::decode_tiles(bytes.substr(0, 6)), FormatError);
}

TEST(Pgm, HeaderSizeAndBands) {
    const auto r = synth::synthesize_survey(fixture::small_scene(3.0, 5));
    tiles::Echogram eg(r.survey);
    std::vector<std::optional<SeafloorClass>> bands(eg.cols());
    for (std::size_t c = 0; c < eg.cols(); ++c)
        if (c % 3) bands[c] = class_from_int(static_cast<long long>(c % 3));
    const auto pgm = tiles::render_pgm(eg, 1400, 100, bands, 8);
    std::istringstream in(pgm);
    std::string magic;
    std::size_t w = 0, h = 0, maxv = 0;
    in >> magic >> w >> h >> maxv;
    in.get();
    EXPECT_EQ(magic, "P5");
    EXPECT_EQ(w, eg.cols());
    EXPECT_EQ(h, 108u);
    EXPECT_EQ(maxv, 255u);
    const auto header = static_cast<std::size_t>(in.tellg());
    ASSERT_EQ(pgm.size(), header + w * h);
    for (std::size_t c = 0; c < w; ++c)
        EXPECT_EQ(static_cast<std::uint8_t>(pgm[header + c]), tiles::class_gray(bands[c]));
    EXPECT_THROW(tiles::render_pgm(eg, 0, 10, std::vector<std::optional<SeafloorClass>>(3)), ValidationError);
}
