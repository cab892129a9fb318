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

#include "support.hpp"

using namespace crust_probe;

TEST(Synth, PingCountFromTrackAndRate) {
    synth::SceneSpec s = fixture::small_scene(15.0);
    EXPECT_EQ(synth::ping_count(s), 3000u); // 15 m / 0.1 m/s * 20 Hz
    s.transect_length = 0.5;
    EXPECT_EQ(synth::ping_count(s), 100u);
}

TEST(Synth, DeterministicPerSeed) {
    const auto a = synth::synthesize_survey(fixture::small_scene(2.0, 3));
    const auto b = synth::synthesize_survey(fixture::small_scene(2.0, 3));
    const auto c = synth::synthesize_survey(fixture::small_scene(2.0, 4));
    EXPECT_EQ(encode_survey(a.survey), encode_survey(b.survey));
    EXPECT_EQ(a.truth, b.truth);
    EXPECT_NE(encode_survey(a.survey), encode_survey(c.survey));
}

TEST(Synth, TruthFollowsPatches) {
    const auto spec = fixture::small_scene(6.0, 2);
    const auto r = synth::synthesize_survey(spec);
    ASSERT_EQ(r.truth.size(), r.survey.pings.size());
    for (std::size_t i = 0; i < r.truth.size(); ++i) {
        const double x = r.survey.pings[i].x;
        const auto want = x < 2.0 ? SeafloorClass::MnCrust : x < 4.0 ? SeafloorClass::Sediment : SeafloorClass::Nodules;
        EXPECT_EQ(r.truth[i].cls, want) << x;
        EXPECT_EQ(r.truth[i].thickness_m.has_value(), want == SeafloorClass::MnCrust);
        EXPECT_EQ(r.truth[i].ping_index, i);
    }
}

TEST(Synth, GeometryOfPings) {
    const auto spec = fixture::small_scene(3.0, 2);
    const auto r = synth::synthesize_survey(spec);
    for (std::size_t i = 0; i < r.survey.pings.size(); ++i) {
        const auto& p = r.survey.pings[i];
        EXPECT_DOUBLE_EQ(p.timestamp, static_cast<double>(i) / 20.0);
        EXPECT_DOUBLE_EQ(p.x, 0.1 * p.timestamp);
        EXPECT_EQ(p.y, spec.track_y);
        EXPECT_EQ(p.samples.size(), 2048u);
    }
    EXPECT_EQ(synth::seafloor_index(spec, 1.5), 1500u);
}

TEST(Synth, NoiselessCrustPingHasTwoEchoesAtTheRightDelay) {
    auto spec = fixture::small_scene(3.0, 2, INFINITY);
    spec.echo.amplitude_jitter = 0.0;
    const auto r = synth::synthesize_survey(spec);
    const auto& p = r.survey.pings[0].samples;
    const double delay = synth::secondary_delay_samples(spec, 0.05);
    EXPECT_NEAR(delay, 0.05 / 2932.0 * 2.0e6, 1e-9);
    // primary: unit-variance Gaussian of height 0.8 at 1500
    EXPECT_NEAR(p[1500], 0.8, 1e-6);
    const auto sec = static_cast<std::size_t>(std::llround(1500 + delay));
    const double expect_sec = 0.4 * std::exp(-0.5 * std::pow((sec - 1500 - delay) / 3.0, 2));
    EXPECT_NEAR(p[sec], expect_sec, 1e-6);
    // zero beyond four sigma of either pulse
    EXPECT_EQ(p[1500 - 13], 0.0f);
    EXPECT_EQ(p[1400], 0.0f);
}

TEST(Synth, NoiseLevelMatchesSnr) {
    auto spec = fixture::small_scene(3.0, 9, 20.0);
    const auto r = synth::synthesize_survey(spec);
    double ss = 0.0;
    std::size_t n = 0;
    for (const auto& p : r.survey.pings)
        for (std::size_t k = 0; k < 1000; ++k) {
            ss += static_cast<double>(p.samples[k]) * p.samples[k];
            ++n;
        }
    const double sigma = 0.8 / std::pow(10.0, 20.0 / 20.0);
    EXPECT_NEAR(std::sqrt(ss / static_cast<double>(n)), sigma, 0.01 * sigma);
}

TEST(Synth, SedimentIsBroaderAndWeakerThanCrust) {
    auto spec = fixture::small_scene(6.0, 2, INFINITY);
    spec.echo.amplitude_jitter = 0.0;
    const auto r = synth::synthesize_survey(spec);
    const auto& crust = r.survey.pings[0].samples;
    const auto& sed = r.survey.pings[600].samples;
    auto width = [](const std::vector<float>& v) {
        const float peak = *std::max_element(v.begin(), v.end());
        return std::count_if(v.begin(), v.end(), [&](float x) { return x > 0.5f * peak; });
    };
    EXPECT_GT(width(sed), 2 * width(crust));
    EXPECT_LT(*std::max_element(sed.begin(), sed.end()), *std::max_element(crust.begin(), crust.end()));
}

TEST(Synth, NodulePeaksStayWithinSpread) {
    auto spec = fixture::small_scene(6.0, 3, INFINITY);
    const auto r = synth::synthesize_survey(spec);
    const double reach = spec.echo.nodule_spread + spec.echo.truncate_sigmas * spec.echo.nodule_sigma;
    for (std::size_t i = 0; i < r.truth.size(); ++i) {
        if (r.truth[i].cls != SeafloorClass::Nodules) continue;
        const auto& s = r.survey.pings[i].samples;
        for (std::size_t k = 0; k < s.size(); ++k)
            if (s[k] != 0.0f) {
                ASSERT_LE(std::abs(static_cast<double>(k) - 1500.0), reach + 1) << i;
            }
        EXPECT_LE(std::abs(static_cast<double>(r.truth[i].seafloor_index) - 1500.0), spec.echo.nodule_spread + 1);
    }
}

TEST(Synth, CellsCoverTrackWithPatchLabels) {
    const auto spec = fixture::small_scene(6.0, 2);
    const auto r = synth::synthesize_survey(spec);
    EXPECT_EQ(r.cells.size(), 60u);
    for (const auto& c : r.cells.cells()) {
        const auto [cx, cy] = geo::cell_center(c.index);
        EXPECT_EQ(c.label, synth::patch_at(spec, cx).cls);
        EXPECT_EQ(c.index.iy, 0);
        EXPECT_EQ(c.source, geo::LabelSource::Synthetic);
    }
}

TEST(Synth, NavReproducesPingPositions) {
    const auto r = synth::synthesize_survey(fixture::small_scene(6.0, 2));
    for (const auto& p : r.survey.pings) {
        const auto pos = geo::position_at(r.nav, p.timestamp);
        EXPECT_NEAR(pos.x, p.x, 1e-12);
        EXPECT_NEAR(pos.y, p.y, 1e-12);
    }
    // every ping co-locates to the cell whose patch it was drawn from
    const auto col = geo::co_locate(r.survey.pings, r.nav, r.cells);
    for (std::size_t i = 0; i < col.size(); ++i) {
        ASSERT_TRUE(col[i].match.has_value());
        EXPECT_EQ(col[i].match->label, r.truth[i].cls) << i;
    }
}

TEST(Synth, TruthCsvRoundTrip) {
    const auto r = synth::synthesize_survey(fixture::small_scene(3.0, 2));
    EXPECT_EQ(synth::truth_from_csv(synth::truth_to_csv(r.truth)), r.truth);
}

TEST(Synth, InvalidScenesRejected) {
    auto s = fixture::small_scene(6.0);
    s.patches[1].start_m = 2.5;
    EXPECT_THROW(synth::synthesize_survey(s), ValidationError);
    s = fixture::small_scene(6.0);
    s.patches[0].thickness_m.reset();
    EXPECT_THROW(synth::synthesize_survey(s), ValidationError);
    s = fixture::small_scene(6.0);
    s.patches[1].thickness_m = 0.1;
    EXPECT_THROW(synth::synthesize_survey(s), ValidationError);
    s = fixture::small_scene(6.0);
    s.patches.back().end_m = 5.0;
    EXPECT_THROW(synth::synthesize_survey(s), ValidationError);
    s = fixture::small_scene(6.0);
    s.samples_per_ping = 1510;
    EXPECT_THROW(synth::synthesize_survey(s), ValidationError);
    s = fixture::small_scene(6.0);
    s.snr_db = std::nan("");
    EXPECT_THROW(synth::synthesize_survey(s), ValidationError);
    s = fixture::small_scene(6.0);
    s.patches.clear();
    EXPECT_THROW(synth::synthesize_survey(s), ValidationError);
}
