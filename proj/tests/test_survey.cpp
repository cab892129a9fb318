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

#include <cstring>

#include "support.hpp"

using namespace crust_probe;

namespace {

Survey random_survey(std::uint64_t seed, std::size_t pings, std::uint32_t spp) {
    Rng r(seed);
    Survey s;
    s.header.samples_per_ping = spp;
    s.header.sample_rate = 1.5e6;
    s.header.ping_rate = 12.5;
    for (std::size_t i = 0; i < pings; ++i) {
        Ping p;
        p.index = i;
        p.timestamp = 0.08 * static_cast<double>(i) + 0.001;
        p.x = r.uniform(-5, 5);
        p.y = r.uniform(-5, 5);
        p.altitude = r.uniform(1, 2);
        for (std::uint32_t k = 0; k < spp; ++k) p.samples.push_back(static_cast<float>(r.normal()));
        s.pings.push_back(std::move(p));
    }
    return s;
}

template <class T>
T read_le(const std::string& b, std::size_t off) {
    T v;
    std::memcpy(&v, b.data() + off, sizeof v); // host is little-endian (x86-64 / aarch64)
    return v;
}

} // namespace

TEST(SurveyFormat, RoundTripIsBitExact) {
    const auto s = random_survey(1, 7, 33);
    const auto bytes = encode_survey(s);
    const auto back = decode_survey(bytes);
    EXPECT_EQ(back, s);
    EXPECT_EQ(encode_survey(back), bytes);
}

TEST(SurveyFormat, EmptySurveyRoundTrips) {
    Survey s;
    const auto bytes = encode_survey(s);
    EXPECT_EQ(bytes.size(), 36u);
    EXPECT_EQ(decode_survey(bytes), s);
}

TEST(SurveyFormat, LayoutMatchesHandDecoding) {
    const auto s = random_survey(2, 3, 5);
    const auto b = encode_survey(s);
    // 4 magic + 4 version + 8 + 8 + 4 + 8 header, then 5 x 8 bytes + 5 x 4 samples per ping
    ASSERT_EQ(b.size(), 36u + 3u * (40u + 20u));
    EXPECT_EQ(b.substr(0, 4), "CPSV");
    EXPECT_EQ(read_le<std::uint32_t>(b, 4), 1u);
    EXPECT_EQ(read_le<double>(b, 8), 1.5e6);
    EXPECT_EQ(read_le<double>(b, 16), 12.5);
    EXPECT_EQ(read_le<std::uint32_t>(b, 24), 5u);
    EXPECT_EQ(read_le<std::uint64_t>(b, 28), 3u);
    const std::size_t p1 = 36 + 60;
    EXPECT_EQ(read_le<std::uint64_t>(b, p1), 1u);
    EXPECT_EQ(read_le<double>(b, p1 + 8), s.pings[1].timestamp);
    EXPECT_EQ(read_le<double>(b, p1 + 16), s.pings[1].x);
    EXPECT_EQ(read_le<float>(b, p1 + 40 + 4 * 4), s.pings[1].samples[4]);
}

TEST(SurveyFormat, TruncationReportsOffset) {
    const auto bytes = encode_survey(random_survey(3, 2, 8));
    const auto cut = bytes.substr(0, bytes.size() - 3);
    try {
        decode_survey(cut);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), static_cast<std::int64_t>(cut.size()));
        EXPECT_NE(std::string(e.what()).find("length mismatch"), std::string::npos);
    }
    // cut inside the header
    try {
        decode_survey(bytes.substr(0, 10));
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), 8);
    }
}

TEST(SurveyFormat, TrailingBytesRejected) {
    auto bytes = encode_survey(random_survey(4, 1, 4));
    bytes += "x";
    EXPECT_THROW(decode_survey(bytes), FormatError);
}

TEST(SurveyFormat, BadMagicAndVersion) {
    auto bytes = encode_survey(random_survey(5, 1, 4));
    auto bad = bytes;
    bad[0] = 'X';
    try {
        decode_survey(bad);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), 0);
    }
    bad = bytes;
    bad[4] = 2;
    try {
        decode_survey(bad);
        FAIL();
    } catch (const FormatError& e) {
        EXPECT_EQ(e.offset(), 4);
    }
}

TEST(SurveyFormat, ImplausibleCountRejected) {
    auto bytes = encode_survey(Survey{});
    const std::uint64_t huge = ~0ull;
    std::memcpy(bytes.data() + 28, &huge, 8);
    EXPECT_THROW(decode_survey(bytes), FormatError);
}

TEST(SurveyFormat, FileRoundTrip) {
    fixture::TempDir dir("survey");
    const auto s = random_survey(6, 4, 16);
    write_survey(dir / "s.cpsv", s);
    EXPECT_EQ(read_survey(dir / "s.cpsv"), s);
    EXPECT_THROW(read_survey(dir / "missing.cpsv"), IoError);
}

TEST(SurveyValidate, RejectsInconsistentPings) {
    auto s = random_survey(7, 3, 8);
    s.pings[1].samples.pop_back();
    EXPECT_THROW(validate(s), ValidationError);
    s = random_survey(7, 3, 8);
    s.pings[2].timestamp = s.pings[1].timestamp;
    EXPECT_THROW(validate(s), ValidationError);
}
