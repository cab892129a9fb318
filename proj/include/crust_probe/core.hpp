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

#ifndef CRUST_PROBE_CORE_HPP
#define CRUST_PROBE_CORE_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>

namespace crust_probe {

// Error taxonomy. Every error carries the CLI exit code of its category:
// 1 validation, 2 I/O or file format, 3 numerical failure.

class Error : public std::runtime_error {
public:
    Error(const std::string& what, int exit_code)
        : std::runtime_error(what), exit_code_(exit_code) {}
    int exit_code() const noexcept { return exit_code_; }

private:
    int exit_code_;
};

class ValidationError : public Error {
public:
    explicit ValidationError(const std::string& what) : Error(what, 1) {}
};

class IoError : public Error {
public:
    explicit IoError(const std::string& what) : Error(what, 2) {}
};

/// Corrupt or unexpected file content. `offset` is the byte offset at which
/// the problem was detected (or -1 for text formats, where `what` names the line).
class FormatError : public Error {
public:
    FormatError(const std::string& what, std::int64_t offset = -1)
        : Error(offset >= 0 ? what + " (at byte offset " + std::to_string(offset) + ")" : what, 2),
          offset_(offset) {}
    std::int64_t offset() const noexcept { return offset_; }

private:
    std::int64_t offset_;
};

class NumericalError : public Error {
public:
    explicit NumericalError(const std::string& what) : Error(what, 3) {}
};

/// Ping with no echo energy at all.
class NoSeafloorError : public NumericalError {
public:
    explicit NoSeafloorError(const std::string& what) : NumericalError(what) {}
};

/// Tile window does not fit inside the echogram.
class EdgeTruncationError : public ValidationError {
public:
    explicit EdgeTruncationError(const std::string& what) : ValidationError(what) {}
};

/// Query time outside the navigation track.
class ExtrapolationError : public ValidationError {
public:
    explicit ExtrapolationError(const std::string& what) : ValidationError(what) {}
};

class TrainingDivergedError : public NumericalError {
public:
    TrainingDivergedError(const std::string& what, int epoch)
        : NumericalError(what), epoch_(epoch) {}
    int epoch() const noexcept { return epoch_; }

private:
    int epoch_;
};

// ---------------------------------------------------------------------------
// Seafloor classes

enum class SeafloorClass : std::uint8_t { MnCrust = 0, Sediment = 1, Nodules = 2 };

inline constexpr int kNumClasses = 3;
inline constexpr std::array<SeafloorClass, kNumClasses> kAllClasses = {
    SeafloorClass::MnCrust, SeafloorClass::Sediment, SeafloorClass::Nodules};

constexpr int to_int(SeafloorClass c) noexcept { return static_cast<int>(c); }

inline std::string_view class_name(SeafloorClass c) noexcept {
    switch (c) {
    case SeafloorClass::MnCrust: return "MnCrust";
    case SeafloorClass::Sediment: return "Sediment";
    case SeafloorClass::Nodules: return "Nodules";
    }
    return "?";
}

inline SeafloorClass class_from_int(long long v) {
    if (v < 0 || v >= kNumClasses)
        throw ValidationError("seafloor class code out of range: " + std::to_string(v));
    return static_cast<SeafloorClass>(v);
}

/// Accepts the stable integer code ("0".."2") or the class name.
inline SeafloorClass parse_class(std::string_view s) {
    for (auto c : kAllClasses)
        if (s == class_name(c)) return c;
    if (s.size() == 1 && s[0] >= '0' && s[0] <= '2') return class_from_int(s[0] - '0');
    throw ValidationError("unknown seafloor class '" + std::string(s) + "'");
}

// ---------------------------------------------------------------------------
// Seeded random numbers. The conversions from raw engine output are written
// out here so results do not depend on the standard library's distributions.

class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    /// Uniform in [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// Uniform integer in [0, n), rejection sampled.
    std::uint64_t below(std::uint64_t n) {
        if (n == 0) return 0;
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                    std::numeric_limits<std::uint64_t>::max() % n;
        std::uint64_t x;
        do {
            x = engine_();
        } while (x >= limit);
        return x % n;
    }

    /// Standard normal via Box-Muller; caches the second variate.
    double normal() {
        if (spare_) {
            double v = *spare_;
            spare_.reset();
            return v;
        }
        double u1;
        do {
            u1 = uniform();
        } while (u1 <= 0.0);
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double theta = 2.0 * M_PI * u2;
        spare_ = r * std::sin(theta);
        return r * std::cos(theta);
    }

    template <class It>
    void shuffle(It first, It last) {
        const auto n = static_cast<std::uint64_t>(last - first);
        for (std::uint64_t i = n; i > 1; --i) {
            const auto j = below(i);
            std::iter_swap(first + static_cast<std::ptrdiff_t>(i - 1),
                           first + static_cast<std::ptrdiff_t>(j));
        }
    }

private:
    std::mt19937_64 engine_;
    std::optional<double> spare_;
};

} // namespace crust_probe

#endif // CRUST_PROBE_CORE_HPP
