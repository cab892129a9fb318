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

#ifndef CRUST_PROBE_EVALUATION_HPP
#define CRUST_PROBE_EVALUATION_HPP

#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "core.hpp"
#include "io.hpp"

namespace crust_probe::eval {

struct DatasetSplit {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    double ratio = 0.7;
    std::uint64_t seed = 0;
};

/// round-half-up of ratio * n
inline std::size_t train_size(std::size_t n, double ratio) {
    return static_cast<std::size_t>(std::floor(ratio * static_cast<double>(n) + 0.5));
}

inline void check_split_args(std::size_t n, double ratio) {
    if (n < 2) throw ValidationError("split needs at least 2 items, got " + std::to_string(n));
    if (!(ratio > 0.0 && ratio < 1.0)) throw ValidationError("split ratio must lie in (0, 1), got " + io::fmt(ratio));
}

/// Seeded uniform shuffle, then the first round(ratio * n) indices train.
inline DatasetSplit split(std::size_t n, double ratio, std::uint64_t seed) {
    check_split_args(n, ratio);
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    Rng rng(seed);
    rng.shuffle(idx.begin(), idx.end());
    const auto k = train_size(n, ratio);
    DatasetSplit s;
    s.ratio = ratio;
    s.seed = seed;
    s.train.assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
    s.test.assign(idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
    return s;
}

/// Same rule applied within each class.
inline DatasetSplit stratified_split(std::span<const SeafloorClass> labels, double ratio, std::uint64_t seed) {
    check_split_args(labels.size(), ratio);
    Rng rng(seed);
    DatasetSplit s;
    s.ratio = ratio;
    s.seed = seed;
    for (auto c : kAllClasses) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < labels.size(); ++i)
            if (labels[i] == c) idx.push_back(i);
        rng.shuffle(idx.begin(), idx.end());
        const auto k = train_size(idx.size(), ratio);
        s.train.insert(s.train.end(), idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(k));
        s.test.insert(s.test.end(), idx.begin() + static_cast<std::ptrdiff_t>(k), idx.end());
    }
    return s;
}

// ---------------------------------------------------------------------------

struct ConfusionMatrix {
    std::array<std::array<std::uint64_t, kNumClasses>, kNumClasses> counts{}; // [true][predicted]

    std::uint64_t total() const {
        std::uint64_t t = 0;
        for (const auto& r : counts)
            for (auto v : r) t += v;
        return t;
    }
    std::uint64_t row_sum(int c) const {
        std::uint64_t t = 0;
        for (auto v : counts[static_cast<std::size_t>(c)]) t += v;
        return t;
    }
    std::uint64_t col_sum(int c) const {
        std::uint64_t t = 0;
        for (const auto& r : counts) t += r[static_cast<std::size_t>(c)];
        return t;
    }
    std::uint64_t trace() const {
        std::uint64_t t = 0;
        for (int c = 0; c < kNumClasses; ++c) t += counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)];
        return t;
    }
};

/// Undefined ratios (empty row or column) are NaN.
struct Metrics {
    double accuracy = 0.0;
    std::array<double, kNumClasses> recall{};    // diagonal / row sum
    std::array<double, kNumClasses> precision{}; // diagonal / column sum
    std::array<double, kNumClasses> share{};     // diagonal / total
};

inline ConfusionMatrix confusion(std::span<const SeafloorClass> truth, std::span<const SeafloorClass> predicted) {
    if (truth.size() != predicted.size())
        throw ValidationError("confusion: " + std::to_string(truth.size()) + " true labels vs " +
                              std::to_string(predicted.size()) + " predictions");
    if (truth.empty()) throw ValidationError("confusion: no samples");
    ConfusionMatrix m;
    for (std::size_t i = 0; i < truth.size(); ++i)
        ++m.counts[static_cast<std::size_t>(to_int(truth[i]))][static_cast<std::size_t>(to_int(predicted[i]))];
    return m;
}

inline Metrics metrics(const ConfusionMatrix& m) {
    constexpr double nan = std::numeric_limits<double>::quiet_NaN();
    Metrics r;
    const auto total = static_cast<double>(m.total());
    r.accuracy = total > 0 ? static_cast<double>(m.trace()) / total : nan;
    for (int c = 0; c < kNumClasses; ++c) {
        const auto d = static_cast<double>(m.counts[static_cast<std::size_t>(c)][static_cast<std::size_t>(c)]);
        const auto rs = static_cast<double>(m.row_sum(c));
        const auto cs = static_cast<double>(m.col_sum(c));
        r.recall[static_cast<std::size_t>(c)] = rs > 0 ? d / rs : nan;
        r.precision[static_cast<std::size_t>(c)] = cs > 0 ? d / cs : nan;
        r.share[static_cast<std::size_t>(c)] = total > 0 ? d / total : nan;
    }
    return r;
}

// ---------------------------------------------------------------------------
// Text outputs

inline std::string confusion_to_csv(const ConfusionMatrix& m) {
    std::string s = "true\\predicted";
    for (auto c : kAllClasses) s += "," + std::string(class_name(c));
    s += "\n";
    for (auto t : kAllClasses) {
        s += std::string(class_name(t));
        for (auto p : kAllClasses)
            s += "," + std::to_string(m.counts[static_cast<std::size_t>(to_int(t))][static_cast<std::size_t>(to_int(p))]);
        s += "\n";
    }
    return s;
}

inline ConfusionMatrix confusion_from_csv(std::string_view text, const std::string& source = "confusion") {
    auto t = io::parse_csv(text, {"true\\predicted", "MnCrust", "Sediment", "Nodules"}, source);
    if (t.rows.size() != kNumClasses) throw FormatError(source + ": expected 3 rows");
    ConfusionMatrix m;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        if (t.rows[r][0] != class_name(kAllClasses[r])) throw FormatError(source + ": unexpected row " + t.rows[r][0]);
        for (std::size_t c = 0; c < kNumClasses; ++c)
            m.counts[r][c] = static_cast<std::uint64_t>(io::parse_int(t.rows[r][c + 1], "count"));
    }
    return m;
}

/// Flat key=value lines.
inline std::string metrics_to_text(const ConfusionMatrix& m, const Metrics& r) {
    std::string s;
    s += "samples=" + std::to_string(m.total()) + "\n";
    s += "accuracy=" + io::fmt(r.accuracy) + "\n";
    for (auto c : kAllClasses) {
        const auto k = static_cast<std::size_t>(to_int(c));
        const std::string name(class_name(c));
        s += "recall_" + name + "=" + io::fmt(r.recall[k]) + "\n";
        s += "precision_" + name + "=" + io::fmt(r.precision[k]) + "\n";
        s += "share_" + name + "=" + io::fmt(r.share[k]) + "\n";
        s += "count_" + name + "=" + std::to_string(m.row_sum(to_int(c))) + "\n";
    }
    return s;
}

/// index,set  with set in {train, test}
inline std::string split_to_csv(const DatasetSplit& s) {
    std::vector<char> set(s.train.size() + s.test.size(), '?');
    for (auto i : s.train) set.at(i) = 'r';
    for (auto i : s.test) set.at(i) = 'e';
    std::string out = "index,set\n";
    for (std::size_t i = 0; i < set.size(); ++i)
        out += std::to_string(i) + (set[i] == 'r' ? ",train\n" : ",test\n");
    return out;
}

inline DatasetSplit split_from_csv(std::string_view text, const std::string& source = "split") {
    auto t = io::parse_csv(text, {"index", "set"}, source);
    DatasetSplit s;
    for (std::size_t r = 0; r < t.rows.size(); ++r) {
        const auto i = static_cast<std::size_t>(io::parse_int(t.rows[r][0], "index"));
        if (i != r) throw FormatError(source + ": indices must be 0..n-1 in order");
        if (t.rows[r][1] == "train") s.train.push_back(i);
        else if (t.rows[r][1] == "test") s.test.push_back(i);
        else throw FormatError(source + ": unknown set '" + t.rows[r][1] + "'");
    }
    const auto n = s.train.size() + s.test.size();
    s.ratio = n > 0 ? static_cast<double>(s.train.size()) / static_cast<double>(n) : 0.0;
    return s;
}

} // namespace crust_probe::eval

#endif // CRUST_PROBE_EVALUATION_HPP
