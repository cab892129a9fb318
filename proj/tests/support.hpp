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

// Shared fixtures for the test binaries: small synthetic scenes, temporary
// directories and a reference solver for the SVM dual.

#ifndef CRUST_PROBE_TESTS_SUPPORT_HPP
#define CRUST_PROBE_TESTS_SUPPORT_HPP

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "crust_probe.hpp"

namespace crust_probe::fixture {

/// Three-patch scene with short pings.
inline synth::SceneSpec small_scene(double length_m = 6.0, std::uint64_t seed = 1, double snr_db = 30.0) {
    synth::SceneSpec s;
    s.transect_length = length_m;
    s.samples_per_ping = 2048;
    s.snr_db = snr_db;
    s.seed = seed;
    const double third = length_m / 3.0;
    s.patches = {{0.0, third, SeafloorClass::MnCrust, 0.05},
                 {third, 2.0 * third, SeafloorClass::Sediment, std::nullopt},
                 {2.0 * third, length_m, SeafloorClass::Nodules, std::nullopt}};
    return s;
}

struct SceneTiles {
    synth::SynthResult scene;
    geo::CoLocation colocation;
    std::vector<tiles::AcousticTile> tiles;
};

inline SceneTiles scene_tiles(const synth::SceneSpec& spec, double spacing = 0.15) {
    SceneTiles r{synth::synthesize_survey(spec), {}, {}};
    r.colocation = geo::co_locate(r.scene.survey.pings, r.scene.nav, r.scene.cells);
    tiles::Echogram eg(r.scene.survey);
    r.tiles = tiles::sample_tiles(eg, r.colocation, spacing);
    return r;
}

/// Unique scratch directory removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& tag = "t") {
        static std::atomic<int> counter{0};
        const auto stamp = std::chrono::steady_clock::now().time_since_epoch().count();
        path_ = std::filesystem::temp_directory_path() /
                ("crust-probe-" + tag + "-" + std::to_string(stamp) + "-" + std::to_string(counter++));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

// ---------------------------------------------------------------------------
// Reference solver for the soft-margin dual
//   min 1/2 a'Qa - 1'a   s.t. 0 <= a <= C, y'a = 0
// by accelerated projected gradient. The projection onto the box intersected
// with the hyperplane is exact: a = clip(v - nu y, 0, C) with nu found by
// bisection on the monotone function y'a(nu).

inline std::vector<double> project_box_hyperplane(const std::vector<double>& v, const std::vector<int>& y, double C) {
    auto at = [&](double nu) {
        std::vector<double> a(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) a[i] = std::clamp(v[i] - nu * y[i], 0.0, C);
        return a;
    };
    auto g = [&](double nu) {
        const auto a = at(nu);
        double s = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) s += y[i] * a[i];
        return s;
    };
    double lo = -1.0, hi = 1.0;
    while (g(lo) < 0.0) lo *= 2.0;
    while (g(hi) > 0.0) hi *= 2.0;
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (g(mid) > 0.0) lo = mid;
        else hi = mid;
    }
    return at(0.5 * (lo + hi));
}

struct QpReference {
    std::vector<double> alpha;
    double objective = 0.0;
};

inline QpReference reference_dual(const std::vector<std::vector<double>>& x, const std::vector<int>& y,
                                  const svm::Kernel& k, double C, int iterations = 20000) {
    const std::size_t n = x.size();
    std::vector<double> Q(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) Q[i * n + j] = y[i] * y[j] * k(x[i], x[j]);
    // Lipschitz bound: largest eigenvalue by power iteration, padded.
    std::vector<double> v(n, 1.0), w(n);
    double L = 1.0;
    for (int it = 0; it < 500; ++it) {
        double norm = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            w[i] = 0.0;
            for (std::size_t j = 0; j < n; ++j) w[i] += Q[i * n + j] * v[j];
            norm += w[i] * w[i];
        }
        norm = std::sqrt(norm);
        if (norm == 0.0) break;
        L = norm;
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / norm;
    }
    const double step = 1.0 / (1.01 * L);

    auto objective = [&](const std::vector<double>& a) {
        double quad = 0.0, lin = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            lin += a[i];
            for (std::size_t j = 0; j < n; ++j) quad += a[i] * Q[i * n + j] * a[j];
        }
        return 0.5 * quad - lin;
    };

    std::vector<double> a(n, 0.0), z = a, prev = a;
    double t = 1.0;
    for (int it = 0; it < iterations; ++it) {
        std::vector<double> grad(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = -1.0;
            for (std::size_t j = 0; j < n; ++j) s += Q[i * n + j] * z[j];
            grad[i] = s;
        }
        std::vector<double> stepped(n);
        for (std::size_t i = 0; i < n; ++i) stepped[i] = z[i] - step * grad[i];
        prev = a;
        a = project_box_hyperplane(stepped, y, C);
        const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
        for (std::size_t i = 0; i < n; ++i) z[i] = a[i] + ((t - 1.0) / t_next) * (a[i] - prev[i]);
        t = t_next;
    }
    return {a, objective(a)};
}

/// Twenty points in the unit square with labels from a noisy circle, so the
/// problem is not separable and some multipliers sit at C.
inline void random_dataset(std::uint64_t seed, std::vector<std::vector<double>>& x, std::vector<int>& y) {
    Rng rng(seed);
    x.clear();
    y.clear();
    for (int i = 0; i < 20; ++i) {
        const double a = rng.uniform(-1.0, 1.0), b = rng.uniform(-1.0, 1.0);
        const double r = std::sqrt(a * a + b * b) + rng.uniform(-0.25, 0.25);
        x.push_back({a, b});
        y.push_back(r < 0.7 ? 1 : -1);
    }
    // both classes must be present
    if (std::count(y.begin(), y.end(), 1) == 0) y[0] = 1;
    if (std::count(y.begin(), y.end(), -1) == 0) y[0] = -1;
}

} // namespace crust_probe::fixture

#endif // CRUST_PROBE_TESTS_SUPPORT_HPP
