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

#ifndef CRUST_PROBE_SVM_HPP
#define CRUST_PROBE_SVM_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <limits>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "io.hpp"

namespace crust_probe::svm {

using Vec = std::vector<double>;

// ---------------------------------------------------------------------------
// Kernels

enum class KernelType { Linear, Rbf };

struct Kernel {
    KernelType type = KernelType::Rbf;
    double gamma = 0.0; // rbf only; <= 0 means 1 / dimension at training time

    double operator()(std::span<const double> a, std::span<const double> b) const {
        if (type == KernelType::Linear) {
            double s = 0.0;
            for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
            return s;
        }
        double d2 = 0.0;
        for (std::size_t k = 0; k < a.size(); ++k) {
            const double d = a[k] - b[k];
            d2 += d * d;
        }
        return std::exp(-gamma * d2);
    }
};

struct SvmConfig {
    Kernel kernel;
    double C = 1.0;
    double tolerance = 1e-3; // KKT tolerance, also the SMO stopping gap
    int max_passes = 1000;   // iteration budget is max_passes * n
    std::uint64_t seed = 1;

    void validate() const {
        if (!(C > 0.0) || !std::isfinite(C)) throw ValidationError("SVM C must be positive");
        if (!(tolerance > 0.0)) throw ValidationError("SVM tolerance must be positive");
        if (max_passes < 1) throw ValidationError("SVM max_passes must be >= 1");
        if (kernel.type == KernelType::Rbf && !(kernel.gamma >= 0.0))
            throw ValidationError("rbf gamma must be positive (or 0 for 1/dim)");
    }
};

// ---------------------------------------------------------------------------
// Feature normalization

/// Per-dimension z-score with population statistics; zero-variance
/// dimensions map to 0.
class Normalizer {
public:
    Normalizer() = default;
    Normalizer(Vec mean, Vec stddev) : mean_(std::move(mean)), stddev_(std::move(stddev)), fitted_(true) {
        if (mean_.size() != stddev_.size()) throw ValidationError("normalizer: mean/stddev size mismatch");
    }

    void fit(std::span<const Vec> x) {
        if (x.size() < 2) throw ValidationError("normalizer fit needs at least 2 samples");
        const std::size_t d = x.front().size();
        mean_.assign(d, 0.0);
        stddev_.assign(d, 0.0);
        for (const auto& v : x) {
            if (v.size() != d) throw ValidationError("normalizer fit: inconsistent dimensions");
            for (std::size_t k = 0; k < d; ++k) mean_[k] += v[k];
        }
        for (auto& m : mean_) m /= static_cast<double>(x.size());
        for (const auto& v : x)
            for (std::size_t k = 0; k < d; ++k) {
                const double c = v[k] - mean_[k];
                stddev_[k] += c * c;
            }
        for (auto& s : stddev_) s = std::sqrt(s / static_cast<double>(x.size()));
        fitted_ = true;
    }

    Vec apply(std::span<const double> v) const {
        if (!fitted_) throw ValidationError("state error: normalizer applied before fit");
        if (v.size() != mean_.size())
            throw ValidationError("dimension mismatch: normalizer expects " + std::to_string(mean_.size()) +
                                  " features, got " + std::to_string(v.size()));
        Vec out(v.size());
        for (std::size_t k = 0; k < v.size(); ++k)
            out[k] = stddev_[k] > 0.0 ? (v[k] - mean_[k]) / stddev_[k] : 0.0;
        return out;
    }

    std::vector<Vec> apply_all(std::span<const Vec> x) const {
        std::vector<Vec> out;
        out.reserve(x.size());
        for (const auto& v : x) out.push_back(apply(v));
        return out;
    }

    bool fitted() const noexcept { return fitted_; }
    const Vec& mean() const noexcept { return mean_; }
    const Vec& stddev() const noexcept { return stddev_; }

private:
    Vec mean_, stddev_;
    bool fitted_ = false;
};

// ---------------------------------------------------------------------------
// Binary SMO

struct BinaryMachine {
    Kernel kernel;
    std::vector<Vec> support_vectors;
    Vec coef; // alpha_i * y_i
    double bias = 0.0;

    double decision(std::span<const double> x) const {
        double f = bias;
        for (std::size_t i = 0; i < support_vectors.size(); ++i) f += coef[i] * kernel(support_vectors[i], x);
        return f;
    }
};

struct BinarySolution {
    BinaryMachine machine;
    Vec alpha;               // one per training point
    double objective = 0.0;  // 1/2 a'Qa - sum(a), the minimized dual
    std::size_t iterations = 0;
    bool converged = false;
};

/// Dual objective 1/2 a'Qa - sum(a) with Q_ij = y_i y_j K(x_i, x_j).
inline double dual_objective(std::span<const Vec> x, std::span<const int> y, std::span<const double> alpha,
                             const Kernel& k) {
    double quad = 0.0, lin = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        lin += alpha[i];
        if (alpha[i] == 0.0) continue;
        for (std::size_t j = 0; j < x.size(); ++j)
            if (alpha[j] != 0.0) quad += alpha[i] * alpha[j] * y[i] * y[j] * k(x[i], x[j]);
    }
    return 0.5 * quad - lin;
}

/// SMO with maximal-violating first index and second-order second index
/// (largest guaranteed objective decrease). Ties in the second-index search
/// follow a permutation drawn from the seed. Stops when the KKT gap falls
/// below `tolerance` or the iteration budget runs out.
inline BinarySolution train_binary(std::span<const Vec> x, std::span<const int> y, const SvmConfig& cfg_in) {
    SvmConfig cfg = cfg_in;
    cfg.validate();
    const std::size_t n = x.size();
    if (n != y.size()) throw ValidationError("train_binary: features and labels differ in length");
    bool has_pos = false, has_neg = false;
    for (int v : y) {
        if (v == 1) has_pos = true;
        else if (v == -1) has_neg = true;
        else throw ValidationError("train_binary: labels must be +1 or -1");
    }
    if (!has_pos || !has_neg) throw ValidationError("train_binary: both classes must be present");
    const std::size_t dim = x.front().size();
    for (const auto& v : x)
        if (v.size() != dim) throw ValidationError("train_binary: inconsistent feature dimensions");
    if (cfg.kernel.type == KernelType::Rbf && cfg.kernel.gamma <= 0.0)
        cfg.kernel.gamma = 1.0 / static_cast<double>(std::max<std::size_t>(dim, 1));

    const double C = cfg.C;
    std::vector<double> K(n * n);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = i; j < n; ++j) K[i * n + j] = K[j * n + i] = cfg.kernel(x[i], x[j]);
    auto Q = [&](std::size_t i, std::size_t j) { return static_cast<double>(y[i] * y[j]) * K[i * n + j]; };

    Vec alpha(n, 0.0);
    Vec G(n, -1.0);
    std::vector<std::size_t> scan(n);
    std::iota(scan.begin(), scan.end(), std::size_t{0});
    Rng rng(cfg.seed);
    rng.shuffle(scan.begin(), scan.end());

    auto in_up = [&](std::size_t t) { return (y[t] == 1 && alpha[t] < C) || (y[t] == -1 && alpha[t] > 0.0); };
    auto in_low = [&](std::size_t t) { return (y[t] == 1 && alpha[t] > 0.0) || (y[t] == -1 && alpha[t] < C); };
    constexpr double kTau = 1e-12;

    BinarySolution sol;
    const std::size_t budget = static_cast<std::size_t>(cfg.max_passes) * std::max<std::size_t>(n, 1);
    std::size_t it = 0;
    for (; it < budget; ++it) {
        double gmax = -std::numeric_limits<double>::infinity();
        std::size_t i = n;
        for (std::size_t t : scan)
            if (in_up(t) && -y[t] * G[t] > gmax) {
                gmax = -y[t] * G[t];
                i = t;
            }
        double gmax2 = -std::numeric_limits<double>::infinity();
        double best = std::numeric_limits<double>::infinity();
        std::size_t j = n;
        for (std::size_t t : scan) {
            if (!in_low(t)) continue;
            const double yg = y[t] * G[t];
            gmax2 = std::max(gmax2, yg);
            if (i == n) continue;
            const double b = gmax + yg;
            if (b <= 0.0) continue;
            double a = K[i * n + i] + K[t * n + t] - 2.0 * K[i * n + t];
            if (a <= 0.0) a = kTau;
            if (-(b * b) / a < best) {
                best = -(b * b) / a;
                j = t;
            }
        }
        if (i == n || j == n || gmax + gmax2 < cfg.tolerance) {
            sol.converged = true;
            break;
        }

        const double ai = alpha[i], aj = alpha[j];
        if (y[i] != y[j]) {
            double quad = K[i * n + i] + K[j * n + j] - 2.0 * K[i * n + j];
            if (quad <= 0.0) quad = kTau;
            const double delta = (-G[i] - G[j]) / quad;
            const double diff = alpha[i] - alpha[j];
            alpha[i] += delta;
            alpha[j] += delta;
            if (diff > 0.0) {
                if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = diff; }
            } else if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = -diff; }
            if (diff > 0.0) {
                if (alpha[i] > C) { alpha[i] = C; alpha[j] = C - diff; }
            } else if (alpha[j] > C) { alpha[j] = C; alpha[i] = C + diff; }
        } else {
            double quad = K[i * n + i] + K[j * n + j] - 2.0 * K[i * n + j];
            if (quad <= 0.0) quad = kTau;
            const double delta = (G[i] - G[j]) / quad;
            const double sum = alpha[i] + alpha[j];
            alpha[i] -= delta;
            alpha[j] += delta;
            if (sum > C) {
                if (alpha[i] > C) { alpha[i] = C; alpha[j] = sum - C; }
            } else if (alpha[j] < 0.0) { alpha[j] = 0.0; alpha[i] = sum; }
            if (sum > C) {
                if (alpha[j] > C) { alpha[j] = C; alpha[i] = sum - C; }
            } else if (alpha[i] < 0.0) { alpha[i] = 0.0; alpha[j] = sum; }
        }
        const double di = alpha[i] - ai, dj = alpha[j] - aj;
        for (std::size_t t = 0; t < n; ++t) G[t] += Q(t, i) * di + Q(t, j) * dj;
    }
    sol.iterations = it;

    // bias from the free vectors, or the middle of the feasible interval
    double ub = std::numeric_limits<double>::infinity(), lb = -std::numeric_limits<double>::infinity();
    double free_sum = 0.0;
    std::size_t free_n = 0;
    for (std::size_t t = 0; t < n; ++t) {
        const double yg = y[t] * G[t];
        if (alpha[t] >= C) {
            if (y[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else if (alpha[t] <= 0.0) {
            if (y[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
        } else {
            ++free_n;
            free_sum += yg;
        }
    }
    const double rho = free_n > 0 ? free_sum / static_cast<double>(free_n) : 0.5 * (ub + lb);

    sol.machine.kernel = cfg.kernel;
    sol.machine.bias = -rho;
    for (std::size_t t = 0; t < n; ++t)
        if (alpha[t] > 0.0) {
            sol.machine.support_vectors.push_back(x[t]);
            sol.machine.coef.push_back(alpha[t] * y[t]);
        }
    double obj = 0.0;
    for (std::size_t t = 0; t < n; ++t) obj += alpha[t] * (G[t] - 1.0);
    sol.objective = 0.5 * obj;
    sol.alpha = std::move(alpha);
    return sol;
}

/// Largest violation of the KKT conditions of a binary solution:
/// y f >= 1 for alpha = 0, y f <= 1 for alpha = C, y f = 1 in between.
inline double kkt_violation(const BinarySolution& s, std::span<const Vec> x, std::span<const int> y, double C) {
    double worst = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const double m = y[i] * s.machine.decision(x[i]);
        double v;
        if (s.alpha[i] <= 0.0) v = std::max(0.0, 1.0 - m);
        else if (s.alpha[i] >= C) v = std::max(0.0, m - 1.0);
        else v = std::abs(m - 1.0);
        worst = std::max(worst, v);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// One-vs-one multiclass

struct PairMachine {
    SeafloorClass positive; // lower class index, label +1
    SeafloorClass negative;
    BinaryMachine machine;
};

struct SvmModel {
    SvmConfig config; // gamma resolved
    std::size_t dim = 0;
    Normalizer normalizer;
    std::vector<SeafloorClass> classes; // ascending
    std::vector<PairMachine> machines;
};

inline SvmModel train_multiclass(std::span<const Vec> latents, std::span<const SeafloorClass> labels,
                                 const SvmConfig& cfg_in) {
    SvmConfig cfg = cfg_in;
    cfg.validate();
    if (latents.size() != labels.size()) throw ValidationError("train_multiclass: latents and labels differ in length");
    if (latents.empty()) throw ValidationError("train_multiclass: no training data");
    SvmModel m;
    m.dim = latents.front().size();
    if (cfg.kernel.type == KernelType::Rbf && cfg.kernel.gamma <= 0.0)
        cfg.kernel.gamma = 1.0 / static_cast<double>(std::max<std::size_t>(m.dim, 1));
    m.config = cfg;
    for (auto c : kAllClasses)
        if (std::find(labels.begin(), labels.end(), c) != labels.end()) m.classes.push_back(c);
    if (m.classes.size() < 2) throw ValidationError("train_multiclass: need at least 2 classes present");
    m.normalizer.fit(latents);
    const auto z = m.normalizer.apply_all(latents);

    for (std::size_t a = 0; a < m.classes.size(); ++a)
        for (std::size_t b = a + 1; b < m.classes.size(); ++b) {
            std::vector<Vec> xs;
            std::vector<int> ys;
            for (std::size_t k = 0; k < z.size(); ++k) {
                if (labels[k] == m.classes[a]) { xs.push_back(z[k]); ys.push_back(1); }
                else if (labels[k] == m.classes[b]) { xs.push_back(z[k]); ys.push_back(-1); }
            }
            try {
                auto sol = train_binary(xs, ys, cfg);
                m.machines.push_back({m.classes[a], m.classes[b], std::move(sol.machine)});
            } catch (const ValidationError& e) {
                throw ValidationError("class pair " + std::string(class_name(m.classes[a])) + "/" +
                                      std::string(class_name(m.classes[b])) + ": " + e.what());
            }
        }
    return m;
}

/// Pairwise decision values on an already normalized vector.
inline std::vector<double> decision_values(const SvmModel& m, std::span<const double> normalized) {
    std::vector<double> out;
    out.reserve(m.machines.size());
    for (const auto& pm : m.machines) out.push_back(pm.machine.decision(normalized));
    return out;
}

/// Majority vote; ties go to the lowest class code (MnCrust < Sediment < Nodules).
inline SeafloorClass vote(const SvmModel& m, std::span<const double> decisions) {
    std::array<int, kNumClasses> votes{};
    for (std::size_t k = 0; k < m.machines.size(); ++k)
        ++votes[static_cast<std::size_t>(to_int(decisions[k] >= 0.0 ? m.machines[k].positive
                                                                     : m.machines[k].negative))];
    std::size_t best = 0;
    for (std::size_t c = 1; c < votes.size(); ++c)
        if (votes[c] > votes[best]) best = c;
    return static_cast<SeafloorClass>(best);
}

inline std::vector<SeafloorClass> predict(const SvmModel& m, std::span<const Vec> latents) {
    std::vector<SeafloorClass> out;
    out.reserve(latents.size());
    for (const auto& v : latents) {
        if (v.size() != m.dim)
            throw ValidationError("dimension mismatch: SVM model expects " + std::to_string(m.dim) +
                                  "-dimensional latents, got " + std::to_string(v.size()));
        const auto z = m.normalizer.apply(v);
        out.push_back(vote(m, decision_values(m, z)));
    }
    return out;
}

// ---------------------------------------------------------------------------
// Model file: text, versioned.
//
//   crust-probe-svm 1
//   kernel rbf <gamma> | kernel linear
//   C / tolerance / max_passes / seed / dim lines
//   classes <n> <codes...>
//   mean <dim values>
//   stddev <dim values>
//   machines <m>
//   machine <pos> <neg> <nsv> <bias>
//   sv <coef> <dim values>      (nsv lines)
//   end

inline std::string model_to_text(const SvmModel& m) {
    std::string s = "crust-probe-svm 1\n";
    s += m.config.kernel.type == KernelType::Rbf ? "kernel rbf " + io::fmt(m.config.kernel.gamma) + "\n"
                                                 : std::string("kernel linear\n");
    s += "C " + io::fmt(m.config.C) + "\n";
    s += "tolerance " + io::fmt(m.config.tolerance) + "\n";
    s += "max_passes " + std::to_string(m.config.max_passes) + "\n";
    s += "seed " + std::to_string(m.config.seed) + "\n";
    s += "dim " + std::to_string(m.dim) + "\n";
    s += "classes " + std::to_string(m.classes.size());
    for (auto c : m.classes) s += " " + std::to_string(to_int(c));
    s += "\nmean";
    for (double v : m.normalizer.mean()) s += " " + io::fmt(v);
    s += "\nstddev";
    for (double v : m.normalizer.stddev()) s += " " + io::fmt(v);
    s += "\nmachines " + std::to_string(m.machines.size()) + "\n";
    for (const auto& pm : m.machines) {
        s += "machine " + std::to_string(to_int(pm.positive)) + " " + std::to_string(to_int(pm.negative)) + " " +
             std::to_string(pm.machine.support_vectors.size()) + " " + io::fmt(pm.machine.bias) + "\n";
        for (std::size_t k = 0; k < pm.machine.support_vectors.size(); ++k) {
            s += "sv " + io::fmt(pm.machine.coef[k]);
            for (double v : pm.machine.support_vectors[k]) s += " " + io::fmt(v);
            s += "\n";
        }
    }
    s += "end\n";
    return s;
}

inline SvmModel model_from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string word;
    auto next = [&](const char* what) {
        if (!(in >> word)) throw FormatError(std::string("svm model: missing ") + what);
        return word;
    };
    auto expect = [&](std::string_view w) {
        if (next(std::string(w).c_str()) != w)
            throw FormatError("svm model: expected '" + std::string(w) + "', found '" + word + "'");
    };
    auto number = [&](const char* what) { return io::parse_double(next(what), what); };
    auto integer = [&](const char* what) { return io::parse_int(next(what), what); };

    expect("crust-probe-svm");
    if (next("version") != "1") throw FormatError("svm model: unsupported version " + word);
    SvmModel m;
    expect("kernel");
    const auto kind = next("kernel type");
    if (kind == "rbf") {
        m.config.kernel = {KernelType::Rbf, number("gamma")};
    } else if (kind == "linear") {
        m.config.kernel = {KernelType::Linear, 0.0};
    } else {
        throw FormatError("svm model: unknown kernel " + kind);
    }
    expect("C");
    m.config.C = number("C");
    expect("tolerance");
    m.config.tolerance = number("tolerance");
    expect("max_passes");
    m.config.max_passes = static_cast<int>(integer("max_passes"));
    expect("seed");
    m.config.seed = static_cast<std::uint64_t>(integer("seed"));
    expect("dim");
    const auto dim = integer("dim");
    if (dim < 1) throw FormatError("svm model: dim must be >= 1");
    m.dim = static_cast<std::size_t>(dim);
    expect("classes");
    const auto nc = integer("class count");
    if (nc < 2 || nc > kNumClasses) throw FormatError("svm model: bad class count");
    for (long long k = 0; k < nc; ++k) m.classes.push_back(class_from_int(integer("class")));
    Vec mean(m.dim), sd(m.dim);
    expect("mean");
    for (auto& v : mean) v = number("mean");
    expect("stddev");
    for (auto& v : sd) v = number("stddev");
    m.normalizer = Normalizer(std::move(mean), std::move(sd));
    expect("machines");
    const auto nm = integer("machine count");
    if (nm < 0 || nm > 3) throw FormatError("svm model: bad machine count");
    for (long long k = 0; k < nm; ++k) {
        expect("machine");
        PairMachine pm;
        pm.positive = class_from_int(integer("positive class"));
        pm.negative = class_from_int(integer("negative class"));
        const auto nsv = integer("support vector count");
        if (nsv < 0) throw FormatError("svm model: negative support vector count");
        pm.machine.bias = number("bias");
        pm.machine.kernel = m.config.kernel;
        for (long long s = 0; s < nsv; ++s) {
            expect("sv");
            pm.machine.coef.push_back(number("coefficient"));
            Vec v(m.dim);
            for (auto& e : v) e = number("support vector");
            pm.machine.support_vectors.push_back(std::move(v));
        }
        m.machines.push_back(std::move(pm));
    }
    expect("end");
    return m;
}

inline void save_model(const std::filesystem::path& path, const SvmModel& m) {
    io::write_file(path, model_to_text(m));
}

inline SvmModel load_model(const std::filesystem::path& path) {
    return model_from_text(io::read_file(path));
}

} // namespace crust_probe::svm

#endif // CRUST_PROBE_SVM_HPP
