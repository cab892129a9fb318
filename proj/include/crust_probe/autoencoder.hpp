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

// Convolutional autoencoder for 30x30 acoustic tiles.
//
//   encoder: conv 1->16 (3x3, stride 2, pad 1) 30x30 -> 15x15, softplus
//            conv 16->32 (3x3, stride 2, pad 1) 15x15 -> 8x8, softplus
//            dense 2048 -> latent_dim (linear)
//   decoder: dense latent_dim -> 2048, softplus
//            transposed conv 32->16 8x8 -> 15x15, softplus
//            transposed conv 16->1 15x15 -> 30x30, logistic
//
// The transposed convolutions are the exact adjoints of the encoder
// convolutions, so the geometry mirrors without output padding tricks.
//
// Training loss over a batch B of tiles with positions p_i and latents z_i:
//
//   reconstruction = 1/|B| sum_i mean_px (y_i - x_i)^2
//   proximity      = 1/|P| sum_{(i,j) in P} exp(-d_ij^2 / (2 sigma^2)) |z_i - z_j|^2
//   total          = reconstruction + lambda * proximity
//
// where P holds the in-batch pairs i < j with d_ij = |p_i - p_j| < d_max
// (proximity is 0 when P is empty). Gradients are derived by hand below and
// checked against central differences by grad_check().

#ifndef CRUST_PROBE_AUTOENCODER_HPP
#define CRUST_PROBE_AUTOENCODER_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <numeric>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include "core.hpp"
#include "io.hpp"
#include "tiles.hpp"

namespace crust_probe::ae {

inline constexpr int kIn = tiles::kTileRows; // 30
inline constexpr int kC1 = 16;
inline constexpr int kH1 = 15;
inline constexpr int kC2 = 32;
inline constexpr int kH2 = 8;
inline constexpr int kFlat = kC2 * kH2 * kH2; // 2048
inline constexpr int kPixels = kIn * kIn;

struct TrainConfig {
    int epochs = 30;
    int batch_size = 1;
    double learning_rate = 1.5;
    double proximity_weight = 0.1; // lambda
    double proximity_scale = 1.0;  // sigma, meters
    double proximity_cutoff = 3.0; // d_max, meters
    std::uint64_t seed = 1;

    void validate() const {
        if (epochs < 1) throw ValidationError("epochs must be >= 1");
        if (batch_size < 1) throw ValidationError("batch_size must be >= 1");
        if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
            throw ValidationError("learning_rate must be >= 0");
        if (!(proximity_weight >= 0.0) || !std::isfinite(proximity_weight))
            throw ValidationError("proximity_weight must be >= 0");
        if (!(proximity_scale > 0.0)) throw ValidationError("proximity_scale must be > 0");
        if (!(proximity_cutoff > 0.0)) throw ValidationError("proximity_cutoff must be > 0");
    }
};

struct Tensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> data;

    bool operator==(const Tensor&) const = default;
};

enum Param : std::size_t {
    kEncConv1W, kEncConv1B, kEncConv2W, kEncConv2B, kEncFcW, kEncFcB,
    kDecFcW, kDecFcB, kDecTconv1W, kDecTconv1B, kDecTconv2W, kDecTconv2B,
    kParamCount
};

using Params = std::array<Tensor, kParamCount>;

/// Parameter tensors with the given latent size, all zero.
inline Params make_params(int latent_dim) {
    const auto L = static_cast<std::size_t>(latent_dim);
    auto t = [](std::string name, std::vector<std::size_t> shape) {
        const auto n = std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
        return Tensor{std::move(name), std::move(shape), std::vector<double>(n, 0.0)};
    };
    return {t("enc_conv1_w", {kC1, 1, 3, 3}),  t("enc_conv1_b", {kC1}),
            t("enc_conv2_w", {kC2, kC1, 3, 3}), t("enc_conv2_b", {kC2}),
            t("enc_fc_w", {L, kFlat}),          t("enc_fc_b", {L}),
            t("dec_fc_w", {kFlat, L}),          t("dec_fc_b", {kFlat}),
            t("dec_tconv1_w", {kC2, kC1, 3, 3}), t("dec_tconv1_b", {kC1}),
            t("dec_tconv2_w", {kC1, 1, 3, 3}),  t("dec_tconv2_b", {1})};
}

struct AutoencoderModel {
    int latent_dim = 16;
    TrainConfig config; // settings the model was trained with
    Params params = make_params(16);

    /// Weights uniform in [-0.05, 0.05] from `seed`; biases zero.
    static AutoencoderModel initialize(int latent_dim, std::uint64_t seed) {
        if (latent_dim < 1) throw ValidationError("latent_dim must be >= 1");
        AutoencoderModel m;
        m.latent_dim = latent_dim;
        m.config.seed = seed;
        m.params = make_params(latent_dim);
        Rng rng(seed);
        for (auto& p : m.params) {
            if (p.shape.size() == 1) continue;
            for (auto& v : p.data) v = rng.uniform(-0.05, 0.05);
        }
        return m;
    }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& p : params) n += p.data.size();
        return n;
    }

    bool operator==(const AutoencoderModel& o) const {
        return latent_dim == o.latent_dim && params == o.params;
    }
};

struct LossBreakdown {
    double total = 0.0;
    double reconstruction = 0.0;
    double proximity = 0.0;
};

namespace detail {

inline double softplus(double x) { return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x)); }

inline double sigmoid(double x) {
    if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
    const double e = std::exp(x);
    return e / (1.0 + e);
}

// Strided 3x3 convolution, stride 2, padding 1. in: [cin][hin][hin], out: [cout][hout][hout],
// w: [cout][cin][3][3].
inline void conv_forward(const double* in, int cin, int hin, const double* w, const double* b,
                         int cout, int hout, double* out) {
    for (int o = 0; o < cout; ++o)
        for (int i = 0; i < hout; ++i)
            for (int j = 0; j < hout; ++j) {
                double acc = b[o];
                for (int c = 0; c < cin; ++c) {
                    const double* wk = w + ((o * cin + c) * 9);
                    const double* ic = in + c * hin * hin;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int y = 2 * i + ky - 1;
                        if (y < 0 || y >= hin) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int x = 2 * j + kx - 1;
                            if (x < 0 || x >= hin) continue;
                            acc += wk[ky * 3 + kx] * ic[y * hin + x];
                        }
                    }
                }
                out[(o * hout + i) * hout + j] = acc;
            }
}

// Accumulates dw, db and (when din != nullptr) din for conv_forward.
inline void conv_backward(const double* in, int cin, int hin, const double* w, const double* dout,
                          int cout, int hout, double* dw, double* db, double* din) {
    for (int o = 0; o < cout; ++o)
        for (int i = 0; i < hout; ++i)
            for (int j = 0; j < hout; ++j) {
                const double g = dout[(o * hout + i) * hout + j];
                db[o] += g;
                for (int c = 0; c < cin; ++c) {
                    const double* wk = w + ((o * cin + c) * 9);
                    double* dwk = dw + ((o * cin + c) * 9);
                    const double* ic = in + c * hin * hin;
                    double* dc = din ? din + c * hin * hin : nullptr;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int y = 2 * i + ky - 1;
                        if (y < 0 || y >= hin) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int x = 2 * j + kx - 1;
                            if (x < 0 || x >= hin) continue;
                            dwk[ky * 3 + kx] += g * ic[y * hin + x];
                            if (dc) dc[y * hin + x] += g * wk[ky * 3 + kx];
                        }
                    }
                }
            }
}

// Adjoint of conv_forward. in: [cin][hin][hin], out: [cout][hout][hout],
// w: [cin][cout][3][3].
inline void tconv_forward(const double* in, int cin, int hin, const double* w, const double* b,
                          int cout, int hout, double* out) {
    for (int o = 0; o < cout; ++o)
        std::fill(out + o * hout * hout, out + (o + 1) * hout * hout, b[o]);
    for (int c = 0; c < cin; ++c)
        for (int i = 0; i < hin; ++i)
            for (int j = 0; j < hin; ++j) {
                const double v = in[(c * hin + i) * hin + j];
                for (int o = 0; o < cout; ++o) {
                    const double* wk = w + ((c * cout + o) * 9);
                    double* oc = out + o * hout * hout;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int y = 2 * i + ky - 1;
                        if (y < 0 || y >= hout) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int x = 2 * j + kx - 1;
                            if (x < 0 || x >= hout) continue;
                            oc[y * hout + x] += wk[ky * 3 + kx] * v;
                        }
                    }
                }
            }
}

inline void tconv_backward(const double* in, int cin, int hin, const double* w, const double* dout,
                           int cout, int hout, double* dw, double* db, double* din) {
    for (int o = 0; o < cout; ++o)
        for (int k = 0; k < hout * hout; ++k) db[o] += dout[o * hout * hout + k];
    for (int c = 0; c < cin; ++c)
        for (int i = 0; i < hin; ++i)
            for (int j = 0; j < hin; ++j) {
                const double v = in[(c * hin + i) * hin + j];
                double acc = 0.0;
                for (int o = 0; o < cout; ++o) {
                    const double* wk = w + ((c * cout + o) * 9);
                    double* dwk = dw + ((c * cout + o) * 9);
                    const double* go = dout + o * hout * hout;
                    for (int ky = 0; ky < 3; ++ky) {
                        const int y = 2 * i + ky - 1;
                        if (y < 0 || y >= hout) continue;
                        for (int kx = 0; kx < 3; ++kx) {
                            const int x = 2 * j + kx - 1;
                            if (x < 0 || x >= hout) continue;
                            const double g = go[y * hout + x];
                            dwk[ky * 3 + kx] += g * v;
                            acc += g * wk[ky * 3 + kx];
                        }
                    }
                }
                if (din) din[(c * hin + i) * hin + j] += acc;
            }
}

/// Intermediate values of one forward pass, kept for backpropagation.
struct Activations {
    std::vector<double> x = std::vector<double>(kPixels);
    std::vector<double> a1 = std::vector<double>(kC1 * kH1 * kH1), h1 = a1;
    std::vector<double> a2 = std::vector<double>(kFlat), h2 = a2;
    std::vector<double> z;
    std::vector<double> a3 = std::vector<double>(kFlat), h3 = a3;
    std::vector<double> a4 = std::vector<double>(kC1 * kH1 * kH1), h4 = a4;
    std::vector<double> a5 = std::vector<double>(kPixels), y = a5;
};

inline void encode_into(const Params& p, int latent_dim, Activations& act) {
    conv_forward(act.x.data(), 1, kIn, p[kEncConv1W].data.data(), p[kEncConv1B].data.data(), kC1, kH1,
                 act.a1.data());
    for (std::size_t k = 0; k < act.a1.size(); ++k) act.h1[k] = softplus(act.a1[k]);
    conv_forward(act.h1.data(), kC1, kH1, p[kEncConv2W].data.data(), p[kEncConv2B].data.data(), kC2,
                 kH2, act.a2.data());
    for (std::size_t k = 0; k < act.a2.size(); ++k) act.h2[k] = softplus(act.a2[k]);
    act.z.assign(static_cast<std::size_t>(latent_dim), 0.0);
    const auto& w = p[kEncFcW].data;
    for (int l = 0; l < latent_dim; ++l) {
        double acc = p[kEncFcB].data[static_cast<std::size_t>(l)];
        const double* row = w.data() + static_cast<std::size_t>(l) * kFlat;
        for (int k = 0; k < kFlat; ++k) acc += row[k] * act.h2[static_cast<std::size_t>(k)];
        act.z[static_cast<std::size_t>(l)] = acc;
    }
}

inline void decode_into(const Params& p, int latent_dim, Activations& act) {
    const auto& w = p[kDecFcW].data;
    for (int k = 0; k < kFlat; ++k) {
        double acc = p[kDecFcB].data[static_cast<std::size_t>(k)];
        const double* row = w.data() + static_cast<std::size_t>(k) * static_cast<std::size_t>(latent_dim);
        for (int l = 0; l < latent_dim; ++l) acc += row[l] * act.z[static_cast<std::size_t>(l)];
        act.a3[static_cast<std::size_t>(k)] = acc;
        act.h3[static_cast<std::size_t>(k)] = softplus(acc);
    }
    tconv_forward(act.h3.data(), kC2, kH2, p[kDecTconv1W].data.data(), p[kDecTconv1B].data.data(), kC1,
                  kH1, act.a4.data());
    for (std::size_t k = 0; k < act.a4.size(); ++k) act.h4[k] = softplus(act.a4[k]);
    tconv_forward(act.h4.data(), kC1, kH1, p[kDecTconv2W].data.data(), p[kDecTconv2B].data.data(), 1,
                  kIn, act.a5.data());
    for (std::size_t k = 0; k < act.a5.size(); ++k) act.y[k] = sigmoid(act.a5[k]);
}

inline void load_tile(const tiles::AcousticTile& t, Activations& act) {
    for (int k = 0; k < kPixels; ++k) act.x[static_cast<std::size_t>(k)] = t.values[static_cast<std::size_t>(k)];
}

/// Backpropagates dL/dy (stored in `dy`) plus an extra latent gradient.
inline void backward(const Params& p, int latent_dim, const Activations& act, std::vector<double> dy,
                     std::span<const double> dz_extra, Params& g) {
    const auto L = static_cast<std::size_t>(latent_dim);
    // logistic output
    for (std::size_t k = 0; k < dy.size(); ++k) dy[k] *= act.y[k] * (1.0 - act.y[k]);
    std::vector<double> dh4(act.h4.size(), 0.0);
    tconv_backward(act.h4.data(), kC1, kH1, p[kDecTconv2W].data.data(), dy.data(), 1, kIn,
                   g[kDecTconv2W].data.data(), g[kDecTconv2B].data.data(), dh4.data());
    for (std::size_t k = 0; k < dh4.size(); ++k) dh4[k] *= sigmoid(act.a4[k]);
    std::vector<double> dh3(act.h3.size(), 0.0);
    tconv_backward(act.h3.data(), kC2, kH2, p[kDecTconv1W].data.data(), dh4.data(), kC1, kH1,
                   g[kDecTconv1W].data.data(), g[kDecTconv1B].data.data(), dh3.data());

    std::vector<double> dz(dz_extra.begin(), dz_extra.end());
    dz.resize(L, 0.0);
    {
        const auto& w = p[kDecFcW].data;
        auto& gw = g[kDecFcW].data;
        auto& gb = g[kDecFcB].data;
        for (std::size_t k = 0; k < static_cast<std::size_t>(kFlat); ++k) {
            const double da = dh3[k] * sigmoid(act.a3[k]);
            gb[k] += da;
            const double* row = w.data() + k * L;
            double* grow = gw.data() + k * L;
            for (std::size_t l = 0; l < L; ++l) {
                grow[l] += da * act.z[l];
                dz[l] += da * row[l];
            }
        }
    }
    std::vector<double> dh2(static_cast<std::size_t>(kFlat), 0.0);
    {
        const auto& w = p[kEncFcW].data;
        auto& gw = g[kEncFcW].data;
        auto& gb = g[kEncFcB].data;
        for (std::size_t l = 0; l < L; ++l) {
            gb[l] += dz[l];
            const double* row = w.data() + l * kFlat;
            double* grow = gw.data() + l * kFlat;
            for (std::size_t k = 0; k < static_cast<std::size_t>(kFlat); ++k) {
                grow[k] += dz[l] * act.h2[k];
                dh2[k] += dz[l] * row[k];
            }
        }
    }
    for (std::size_t k = 0; k < dh2.size(); ++k) dh2[k] *= sigmoid(act.a2[k]);
    std::vector<double> dh1(act.h1.size(), 0.0);
    conv_backward(act.h1.data(), kC1, kH1, p[kEncConv2W].data.data(), dh2.data(), kC2, kH2,
                  g[kEncConv2W].data.data(), g[kEncConv2B].data.data(), dh1.data());
    for (std::size_t k = 0; k < dh1.size(); ++k) dh1[k] *= sigmoid(act.a1[k]);
    conv_backward(act.x.data(), 1, kIn, p[kEncConv1W].data.data(), dh1.data(), kC1, kH1,
                  g[kEncConv1W].data.data(), g[kEncConv1B].data.data(), nullptr);
}

struct Pair {
    std::size_t i, j;
    double weight;
};

inline std::vector<Pair> proximity_pairs(std::span<const tiles::AcousticTile> batch, const TrainConfig& cfg) {
    std::vector<Pair> pairs;
    const double two_s2 = 2.0 * cfg.proximity_scale * cfg.proximity_scale;
    for (std::size_t i = 0; i < batch.size(); ++i)
        for (std::size_t j = i + 1; j < batch.size(); ++j) {
            const double dx = batch[i].x - batch[j].x;
            const double dy = batch[i].y - batch[j].y;
            const double d2 = dx * dx + dy * dy;
            if (std::sqrt(d2) < cfg.proximity_cutoff) pairs.push_back({i, j, std::exp(-d2 / two_s2)});
        }
    return pairs;
}

inline double proximity_value(std::span<const Pair> pairs, const std::vector<std::vector<double>>& z) {
    if (pairs.empty()) return 0.0;
    double acc = 0.0;
    for (const auto& pr : pairs) {
        double d = 0.0;
        for (std::size_t l = 0; l < z[pr.i].size(); ++l) {
            const double diff = z[pr.i][l] - z[pr.j][l];
            d += diff * diff;
        }
        acc += pr.weight * d;
    }
    return acc / static_cast<double>(pairs.size());
}

inline void validate_batch(std::span<const tiles::AcousticTile> batch) {
    if (batch.empty()) throw ValidationError("loss: empty batch");
    for (const auto& t : batch)
        if (!std::isfinite(t.x) || !std::isfinite(t.y))
            throw ValidationError("loss: tile " + std::to_string(t.center_ping) + " has a non-finite position");
}

} // namespace detail

/// Pair weight exp(-d^2 / (2 sigma^2)).
inline double proximity_weight(double distance, double sigma) {
    return std::exp(-distance * distance / (2.0 * sigma * sigma));
}

/// Loss of a batch; positions come from the tiles.
inline LossBreakdown loss(const AutoencoderModel& m, std::span<const tiles::AcousticTile> batch,
                          const TrainConfig& cfg) {
    detail::validate_batch(batch);
    detail::Activations act;
    std::vector<std::vector<double>> z(batch.size());
    double recon = 0.0;
    for (std::size_t b = 0; b < batch.size(); ++b) {
        detail::load_tile(batch[b], act);
        detail::encode_into(m.params, m.latent_dim, act);
        detail::decode_into(m.params, m.latent_dim, act);
        double se = 0.0;
        for (int k = 0; k < kPixels; ++k) {
            const double d = act.y[static_cast<std::size_t>(k)] - act.x[static_cast<std::size_t>(k)];
            se += d * d;
        }
        recon += se / kPixels;
        z[b] = act.z;
    }
    recon /= static_cast<double>(batch.size());
    const auto pairs = detail::proximity_pairs(batch, cfg);
    const double prox = detail::proximity_value(pairs, z);
    return {recon + cfg.proximity_weight * prox, recon, prox};
}

/// Loss and its gradient with respect to every parameter.
inline LossBreakdown loss_and_gradient(const AutoencoderModel& m, std::span<const tiles::AcousticTile> batch,
                                       const TrainConfig& cfg, Params& grad) {
    detail::validate_batch(batch);
    grad = make_params(m.latent_dim);
    const std::size_t B = batch.size();
    std::vector<detail::Activations> acts(B);
    std::vector<std::vector<double>> z(B);
    double recon = 0.0;
    for (std::size_t b = 0; b < B; ++b) {
        detail::load_tile(batch[b], acts[b]);
        detail::encode_into(m.params, m.latent_dim, acts[b]);
        detail::decode_into(m.params, m.latent_dim, acts[b]);
        double se = 0.0;
        for (int k = 0; k < kPixels; ++k) {
            const double d = acts[b].y[static_cast<std::size_t>(k)] - acts[b].x[static_cast<std::size_t>(k)];
            se += d * d;
        }
        recon += se / kPixels;
        z[b] = acts[b].z;
    }
    recon /= static_cast<double>(B);

    const auto pairs = detail::proximity_pairs(batch, cfg);
    const double prox = detail::proximity_value(pairs, z);
    const auto L = static_cast<std::size_t>(m.latent_dim);
    std::vector<std::vector<double>> dz(B, std::vector<double>(L, 0.0));
    if (!pairs.empty() && cfg.proximity_weight != 0.0) {
        const double scale = 2.0 * cfg.proximity_weight / static_cast<double>(pairs.size());
        for (const auto& pr : pairs)
            for (std::size_t l = 0; l < L; ++l) {
                const double g = scale * pr.weight * (z[pr.i][l] - z[pr.j][l]);
                dz[pr.i][l] += g;
                dz[pr.j][l] -= g;
            }
    }

    const double dscale = 2.0 / (static_cast<double>(kPixels) * static_cast<double>(B));
    for (std::size_t b = 0; b < B; ++b) {
        std::vector<double> dy(kPixels);
        for (std::size_t k = 0; k < dy.size(); ++k) dy[k] = dscale * (acts[b].y[k] - acts[b].x[k]);
        detail::backward(m.params, m.latent_dim, acts[b], std::move(dy), dz[b], grad);
    }
    return {recon + cfg.proximity_weight * prox, recon, prox};
}

// ---------------------------------------------------------------------------
// Training

struct EpochLoss {
    int epoch = 0; // 0 is the untrained model
    double total = 0.0;
    double reconstruction = 0.0;
    double proximity = 0.0;
};

struct TrainResult {
    AutoencoderModel model;
    std::vector<EpochLoss> log;
};

/// Plain mini-batch SGD from a seeded uniform initialization. The log holds
/// the whole-set loss (all tiles as one batch) before training and after
/// every epoch.
inline TrainResult train(std::span<const tiles::AcousticTile> tiles_in, const TrainConfig& cfg,
                         int latent_dim = 16) {
    cfg.validate();
    if (tiles_in.size() < 2)
        throw ValidationError("autoencoder training needs at least 2 tiles, got " +
                              std::to_string(tiles_in.size()));
    TrainResult r{AutoencoderModel::initialize(latent_dim, cfg.seed), {}};
    r.model.config = cfg;
    Rng rng(cfg.seed ^ 0x9E3779B97F4A7C15ull);

    auto log_epoch = [&](int epoch) {
        const auto l = loss(r.model, tiles_in, cfg);
        if (!std::isfinite(l.total))
            throw TrainingDivergedError("training diverged at epoch " + std::to_string(epoch) +
                                            ": loss is not finite",
                                        epoch);
        r.log.push_back({epoch, l.total, l.reconstruction, l.proximity});
    };
    log_epoch(0);

    std::vector<std::size_t> order(tiles_in.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::vector<tiles::AcousticTile> batch;
    Params grad;
    for (int epoch = 1; epoch <= cfg.epochs; ++epoch) {
        rng.shuffle(order.begin(), order.end());
        for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(cfg.batch_size)) {
            const std::size_t end = std::min(order.size(), start + static_cast<std::size_t>(cfg.batch_size));
            batch.clear();
            for (std::size_t k = start; k < end; ++k) batch.push_back(tiles_in[order[k]]);
            const auto l = loss_and_gradient(r.model, batch, cfg, grad);
            if (!std::isfinite(l.total))
                throw TrainingDivergedError("training diverged at epoch " + std::to_string(epoch) +
                                                ": batch loss is not finite",
                                            epoch);
            if (cfg.learning_rate == 0.0) continue;
            for (std::size_t p = 0; p < kParamCount; ++p)
                for (std::size_t k = 0; k < grad[p].data.size(); ++k)
                    r.model.params[p].data[k] -= cfg.learning_rate * grad[p].data[k];
        }
        log_epoch(epoch);
    }
    return r;
}

// ---------------------------------------------------------------------------
// Encoding

struct LatentVector {
    std::vector<double> values;
    std::uint64_t center_ping = 0;
    double x = 0.0;
    double y = 0.0;
    std::optional<SeafloorClass> label;

    bool operator==(const LatentVector&) const = default;
};

/// Encoder forward pass per tile, in input order.
inline std::vector<LatentVector> encode(const AutoencoderModel& m, std::span<const tiles::AcousticTile> in) {
    std::vector<LatentVector> out;
    out.reserve(in.size());
    detail::Activations act;
    for (const auto& t : in) {
        detail::load_tile(t, act);
        detail::encode_into(m.params, m.latent_dim, act);
        out.push_back({act.z, t.center_ping, t.x, t.y, t.label});
    }
    return out;
}

/// Encoder forward pass on a raw row-major image; it must hold 30x30 values.
inline std::vector<double> encode_image(const AutoencoderModel& m, std::span<const float> image) {
    if (image.size() != static_cast<std::size_t>(kPixels))
        throw ValidationError("encode: expected a 30x30 tile (900 values), got " +
                              std::to_string(image.size()));
    detail::Activations act;
    for (int k = 0; k < kPixels; ++k) act.x[static_cast<std::size_t>(k)] = image[static_cast<std::size_t>(k)];
    detail::encode_into(m.params, m.latent_dim, act);
    return act.z;
}

inline std::vector<double> decode(const AutoencoderModel& m, std::span<const double> latent) {
    if (latent.size() != static_cast<std::size_t>(m.latent_dim))
        throw ValidationError("decode: latent has " + std::to_string(latent.size()) + " values, model expects " +
                              std::to_string(m.latent_dim));
    detail::Activations act;
    act.z.assign(latent.begin(), latent.end());
    detail::decode_into(m.params, m.latent_dim, act);
    return act.y;
}

/// Mean squared reconstruction error of one tile.
inline double reconstruction_error(const AutoencoderModel& m, const tiles::AcousticTile& t) {
    detail::Activations act;
    detail::load_tile(t, act);
    detail::encode_into(m.params, m.latent_dim, act);
    detail::decode_into(m.params, m.latent_dim, act);
    double se = 0.0;
    for (int k = 0; k < kPixels; ++k) {
        const double d = act.y[static_cast<std::size_t>(k)] - act.x[static_cast<std::size_t>(k)];
        se += d * d;
    }
    return se / kPixels;
}

// ---------------------------------------------------------------------------
// Gradient check

/// Largest relative error between the analytic gradient of the total loss and
/// central differences, over 64 parameters spread across all tensors. The
/// relative error of a parameter is |a - n| / max(|a|, |n|, 1e-6); a
/// parameter whose two gradients are both exactly zero contributes 0.
inline double grad_check(const AutoencoderModel& m, std::span<const tiles::AcousticTile> batch,
                         const TrainConfig& cfg, double epsilon = 1e-5, std::uint64_t seed = 1,
                         std::size_t samples = 64) {
    if (!(epsilon >= 1e-7 && epsilon <= 1e-3))
        throw ValidationError("grad_check: epsilon must lie in [1e-7, 1e-3]");
    Params analytic;
    loss_and_gradient(m, batch, cfg, analytic);
    Rng rng(seed);
    AutoencoderModel probe = m;
    double worst = 0.0;
    for (std::size_t s = 0; s < samples; ++s) {
        const std::size_t p = s % kParamCount;
        const std::size_t k = rng.below(probe.params[p].data.size());
        const double orig = probe.params[p].data[k];
        probe.params[p].data[k] = orig + epsilon;
        const double up = loss(probe, batch, cfg).total;
        probe.params[p].data[k] = orig - epsilon;
        const double down = loss(probe, batch, cfg).total;
        probe.params[p].data[k] = orig;
        const double numeric = (up - down) / (2.0 * epsilon);
        const double a = analytic[p].data[k];
        if (a == 0.0 && numeric == 0.0) continue;
        const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), 1e-6});
        worst = std::max(worst, rel);
    }
    return worst;
}

// ---------------------------------------------------------------------------
// Model file: text, versioned.
//
//   crust-probe-autoencoder 1
//   architecture conv16s2-conv32s2-dense
//   latent_dim <L>
//   <config key value lines>
//   tensor <name> <dims...>
//   <values, whitespace separated>
//   ...
//   end

inline constexpr std::string_view kAeMagic = "crust-probe-autoencoder";
inline constexpr std::string_view kAeArchitecture = "conv16s2-conv32s2-dense";

inline std::string model_to_text(const AutoencoderModel& m) {
    std::string s;
    s += std::string(kAeMagic) + " 1\n";
    s += "architecture " + std::string(kAeArchitecture) + "\n";
    s += "latent_dim " + std::to_string(m.latent_dim) + "\n";
    s += "seed " + std::to_string(m.config.seed) + "\n";
    s += "epochs " + std::to_string(m.config.epochs) + "\n";
    s += "batch_size " + std::to_string(m.config.batch_size) + "\n";
    s += "learning_rate " + io::fmt(m.config.learning_rate) + "\n";
    s += "proximity_weight " + io::fmt(m.config.proximity_weight) + "\n";
    s += "proximity_scale " + io::fmt(m.config.proximity_scale) + "\n";
    s += "proximity_cutoff " + io::fmt(m.config.proximity_cutoff) + "\n";
    for (const auto& t : m.params) {
        s += "tensor " + t.name;
        for (auto d : t.shape) s += " " + std::to_string(d);
        s += "\n";
        for (std::size_t k = 0; k < t.data.size(); ++k) {
            s += io::fmt(t.data[k]);
            s += (k % 8 == 7 || k + 1 == t.data.size()) ? '\n' : ' ';
        }
    }
    s += "end\n";
    return s;
}

inline AutoencoderModel model_from_text(std::string_view text) {
    std::istringstream in{std::string(text)};
    std::string word;
    auto expect_word = [&](std::string_view w) {
        if (!(in >> word) || word != w)
            throw FormatError("autoencoder model: expected '" + std::string(w) + "', found '" + word + "'");
    };
    auto next = [&](const char* what) {
        if (!(in >> word)) throw FormatError(std::string("autoencoder model: missing ") + what);
        return word;
    };
    expect_word(kAeMagic);
    if (next("version") != "1") throw FormatError("autoencoder model: unsupported version " + word);
    expect_word("architecture");
    if (next("architecture") != kAeArchitecture)
        throw FormatError("autoencoder model: unknown architecture " + word);
    AutoencoderModel m;
    expect_word("latent_dim");
    m.latent_dim = static_cast<int>(io::parse_int(next("latent_dim"), "latent_dim"));
    if (m.latent_dim < 1) throw FormatError("autoencoder model: latent_dim must be >= 1");
    expect_word("seed");
    m.config.seed = static_cast<std::uint64_t>(io::parse_int(next("seed"), "seed"));
    expect_word("epochs");
    m.config.epochs = static_cast<int>(io::parse_int(next("epochs"), "epochs"));
    expect_word("batch_size");
    m.config.batch_size = static_cast<int>(io::parse_int(next("batch_size"), "batch_size"));
    expect_word("learning_rate");
    m.config.learning_rate = io::parse_double(next("learning_rate"), "learning_rate");
    expect_word("proximity_weight");
    m.config.proximity_weight = io::parse_double(next("proximity_weight"), "proximity_weight");
    expect_word("proximity_scale");
    m.config.proximity_scale = io::parse_double(next("proximity_scale"), "proximity_scale");
    expect_word("proximity_cutoff");
    m.config.proximity_cutoff = io::parse_double(next("proximity_cutoff"), "proximity_cutoff");

    m.params = make_params(m.latent_dim);
    for (auto& t : m.params) {
        expect_word("tensor");
        if (next("tensor name") != t.name)
            throw FormatError("autoencoder model: expected tensor " + t.name + ", found " + word);
        for (auto d : t.shape) {
            const auto got = io::parse_int(next("tensor dimension"), "tensor dimension");
            if (got != static_cast<long long>(d))
                throw FormatError("autoencoder model: tensor " + t.name + " has wrong shape");
        }
        for (auto& v : t.data) v = io::parse_double(next("tensor value"), t.name);
    }
    expect_word("end");
    return m;
}

inline void save_model(const std::filesystem::path& path, const AutoencoderModel& m) {
    io::write_file(path, model_to_text(m));
}

inline AutoencoderModel load_model(const std::filesystem::path& path) {
    return model_from_text(io::read_file(path));
}

// ---------------------------------------------------------------------------
// Latent CSV: center_ping,x,y,label,z0..z{L-1} (empty label when unlabeled)

inline std::string latents_to_csv(std::span<const LatentVector> v, int latent_dim) {
    std::string s = "center_ping,x,y,label";
    for (int l = 0; l < latent_dim; ++l) s += ",z" + std::to_string(l);
    s += "\n";
    for (const auto& z : v) {
        if (z.values.size() != static_cast<std::size_t>(latent_dim))
            throw ValidationError("latent length mismatch while writing CSV");
        s += std::to_string(z.center_ping) + "," + io::fmt(z.x) + "," + io::fmt(z.y) + "," +
             (z.label ? std::to_string(to_int(*z.label)) : std::string());
        for (double d : z.values) s += "," + io::fmt(d);
        s += "\n";
    }
    return s;
}

inline std::vector<LatentVector> latents_from_csv(std::string_view text, const std::string& source = "latents") {
    auto t = io::parse_csv(text, {"center_ping", "x", "y", "label"}, source, true);
    const std::size_t L = t.header.size() - 4;
    if (L == 0) throw FormatError(source + ": no latent columns");
    for (std::size_t l = 0; l < L; ++l)
        if (t.header[4 + l] != "z" + std::to_string(l))
            throw FormatError(source + ": unexpected latent column '" + t.header[4 + l] + "'");
    std::vector<LatentVector> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        LatentVector z;
        z.center_ping = static_cast<std::uint64_t>(io::parse_int(r[0], "center_ping"));
        z.x = io::parse_double(r[1], "x");
        z.y = io::parse_double(r[2], "y");
        if (!r[3].empty()) z.label = parse_class(r[3]);
        z.values.reserve(L);
        for (std::size_t l = 0; l < L; ++l) z.values.push_back(io::parse_double(r[4 + l], "latent"));
        out.push_back(std::move(z));
    }
    return out;
}

} // namespace crust_probe::ae

#endif // CRUST_PROBE_AUTOENCODER_HPP
