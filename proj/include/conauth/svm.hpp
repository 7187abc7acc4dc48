#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "conauth/rng.hpp"
#include "conauth/types.hpp"
#include "conauth/version.hpp"

namespace conauth {

/// Per-dimension (shift, scale) standardization. Dimensions with zero
/// training variance keep scale 1 so the vector layout stays fixed.
struct Standardizer {
    std::vector<double> shift;
    std::vector<double> scale;

    void fit(const std::vector<std::vector<double>>& xs) {
        if (xs.empty()) throw std::invalid_argument("Standardizer: no data");
        const std::size_t d = xs[0].size();
        shift.assign(d, 0.0);
        scale.assign(d, 1.0);
        for (const auto& x : xs) {
            for (std::size_t k = 0; k < d; ++k) shift[k] += x[k];
        }
        for (double& v : shift) v /= static_cast<double>(xs.size());
        std::vector<double> var(d, 0.0);
        for (const auto& x : xs) {
            for (std::size_t k = 0; k < d; ++k) {
                const double c = x[k] - shift[k];
                var[k] += c * c;
            }
        }
        for (std::size_t k = 0; k < d; ++k) {
            var[k] /= static_cast<double>(xs.size());
            scale[k] = var[k] > 1e-24 ? std::sqrt(var[k]) : 1.0;
        }
    }

    std::vector<double> apply(std::span<const double> x) const {
        std::vector<double> out(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) out[k] = (x[k] - shift[k]) / scale[k];
        return out;
    }

    std::vector<double> invert(std::span<const double> x) const {
        std::vector<double> out(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[k] * scale[k] + shift[k];
        return out;
    }
};

struct HyperGrid {
    std::vector<double> c_values = {0.125, 0.5, 2.0, 8.0, 32.0};
    // kernel widths are multiples of the median pairwise distance of the
    // standardized pooled training set
    std::vector<double> sigma_multipliers = {0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
    int folds = 3;
};

struct SmoResult {
    std::vector<double> alpha;
    double bias = 0.0;
    int iterations = 0;
    bool converged = false;
};

/// Soft-margin dual SMO with maximal-violating-pair working set selection.
/// K is the dense kernel matrix (row-major n x n) of the training points and
/// y holds +/-1 labels. Stops when the duality-gap bound m(alpha) - M(alpha)
/// drops below tol, which bounds every point's KKT residual by tol/2.
inline SmoResult smo_solve(const std::vector<double>& K, int n, const std::vector<int>& y,
                           double C, double tol = 1e-3, int max_iter = 100000) {
    SmoResult res;
    res.alpha.assign(n, 0.0);
    std::vector<double> G(n, -1.0);  // gradient of the dual objective
    auto& alpha = res.alpha;

    int stall = 0;
    for (int it = 0;; ++it) {
        int i = -1, j = -1;
        double m = -std::numeric_limits<double>::infinity();
        double M = std::numeric_limits<double>::infinity();
        for (int k = 0; k < n; ++k) {
            const double g = -y[k] * G[k];
            const bool in_up = y[k] > 0 ? alpha[k] < C : alpha[k] > 0.0;
            const bool in_low = y[k] > 0 ? alpha[k] > 0.0 : alpha[k] < C;
            if (in_up && g > m) {
                m = g;
                i = k;
            }
            if (in_low && g < M) {
                M = g;
                j = k;
            }
        }
        if (i < 0 || j < 0 || m - M <= tol) {
            if (i >= 0 && j >= 0) res.bias = 0.5 * (m + M);
            else if (i >= 0) res.bias = m;
            else if (j >= 0) res.bias = M;
            res.iterations = it;
            res.converged = true;
            return res;
        }
        if (it >= max_iter) {
            res.bias = 0.5 * (m + M);
            res.iterations = it;
            res.converged = false;
            return res;
        }

        const double* Ki = &K[static_cast<std::size_t>(i) * n];
        const double* Kj = &K[static_cast<std::size_t>(j) * n];
        double eta = Ki[i] + Kj[j] - 2.0 * Ki[j];
        if (eta < 1e-12) eta = 1e-12;

        const double ai_old = alpha[i], aj_old = alpha[j];
        const double Ei = y[i] * G[i];  // prediction error, bias cancels in the pair
        const double Ej = y[j] * G[j];
        double aj = aj_old + y[j] * (Ei - Ej) / eta;
        double L, H;
        if (y[i] == y[j]) {
            L = std::max(0.0, ai_old + aj_old - C);
            H = std::min(C, ai_old + aj_old);
        } else {
            L = std::max(0.0, aj_old - ai_old);
            H = std::min(C, C + aj_old - ai_old);
        }
        aj = std::clamp(aj, L, H);
        double ai = ai_old + static_cast<double>(y[i] * y[j]) * (aj_old - aj);
        ai = std::clamp(ai, 0.0, C);

        const double dai = ai - ai_old, daj = aj - aj_old;
        if (dai == 0.0 && daj == 0.0) {
            if (++stall > n) {  // violating pair cannot move; report instead of spinning
                res.bias = 0.5 * (m + M);
                res.iterations = it;
                res.converged = false;
                return res;
            }
            continue;
        }
        stall = 0;

        const double ci = y[i] * dai, cj = y[j] * daj;
        for (int k = 0; k < n; ++k) G[k] += y[k] * (ci * Ki[k] + cj * Kj[k]);
        alpha[i] = ai;
        alpha[j] = aj;
    }
}

/// Worst KKT residual of a dual solution over the training set, using the
/// decision function with the given bias. Independent of solver internals.
inline double kkt_max_residual(const std::vector<double>& K, int n, const std::vector<int>& y,
                               const std::vector<double>& alpha, double bias, double C) {
    double worst = 0.0;
    for (int k = 0; k < n; ++k) {
        double f = bias;
        for (int p = 0; p < n; ++p) f += alpha[p] * y[p] * K[static_cast<std::size_t>(k) * n + p];
        const double margin = y[k] * f - 1.0;
        double r;
        if (alpha[k] <= 1e-9) {
            r = std::max(0.0, -margin);
        } else if (alpha[k] >= C - 1e-9) {
            r = std::max(0.0, margin);
        } else {
            r = std::abs(margin);
        }
        worst = std::max(worst, r);
    }
    return worst;
}

/// Per-user, per-channel RBF verifier. Support vectors are stored in
/// standardized coordinates; scores are raw decision values (larger = more
/// genuine).
struct TrainedVerifier {
    ChannelId channel = ChannelId::TouchGesture;
    std::string user_id;
    std::vector<std::vector<double>> support_vectors;
    std::vector<double> dual_coefs;  // alpha_i * y_i
    double bias = 0.0;
    double sigma = 1.0;
    Standardizer scaler;

    // training provenance
    double c_param = 1.0;
    double cv_accuracy = 0.0;
    double kkt_residual = 0.0;
    std::uint64_t seed = 0;
    HyperGrid grid;

    std::size_t dim() const { return scaler.shift.size(); }

    double score(std::span<const double> raw) const {
        if (raw.size() != dim())
            throw std::invalid_argument("TrainedVerifier::score: dimension mismatch");
        const auto v = scaler.apply(raw);
        const double inv = 1.0 / (2.0 * sigma * sigma);
        double s = bias;
        for (std::size_t i = 0; i < support_vectors.size(); ++i) {
            const auto& sv = support_vectors[i];
            double d2 = 0.0;
            for (std::size_t k = 0; k < v.size(); ++k) {
                const double d = v[k] - sv[k];
                d2 += d * d;
            }
            s += dual_coefs[i] * std::exp(-d2 * inv);
        }
        return s;
    }

    double score(const FeatureVector& fv) const {
        if (fv.channel != channel)
            throw std::invalid_argument("TrainedVerifier::score: channel mismatch");
        return score(std::span<const double>(fv.values));
    }
};

/// Arithmetic mean of per-sample scores within one session.
inline double session_channel_score(const TrainedVerifier& model,
                                    const std::vector<FeatureVector>& samples) {
    if (samples.empty())
        throw std::invalid_argument("session_channel_score: no samples in session");
    double s = 0.0;
    for (const auto& fv : samples) s += model.score(fv);
    return s / static_cast<double>(samples.size());
}

struct TrainOptions {
    HyperGrid grid;
    std::uint64_t seed = 0;
    double tol = 1e-3;
    int max_iter = 100000;
};

namespace detail {

inline std::vector<double> squared_distances(const std::vector<std::vector<double>>& xs) {
    const std::size_t n = xs.size();
    std::vector<double> d2(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < xs[i].size(); ++k) {
                const double d = xs[i][k] - xs[j][k];
                s += d * d;
            }
            d2[i * n + j] = s;
            d2[j * n + i] = s;
        }
    }
    return d2;
}

inline double median_positive_distance(const std::vector<double>& d2, std::size_t n) {
    std::vector<double> dist;
    dist.reserve(n * (n - 1) / 2);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            if (d2[i * n + j] > 0.0) dist.push_back(std::sqrt(d2[i * n + j]));
        }
    }
    if (dist.empty()) return 0.0;
    const std::size_t mid = dist.size() / 2;
    std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(mid), dist.end());
    return dist[mid];
}

inline std::vector<double> kernel_from_d2(const std::vector<double>& d2, double sigma) {
    const double inv = 1.0 / (2.0 * sigma * sigma);
    std::vector<double> K(d2.size());
    for (std::size_t i = 0; i < d2.size(); ++i) K[i] = std::exp(-d2[i] * inv);
    return K;
}

}  // namespace detail

/// Trains the per-user verifier: standardizes on the pooled set, grid-searches
/// (C, sigma) by stratified k-fold accuracy (ties resolve to smaller C, then
/// smaller sigma), then solves the full problem. Training data is brought to
/// a canonical order first, so the result does not depend on input order.
/// Throws on degenerate data and on solver non-convergence.
inline TrainedVerifier train_verifier(const std::vector<FeatureVector>& genuine,
                                      const std::vector<FeatureVector>& impostor,
                                      const TrainOptions& opt = {}, std::string user_id = {},
                                      ChannelId channel = ChannelId::TouchGesture) {
    if (genuine.size() < 2 || impostor.size() < 2)
        throw std::invalid_argument("train_verifier: need >= 2 vectors per class");
    const std::size_t d = genuine[0].values.size();
    for (const auto* cls : {&genuine, &impostor}) {
        for (const auto& fv : *cls) {
            if (fv.values.size() != d)
                throw std::invalid_argument("train_verifier: inconsistent dimensions");
        }
    }
    if (opt.grid.c_values.empty() || opt.grid.sigma_multipliers.empty() || opt.grid.folds < 2)
        throw std::invalid_argument("train_verifier: invalid hyperparameter grid");

    auto sorted_values = [](const std::vector<FeatureVector>& vs) {
        std::vector<std::vector<double>> out;
        out.reserve(vs.size());
        for (const auto& fv : vs) out.push_back(fv.values);
        std::sort(out.begin(), out.end());
        return out;
    };
    const auto gen = sorted_values(genuine);
    const auto imp = sorted_values(impostor);

    std::vector<std::vector<double>> pooled;
    pooled.reserve(gen.size() + imp.size());
    pooled.insert(pooled.end(), gen.begin(), gen.end());
    pooled.insert(pooled.end(), imp.begin(), imp.end());
    const int n = static_cast<int>(pooled.size());
    const int n_gen = static_cast<int>(gen.size());

    bool all_same = true;
    for (const auto& x : pooled) {
        if (x != pooled[0]) {
            all_same = false;
            break;
        }
    }
    if (all_same)
        throw std::invalid_argument(
            "train_verifier: all training vectors identical; skip this channel");

    TrainedVerifier model;
    model.channel = channel;
    model.user_id = std::move(user_id);
    model.seed = opt.seed;
    model.grid = opt.grid;
    model.scaler.fit(pooled);

    std::vector<std::vector<double>> xs(pooled.size());
    for (std::size_t i = 0; i < pooled.size(); ++i) xs[i] = model.scaler.apply(pooled[i]);
    std::vector<int> y(n, -1);
    std::fill(y.begin(), y.begin() + n_gen, 1);

    const auto d2 = detail::squared_distances(xs);
    const double sigma_base = detail::median_positive_distance(d2, xs.size());
    if (sigma_base <= 0.0)
        throw std::invalid_argument("train_verifier: degenerate pairwise distances");

    // stratified fold assignment from a seeded shuffle of the canonical order
    const int folds = opt.grid.folds;
    std::vector<int> fold_of(n, 0);
    {
        RngStream rng(opt.seed, "verifier/cv/" + model.user_id + "/" + channel_name(channel));
        std::vector<std::size_t> gi = rng.sample_indices(static_cast<std::size_t>(n_gen),
                                                         static_cast<std::size_t>(n_gen));
        std::vector<std::size_t> ii = rng.sample_indices(static_cast<std::size_t>(n - n_gen),
                                                         static_cast<std::size_t>(n - n_gen));
        for (std::size_t k = 0; k < gi.size(); ++k) fold_of[gi[k]] = static_cast<int>(k) % folds;
        for (std::size_t k = 0; k < ii.size(); ++k)
            fold_of[n_gen + ii[k]] = static_cast<int>(k) % folds;
    }

    double best_acc = -1.0, best_c = 0.0, best_sigma = 0.0;
    std::vector<double> fold_acc(static_cast<std::size_t>(folds));
    for (double c : opt.grid.c_values) {
        for (double mult : opt.grid.sigma_multipliers) {
            const double sigma = mult * sigma_base;
            const auto K = detail::kernel_from_d2(d2, sigma);
            double acc_sum = 0.0;
            int used_folds = 0;
            bool failed = false;
            for (int f = 0; f < folds && !failed; ++f) {
                std::vector<int> tr, te;
                for (int k = 0; k < n; ++k) (fold_of[k] == f ? te : tr).push_back(k);
                if (te.empty() || tr.size() < 2) continue;
                const int nt = static_cast<int>(tr.size());
                std::vector<double> Ksub(static_cast<std::size_t>(nt) * nt);
                std::vector<int> ysub(nt);
                for (int a = 0; a < nt; ++a) {
                    ysub[a] = y[tr[a]];
                    for (int b = 0; b < nt; ++b)
                        Ksub[static_cast<std::size_t>(a) * nt + b] =
                            K[static_cast<std::size_t>(tr[a]) * n + tr[b]];
                }
                const auto sol = smo_solve(Ksub, nt, ysub, c, opt.tol, opt.max_iter);
                if (!sol.converged) {
                    failed = true;
                    break;
                }
                int correct = 0;
                for (int t : te) {
                    double fval = sol.bias;
                    for (int a = 0; a < nt; ++a)
                        fval += sol.alpha[a] * ysub[a] * K[static_cast<std::size_t>(t) * n + tr[a]];
                    if ((fval > 0.0) == (y[t] > 0)) ++correct;
                }
                acc_sum += static_cast<double>(correct) / static_cast<double>(te.size());
                ++used_folds;
            }
            if (failed || used_folds == 0) continue;
            const double acc = acc_sum / used_folds;
            if (acc > best_acc + 1e-12) {  // first hit wins ties: C ascending, sigma ascending
                best_acc = acc;
                best_c = c;
                best_sigma = sigma;
            }
        }
    }
    if (best_acc < 0.0)
        throw std::runtime_error("train_verifier: SMO failed to converge on every grid point");

    const auto K = detail::kernel_from_d2(d2, best_sigma);
    const auto sol = smo_solve(K, n, y, best_c, opt.tol, opt.max_iter);
    if (!sol.converged)
        throw std::runtime_error("train_verifier: SMO did not converge within iteration cap");

    model.sigma = best_sigma;
    model.c_param = best_c;
    model.cv_accuracy = best_acc;
    model.bias = sol.bias;
    model.kkt_residual = kkt_max_residual(K, n, y, sol.alpha, sol.bias, best_c);
    for (int k = 0; k < n; ++k) {
        if (sol.alpha[k] > 1e-10) {
            model.support_vectors.push_back(xs[k]);
            model.dual_coefs.push_back(sol.alpha[k] * y[k]);
        }
    }
    if (model.support_vectors.empty()) {
        // everything at the lower bound; keep one zero-weight vector so the
        // model invariant |SV| >= 1 holds and scoring degrades to the bias
        model.support_vectors.push_back(xs[0]);
        model.dual_coefs.push_back(0.0);
    }
    return model;
}

inline void to_json(nlohmann::json& j, const HyperGrid& g) {
    j = nlohmann::json{{"c_values", g.c_values},
                       {"sigma_multipliers", g.sigma_multipliers},
                       {"folds", g.folds}};
}

inline void from_json(const nlohmann::json& j, HyperGrid& g) {
    g.c_values = j.at("c_values").get<std::vector<double>>();
    g.sigma_multipliers = j.at("sigma_multipliers").get<std::vector<double>>();
    g.folds = j.at("folds").get<int>();
}

inline void to_json(nlohmann::json& j, const TrainedVerifier& m) {
    j = nlohmann::json{{"format_version", kModelFormatVersion},
                       {"channel", channel_name(m.channel)},
                       {"user_id", m.user_id},
                       {"support_vectors", m.support_vectors},
                       {"dual_coefs", m.dual_coefs},
                       {"bias", m.bias},
                       {"sigma", m.sigma},
                       {"scaler_shift", m.scaler.shift},
                       {"scaler_scale", m.scaler.scale},
                       {"c_param", m.c_param},
                       {"cv_accuracy", m.cv_accuracy},
                       {"kkt_residual", m.kkt_residual},
                       {"seed", m.seed},
                       {"grid", m.grid}};
}

inline void from_json(const nlohmann::json& j, TrainedVerifier& m) {
    const int version = j.at("format_version").get<int>();
    if (version != kModelFormatVersion)
        throw std::runtime_error("unsupported verifier format version " + std::to_string(version));
    const auto channel = channel_from_name(j.at("channel").get<std::string>());
    if (!channel) throw std::runtime_error("unknown channel in verifier file");
    m.channel = *channel;
    m.user_id = j.at("user_id").get<std::string>();
    m.support_vectors = j.at("support_vectors").get<std::vector<std::vector<double>>>();
    m.dual_coefs = j.at("dual_coefs").get<std::vector<double>>();
    m.bias = j.at("bias").get<double>();
    m.sigma = j.at("sigma").get<double>();
    m.scaler.shift = j.at("scaler_shift").get<std::vector<double>>();
    m.scaler.scale = j.at("scaler_scale").get<std::vector<double>>();
    m.c_param = j.at("c_param").get<double>();
    m.cv_accuracy = j.at("cv_accuracy").get<double>();
    m.kkt_residual = j.at("kkt_residual").get<double>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.grid = j.at("grid").get<HyperGrid>();
}

}  // namespace conauth
