#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <stdexcept>
#include <vector>

#include "conauth/kde.hpp"

namespace conauth {

/// Genuine and impostor fused-score densities. Both evaluators are floored at
/// floor_eps inside llr(), which bounds each session's evidence contribution.
struct ScoreDensityPair {
    std::function<double(double)> genuine_pdf;
    std::function<double(double)> impostor_pdf;
    double floor_eps = 1e-6;

    // estimation metadata
    double bandwidth_genuine = 0.0;
    double bandwidth_impostor = 0.0;
    std::size_t n_genuine = 0;
    std::size_t n_impostor = 0;
};

/// Kernel density estimates of both score classes. Requires at least 10
/// scores per class; with fewer, the estimate is too unstable to gate
/// detections on.
inline ScoreDensityPair fit_densities(const std::vector<double>& genuine_scores,
                                      const std::vector<double>& impostor_scores) {
    if (genuine_scores.size() < 10 || impostor_scores.size() < 10)
        throw std::invalid_argument(
            "fit_densities: need >= 10 scores per class; collect more training sessions");
    const Kde1D g = Kde1D::fit(genuine_scores);
    const Kde1D i = Kde1D::fit(impostor_scores);
    ScoreDensityPair p;
    p.bandwidth_genuine = g.bandwidth();
    p.bandwidth_impostor = i.bandwidth();
    p.n_genuine = genuine_scores.size();
    p.n_impostor = impostor_scores.size();
    p.genuine_pdf = [g](double x) { return g.pdf(x); };
    p.impostor_pdf = [i](double x) { return i.pdf(x); };
    return p;
}

/// log(f_I / f_G) with both densities floored; negative for genuine-typical
/// scores, positive for impostor-typical ones.
inline double llr(const ScoreDensityPair& d, double fused_score) {
    const double fi = std::max(d.impostor_pdf(fused_score), d.floor_eps);
    const double fg = std::max(d.genuine_pdf(fused_score), d.floor_eps);
    return std::log(fi / fg);
}

/// Clamped cumulative sum state. cumulative >= 0 always; detected_at is set
/// the first time the sum reaches the threshold.
struct QcdState {
    double cumulative = 0.0;
    int session_index = 0;
    double threshold = 1.0;
    std::optional<int> detected_at;
};

inline QcdState qcd_step(QcdState state, double llr_value) {
    state.cumulative = std::max(state.cumulative + llr_value, 0.0);
    state.session_index += 1;
    if (!state.detected_at && state.cumulative >= state.threshold)
        state.detected_at = state.session_index;
    return state;
}

struct TraceRow {
    int j = 0;  // 1-based session index within the sequence
    double fused = 0.0;
    double llr = 0.0;
    double cumulative = 0.0;
    bool detected = false;
};

struct AaRunResult {
    std::vector<TraceRow> rows;
    int change_point = 0;  // number of genuine prefix sessions
    std::optional<int> detected_at;
    bool false_detection = false;            // crossed during the genuine prefix
    std::optional<int> detection_delay;      // detected_at - change_point, when post-change
};

/// Runs the detector over an ordered session-score sequence whose labels mark
/// the genuine prefix / impostor suffix. The change point is only used to
/// attribute the crossing.
inline AaRunResult run_aa(const std::vector<std::pair<double, bool>>& scores_with_impostor_flag,
                          const ScoreDensityPair& densities, double threshold) {
    AaRunResult out;
    QcdState st;
    st.threshold = threshold;
    int change_point = 0;
    bool seen_impostor = false;
    for (const auto& [_, is_impostor] : scores_with_impostor_flag) {
        if (!is_impostor && !seen_impostor) ++change_point;
        if (is_impostor) seen_impostor = true;
    }
    out.change_point = change_point;
    for (const auto& [fused, _] : scores_with_impostor_flag) {
        const double L = llr(densities, fused);
        st = qcd_step(st, L);
        out.rows.push_back({st.session_index, fused, L, st.cumulative,
                            st.detected_at && *st.detected_at <= st.session_index});
    }
    out.detected_at = st.detected_at;
    if (st.detected_at) {
        if (*st.detected_at <= change_point) {
            out.false_detection = true;
        } else {
            out.detection_delay = *st.detected_at - change_point;
        }
    }
    return out;
}

}  // namespace conauth
