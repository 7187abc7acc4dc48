#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "conauth/stats.hpp"
#include "conauth/types.hpp"

namespace conauth {

struct FeatureConfig {
    // keystroke sequences are split into bursts on press-press gaps larger
    // than this
    double key_burst_gap_s = 5.0;
};

/// Nine order statistics of one value series. std is the population standard
/// deviation; percentiles interpolate linearly at position p/100 * (n-1).
struct StatSummary {
    double mean = 0.0;
    double median = 0.0;
    double max = 0.0;
    double min = 0.0;
    double max_minus_min = 0.0;
    double std_dev = 0.0;
    double p1 = 0.0;
    double p99 = 0.0;
    double p99_minus_p1 = 0.0;

    std::array<double, 9> as_array() const {
        return {mean, median, max, min, max_minus_min, std_dev, p1, p99, p99_minus_p1};
    }
};

inline StatSummary stat_summary(std::span<const double> xs) {
    if (xs.empty()) throw std::invalid_argument("stat_summary: empty input");
    std::vector<double> sorted(xs.begin(), xs.end());
    std::sort(sorted.begin(), sorted.end());
    StatSummary s;
    s.mean = mean_of(xs);
    s.median = median_sorted(sorted);
    s.min = sorted.front();
    s.max = sorted.back();
    s.max_minus_min = s.max - s.min;
    s.std_dev = population_std(xs);
    s.p1 = percentile_sorted(sorted, 1.0);
    s.p99 = percentile_sorted(sorted, 99.0);
    s.p99_minus_p1 = s.p99 - s.p1;
    return s;
}

/// 27 features: the 9 statistics per axis, axes concatenated x -> y -> z.
/// Time stamps are not used. Returns nothing for windows of < 2 samples.
inline std::optional<FeatureVector> extract_inertial(ChannelId channel,
                                                     const InertialWindow& window,
                                                     std::string_view session_id = {}) {
    if (window.size() < 2) return std::nullopt;
    FeatureVector fv;
    fv.channel = channel;
    fv.source_session = std::string(session_id);
    fv.values.reserve(27);
    std::vector<double> axis(window.size());
    for (int a = 0; a < 3; ++a) {
        for (std::size_t i = 0; i < window.size(); ++i) {
            axis[i] = a == 0 ? window[i].x : a == 1 ? window[i].y : window[i].z;
        }
        const auto stats = stat_summary(axis).as_array();
        fv.values.insert(fv.values.end(), stats.begin(), stats.end());
    }
    return fv;
}

namespace detail {

/// keystroke statistic subset: mean, median, std, p1, p99, p99-p1
inline void append_six_stats(std::vector<double>& out, std::span<const double> xs) {
    const StatSummary s = stat_summary(xs);
    out.insert(out.end(), {s.mean, s.median, s.std_dev, s.p1, s.p99, s.p99_minus_p1});
}

}  // namespace detail

/// 18 features from one burst of >= 2 keys: hold times, press-press
/// latencies and release-press latencies (negative on rollover typing),
/// each summarized by 6 statistics, concatenated hold -> PP -> RP.
inline std::optional<FeatureVector> extract_keystroke(std::span<const KeyEvent> burst,
                                                      std::string_view session_id = {}) {
    if (burst.size() < 2) return std::nullopt;
    std::vector<KeyEvent> keys(burst.begin(), burst.end());
    std::stable_sort(keys.begin(), keys.end(),
                     [](const KeyEvent& a, const KeyEvent& b) { return a.press_t < b.press_t; });

    std::vector<double> hold, pp, rp;
    hold.reserve(keys.size());
    pp.reserve(keys.size() - 1);
    rp.reserve(keys.size() - 1);
    for (const auto& k : keys) hold.push_back(k.release_t - k.press_t);
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
        pp.push_back(keys[i + 1].press_t - keys[i].press_t);
        rp.push_back(keys[i + 1].press_t - keys[i].release_t);
    }

    FeatureVector fv;
    fv.channel = ChannelId::Keystroke;
    fv.source_session = std::string(session_id);
    fv.values.reserve(18);
    detail::append_six_stats(fv.values, hold);
    detail::append_six_stats(fv.values, pp);
    detail::append_six_stats(fv.values, rp);
    return fv;
}

/// 28 global gesture features (fixed order, see touch_feature_names()).
/// Samples with equal consecutive timestamps are collapsed keeping the last;
/// gestures that are too short after dedup, or with decreasing timestamps,
/// are skipped. Acceleration features are 0 for two-point gestures.
inline std::optional<FeatureVector> extract_touch(const TouchGestureData& gesture,
                                                  std::string_view session_id = {}) {
    std::vector<TouchSample> pts;
    pts.reserve(gesture.size());
    for (const auto& s : gesture) {
        if (!pts.empty() && s.t == pts.back().t) {
            pts.back() = s;
        } else if (!pts.empty() && s.t < pts.back().t) {
            return std::nullopt;
        } else {
            pts.push_back(s);
        }
    }
    const std::size_t m = pts.size();
    if (m < 2) return std::nullopt;

    const double duration = pts.back().t - pts.front().t;

    std::vector<double> seg_len(m - 1), vx(m - 1), vy(m - 1), vmag(m - 1), mid_t(m - 1);
    double path = 0.0;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double dx = pts[i + 1].x - pts[i].x;
        const double dy = pts[i + 1].y - pts[i].y;
        const double dt = pts[i + 1].t - pts[i].t;  // > 0 after dedup
        seg_len[i] = std::hypot(dx, dy);
        path += seg_len[i];
        vx[i] = dx / dt;
        vy[i] = dy / dt;
        vmag[i] = seg_len[i] / dt;
        mid_t[i] = 0.5 * (pts[i].t + pts[i + 1].t);
    }

    std::vector<double> amag;
    if (m >= 3) {
        amag.reserve(m - 2);
        for (std::size_t i = 0; i + 2 < m; ++i) {
            const double dt = mid_t[i + 1] - mid_t[i];
            amag.push_back(std::hypot(vx[i + 1] - vx[i], vy[i + 1] - vy[i]) / dt);
        }
    }

    const double direct = std::hypot(pts.back().x - pts.front().x, pts.back().y - pts.front().y);

    std::vector<double> pressure(m), px(m), py(m);
    for (std::size_t i = 0; i < m; ++i) {
        pressure[i] = pts[i].pressure;
        px[i] = pts[i].x;
        py[i] = pts[i].y;
    }

    std::vector<double> vmag_sorted = vmag;
    std::sort(vmag_sorted.begin(), vmag_sorted.end());

    int vel_local_maxima = 0;
    for (std::size_t i = 1; i + 1 < vmag.size(); ++i) {
        if (vmag[i] > vmag[i - 1] && vmag[i] > vmag[i + 1]) ++vel_local_maxima;
    }

    FeatureVector fv;
    fv.channel = ChannelId::TouchGesture;
    fv.source_session = std::string(session_id);
    fv.values = {
        duration,
        static_cast<double>(m),
        pts.front().x,
        pts.front().y,
        pts.back().x,
        pts.back().y,
        path,
        direct,
        path > 0.0 ? direct / path : 0.0,
        std::atan2(pts[1].y - pts[0].y, pts[1].x - pts[0].x),
        std::atan2(pts.back().y - pts.front().y, pts.back().x - pts.front().x),
        mean_of(vmag),
        *std::max_element(vmag.begin(), vmag.end()),
        *std::min_element(vmag.begin(), vmag.end()),
        mean_of(vx),
        mean_of(vy),
        amag.empty() ? 0.0 : mean_of(amag),
        amag.empty() ? 0.0 : *std::max_element(amag.begin(), amag.end()),
        amag.empty() ? 0.0 : *std::min_element(amag.begin(), amag.end()),
        mean_of(pressure),
        *std::max_element(pressure.begin(), pressure.end()),
        *std::max_element(px.begin(), px.end()) - *std::min_element(px.begin(), px.end()),
        *std::max_element(py.begin(), py.end()) - *std::min_element(py.begin(), py.end()),
        mean_of(seg_len),
        *std::max_element(seg_len.begin(), seg_len.end()),
        path / duration,
        static_cast<double>(vel_local_maxima),
        median_sorted(vmag_sorted),
    };
    return fv;
}

/// Split an ordered key-event list into bursts on large press-press gaps.
inline std::vector<std::vector<KeyEvent>> segment_key_bursts(const std::vector<KeyEvent>& keys,
                                                             double gap_s = 5.0) {
    std::vector<KeyEvent> sorted = keys;
    std::stable_sort(sorted.begin(), sorted.end(),
                     [](const KeyEvent& a, const KeyEvent& b) { return a.press_t < b.press_t; });
    std::vector<std::vector<KeyEvent>> bursts;
    for (const auto& k : sorted) {
        if (bursts.empty() || k.press_t - bursts.back().back().press_t > gap_s) {
            bursts.emplace_back();
        }
        bursts.back().push_back(k);
    }
    return bursts;
}

/// All extractable feature vectors of one session for one biometric channel.
/// Invalid samples (too short, non-monotone time) are silently dropped; the
/// caller sees the reduced count.
inline std::vector<FeatureVector> session_feature_vectors(const Session& s, ChannelId channel,
                                                          const FeatureConfig& cfg = {}) {
    std::vector<FeatureVector> out;
    switch (channel) {
        case ChannelId::TouchGesture:
            for (const auto& g : s.touch) {
                if (auto fv = extract_touch(g, s.session_id)) out.push_back(std::move(*fv));
            }
            break;
        case ChannelId::Keystroke:
            for (const auto& burst : segment_key_bursts(s.keys, cfg.key_burst_gap_s)) {
                if (auto fv = extract_keystroke(burst, s.session_id)) out.push_back(std::move(*fv));
            }
            break;
        case ChannelId::Accelerometer:
            for (const auto& w : s.accel) {
                if (auto fv = extract_inertial(channel, w, s.session_id)) out.push_back(std::move(*fv));
            }
            break;
        case ChannelId::Gyroscope:
            for (const auto& w : s.gyro) {
                if (auto fv = extract_inertial(channel, w, s.session_id)) out.push_back(std::move(*fv));
            }
            break;
        default:
            break;
    }
    return out;
}

inline const std::vector<std::string>& touch_feature_names() {
    static const std::vector<std::string> names = {
        "duration",        "point_count",     "start_x",           "start_y",
        "end_x",           "end_y",           "path_length",       "direct_distance",
        "straightness",    "initial_angle",   "end_to_end_angle",  "vel_mean",
        "vel_max",         "vel_min",         "vel_x_mean",        "vel_y_mean",
        "acc_mean",        "acc_max",         "acc_min",           "pressure_mean",
        "pressure_max",    "x_range",         "y_range",           "adjacent_dist_mean",
        "adjacent_dist_max", "path_per_second", "vel_local_maxima", "vel_median",
    };
    return names;
}

inline const std::vector<std::string>& inertial_feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const char* axis : {"x", "y", "z"}) {
            for (const char* stat :
                 {"mean", "median", "max", "min", "range", "std", "p1", "p99", "p99_p1_range"}) {
                v.push_back(std::string(axis) + "_" + stat);
            }
        }
        return v;
    }();
    return names;
}

inline const std::vector<std::string>& keystroke_feature_names() {
    static const std::vector<std::string> names = [] {
        std::vector<std::string> v;
        for (const char* series : {"hold", "pp", "rp"}) {
            for (const char* stat : {"mean", "median", "std", "p1", "p99", "p99_p1_range"}) {
                v.push_back(std::string(series) + "_" + stat);
            }
        }
        return v;
    }();
    return names;
}

inline const std::vector<std::string>& feature_names(ChannelId c) {
    switch (c) {
        case ChannelId::TouchGesture: return touch_feature_names();
        case ChannelId::Keystroke: return keystroke_feature_names();
        default: return inertial_feature_names();
    }
}

}  // namespace conauth
