#pragma once

// Straight-line reference implementations used to cross-check the library.
// Everything here is written independently of the engine code paths: plain
// loops, re-sorted copies, no shared helpers beyond the standard library.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace oracle {

inline bool rel_close(double a, double b, double tol = 1e-9) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

// ---------------------------------------------------------------------------
// behavior template matching: brute-force double loop over template entries
// and test events
// ---------------------------------------------------------------------------

struct TemplateEntry {
    std::string event;
    int slot = 0;
    int freq = 0;
};

inline double behavior_score(const std::vector<TemplateEntry>& entries,
                             const std::vector<std::pair<std::string, int>>& test_events,
                             bool count_duplicates = false) {
    double total = 0.0;
    std::set<std::pair<std::string, int>> used;
    for (const auto& ev : test_events) {
        if (!count_duplicates && used.count(ev)) continue;
        for (const auto& e : entries) {
            if (e.event == ev.first && e.slot == ev.second) {
                total += static_cast<double>(e.freq) * e.freq;
                used.insert(ev);
                break;
            }
        }
    }
    return total;
}

// ---------------------------------------------------------------------------
// order statistics, recomputed from scratch
// ---------------------------------------------------------------------------

inline double pct(std::vector<double> xs, double p) {
    std::sort(xs.begin(), xs.end());
    if (xs.size() == 1) return xs[0];
    const double pos = p / 100.0 * static_cast<double>(xs.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const double frac = pos - static_cast<double>(lo);
    const std::size_t hi = std::min(lo + 1, xs.size() - 1);
    return xs[lo] * (1.0 - frac) + xs[hi] * frac;
}

inline double mean(const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / static_cast<double>(xs.size());
}

inline double pop_std(const std::vector<double>& xs) {
    const double m = mean(xs);
    double s = 0.0;
    for (double x : xs) s += (x - m) * (x - m);
    return std::sqrt(s / static_cast<double>(xs.size()));
}

inline double median(std::vector<double> xs) {
    std::sort(xs.begin(), xs.end());
    const std::size_t n = xs.size();
    return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

/// mean, median, max, min, max-min, std, p1, p99, p99-p1
inline std::vector<double> stat9(const std::vector<double>& xs) {
    const double mx = *std::max_element(xs.begin(), xs.end());
    const double mn = *std::min_element(xs.begin(), xs.end());
    return {mean(xs),       median(xs),   mx, mn, mx - mn, pop_std(xs), pct(xs, 1.0),
            pct(xs, 99.0), pct(xs, 99.0) - pct(xs, 1.0)};
}

/// mean, median, std, p1, p99, p99-p1
inline std::vector<double> stat6(const std::vector<double>& xs) {
    return {mean(xs), median(xs), pop_std(xs), pct(xs, 1.0), pct(xs, 99.0),
            pct(xs, 99.0) - pct(xs, 1.0)};
}

// ---------------------------------------------------------------------------
// feature extraction references
// ---------------------------------------------------------------------------

struct InertialPoint {
    double x, y, z, t;
};

inline std::vector<double> inertial_features(const std::vector<InertialPoint>& w) {
    std::vector<double> out;
    for (int axis = 0; axis < 3; ++axis) {
        std::vector<double> vals;
        for (const auto& p : w) vals.push_back(axis == 0 ? p.x : axis == 1 ? p.y : p.z);
        for (double v : stat9(vals)) out.push_back(v);
    }
    return out;
}

struct KeyPress {
    double press, release;
};

inline std::vector<double> keystroke_features(std::vector<KeyPress> keys) {
    std::stable_sort(keys.begin(), keys.end(),
                     [](const KeyPress& a, const KeyPress& b) { return a.press < b.press; });
    std::vector<double> hold, pp, rp;
    for (const auto& k : keys) hold.push_back(k.release - k.press);
    for (std::size_t i = 0; i + 1 < keys.size(); ++i) {
        pp.push_back(keys[i + 1].press - keys[i].press);
        rp.push_back(keys[i + 1].press - keys[i].release);
    }
    std::vector<double> out;
    for (const auto* series : {&hold, &pp, &rp}) {
        for (double v : stat6(*series)) out.push_back(v);
    }
    return out;
}

struct TouchPoint {
    double x, y, pressure, t;
};

/// mirrors the frozen 28-feature contract via an independent finite
/// difference pass
inline std::vector<double> touch_features(const std::vector<TouchPoint>& raw) {
    std::vector<TouchPoint> pts;
    for (const auto& p : raw) {
        if (!pts.empty() && p.t == pts.back().t) {
            pts.back() = p;
        } else {
            pts.push_back(p);
        }
    }
    const std::size_t m = pts.size();
    if (m < 2) throw std::invalid_argument("touch oracle: too short");

    std::vector<double> vx, vy, vmag, seglen, mid;
    for (std::size_t i = 0; i + 1 < m; ++i) {
        const double dx = pts[i + 1].x - pts[i].x;
        const double dy = pts[i + 1].y - pts[i].y;
        const double dt = pts[i + 1].t - pts[i].t;
        vx.push_back(dx / dt);
        vy.push_back(dy / dt);
        seglen.push_back(std::sqrt(dx * dx + dy * dy));
        vmag.push_back(std::sqrt(dx * dx + dy * dy) / dt);
        mid.push_back(0.5 * (pts[i].t + pts[i + 1].t));
    }
    std::vector<double> amag;
    for (std::size_t i = 0; i + 1 < vx.size(); ++i) {
        const double dt = mid[i + 1] - mid[i];
        const double ax = (vx[i + 1] - vx[i]) / dt;
        const double ay = (vy[i + 1] - vy[i]) / dt;
        amag.push_back(std::sqrt(ax * ax + ay * ay));
    }

    double path = 0.0;
    for (double s : seglen) path += s;
    const double dxe = pts[m - 1].x - pts[0].x;
    const double dye = pts[m - 1].y - pts[0].y;
    const double direct = std::sqrt(dxe * dxe + dye * dye);
    const double duration = pts[m - 1].t - pts[0].t;

    std::vector<double> pr, xs, ys;
    for (const auto& p : pts) {
        pr.push_back(p.pressure);
        xs.push_back(p.x);
        ys.push_back(p.y);
    }

    int maxima = 0;
    for (std::size_t i = 1; i + 1 < vmag.size(); ++i) {
        if (vmag[i] > vmag[i - 1] && vmag[i] > vmag[i + 1]) ++maxima;
    }

    auto vmax = [](const std::vector<double>& v) { return *std::max_element(v.begin(), v.end()); };
    auto vmin = [](const std::vector<double>& v) { return *std::min_element(v.begin(), v.end()); };

    return {duration,
            static_cast<double>(m),
            pts[0].x,
            pts[0].y,
            pts[m - 1].x,
            pts[m - 1].y,
            path,
            direct,
            path > 0.0 ? direct / path : 0.0,
            std::atan2(pts[1].y - pts[0].y, pts[1].x - pts[0].x),
            std::atan2(dye, dxe),
            mean(vmag),
            vmax(vmag),
            vmin(vmag),
            mean(vx),
            mean(vy),
            amag.empty() ? 0.0 : mean(amag),
            amag.empty() ? 0.0 : vmax(amag),
            amag.empty() ? 0.0 : vmin(amag),
            mean(pr),
            vmax(pr),
            vmax(xs) - vmin(xs),
            vmax(ys) - vmin(ys),
            mean(seglen),
            vmax(seglen),
            path / duration,
            static_cast<double>(maxima),
            median(vmag)};
}

// ---------------------------------------------------------------------------
// equal error rate: exhaustive enumeration of threshold operating points,
// then the minimum diagonal crossing over every pair of points (achievable
// by randomizing between two thresholds)
// ---------------------------------------------------------------------------

inline double eer_percent(const std::vector<double>& genuine, const std::vector<double>& impostor) {
    std::vector<double> thresholds = genuine;
    thresholds.insert(thresholds.end(), impostor.begin(), impostor.end());
    thresholds.push_back(-std::numeric_limits<double>::infinity());
    thresholds.push_back(std::numeric_limits<double>::infinity());
    std::sort(thresholds.begin(), thresholds.end());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    std::vector<std::pair<double, double>> pts;  // (far, frr) percent
    for (double t : thresholds) {
        int fa = 0, fr = 0;
        for (double s : impostor) fa += s >= t ? 1 : 0;
        for (double s : genuine) fr += s < t ? 1 : 0;
        pts.emplace_back(100.0 * fa / static_cast<double>(impostor.size()),
                         100.0 * fr / static_cast<double>(genuine.size()));
    }

    double best = std::numeric_limits<double>::infinity();
    for (const auto& p : pts) {
        if (p.second == p.first) best = std::min(best, p.first);
    }
    for (std::size_t a = 0; a < pts.size(); ++a) {
        for (std::size_t b = 0; b < pts.size(); ++b) {
            const double da = pts[a].second - pts[a].first;  // below diagonal when negative
            const double db = pts[b].second - pts[b].first;
            if (da < 0.0 && db > 0.0) {
                const double lam = db / (db - da);  // fraction of the way from b to a
                const double cross =
                    pts[b].first + lam * (pts[a].first - pts[b].first);
                best = std::min(best, cross);
            }
        }
    }
    return best;
}

// ---------------------------------------------------------------------------
// Gaussian KDE evaluated directly
// ---------------------------------------------------------------------------

inline double kde_pdf(const std::vector<double>& samples, double bandwidth, double x) {
    double s = 0.0;
    for (double xi : samples) {
        const double u = (x - xi) / bandwidth;
        s += std::exp(-0.5 * u * u) / std::sqrt(2.0 * 3.14159265358979323846);
    }
    return s / (bandwidth * static_cast<double>(samples.size()));
}

}  // namespace oracle
