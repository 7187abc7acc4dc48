#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "conauth/qcd.hpp"
#include "conauth/stats.hpp"
#include "conauth/types.hpp"

namespace conauth {

struct RocPoint {
    double threshold = 0.0;
    double far = 0.0;  // percent of impostor scores accepted (score >= threshold)
    double frr = 0.0;  // percent of genuine scores rejected
};

/// Threshold sweep plus the convex frontier it spans. The EER is the
/// diagonal crossing of the convex hull in (FAR, FRR) space, i.e. the best
/// equal-error operating point achievable by interpolating between sweep
/// points. That convention makes perfectly separated data hit exactly 0,
/// identical score distributions exactly 50, and is invariant under strictly
/// increasing score transforms.
struct RocCurve {
    std::vector<RocPoint> points;                    // ascending threshold
    std::vector<std::pair<double, double>> hull;     // (far, frr), far ascending
    double eer = 0.0;       // percent
    double accuracy = 0.0;  // 100 - eer

    /// linear interpolation of FRR on the hull at a given FAR (percent)
    double frr_at_far(double far) const {
        if (hull.empty()) return 0.0;
        if (far <= hull.front().first) return hull.front().second;
        if (far >= hull.back().first) return hull.back().second;
        for (std::size_t i = 1; i < hull.size(); ++i) {
            if (far <= hull[i].first) {
                const auto& [x0, y0] = hull[i - 1];
                const auto& [x1, y1] = hull[i];
                if (x1 == x0) return std::min(y0, y1);
                const double lam = (far - x0) / (x1 - x0);
                return y0 + lam * (y1 - y0);
            }
        }
        return hull.back().second;
    }
};

inline RocCurve compute_eer(const std::vector<double>& genuine,
                            const std::vector<double>& impostor) {
    if (genuine.empty() || impostor.empty())
        throw std::invalid_argument("compute_eer: both score classes must be non-empty");

    std::vector<double> gen = genuine, imp = impostor;
    std::sort(gen.begin(), gen.end());
    std::sort(imp.begin(), imp.end());

    std::vector<double> thresholds;
    thresholds.reserve(gen.size() + imp.size() + 2);
    thresholds.push_back(-std::numeric_limits<double>::infinity());
    std::merge(gen.begin(), gen.end(), imp.begin(), imp.end(), std::back_inserter(thresholds));
    thresholds.push_back(std::numeric_limits<double>::infinity());
    thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

    RocCurve curve;
    curve.points.reserve(thresholds.size());
    const double ng = static_cast<double>(gen.size());
    const double ni = static_cast<double>(imp.size());
    for (double t : thresholds) {
        const auto imp_ge =
            imp.end() - std::lower_bound(imp.begin(), imp.end(), t);  // accepted impostors
        const auto gen_lt = std::lower_bound(gen.begin(), gen.end(), t) - gen.begin();
        curve.points.push_back(
            {t, 100.0 * static_cast<double>(imp_ge) / ni, 100.0 * static_cast<double>(gen_lt) / ng});
    }

    // lower convex hull over (far, frr) operating points
    std::vector<std::pair<double, double>> pts;
    pts.reserve(curve.points.size());
    for (const auto& p : curve.points) pts.emplace_back(p.far, p.frr);
    std::sort(pts.begin(), pts.end());
    pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
    auto cross = [](const std::pair<double, double>& o, const std::pair<double, double>& a,
                    const std::pair<double, double>& b) {
        return (a.first - o.first) * (b.second - o.second) -
               (a.second - o.second) * (b.first - o.first);
    };
    for (const auto& p : pts) {
        auto& h = curve.hull;
        while (h.size() >= 2 && cross(h[h.size() - 2], h[h.size() - 1], p) <= 0.0) h.pop_back();
        h.push_back(p);
    }

    // diagonal crossing of the hull; FRR - FAR goes from >= 0 to < 0
    double eer = 50.0;
    const auto& h = curve.hull;
    for (std::size_t i = 0; i < h.size(); ++i) {
        const double d = h[i].second - h[i].first;
        if (d == 0.0) {
            eer = h[i].first;
            break;
        }
        if (d < 0.0) {
            if (i == 0) {
                eer = h[i].first;
            } else {
                const double d0 = h[i - 1].second - h[i - 1].first;
                const double lam = d0 / (d0 - d);
                eer = h[i - 1].first + lam * (h[i].first - h[i - 1].first);
            }
            break;
        }
    }
    curve.eer = eer;
    curve.accuracy = 100.0 - eer;
    return curve;
}

/// Per-user curves averaged vertically on a common FAR grid; the headline
/// EER reads off the averaged curve, the per-user EER mean is kept alongside
/// for comparison.
struct AveragedRoc {
    std::vector<double> far_grid;  // percent
    std::vector<double> mean_frr;
    double eer = 0.0;
    double accuracy = 0.0;
    double mean_of_user_eers = 0.0;
};

inline AveragedRoc average_rocs(const std::vector<RocCurve>& per_user, std::size_t grid_size = 1001) {
    if (per_user.empty()) throw std::invalid_argument("average_rocs: no curves");
    AveragedRoc out;
    out.far_grid.resize(grid_size);
    out.mean_frr.assign(grid_size, 0.0);
    for (std::size_t i = 0; i < grid_size; ++i) {
        out.far_grid[i] = 100.0 * static_cast<double>(i) / static_cast<double>(grid_size - 1);
        for (const auto& c : per_user) out.mean_frr[i] += c.frr_at_far(out.far_grid[i]);
        out.mean_frr[i] /= static_cast<double>(per_user.size());
    }
    double eer = 50.0;
    for (std::size_t i = 0; i < grid_size; ++i) {
        const double d = out.mean_frr[i] - out.far_grid[i];
        if (d <= 0.0) {
            if (d == 0.0 || i == 0) {
                eer = out.far_grid[i];
            } else {
                const double d0 = out.mean_frr[i - 1] - out.far_grid[i - 1];
                const double lam = d0 / (d0 - d);
                eer = out.far_grid[i - 1] + lam * (out.far_grid[i] - out.far_grid[i - 1]);
            }
            break;
        }
    }
    out.eer = eer;
    out.accuracy = 100.0 - eer;
    double s = 0.0;
    for (const auto& c : per_user) s += c.eer;
    out.mean_of_user_eers = s / static_cast<double>(per_user.size());
    return out;
}

/// One evaluated session sequence: fused scores in order, with the first
/// change_point sessions genuine. change_point == fused.size() marks a
/// genuine-only sequence.
struct AaSequence {
    std::string user_id;
    std::vector<double> fused;
    int change_point = 0;
};

struct AaCurvePoint {
    double h = 0.0;
    double pfd = 0.0;  // percent of genuine-only sequences crossing h
    double pnd = 0.0;  // percent of change sequences with no post-change crossing
    double add = 0.0;  // mean sessions to detect, censored at the suffix length
};

struct AaUserCurve {
    std::string user_id;
    std::vector<AaCurvePoint> points;
};

struct AaCurves {
    std::vector<double> h_grid;
    std::vector<AaUserCurve> per_user;
    std::vector<AaCurvePoint> averaged;
    double eer = 0.0;       // percent, PND = PFD crossing of the averaged curves
    double accuracy = 0.0;  // 100 - eer
    double h_at_eer = 0.0;
    double add_at_eer = 0.0;
    double mean_of_user_eers = 0.0;
    std::vector<SkipRecord> skipped_users;
};

namespace detail {

struct SeqTrace {
    std::string user_id;
    bool genuine_only = false;
    int change_point = 0;
    int length = 0;
    std::vector<double> cumulative;  // 1-based trace values at each session
};

inline AaCurvePoint user_point(const std::vector<SeqTrace>& traces, double h) {
    AaCurvePoint p;
    p.h = h;
    int n_gonly = 0, crossed = 0, n_change = 0, undetected = 0;
    double delay_sum = 0.0;
    for (const auto& t : traces) {
        if (t.genuine_only) {
            ++n_gonly;
            bool hit = false;
            for (double c : t.cumulative) {
                if (c >= h) {
                    hit = true;
                    break;
                }
            }
            crossed += hit ? 1 : 0;
        } else {
            ++n_change;
            const int suffix = t.length - t.change_point;
            int delay = suffix;  // censored when never detected post-change
            bool detected = false;
            for (int j = t.change_point + 1; j <= t.length; ++j) {
                if (t.cumulative[static_cast<std::size_t>(j) - 1] >= h) {
                    delay = j - t.change_point;
                    detected = true;
                    break;
                }
            }
            if (!detected) ++undetected;
            delay_sum += delay;
        }
    }
    p.pfd = n_gonly > 0 ? 100.0 * crossed / n_gonly : 0.0;
    p.pnd = n_change > 0 ? 100.0 * undetected / n_change : 0.0;
    p.add = n_change > 0 ? delay_sum / n_change : 0.0;
    return p;
}

/// PND - PFD crossing over the h grid, linear interpolation between grid
/// points; also interpolates ADD at the crossing.
struct AaOperating {
    double h = 0.0, eer = 50.0, add = 0.0;
};

inline AaOperating find_crossing(const std::vector<AaCurvePoint>& pts) {
    AaOperating op;
    if (pts.empty()) return op;
    auto diff = [](const AaCurvePoint& p) { return p.pfd - p.pnd; };
    if (diff(pts.front()) <= 0.0) {
        op.h = pts.front().h;
        op.eer = 0.5 * (pts.front().pfd + pts.front().pnd);
        op.add = pts.front().add;
        return op;
    }
    for (std::size_t i = 1; i < pts.size(); ++i) {
        const double d0 = diff(pts[i - 1]);
        const double d1 = diff(pts[i]);
        if (d1 <= 0.0) {
            const double lam = d0 == d1 ? 0.0 : d0 / (d0 - d1);
            op.h = pts[i - 1].h + lam * (pts[i].h - pts[i - 1].h);
            op.eer = pts[i - 1].pfd + lam * (pts[i].pfd - pts[i - 1].pfd);
            op.add = pts[i - 1].add + lam * (pts[i].add - pts[i - 1].add);
            return op;
        }
    }
    // no crossing inside the grid; report the closest end
    op.h = pts.back().h;
    op.eer = 0.5 * (pts.back().pfd + pts.back().pnd);
    op.add = pts.back().add;
    return op;
}

}  // namespace detail

/// A reasonable default sweep: 0 up to just above the largest cumulative sum
/// any sequence reaches, so the endpoints pin PFD=100/PND=0 and PFD=0/PND=100.
inline std::vector<double> default_h_grid(const std::vector<AaSequence>& seqs,
                                          const ScoreDensityPair& densities, int steps = 201) {
    double max_cum = 0.0;
    for (const auto& s : seqs) {
        QcdState st;
        st.threshold = std::numeric_limits<double>::infinity();
        for (double f : s.fused) {
            st = qcd_step(st, llr(densities, f));
            max_cum = std::max(max_cum, st.cumulative);
        }
    }
    const double top = std::max(max_cum, 1e-6) * 1.02;
    std::vector<double> grid(static_cast<std::size_t>(steps));
    for (int i = 0; i < steps; ++i)
        grid[static_cast<std::size_t>(i)] = top * static_cast<double>(i) / (steps - 1);
    return grid;
}

/// PFD / PND / ADD per threshold, computed per user then averaged; the AA
/// equal-error point is read off the averaged curves.
inline AaCurves compute_aa_curves(const std::vector<AaSequence>& seqs,
                                  const ScoreDensityPair& densities,
                                  const std::vector<double>& h_grid) {
    if (h_grid.empty()) throw std::invalid_argument("compute_aa_curves: empty h grid");
    AaCurves out;
    out.h_grid = h_grid;

    std::map<std::string, std::vector<detail::SeqTrace>> by_user;
    for (const auto& s : seqs) {
        detail::SeqTrace t;
        t.user_id = s.user_id;
        t.length = static_cast<int>(s.fused.size());
        t.change_point = s.change_point;
        t.genuine_only = s.change_point >= t.length;
        QcdState st;
        st.threshold = std::numeric_limits<double>::infinity();
        for (double f : s.fused) {
            st = qcd_step(st, llr(densities, f));
            t.cumulative.push_back(st.cumulative);
        }
        by_user[s.user_id].push_back(std::move(t));
    }

    double eer_sum = 0.0;
    for (const auto& [uid, traces] : by_user) {
        const bool has_gonly =
            std::any_of(traces.begin(), traces.end(), [](const auto& t) { return t.genuine_only; });
        const bool has_change =
            std::any_of(traces.begin(), traces.end(), [](const auto& t) { return !t.genuine_only; });
        if (!has_gonly || !has_change) {
            out.skipped_users.push_back(
                {uid, "needs at least one genuine-only and one change-point sequence"});
            continue;
        }
        AaUserCurve uc;
        uc.user_id = uid;
        uc.points.reserve(h_grid.size());
        for (double h : h_grid) uc.points.push_back(detail::user_point(traces, h));
        eer_sum += detail::find_crossing(uc.points).eer;
        out.per_user.push_back(std::move(uc));
    }
    if (out.per_user.empty())
        throw std::invalid_argument("compute_aa_curves: no user has both sequence kinds");

    out.averaged.reserve(h_grid.size());
    for (std::size_t i = 0; i < h_grid.size(); ++i) {
        AaCurvePoint p;
        p.h = h_grid[i];
        for (const auto& uc : out.per_user) {
            p.pfd += uc.points[i].pfd;
            p.pnd += uc.points[i].pnd;
            p.add += uc.points[i].add;
        }
        const auto nu = static_cast<double>(out.per_user.size());
        p.pfd /= nu;
        p.pnd /= nu;
        p.add /= nu;
        out.averaged.push_back(p);
    }

    const auto op = detail::find_crossing(out.averaged);
    out.eer = op.eer;
    out.accuracy = 100.0 - op.eer;
    out.h_at_eer = op.h;
    out.add_at_eer = op.add;
    out.mean_of_user_eers = eer_sum / static_cast<double>(out.per_user.size());
    return out;
}

}  // namespace conauth
