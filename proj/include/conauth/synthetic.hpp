#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "conauth/dataset.hpp"
#include "conauth/rng.hpp"
#include "conauth/types.hpp"

namespace conauth {

/// separability 0 makes a channel carry no identity signal (every user draws
/// from the same population model); 1 gives each user their own well
/// separated habits and motor parameters.
struct ChannelGenParams {
    double separability = 0.5;
    double presence = 0.74;  // Bernoulli per session
};

struct GeneratorConfig {
    int n_users = 20;
    int days_per_user = 10;
    int sessions_per_day = 5;
    std::uint64_t seed = 1;
    std::map<ChannelId, ChannelGenParams> channels;

    GeneratorConfig() {
        for (ChannelId c : kAllChannels) channels[c] = ChannelGenParams{};
    }

    void set_separability(double d) {
        for (auto& [_, p] : channels) p.separability = d;
    }
    void set_presence(double p) {
        for (auto& [_, v] : channels) v.presence = p;
    }

    void validate() const {
        if (n_users < 1 || days_per_user < 1 || sessions_per_day < 1)
            throw std::invalid_argument("GeneratorConfig: counts must be >= 1");
        for (const auto& [c, p] : channels) {
            if (p.separability < 0.0 || p.separability > 1.0 || p.presence < 0.0 ||
                p.presence > 1.0)
                throw std::invalid_argument(std::string("GeneratorConfig: bad parameters for ") +
                                            channel_name(c));
        }
    }
};

namespace gen_detail {

inline constexpr int kAppPool = 60;
inline constexpr int kWifiPool = 80;
inline constexpr double kLat0 = 40.30, kLon0 = -3.90, kGeoExtent = 0.30;

struct UserProfile {
    std::vector<int> pref_apps, pref_wifi;
    std::vector<std::pair<double, double>> pref_locs;
    std::vector<double> rhythm_centers;  // seconds since midnight

    double touch_speed = 0, touch_len = 0, touch_dir_x = 0, touch_dir_y = 0;
    double touch_pressure = 0, touch_curvature = 0;
    double key_hold = 0, key_pp = 0;
    double accel_theta = 0, accel_phi = 0, accel_tremor = 0;
    double gyro_mu[3] = {0, 0, 0};
    double gyro_std = 0;
};

// population-level parameters every user shrinks toward as separability -> 0
struct Population {
    double touch_speed = 600.0, touch_len = 380.0, touch_angle = 1.2;
    double touch_pressure = 0.45, touch_curvature = 0.0;
    double key_hold = 0.095, key_pp = 0.27;
    double accel_theta = 0.45, accel_phi = 0.8, accel_tremor = 0.35;
    double gyro_mu = 0.0, gyro_std = 0.25;
};

inline double mix(double pop, double user, double separability) {
    return pop + separability * (user - pop);
}

inline UserProfile make_profile(std::uint64_t seed, const std::string& uid) {
    const Population pop;
    UserProfile u;
    RngStream apps(seed, "gen/profile/apps/" + uid);
    for (std::size_t i : apps.sample_indices(kAppPool, 6)) u.pref_apps.push_back(static_cast<int>(i));
    RngStream wifi(seed, "gen/profile/wifi/" + uid);
    for (std::size_t i : wifi.sample_indices(kWifiPool, 4)) u.pref_wifi.push_back(static_cast<int>(i));
    RngStream gps(seed, "gen/profile/gps/" + uid);
    for (int i = 0; i < 3; ++i) {
        u.pref_locs.emplace_back(kLat0 + gps.uniform01() * kGeoExtent,
                                 kLon0 + gps.uniform01() * kGeoExtent);
    }
    RngStream rhythm(seed, "gen/profile/rhythm/" + uid);
    for (int i = 0; i < 4; ++i) u.rhythm_centers.push_back(rhythm.uniform(0.0, 86400.0));

    RngStream bio(seed, "gen/profile/bio/" + uid);
    u.touch_speed = std::max(120.0, bio.normal(pop.touch_speed, 220.0));
    u.touch_len = std::max(80.0, bio.normal(pop.touch_len, 140.0));
    const double angle = bio.uniform(0.0, 2.0 * 3.141592653589793);
    u.touch_dir_x = std::cos(angle);
    u.touch_dir_y = std::sin(angle);
    u.touch_pressure = std::clamp(bio.normal(pop.touch_pressure, 0.16), 0.05, 0.95);
    u.touch_curvature = bio.normal(0.0, 0.35);
    u.key_hold = std::max(0.035, bio.normal(pop.key_hold, 0.035));
    u.key_pp = std::max(0.10, bio.normal(pop.key_pp, 0.09));
    u.accel_theta = bio.normal(pop.accel_theta, 0.30);
    u.accel_phi = bio.normal(pop.accel_phi, 0.90);
    u.accel_tremor = std::clamp(std::abs(bio.normal(pop.accel_tremor, 0.15)), 0.05, 1.0);
    for (double& m : u.gyro_mu) m = bio.normal(0.0, 0.18);
    u.gyro_std = std::clamp(std::abs(bio.normal(pop.gyro_std, 0.10)), 0.03, 0.80);
    return u;
}

/// 1/(k+1)-weighted pick shared by all users, so separability-0 draws are
/// identically distributed across the population
inline int popularity_pick(RngStream& rng, int pool) {
    double total = 0.0;
    for (int k = 0; k < pool; ++k) total += 1.0 / (k + 1.0);
    double u = rng.uniform01() * total;
    for (int k = 0; k < pool; ++k) {
        u -= 1.0 / (k + 1.0);
        if (u <= 0.0) return k;
    }
    return pool - 1;
}

inline std::string app_name(int k) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "app_%02d", k);
    return buf;
}

inline std::string wifi_name(int k) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "net_%02d", k);
    return buf;
}

}  // namespace gen_detail

/// Deterministic multi-user dataset in the line-delimited session format.
/// Identity signal per channel scales with the configured separability;
/// at 0 every draw comes from the shared population model.
inline std::string generate_jsonl(const GeneratorConfig& cfg) {
    cfg.validate();
    using nlohmann::json;
    const gen_detail::Population pop;

    std::vector<std::string> uids;
    for (int u = 0; u < cfg.n_users; ++u) {
        char buf[24];
        std::snprintf(buf, sizeof(buf), "user_%03d", u);
        uids.emplace_back(buf);
    }
    std::vector<gen_detail::UserProfile> profiles;
    profiles.reserve(uids.size());
    for (const auto& uid : uids) profiles.push_back(gen_detail::make_profile(cfg.seed, uid));

    // session timing rhythm carries behavior identity; tie its strength to
    // the mean behavior-channel separability so 0 stays identity-free
    double rhythm_sep = 0.0;
    for (ChannelId c : kBehaviorChannels) rhythm_sep += cfg.channels.at(c).separability;
    rhythm_sep /= static_cast<double>(kBehaviorChannels.size());

    std::ostringstream out;
    for (std::size_t ui = 0; ui < uids.size(); ++ui) {
        const auto& uid = uids[ui];
        const auto& prof = profiles[ui];

        const double d_touch = cfg.channels.at(ChannelId::TouchGesture).separability;
        const double d_key = cfg.channels.at(ChannelId::Keystroke).separability;
        const double d_acc = cfg.channels.at(ChannelId::Accelerometer).separability;
        const double d_gyr = cfg.channels.at(ChannelId::Gyroscope).separability;

        const double eff_speed = gen_detail::mix(pop.touch_speed, prof.touch_speed, d_touch);
        const double eff_len = gen_detail::mix(pop.touch_len, prof.touch_len, d_touch);
        double dir_x = gen_detail::mix(std::cos(pop.touch_angle), prof.touch_dir_x, d_touch);
        double dir_y = gen_detail::mix(std::sin(pop.touch_angle), prof.touch_dir_y, d_touch);
        const double dir_norm = std::hypot(dir_x, dir_y);
        const double eff_heading =
            dir_norm > 1e-9 ? std::atan2(dir_y, dir_x) : pop.touch_angle;
        const double eff_pressure = gen_detail::mix(pop.touch_pressure, prof.touch_pressure, d_touch);
        const double eff_curv = gen_detail::mix(pop.touch_curvature, prof.touch_curvature, d_touch);
        const double eff_hold = gen_detail::mix(pop.key_hold, prof.key_hold, d_key);
        const double eff_pp = gen_detail::mix(pop.key_pp, prof.key_pp, d_key);
        const double eff_theta = gen_detail::mix(pop.accel_theta, prof.accel_theta, d_acc);
        const double eff_phi = gen_detail::mix(pop.accel_phi, prof.accel_phi, d_acc);
        const double eff_tremor = gen_detail::mix(pop.accel_tremor, prof.accel_tremor, d_acc);
        double eff_gmu[3];
        for (int a = 0; a < 3; ++a) eff_gmu[a] = gen_detail::mix(pop.gyro_mu, prof.gyro_mu[a], d_gyr);
        const double eff_gstd = gen_detail::mix(pop.gyro_std, prof.gyro_std, d_gyr);
        const double grav[3] = {9.8 * std::sin(eff_theta) * std::cos(eff_phi),
                                9.8 * std::sin(eff_theta) * std::sin(eff_phi),
                                9.8 * std::cos(eff_theta)};

        for (int day = 0; day < cfg.days_per_user; ++day) {
            RngStream times(cfg.seed, "gen/" + uid + "/d" + std::to_string(day) + "/times");
            std::vector<double> starts;
            for (int s = 0; s < cfg.sessions_per_day; ++s) {
                double t;
                if (times.uniform01() < rhythm_sep) {
                    const auto c = static_cast<std::size_t>(
                        times.uniform_int(0, static_cast<std::int64_t>(prof.rhythm_centers.size()) - 1));
                    t = std::fmod(prof.rhythm_centers[c] + times.normal(0.0, 2400.0), 86400.0);
                    if (t < 0.0) t += 86400.0;
                } else {
                    t = times.uniform(0.0, 86400.0);
                }
                starts.push_back(t);
            }
            std::sort(starts.begin(), starts.end());
            for (std::size_t s = 1; s < starts.size(); ++s)
                starts[s] = std::max(starts[s], starts[s - 1] + 420.0);
            if (starts.back() > 86000.0) {
                const double shift = starts.back() - 86000.0;
                for (double& t : starts) t = std::max(0.0, t - shift);
                for (std::size_t s = 1; s < starts.size(); ++s)
                    starts[s] = std::max(starts[s], starts[s - 1] + 420.0);
            }

            for (int s = 0; s < cfg.sessions_per_day; ++s) {
                RngStream rng(cfg.seed, "gen/" + uid + "/d" + std::to_string(day) + "/s" +
                                            std::to_string(s));
                const double start_t = 86400.0 * day + starts[static_cast<std::size_t>(s)];
                const double duration = std::clamp(rng.normal(224.0, 60.0), 60.0, 360.0);
                const double end_t = start_t + duration;

                json rec;
                {
                    char sid[48];
                    std::snprintf(sid, sizeof(sid), "%s_d%02d_s%d", uid.c_str(), day, s);
                    rec["session_id"] = sid;
                }
                rec["user_id"] = uid;
                rec["start_t"] = start_t;
                rec["end_t"] = end_t;

                bool present[7];
                for (ChannelId c : kAllChannels)
                    present[static_cast<int>(c)] = rng.uniform01() < cfg.channels.at(c).presence;

                if (present[static_cast<int>(ChannelId::AppUsage)]) {
                    const double sep = cfg.channels.at(ChannelId::AppUsage).separability;
                    json arr = json::array();
                    const int n = 2 + static_cast<int>(rng.uniform01() * 3.0);
                    for (int e = 0; e < n; ++e) {
                        const int id = rng.uniform01() < sep
                                           ? prof.pref_apps[static_cast<std::size_t>(rng.uniform_int(
                                                 0, static_cast<std::int64_t>(prof.pref_apps.size()) - 1))]
                                           : gen_detail::popularity_pick(rng, gen_detail::kAppPool);
                        arr.push_back({{"event_id", gen_detail::app_name(id)},
                                       {"timestamp", rng.uniform(start_t, end_t)}});
                    }
                    rec["apps"] = std::move(arr);
                }
                if (present[static_cast<int>(ChannelId::Wifi)]) {
                    const double sep = cfg.channels.at(ChannelId::Wifi).separability;
                    json arr = json::array();
                    const int n = 1 + static_cast<int>(rng.uniform01() * 3.0);
                    for (int e = 0; e < n; ++e) {
                        const int id = rng.uniform01() < sep
                                           ? prof.pref_wifi[static_cast<std::size_t>(rng.uniform_int(
                                                 0, static_cast<std::int64_t>(prof.pref_wifi.size()) - 1))]
                                           : gen_detail::popularity_pick(rng, gen_detail::kWifiPool);
                        arr.push_back({{"event_id", gen_detail::wifi_name(id)},
                                       {"timestamp", rng.uniform(start_t, end_t)}});
                    }
                    rec["wifi"] = std::move(arr);
                }
                if (present[static_cast<int>(ChannelId::Gps)]) {
                    const double sep = cfg.channels.at(ChannelId::Gps).separability;
                    json arr = json::array();
                    const int n = 1 + (rng.uniform01() < 0.5 ? 1 : 0);
                    for (int e = 0; e < n; ++e) {
                        double lat, lon;
                        if (rng.uniform01() < sep) {
                            const auto& loc = prof.pref_locs[static_cast<std::size_t>(rng.uniform_int(
                                0, static_cast<std::int64_t>(prof.pref_locs.size()) - 1))];
                            lat = loc.first + rng.normal(0.0, 0.004);
                            lon = loc.second + rng.normal(0.0, 0.004);
                        } else {
                            lat = gen_detail::kLat0 + rng.uniform01() * gen_detail::kGeoExtent;
                            lon = gen_detail::kLon0 + rng.uniform01() * gen_detail::kGeoExtent;
                        }
                        arr.push_back({{"lat", lat},
                                       {"lon", lon},
                                       {"timestamp", rng.uniform(start_t, end_t)}});
                    }
                    rec["gps"] = std::move(arr);
                }
                if (present[static_cast<int>(ChannelId::TouchGesture)]) {
                    json gestures = json::array();
                    const int ng = 2 + (rng.uniform01() < 0.5 ? 1 : 0);
                    for (int g = 0; g < ng; ++g) {
                        const int npts = 12 + static_cast<int>(rng.uniform01() * 9.0);
                        const double speed = eff_speed * std::clamp(rng.normal(1.0, 0.18), 0.4, 1.8);
                        const double length = eff_len * std::clamp(rng.normal(1.0, 0.20), 0.3, 2.0);
                        const double heading0 = eff_heading + rng.normal(0.0, 0.25);
                        const double curv = eff_curv + rng.normal(0.0, 0.10);
                        const double gest_dur = length / speed;
                        double x = rng.uniform(40.0, 320.0);
                        double y = rng.uniform(120.0, 600.0);
                        double t = 0.0;
                        json pts = json::array();
                        for (int p = 0; p < npts; ++p) {
                            const double pr =
                                std::clamp(eff_pressure + rng.normal(0.0, 0.03), 0.02, 1.2);
                            pts.push_back({{"x", x}, {"y", y}, {"pressure", pr}, {"t", t}});
                            if (p + 1 < npts) {
                                const double frac = static_cast<double>(p) / (npts - 1);
                                const double h = heading0 + curv * frac + rng.normal(0.0, 0.05);
                                const double step =
                                    length / (npts - 1) * std::clamp(rng.normal(1.0, 0.12), 0.3, 2.0);
                                x += step * std::cos(h);
                                y += step * std::sin(h);
                                t += gest_dur / (npts - 1) *
                                     std::clamp(rng.normal(1.0, 0.20), 0.3, 2.0);
                            }
                        }
                        gestures.push_back(std::move(pts));
                    }
                    rec["touch"] = std::move(gestures);
                }
                if (present[static_cast<int>(ChannelId::Keystroke)]) {
                    json keys = json::array();
                    const int nb = 1 + (rng.uniform01() < 0.4 ? 1 : 0);
                    double burst_start = start_t + 5.0;
                    for (int b = 0; b < nb; ++b) {
                        const int nk = 8 + static_cast<int>(rng.uniform01() * 7.0);
                        double press = burst_start;
                        double last = press;
                        for (int k = 0; k < nk; ++k) {
                            const double hold = std::max(0.02, rng.normal(eff_hold, 0.012));
                            char kid[8];
                            std::snprintf(kid, sizeof(kid), "k%02d",
                                          static_cast<int>(rng.uniform_int(0, 25)));
                            keys.push_back(
                                {{"key_id", kid}, {"press_t", press}, {"release_t", press + hold}});
                            last = press + hold;
                            press += std::max(0.025, rng.normal(eff_pp, 0.04));
                        }
                        burst_start = last + 10.0;  // beyond the burst segmentation gap
                    }
                    rec["keys"] = std::move(keys);
                }
                auto inertial_windows = [&](bool is_accel) {
                    json windows = json::array();
                    const int nw = 1 + (rng.uniform01() < 0.5 ? 1 : 0);
                    for (int w = 0; w < nw; ++w) {
                        const int ns = 40 + static_cast<int>(rng.uniform01() * 21.0);
                        json win = json::array();
                        for (int p = 0; p < ns; ++p) {
                            json smp;
                            if (is_accel) {
                                smp = {{"x", grav[0] + rng.normal(0.0, eff_tremor)},
                                       {"y", grav[1] + rng.normal(0.0, eff_tremor)},
                                       {"z", grav[2] + rng.normal(0.0, eff_tremor)},
                                       {"t", p * 0.02}};
                            } else {
                                smp = {{"x", rng.normal(eff_gmu[0], eff_gstd)},
                                       {"y", rng.normal(eff_gmu[1], eff_gstd)},
                                       {"z", rng.normal(eff_gmu[2], eff_gstd)},
                                       {"t", p * 0.02}};
                            }
                            win.push_back(std::move(smp));
                        }
                        windows.push_back(std::move(win));
                    }
                    return windows;
                };
                if (present[static_cast<int>(ChannelId::Accelerometer)])
                    rec["accel"] = inertial_windows(true);
                if (present[static_cast<int>(ChannelId::Gyroscope)])
                    rec["gyro"] = inertial_windows(false);

                out << rec.dump() << "\n";
            }
        }
    }
    return out.str();
}

inline Dataset generate(const GeneratorConfig& cfg) {
    // round-trips through the loader so generated data always satisfies the
    // dataset invariants the loader enforces
    std::istringstream in(generate_jsonl(cfg));
    return load_dataset(in, DatasetConfig{}, "<generated>");
}

/// Session-id sequences for the sequential-detection evaluation: per user,
/// genuine-only sequences (for PFD) and change-point sequences whose suffix
/// comes from one other user. Sampling is without replacement inside a
/// sequence; short users produce shorter sequences with a warning.
struct AaSequenceSpec {
    std::string sequence_id;
    std::string user_id;        // claimed / enrolled user
    std::string impostor_user;  // empty for genuine-only sequences
    std::vector<std::pair<std::string, std::string>> sessions;  // (true user, session id)
    int change_point = 0;
};

inline std::vector<AaSequenceSpec> make_aa_sequences(const Dataset& test, int genuine_len,
                                                     int impostor_len, int pairs_per_user,
                                                     std::uint64_t seed,
                                                     std::vector<std::string>* warnings = nullptr) {
    if (genuine_len < 0 || impostor_len < 0 || pairs_per_user < 1)
        throw std::invalid_argument("make_aa_sequences: bad sequence configuration");
    std::vector<AaSequenceSpec> out;
    std::vector<std::string> uids;
    for (const auto& [uid, _] : test.users) uids.push_back(uid);

    auto warn = [&](const std::string& msg) {
        if (warnings) warnings->push_back(msg);
    };

    auto pick_sorted = [&](const std::vector<Session>& sessions, int want, RngStream& rng) {
        auto idx = rng.sample_indices(sessions.size(), static_cast<std::size_t>(want));
        std::sort(idx.begin(), idx.end());  // keep chronological order
        std::vector<std::string> ids;
        ids.reserve(idx.size());
        for (auto i : idx) ids.push_back(sessions[i].session_id);
        return ids;
    };

    for (const auto& uid : uids) {
        const auto& own = test.users.at(uid);
        std::vector<std::string> others;
        for (const auto& v : uids)
            if (v != uid) others.push_back(v);

        for (int p = 0; p < pairs_per_user; ++p) {
            {
                AaSequenceSpec spec;
                spec.sequence_id = uid + "_gonly_" + std::to_string(p);
                spec.user_id = uid;
                const int want = genuine_len + impostor_len;
                RngStream rng(seed, "aa/gonly/" + uid + "/" + std::to_string(p));
                const auto ids = pick_sorted(own, want, rng);
                if (static_cast<int>(ids.size()) < want)
                    warn(spec.sequence_id + ": only " + std::to_string(ids.size()) +
                         " of " + std::to_string(want) + " sessions available");
                for (const auto& id : ids) spec.sessions.emplace_back(uid, id);
                spec.change_point = static_cast<int>(spec.sessions.size());
                out.push_back(std::move(spec));
            }
            if (!others.empty()) {
                AaSequenceSpec spec;
                spec.sequence_id = uid + "_cp_" + std::to_string(p);
                spec.user_id = uid;
                RngStream rng(seed, "aa/change/" + uid + "/" + std::to_string(p));
                const auto gen_ids = pick_sorted(own, genuine_len, rng);
                if (static_cast<int>(gen_ids.size()) < genuine_len)
                    warn(spec.sequence_id + ": genuine prefix shortened to " +
                         std::to_string(gen_ids.size()));
                const auto& imp_uid =
                    others[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(others.size()) - 1))];
                spec.impostor_user = imp_uid;
                const auto imp_ids = pick_sorted(test.users.at(imp_uid), impostor_len, rng);
                if (static_cast<int>(imp_ids.size()) < impostor_len)
                    warn(spec.sequence_id + ": impostor suffix shortened to " +
                         std::to_string(imp_ids.size()));
                for (const auto& id : gen_ids) spec.sessions.emplace_back(uid, id);
                spec.change_point = static_cast<int>(spec.sessions.size());
                for (const auto& id : imp_ids) spec.sessions.emplace_back(imp_uid, id);
                out.push_back(std::move(spec));
            } else {
                warn(uid + ": no other users available for change-point sequences");
            }
        }
    }
    return out;
}

inline void to_json(nlohmann::json& j, const GeneratorConfig& cfg) {
    nlohmann::json ch = nlohmann::json::object();
    for (const auto& [c, p] : cfg.channels) {
        ch[channel_name(c)] = {{"separability", p.separability}, {"presence", p.presence}};
    }
    j = nlohmann::json{{"n_users", cfg.n_users},
                       {"days_per_user", cfg.days_per_user},
                       {"sessions_per_day", cfg.sessions_per_day},
                       {"seed", cfg.seed},
                       {"channels", std::move(ch)}};
}

inline void from_json(const nlohmann::json& j, GeneratorConfig& cfg) {
    cfg.n_users = j.value("n_users", cfg.n_users);
    cfg.days_per_user = j.value("days_per_user", cfg.days_per_user);
    cfg.sessions_per_day = j.value("sessions_per_day", cfg.sessions_per_day);
    cfg.seed = j.value("seed", cfg.seed);
    if (j.contains("channels")) {
        for (const auto& [name, v] : j.at("channels").items()) {
            const auto c = channel_from_name(name);
            if (!c) throw std::runtime_error("generator config: unknown channel " + name);
            ChannelGenParams p = cfg.channels[*c];
            p.separability = v.value("separability", p.separability);
            p.presence = v.value("presence", p.presence);
            cfg.channels[*c] = p;
        }
    }
}

}  // namespace conauth
