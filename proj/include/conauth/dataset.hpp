#pragma once

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "conauth/types.hpp"

namespace conauth {

/// Day boundary is local midnight of a configured timezone, default UTC.
struct DatasetConfig {
    double tz_offset_s = 0.0;
};

inline int day_index_of(double timestamp, double tz_offset_s = 0.0) {
    return static_cast<int>(std::floor((timestamp + tz_offset_s) / 86400.0));
}

/// slot = floor(seconds_since_local_midnight / (86400/N)); total, wraps mod 24h
inline int slot_of(double timestamp, int slots_per_day, double tz_offset_s = 0.0) {
    double local = std::fmod(timestamp + tz_offset_s, 86400.0);
    if (local < 0.0) local += 86400.0;
    const double slot_len = 86400.0 / static_cast<double>(slots_per_day);
    const int slot = static_cast<int>(std::floor(local / slot_len));
    return std::min(slot, slots_per_day - 1);
}

/// "lat,lon" with each coordinate rounded half away from zero to 2 decimals.
/// Formats from the rounded integer centi-degrees so no second float rounding
/// can disagree with the quantization.
inline std::string gps_event_id(double lat, double lon) {
    const auto quantize = [](double v) {
        const long long r = std::llround(v * 100.0);
        const long long a = r < 0 ? -r : r;
        char buf[40];
        std::snprintf(buf, sizeof(buf), "%s%lld.%02lld", r < 0 ? "-" : "", a / 100, a % 100);
        return std::string(buf);
    };
    return quantize(lat) + "," + quantize(lon);
}

namespace detail {

inline double require_number(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_number())
        throw std::runtime_error(std::string("missing or non-numeric field '") + key + "'");
    return j.at(key).get<double>();
}

inline std::string require_string(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j.at(key).is_string())
        throw std::runtime_error(std::string("missing or non-string field '") + key + "'");
    return j.at(key).get<std::string>();
}

inline const nlohmann::json* optional_array(const nlohmann::json& j, const char* key) {
    if (!j.contains(key)) return nullptr;
    const auto& v = j.at(key);
    if (v.is_null()) return nullptr;
    if (!v.is_array()) throw std::runtime_error(std::string("field '") + key + "' must be an array");
    return &v;
}

inline std::vector<BehaviorEvent> parse_named_events(const nlohmann::json& arr, const char* key) {
    std::vector<BehaviorEvent> out;
    out.reserve(arr.size());
    for (const auto& e : arr) {
        BehaviorEvent ev;
        ev.event_id = require_string(e, "event_id");
        if (ev.event_id.empty())
            throw std::runtime_error(std::string("empty event_id in '") + key + "'");
        ev.timestamp = require_number(e, "timestamp");
        out.push_back(std::move(ev));
    }
    return out;
}

inline std::vector<InertialWindow> parse_inertial(const nlohmann::json& arr, const char* key) {
    std::vector<InertialWindow> out;
    out.reserve(arr.size());
    for (const auto& w : arr) {
        if (!w.is_array()) throw std::runtime_error(std::string("'") + key + "' windows must be arrays");
        InertialWindow win;
        win.reserve(w.size());
        for (const auto& s : w) {
            InertialSample smp;
            smp.x = require_number(s, "x");
            smp.y = require_number(s, "y");
            smp.z = require_number(s, "z");
            smp.t = require_number(s, "t");
            win.push_back(smp);
        }
        out.push_back(std::move(win));
    }
    return out;
}

inline Session parse_session(const nlohmann::json& j, const DatasetConfig& cfg) {
    Session s;
    s.session_id = require_string(j, "session_id");
    s.user_id = require_string(j, "user_id");
    if (s.session_id.empty()) throw std::runtime_error("empty session_id");
    if (s.user_id.empty()) throw std::runtime_error("empty user_id");
    s.start_t = require_number(j, "start_t");
    s.end_t = require_number(j, "end_t");
    if (s.end_t < s.start_t) throw std::runtime_error("end_t precedes start_t");
    s.day_index = day_index_of(s.start_t, cfg.tz_offset_s);

    if (const auto* arr = optional_array(j, "touch")) {
        for (const auto& g : *arr) {
            if (!g.is_array()) throw std::runtime_error("'touch' gestures must be arrays");
            TouchGestureData gesture;
            gesture.reserve(g.size());
            for (const auto& p : g) {
                TouchSample smp;
                smp.x = require_number(p, "x");
                smp.y = require_number(p, "y");
                smp.t = require_number(p, "t");
                smp.pressure = p.contains("pressure") ? require_number(p, "pressure") : 0.0;
                gesture.push_back(smp);
            }
            s.touch.push_back(std::move(gesture));
        }
    }
    if (const auto* arr = optional_array(j, "keys")) {
        for (const auto& k : *arr) {
            KeyEvent ev;
            ev.key_id = require_string(k, "key_id");
            ev.press_t = require_number(k, "press_t");
            ev.release_t = require_number(k, "release_t");
            if (ev.release_t < ev.press_t) throw std::runtime_error("key release_t precedes press_t");
            s.keys.push_back(std::move(ev));
        }
    }
    if (const auto* arr = optional_array(j, "accel")) s.accel = parse_inertial(*arr, "accel");
    if (const auto* arr = optional_array(j, "gyro")) s.gyro = parse_inertial(*arr, "gyro");
    if (const auto* arr = optional_array(j, "wifi")) s.wifi = parse_named_events(*arr, "wifi");
    if (const auto* arr = optional_array(j, "apps")) s.apps = parse_named_events(*arr, "apps");
    if (const auto* arr = optional_array(j, "gps")) {
        for (const auto& e : *arr) {
            BehaviorEvent ev;
            ev.event_id = gps_event_id(require_number(e, "lat"), require_number(e, "lon"));
            ev.timestamp = require_number(e, "timestamp");
            s.gps.push_back(std::move(ev));
        }
    }
    return s;
}

}  // namespace detail

/// Parse one session record per line. Unknown fields are ignored; malformed
/// lines fail with the 1-based line number; duplicate session ids per user
/// are rejected.
inline Dataset load_dataset(std::istream& in, const DatasetConfig& cfg = {},
                            const std::string& origin = "<stream>") {
    Dataset ds;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw std::runtime_error(origin + " line " + std::to_string(line_no) +
                                     ": malformed JSON: " + e.what());
        }
        try {
            if (!j.is_object()) throw std::runtime_error("record is not a JSON object");
            Session s = detail::parse_session(j, cfg);
            ds.users[s.user_id].push_back(std::move(s));
        } catch (const std::exception& e) {
            throw std::runtime_error(origin + " line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    for (auto& [uid, sessions] : ds.users) {
        std::stable_sort(sessions.begin(), sessions.end(), [](const Session& a, const Session& b) {
            if (a.start_t != b.start_t) return a.start_t < b.start_t;
            return a.session_id < b.session_id;
        });
        std::set<std::string> ids;
        for (const auto& s : sessions) {
            if (!ids.insert(s.session_id).second)
                throw std::runtime_error(origin + ": duplicate session_id '" + s.session_id +
                                         "' for user '" + uid + "'");
        }
    }
    return ds;
}

inline Dataset load_dataset(const std::string& path, const DatasetConfig& cfg = {}) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open dataset file: " + path);
    return load_dataset(f, cfg, path);
}

struct DaySplit {
    Dataset train;
    Dataset test;
    std::vector<SkipRecord> skipped;
};

/// Per user, the first ceil(train_fraction * distinct_day_count) distinct
/// days (earliest first) go to train, the rest to test. Sessions are never
/// split across partitions. Users with fewer than 2 distinct days, or whose
/// ceiling leaves no test days, are excluded and recorded.
inline DaySplit split_by_days(const Dataset& ds, double train_fraction) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw std::invalid_argument("split_by_days: train_fraction must be in (0, 1)");
    DaySplit out;
    for (const auto& [uid, sessions] : ds.users) {
        std::set<int> days;
        for (const auto& s : sessions) days.insert(s.day_index);
        if (days.size() < 2) {
            out.skipped.push_back({uid, "fewer than 2 distinct days"});
            continue;
        }
        // guard against ties like 0.6*5 -> 3.0000000000000004
        const auto n_train = static_cast<std::size_t>(
            std::ceil(train_fraction * static_cast<double>(days.size()) - 1e-9));
        if (n_train >= days.size()) {
            out.skipped.push_back({uid, "train fraction leaves no test days"});
            continue;
        }
        std::vector<int> ordered(days.begin(), days.end());
        const int last_train_day = ordered[n_train - 1];
        auto& train = out.train.users[uid];
        auto& test = out.test.users[uid];
        for (const auto& s : sessions) {
            (s.day_index <= last_train_day ? train : test).push_back(s);
        }
    }
    return out;
}

}  // namespace conauth
