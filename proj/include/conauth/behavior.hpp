#pragma once

#include <map>
#include <set>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

#include "json.hpp"

#include "conauth/dataset.hpp"
#include "conauth/types.hpp"

namespace conauth {

struct ProfilerConfig {
    int slots_per_day = 48;  // 30-minute slots
    double tz_offset_s = 0.0;
    // By default a repeated (event, slot) pair within one test session is
    // counted once, mirroring the template-side dedup rule. The flag enables
    // the alternative reading where every test detection accumulates.
    bool count_test_duplicates = false;
};

/// Per-user frequency table for one behavior channel: (event, slot) ->
/// number of distinct days the event was seen at least once in that slot.
struct BehaviorTemplate {
    ChannelId channel = ChannelId::AppUsage;
    int slots_per_day = 48;
    int training_days = 0;
    std::map<std::pair<std::string, int>, int> entries;

    bool empty() const { return entries.empty(); }
};

/// Multiple detections of the same event in the same slot on the same day
/// collapse to one; different slots or different days count separately.
inline BehaviorTemplate build_template(ChannelId channel,
                                       const std::vector<BehaviorEvent>& train_events,
                                       const ProfilerConfig& cfg = {}) {
    BehaviorTemplate tpl;
    tpl.channel = channel;
    tpl.slots_per_day = cfg.slots_per_day;
    std::set<std::tuple<std::string, int, int>> seen;  // (event, slot, day)
    std::set<int> days;
    for (const auto& ev : train_events) {
        const int slot = slot_of(ev.timestamp, cfg.slots_per_day, cfg.tz_offset_s);
        const int day = day_index_of(ev.timestamp, cfg.tz_offset_s);
        days.insert(day);
        if (seen.insert({ev.event_id, slot, day}).second) {
            tpl.entries[{ev.event_id, slot}] += 1;
        }
    }
    tpl.training_days = static_cast<int>(days.size());
    return tpl;
}

/// Confidence score of a test session: sum of f^2 over test events matching a
/// template entry on (event_id, slot). Non-matching events contribute 0.
inline double score_session(const BehaviorTemplate& tpl,
                            const std::vector<BehaviorEvent>& test_events,
                            const ProfilerConfig& cfg = {}) {
    double score = 0.0;
    std::set<std::pair<std::string, int>> counted;
    for (const auto& ev : test_events) {
        const int slot = slot_of(ev.timestamp, tpl.slots_per_day, cfg.tz_offset_s);
        const auto it = tpl.entries.find({ev.event_id, slot});
        if (it == tpl.entries.end()) continue;
        if (!cfg.count_test_duplicates && !counted.insert({ev.event_id, slot}).second) continue;
        score += static_cast<double>(it->second) * static_cast<double>(it->second);
    }
    return score;
}

inline void to_json(nlohmann::json& j, const BehaviorTemplate& tpl) {
    nlohmann::json entries = nlohmann::json::array();
    for (const auto& [key, freq] : tpl.entries) {
        entries.push_back({key.first, key.second, freq});
    }
    j = nlohmann::json{{"channel", channel_name(tpl.channel)},
                       {"slots_per_day", tpl.slots_per_day},
                       {"training_days", tpl.training_days},
                       {"entries", std::move(entries)}};
}

inline void from_json(const nlohmann::json& j, BehaviorTemplate& tpl) {
    const auto channel = channel_from_name(j.at("channel").get<std::string>());
    if (!channel) throw std::runtime_error("unknown channel in template");
    tpl.channel = *channel;
    tpl.slots_per_day = j.at("slots_per_day").get<int>();
    tpl.training_days = j.at("training_days").get<int>();
    tpl.entries.clear();
    for (const auto& e : j.at("entries")) {
        tpl.entries[{e.at(0).get<std::string>(), e.at(1).get<int>()}] = e.at(2).get<int>();
    }
}

}  // namespace conauth
