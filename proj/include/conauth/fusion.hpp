#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "conauth/stats.hpp"
#include "conauth/types.hpp"

namespace conauth {

enum class FusionRule { Mean };

struct ChannelScore {
    ChannelId channel = ChannelId::TouchGesture;
    double raw = 0.0;
    std::optional<double> normalized;  // in (0,1) once normalize_score ran
};

/// Per-channel genuine training score statistics: the center and spread the
/// tanh normalizer maps through. sigma is floored at 1e-9 so constant score
/// channels stay usable.
struct NormalizationParams {
    struct Entry {
        double mu = 0.0;
        double sigma = 1.0;
    };
    std::map<ChannelId, Entry> by_channel;

    bool fitted(ChannelId c) const { return by_channel.count(c) > 0; }
};

/// mu and population sigma of each channel's genuine training scores.
/// Channels with fewer than 2 scores are excluded and reported.
inline NormalizationParams fit_normalization(
    const std::map<ChannelId, std::vector<double>>& genuine_train_scores,
    std::vector<ChannelSkip>* skips = nullptr) {
    NormalizationParams params;
    for (const auto& [channel, scores] : genuine_train_scores) {
        if (scores.size() < 2) {
            if (skips)
                skips->push_back({channel, "fewer than 2 genuine training scores; "
                                           "channel excluded from fusion"});
            continue;
        }
        NormalizationParams::Entry e;
        e.mu = mean_of(scores);
        e.sigma = std::max(population_std(scores), 1e-9);
        params.by_channel[channel] = e;
    }
    return params;
}

/// n = 0.5 * (tanh(0.01 * (raw - mu)/sigma) + 1), strictly increasing in raw,
/// image (0, 1). The 0.01 factor is part of the frozen contract.
inline double normalize_score(const NormalizationParams& params, ChannelId channel, double raw) {
    const auto it = params.by_channel.find(channel);
    if (it == params.by_channel.end())
        throw std::invalid_argument(std::string("normalize_score: channel not fitted: ") +
                                    channel_name(channel));
    const double z = (raw - it->second.mu) / it->second.sigma;
    return 0.5 * (std::tanh(0.01 * z) + 1.0);
}

struct SessionScore {
    std::string session_id;
    std::string claimed_user;
    std::vector<ChannelId> contributing;
    double fused = 0.0;
};

/// Mean rule over the channels that actually produced a normalized score;
/// missing channels are excluded, not imputed.
inline SessionScore fuse_session(const std::string& session_id, const std::string& claimed_user,
                                 const std::vector<ChannelScore>& scores,
                                 FusionRule rule = FusionRule::Mean) {
    (void)rule;  // single rule for now
    SessionScore out;
    out.session_id = session_id;
    out.claimed_user = claimed_user;
    double sum = 0.0;
    for (const auto& cs : scores) {
        if (!cs.normalized) continue;
        out.contributing.push_back(cs.channel);
        sum += *cs.normalized;
    }
    if (out.contributing.empty())
        throw std::invalid_argument("fuse_session: no contributing channels");
    out.fused = sum / static_cast<double>(out.contributing.size());
    return out;
}

inline void to_json(nlohmann::json& j, const NormalizationParams& p) {
    j = nlohmann::json::object();
    for (const auto& [channel, e] : p.by_channel) {
        j[channel_name(channel)] = {{"mu", e.mu}, {"sigma", e.sigma}};
    }
}

inline void from_json(const nlohmann::json& j, NormalizationParams& p) {
    p.by_channel.clear();
    for (const auto& [name, v] : j.items()) {
        const auto channel = channel_from_name(name);
        if (!channel) throw std::runtime_error("unknown channel in normalization params: " + name);
        p.by_channel[*channel] = {v.at("mu").get<double>(), v.at("sigma").get<double>()};
    }
}

}  // namespace conauth
