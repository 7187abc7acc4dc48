#pragma once

#include <algorithm>
#include <atomic>
#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "conauth/behavior.hpp"
#include "conauth/dataset.hpp"
#include "conauth/evaluation.hpp"
#include "conauth/features.hpp"
#include "conauth/fusion.hpp"
#include "conauth/qcd.hpp"
#include "conauth/svm.hpp"
#include "conauth/synthetic.hpp"
#include "conauth/types.hpp"

namespace conauth {

struct PipelineConfig {
    double train_fraction = 0.6;
    double tz_offset_s = 0.0;
    int slots_per_day = 48;
    bool count_test_duplicates = false;
    bool impute_missing = false;  // fill absent channels with 0.5 instead of excluding
    double key_burst_gap_s = 5.0;
    int impostor_ratio = 3;  // impostor training vectors capped at ratio * genuine
    HyperGrid grid;
    std::uint64_t seed = 1;

    ProfilerConfig profiler() const {
        return ProfilerConfig{slots_per_day, tz_offset_s, count_test_duplicates};
    }
    FeatureConfig features() const { return FeatureConfig{key_burst_gap_s}; }
    DatasetConfig dataset() const { return DatasetConfig{tz_offset_s}; }
};

inline void to_json(nlohmann::json& j, const PipelineConfig& c) {
    j = nlohmann::json{{"train_fraction", c.train_fraction},
                       {"tz_offset_s", c.tz_offset_s},
                       {"slots_per_day", c.slots_per_day},
                       {"count_test_duplicates", c.count_test_duplicates},
                       {"impute_missing", c.impute_missing},
                       {"key_burst_gap_s", c.key_burst_gap_s},
                       {"impostor_ratio", c.impostor_ratio},
                       {"grid", c.grid},
                       {"seed", c.seed}};
}

inline void from_json(const nlohmann::json& j, PipelineConfig& c) {
    c.train_fraction = j.value("train_fraction", c.train_fraction);
    c.tz_offset_s = j.value("tz_offset_s", c.tz_offset_s);
    c.slots_per_day = j.value("slots_per_day", c.slots_per_day);
    c.count_test_duplicates = j.value("count_test_duplicates", c.count_test_duplicates);
    c.impute_missing = j.value("impute_missing", c.impute_missing);
    c.key_burst_gap_s = j.value("key_burst_gap_s", c.key_burst_gap_s);
    c.impostor_ratio = j.value("impostor_ratio", c.impostor_ratio);
    if (j.contains("grid")) c.grid = j.at("grid").get<HyperGrid>();
    c.seed = j.value("seed", c.seed);
}

struct UserModels {
    std::string user_id;
    std::map<ChannelId, BehaviorTemplate> templates;
    std::map<ChannelId, TrainedVerifier> verifiers;
    NormalizationParams norm;
    std::vector<ChannelSkip> skipped_channels;
};

struct Enrollment {
    PipelineConfig config;
    std::set<ChannelId> channels;
    std::map<std::string, UserModels> users;
    std::vector<SkipRecord> skipped_users;
};

namespace detail {

/// index-sharded worker pool; each fn(i) must write only to its own slot
template <typename Fn>
void parallel_for_index(std::size_t n, int jobs, Fn&& fn) {
    if (jobs <= 1 || n <= 1) {
        for (std::size_t i = 0; i < n; ++i) fn(i);
        return;
    }
    std::atomic<std::size_t> next{0};
    const auto workers = std::min<std::size_t>(static_cast<std::size_t>(jobs), n);
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t w = 0; w < workers; ++w) {
        pool.emplace_back([&] {
            for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) fn(i);
        });
    }
    for (auto& t : pool) t.join();
}

using FeatureCache = std::map<std::string, std::map<ChannelId, std::vector<FeatureVector>>>;

inline FeatureCache extract_all(const Dataset& ds, const std::set<ChannelId>& channels,
                                const FeatureConfig& fcfg) {
    FeatureCache cache;
    for (const auto& [uid, sessions] : ds.users) {
        auto& per_user = cache[uid];
        for (ChannelId c : kBiometricChannels) {
            if (!channels.count(c)) continue;
            auto& vecs = per_user[c];
            for (const auto& s : sessions) {
                auto sv = session_feature_vectors(s, c, fcfg);
                vecs.insert(vecs.end(), std::make_move_iterator(sv.begin()),
                            std::make_move_iterator(sv.end()));
            }
        }
    }
    return cache;
}

}  // namespace detail

/// Enrolls every user of the given training partition on the requested
/// channels: behavior templates, per-channel verifiers (impostor vectors
/// drawn from the other users' training partitions, capped at
/// impostor_ratio x genuine), and tanh-normalization statistics fitted on
/// genuine training scores only (leave-one-day-out for behavior channels).
inline Enrollment enroll_users(const Dataset& train, const std::set<ChannelId>& channels,
                               const PipelineConfig& cfg,
                               std::vector<SkipRecord> pre_skipped = {}, int jobs = 1) {
    if (channels.empty()) throw std::invalid_argument("enroll_users: empty channel set");
    Enrollment enr;
    enr.config = cfg;
    enr.channels = channels;
    enr.skipped_users = std::move(pre_skipped);

    const auto fcfg = cfg.features();
    const auto pcfg = cfg.profiler();
    const auto cache = detail::extract_all(train, channels, fcfg);

    std::vector<std::pair<const std::string*, const std::vector<Session>*>> user_list;
    for (const auto& [uid, sessions] : train.users) user_list.emplace_back(&uid, &sessions);
    std::vector<std::optional<UserModels>> built(user_list.size());
    std::vector<std::optional<SkipRecord>> user_skips(user_list.size());

    detail::parallel_for_index(user_list.size(), jobs, [&](std::size_t ui) {
        const std::string& uid = *user_list[ui].first;
        const std::vector<Session>& sessions = *user_list[ui].second;

        std::set<int> days;
        for (const auto& s : sessions) days.insert(s.day_index);
        if (days.size() < 2) {
            user_skips[ui] = SkipRecord{uid, "fewer than 2 distinct training days"};
            return;
        }

        UserModels um;
        um.user_id = uid;
        std::map<ChannelId, std::vector<double>> norm_scores;

        for (ChannelId c : kBehaviorChannels) {
            if (!channels.count(c)) continue;
            std::vector<BehaviorEvent> events;
            for (const auto& s : sessions) {
                const auto& ev = s.behavior_events(c);
                events.insert(events.end(), ev.begin(), ev.end());
            }
            um.templates[c] = build_template(c, events, pcfg);

            // leave-one-day-out scores of the training sessions themselves,
            // so normalization statistics never touch the test partition
            auto& scores = norm_scores[c];
            for (int d : days) {
                std::vector<BehaviorEvent> rest;
                for (const auto& ev : events) {
                    if (day_index_of(ev.timestamp, cfg.tz_offset_s) != d) rest.push_back(ev);
                }
                const auto tpl = build_template(c, rest, pcfg);
                for (const auto& s : sessions) {
                    if (s.day_index != d || s.behavior_events(c).empty()) continue;
                    scores.push_back(score_session(tpl, s.behavior_events(c), pcfg));
                }
            }
        }

        for (ChannelId c : kBiometricChannels) {
            if (!channels.count(c)) continue;
            const auto& genuine = cache.at(uid).at(c);
            if (genuine.size() < 2) {
                um.skipped_channels.push_back({c, "fewer than 2 genuine training samples"});
                continue;
            }
            std::vector<FeatureVector> impostor;
            for (const auto& [other, per_channel] : cache) {
                if (other == uid) continue;
                const auto& vecs = per_channel.at(c);
                impostor.insert(impostor.end(), vecs.begin(), vecs.end());
            }
            const std::size_t cap = genuine.size() * static_cast<std::size_t>(cfg.impostor_ratio);
            if (impostor.size() > cap) {
                RngStream rng(cfg.seed,
                              "enroll/impostor/" + uid + "/" + channel_name(c));
                auto idx = rng.sample_indices(impostor.size(), cap);
                std::sort(idx.begin(), idx.end());
                std::vector<FeatureVector> sub;
                sub.reserve(cap);
                for (auto i : idx) sub.push_back(impostor[i]);
                impostor = std::move(sub);
            }
            if (impostor.size() < 2) {
                um.skipped_channels.push_back({c, "fewer than 2 impostor training samples"});
                continue;
            }
            try {
                TrainOptions opt;
                opt.grid = cfg.grid;
                opt.seed = cfg.seed;
                um.verifiers[c] = train_verifier(genuine, impostor, opt, uid, c);
            } catch (const std::exception& e) {
                um.skipped_channels.push_back({c, e.what()});
                continue;
            }

            // genuine training scores at session granularity feed normalization
            auto& scores = norm_scores[c];
            for (const auto& s : sessions) {
                const auto vecs = session_feature_vectors(s, c, fcfg);
                if (vecs.empty()) continue;
                scores.push_back(session_channel_score(um.verifiers.at(c), vecs));
            }
        }

        um.norm = fit_normalization(norm_scores, &um.skipped_channels);
        built[ui] = std::move(um);
    });

    for (std::size_t ui = 0; ui < user_list.size(); ++ui) {
        if (user_skips[ui]) enr.skipped_users.push_back(*user_skips[ui]);
        if (built[ui]) enr.users[*user_list[ui].first] = std::move(*built[ui]);
    }
    return enr;
}

struct ScoredSession {
    std::string session_id;
    std::string true_user;
    bool genuine = false;
    std::map<ChannelId, ChannelScore> channels;
};

/// Per-channel raw and normalized scores of every test session against every
/// enrolled user's models. Fusion subsets are applied afterwards, so one
/// table serves all fusion set-ups.
struct OtaTable {
    std::map<std::string, std::vector<ScoredSession>> by_claimed;
};

inline OtaTable compute_ota_table(const Enrollment& enr, const Dataset& test,
                                  const PipelineConfig& cfg, int jobs = 1) {
    const auto fcfg = cfg.features();
    const auto pcfg = cfg.profiler();

    struct TestEntry {
        const Session* session;
        std::map<ChannelId, std::vector<FeatureVector>> features;
    };
    std::vector<TestEntry> entries;
    for (const auto& [uid, sessions] : test.users) {
        for (const auto& s : sessions) {
            TestEntry e;
            e.session = &s;
            for (ChannelId c : kBiometricChannels) {
                if (enr.channels.count(c)) e.features[c] = session_feature_vectors(s, c, fcfg);
            }
            entries.push_back(std::move(e));
        }
    }

    std::vector<std::pair<const std::string*, const UserModels*>> user_list;
    for (const auto& [uid, um] : enr.users) user_list.emplace_back(&uid, &um);
    std::vector<std::vector<ScoredSession>> built(user_list.size());

    detail::parallel_for_index(user_list.size(), jobs, [&](std::size_t ui) {
        const UserModels& um = *user_list[ui].second;
        const std::string& uid = *user_list[ui].first;
        auto& rows = built[ui];
        rows.reserve(entries.size());
        for (const auto& e : entries) {
            ScoredSession row;
            row.session_id = e.session->session_id;
            row.true_user = e.session->user_id;
            row.genuine = e.session->user_id == uid;
            for (ChannelId c : kAllChannels) {
                if (!enr.channels.count(c) || !um.norm.fitted(c)) continue;
                ChannelScore cs;
                cs.channel = c;
                if (is_behavior_channel(c)) {
                    const auto& events = e.session->behavior_events(c);
                    if (events.empty() || !um.templates.count(c)) continue;
                    cs.raw = score_session(um.templates.at(c), events, pcfg);
                } else {
                    const auto it = e.features.find(c);
                    if (it == e.features.end() || it->second.empty() || !um.verifiers.count(c))
                        continue;
                    cs.raw = session_channel_score(um.verifiers.at(c), it->second);
                }
                cs.normalized = normalize_score(um.norm, c, cs.raw);
                row.channels[c] = cs;
            }
            rows.push_back(std::move(row));
        }
    });

    OtaTable table;
    for (std::size_t ui = 0; ui < user_list.size(); ++ui)
        table.by_claimed[*user_list[ui].first] = std::move(built[ui]);
    return table;
}

struct FusedSession {
    std::string session_id;
    std::string true_user;
    bool genuine = false;
    double fused = 0.0;
    int contributing = 0;
};

struct FusedTable {
    std::map<std::string, std::vector<FusedSession>> by_claimed;
    std::size_t skipped_sessions = 0;  // sessions with no contributing channel
};

/// Applies one fusion subset to the per-channel table. Sessions with no
/// contributing channel are skipped (or imputed at 0.5 when configured).
/// Throws if any enrolled user is left with zero usable genuine sessions.
inline FusedTable fuse_table(const OtaTable& table, const std::set<ChannelId>& subset,
                             const PipelineConfig& cfg) {
    if (subset.empty()) throw std::invalid_argument("fuse_table: empty fusion subset");
    FusedTable out;
    for (const auto& [uid, rows] : table.by_claimed) {
        auto& fused_rows = out.by_claimed[uid];
        std::size_t genuine_count = 0;
        for (const auto& row : rows) {
            double sum = 0.0;
            int n = 0;
            for (ChannelId c : subset) {
                const auto it = row.channels.find(c);
                if (it != row.channels.end() && it->second.normalized) {
                    sum += *it->second.normalized;
                    ++n;
                } else if (cfg.impute_missing) {
                    sum += 0.5;
                    ++n;
                }
            }
            if (n == 0) {
                ++out.skipped_sessions;
                continue;
            }
            FusedSession fs;
            fs.session_id = row.session_id;
            fs.true_user = row.true_user;
            fs.genuine = row.genuine;
            fs.fused = sum / n;
            fs.contributing = n;
            if (fs.genuine) ++genuine_count;
            fused_rows.push_back(std::move(fs));
        }
        if (genuine_count == 0)
            throw std::runtime_error("fuse_table: user '" + uid +
                                     "' has zero usable genuine test sessions");
    }
    return out;
}

struct OtaEvaluation {
    std::vector<std::pair<std::string, RocCurve>> per_user;
    AveragedRoc averaged;
};

inline OtaEvaluation evaluate_ota_scores(const FusedTable& fused) {
    OtaEvaluation out;
    std::vector<RocCurve> curves;
    for (const auto& [uid, rows] : fused.by_claimed) {
        std::vector<double> genuine, impostor;
        for (const auto& r : rows) (r.genuine ? genuine : impostor).push_back(r.fused);
        auto roc = compute_eer(genuine, impostor);
        curves.push_back(roc);
        out.per_user.emplace_back(uid, std::move(roc));
    }
    out.averaged = average_rocs(curves);
    return out;
}

/// Subset-independent OTA state: full-training enrollment plus the
/// per-channel score table over the test partition.
struct OtaContext {
    Dataset train;
    Dataset test;
    std::vector<SkipRecord> split_skips;
    Enrollment enrollment;
    OtaTable table;
};

inline OtaContext build_ota_context(const Dataset& full, const std::set<ChannelId>& channels,
                                    const PipelineConfig& cfg, int jobs = 1) {
    OtaContext ctx;
    auto split = split_by_days(full, cfg.train_fraction);
    ctx.train = std::move(split.train);
    ctx.test = std::move(split.test);
    ctx.split_skips = std::move(split.skipped);
    ctx.enrollment = enroll_users(ctx.train, channels, cfg, ctx.split_skips, jobs);
    ctx.table = compute_ota_table(ctx.enrollment, ctx.test, cfg, jobs);
    return ctx;
}

/// Density-fitting state for the sequential detector: models re-enrolled on
/// the training partition minus each user's last training day, and the
/// per-channel score table of those held-out sessions. Test data never
/// reaches the density fit.
struct AaContext {
    Enrollment density_enrollment;
    Dataset heldout;
    OtaTable heldout_table;
};

inline AaContext build_aa_context(const OtaContext& ota, const PipelineConfig& cfg, int jobs = 1) {
    AaContext ctx;
    Dataset reduced;
    for (const auto& [uid, sessions] : ota.train.users) {
        std::set<int> days;
        for (const auto& s : sessions) days.insert(s.day_index);
        const int last_day = *days.rbegin();
        for (const auto& s : sessions) {
            (s.day_index == last_day ? ctx.heldout : reduced).users[uid].push_back(s);
        }
    }
    ctx.density_enrollment = enroll_users(reduced, ota.enrollment.channels, cfg, {}, jobs);
    ctx.heldout_table = compute_ota_table(ctx.density_enrollment, ctx.heldout, cfg, jobs);
    return ctx;
}

struct AaEvalConfig {
    int genuine_len = 15;
    int impostor_len = 15;
    int pairs_per_user = 3;
    int h_steps = 201;
    double h_max = 0.0;  // <= 0 derives the sweep top from the traces
    std::uint64_t seed = 1;
};

struct SequenceTrace {
    std::string sequence_id;
    std::string user_id;
    std::string impostor_user;
    int change_point = 0;
    AaRunResult run;
};

struct AaEvaluation {
    ScoreDensityPair densities;
    std::vector<AaSequenceSpec> specs;
    std::vector<AaSequence> sequences;
    AaCurves curves;
    AveragedRoc ota;  // same subset, for the OTA-vs-AA comparison
    std::vector<SequenceTrace> traces;  // at the equal-error threshold
    std::vector<std::string> warnings;
};

inline AaEvaluation evaluate_aa_subset(const OtaContext& ota, const AaContext& aa,
                                       const std::set<ChannelId>& subset,
                                       const PipelineConfig& cfg, const AaEvalConfig& acfg) {
    AaEvaluation out;

    // densities from held-out (last training day) scores, pooled across users
    {
        const auto fused = fuse_table(aa.heldout_table, subset, cfg);
        std::vector<double> genuine, impostor;
        for (const auto& [uid, rows] : fused.by_claimed) {
            for (const auto& r : rows) (r.genuine ? genuine : impostor).push_back(r.fused);
        }
        out.densities = fit_densities(genuine, impostor);
    }

    const auto fused = fuse_table(ota.table, subset, cfg);
    out.ota = evaluate_ota_scores(fused).averaged;

    // fused-score lookup per (claimed user, session)
    std::map<std::string, std::map<std::string, double>> lookup;
    for (const auto& [uid, rows] : fused.by_claimed) {
        auto& m = lookup[uid];
        for (const auto& r : rows) m[r.session_id] = r.fused;
    }

    out.specs = make_aa_sequences(ota.test, acfg.genuine_len, acfg.impostor_len,
                                  acfg.pairs_per_user, acfg.seed, &out.warnings);
    std::vector<const AaSequenceSpec*> resolved_specs;
    for (const auto& spec : out.specs) {
        const auto it = lookup.find(spec.user_id);
        if (it == lookup.end()) continue;  // user not enrolled
        AaSequence seq;
        seq.user_id = spec.user_id;
        int cp = spec.change_point;
        for (std::size_t k = 0; k < spec.sessions.size(); ++k) {
            const auto f = it->second.find(spec.sessions[k].second);
            if (f == it->second.end()) {
                // session was skipped by fusion; shorten the sequence
                if (static_cast<int>(k) < spec.change_point) --cp;
                out.warnings.push_back(spec.sequence_id + ": session " +
                                       spec.sessions[k].second + " missing from fused scores");
                continue;
            }
            seq.fused.push_back(f->second);
        }
        seq.change_point = cp;
        if (seq.fused.empty()) continue;
        out.sequences.push_back(std::move(seq));
        resolved_specs.push_back(&spec);
    }
    if (out.sequences.empty())
        throw std::runtime_error("evaluate_aa_subset: no usable sequences");

    std::vector<double> h_grid;
    if (acfg.h_max > 0.0) {
        h_grid.resize(static_cast<std::size_t>(acfg.h_steps));
        for (int i = 0; i < acfg.h_steps; ++i)
            h_grid[static_cast<std::size_t>(i)] =
                acfg.h_max * static_cast<double>(i) / std::max(1, acfg.h_steps - 1);
    } else {
        h_grid = default_h_grid(out.sequences, out.densities, acfg.h_steps);
    }
    out.curves = compute_aa_curves(out.sequences, out.densities, h_grid);

    // trace dump at the operating threshold
    for (std::size_t i = 0; i < out.sequences.size(); ++i) {
        const auto& seq = out.sequences[i];
        const auto& spec = *resolved_specs[i];
        std::vector<std::pair<double, bool>> scored;
        for (std::size_t k = 0; k < seq.fused.size(); ++k) {
            scored.emplace_back(seq.fused[k], static_cast<int>(k) >= seq.change_point);
        }
        SequenceTrace tr;
        tr.sequence_id = spec.sequence_id;
        tr.user_id = spec.user_id;
        tr.impostor_user = spec.impostor_user;
        tr.change_point = seq.change_point;
        tr.run = run_aa(scored, out.densities, out.curves.h_at_eer);
        out.traces.push_back(std::move(tr));
    }
    return out;
}

}  // namespace conauth
