// conauth — continuous smartphone authentication over seven data channels.
//
// Subcommands: generate, enroll, score, evaluate-ota, evaluate-aa,
// features dump, curves roc, curves aa. Every command writes its outputs
// plus one manifest.json (config snapshot, seed, file digests) into --out.
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "conauth/conauth.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::set<conauth::ChannelId> parse_channels(const std::string& csv) {
    std::set<conauth::ChannelId> out;
    if (csv == "all" || csv.empty()) {
        out.insert(conauth::kAllChannels.begin(), conauth::kAllChannels.end());
        return out;
    }
    std::stringstream ss(csv);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto c = conauth::channel_from_name(tok);
        if (!c) throw CLI::ValidationError("--channels", "unknown channel: " + tok);
        out.insert(*c);
    }
    if (out.empty()) throw CLI::ValidationError("--channels", "empty channel list");
    return out;
}

std::string channels_to_string(const std::set<conauth::ChannelId>& channels) {
    std::string s;
    for (auto c : channels) {
        if (!s.empty()) s += ",";
        s += conauth::channel_name(c);
    }
    return s;
}

json load_json_file(const fs::path& path) {
    std::ifstream f(path);
    if (!f) throw std::runtime_error("cannot open config file: " + path.string());
    json j;
    f >> j;
    return j;
}

// ---------------------------------------------------------------------------
// enrollment artifacts on disk
// ---------------------------------------------------------------------------

void save_enrollment(const conauth::Enrollment& enr, const fs::path& dir,
                     std::vector<fs::path>& outputs) {
    fs::create_directories(dir / "users");
    {
        json j;
        j["config"] = enr.config;
        j["channels"] = channels_to_string(enr.channels);
        conauth::io::write_file(dir / "pipeline_config.json", j.dump(2) + "\n");
        outputs.push_back(dir / "pipeline_config.json");
    }
    {
        conauth::io::CsvWriter csv(dir / "skips.csv");
        csv.metadata("kind", "users excluded from enrollment");
        csv.header({"user_id", "reason"});
        for (const auto& s : enr.skipped_users) csv.line({s.user_id, s.reason});
        outputs.push_back(dir / "skips.csv");
    }
    for (const auto& [uid, um] : enr.users) {
        json j;
        j["format_version"] = conauth::kModelFormatVersion;
        j["user_id"] = uid;
        json templates = json::object();
        for (const auto& [c, tpl] : um.templates) templates[conauth::channel_name(c)] = tpl;
        j["templates"] = std::move(templates);
        json verifiers = json::object();
        for (const auto& [c, v] : um.verifiers) verifiers[conauth::channel_name(c)] = v;
        j["verifiers"] = std::move(verifiers);
        j["normalization"] = um.norm;
        json skips = json::array();
        for (const auto& s : um.skipped_channels)
            skips.push_back({{"channel", conauth::channel_name(s.channel)}, {"reason", s.reason}});
        j["skipped_channels"] = std::move(skips);
        const fs::path p = dir / "users" / (uid + ".json");
        conauth::io::write_file(p, j.dump() + "\n");
        outputs.push_back(p);
    }
}

conauth::Enrollment load_enrollment(const fs::path& dir) {
    conauth::Enrollment enr;
    const json cfg = load_json_file(dir / "pipeline_config.json");
    enr.config = cfg.at("config").get<conauth::PipelineConfig>();
    enr.channels = parse_channels(cfg.at("channels").get<std::string>());
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(dir / "users")) {
        if (e.path().extension() == ".json") files.push_back(e.path());
    }
    std::sort(files.begin(), files.end());
    for (const auto& p : files) {
        const json j = load_json_file(p);
        conauth::UserModels um;
        um.user_id = j.at("user_id").get<std::string>();
        for (const auto& [name, tpl] : j.at("templates").items()) {
            const auto c = conauth::channel_from_name(name);
            if (!c) throw std::runtime_error("unknown channel in " + p.string());
            um.templates[*c] = tpl.get<conauth::BehaviorTemplate>();
        }
        for (const auto& [name, v] : j.at("verifiers").items()) {
            const auto c = conauth::channel_from_name(name);
            if (!c) throw std::runtime_error("unknown channel in " + p.string());
            um.verifiers[*c] = v.get<conauth::TrainedVerifier>();
        }
        um.norm = j.at("normalization").get<conauth::NormalizationParams>();
        for (const auto& s : j.at("skipped_channels")) {
            const auto c = conauth::channel_from_name(s.at("channel").get<std::string>());
            if (c) um.skipped_channels.push_back({*c, s.at("reason").get<std::string>()});
        }
        enr.users[um.user_id] = std::move(um);
    }
    return enr;
}

// ---------------------------------------------------------------------------
// CSV writers shared by score / evaluate commands
// ---------------------------------------------------------------------------

void write_score_dump(const fs::path& path, const conauth::OtaTable& table,
                      const conauth::FusedTable& fused, const std::set<conauth::ChannelId>& subset,
                      const std::string& only_claimed = {}) {
    conauth::io::CsvWriter csv(path);
    csv.metadata("convention", "higher score = more genuine; fused in (0,1)");
    csv.metadata("subset", channels_to_string(subset));
    csv.header({"user_id", "session_id", "claimed_user", "label", "channel", "raw", "normalized",
                "fused"});
    for (const auto& [claimed, rows] : table.by_claimed) {
        if (!only_claimed.empty() && claimed != only_claimed) continue;
        std::map<std::string, double> fused_of;
        const auto it = fused.by_claimed.find(claimed);
        if (it != fused.by_claimed.end()) {
            for (const auto& r : it->second) fused_of[r.session_id] = r.fused;
        }
        for (const auto& row : rows) {
            const auto f = fused_of.find(row.session_id);
            if (f == fused_of.end()) continue;  // skipped by fusion
            const std::string label = row.genuine ? "genuine" : "impostor";
            for (const auto& [c, cs] : row.channels) {
                if (!subset.count(c)) continue;
                csv.line({row.true_user, row.session_id, claimed, label, conauth::channel_name(c),
                          conauth::io::fmt(cs.raw), conauth::io::fmt(*cs.normalized), ""});
            }
            csv.line({row.true_user, row.session_id, claimed, label, "fused", "", "",
                      conauth::io::fmt(f->second)});
        }
    }
}

void write_roc_csv(const fs::path& path, const conauth::OtaEvaluation& eval,
                   const std::set<conauth::ChannelId>& subset, std::uint64_t seed) {
    conauth::io::CsvWriter csv(path);
    csv.metadata("convention", "FAR = impostors accepted at threshold (%), FRR = genuine rejected (%)");
    csv.metadata("subset", channels_to_string(subset));
    csv.metadata("users", std::to_string(eval.per_user.size()));
    csv.metadata("seed", std::to_string(seed));
    csv.metadata("eer", conauth::io::fmt(eval.averaged.eer));
    csv.metadata("accuracy", conauth::io::fmt(eval.averaged.accuracy));
    csv.metadata("mean_of_user_eers", conauth::io::fmt(eval.averaged.mean_of_user_eers));
    csv.header({"far", "mean_frr"});
    for (std::size_t i = 0; i < eval.averaged.far_grid.size(); ++i) {
        csv.line({conauth::io::fmt(eval.averaged.far_grid[i]),
                  conauth::io::fmt(eval.averaged.mean_frr[i])});
    }
}

void write_per_user_eer_csv(const fs::path& path, const conauth::OtaEvaluation& eval,
                            const std::set<conauth::ChannelId>& subset) {
    conauth::io::CsvWriter csv(path);
    csv.metadata("subset", channels_to_string(subset));
    csv.header({"user_id", "eer", "accuracy"});
    for (const auto& [uid, roc] : eval.per_user) {
        csv.line({uid, conauth::io::fmt(roc.eer), conauth::io::fmt(roc.accuracy)});
    }
}

struct SummaryRow {
    std::string name;
    std::vector<conauth::ChannelId> biometrics;
};

const std::vector<SummaryRow>& summary_rows() {
    static const std::vector<SummaryRow> rows = {
        {"touch", {conauth::ChannelId::TouchGesture}},
        {"keystroke", {conauth::ChannelId::Keystroke}},
        {"accelerometer", {conauth::ChannelId::Accelerometer}},
        {"gyroscope", {conauth::ChannelId::Gyroscope}},
        {"combined",
         {conauth::ChannelId::TouchGesture, conauth::ChannelId::Keystroke,
          conauth::ChannelId::Accelerometer, conauth::ChannelId::Gyroscope}},
    };
    return rows;
}

struct SummaryCol {
    std::string name;
    std::vector<conauth::ChannelId> behaviors;
};

const std::vector<SummaryCol>& summary_cols() {
    static const std::vector<SummaryCol> cols = {
        {"alone", {}},
        {"+wifi", {conauth::ChannelId::Wifi}},
        {"+gps", {conauth::ChannelId::Gps}},
        {"+app_usage", {conauth::ChannelId::AppUsage}},
        {"+all",
         {conauth::ChannelId::Wifi, conauth::ChannelId::Gps, conauth::ChannelId::AppUsage}},
    };
    return cols;
}

}  // namespace

// ---------------------------------------------------------------------------
// commands
// ---------------------------------------------------------------------------

static int cmd_generate(const fs::path& config_file, const fs::path& out_dir,
                        const std::map<std::string, double>& overrides) {
    conauth::GeneratorConfig cfg;
    if (!config_file.empty()) cfg = load_json_file(config_file).get<conauth::GeneratorConfig>();
    for (const auto& [key, value] : overrides) {
        if (key == "seed") cfg.seed = static_cast<std::uint64_t>(value);
        else if (key == "users") cfg.n_users = static_cast<int>(value);
        else if (key == "days") cfg.days_per_user = static_cast<int>(value);
        else if (key == "sessions") cfg.sessions_per_day = static_cast<int>(value);
        else if (key == "delta") cfg.set_separability(value);
        else if (key == "presence") cfg.set_presence(value);
    }
    cfg.validate();

    fs::create_directories(out_dir);
    const fs::path data_path = out_dir / "dataset.jsonl";
    conauth::io::write_file(data_path, conauth::generate_jsonl(cfg));
    conauth::io::write_manifest(out_dir, "generate", json(cfg), cfg.seed, {}, {data_path});
    std::cout << "generated " << data_path.string() << "\n";
    return 0;
}

static int cmd_enroll(const fs::path& dataset_path, const fs::path& out_dir,
                      const std::string& channels_csv, conauth::PipelineConfig cfg, int jobs) {
    const auto channels = parse_channels(channels_csv);
    const auto dataset = conauth::load_dataset(dataset_path.string(), cfg.dataset());
    auto split = conauth::split_by_days(dataset, cfg.train_fraction);
    const auto enr =
        conauth::enroll_users(split.train, channels, cfg, std::move(split.skipped), jobs);

    fs::create_directories(out_dir);
    std::vector<fs::path> outputs;
    save_enrollment(enr, out_dir, outputs);
    conauth::io::write_manifest(out_dir, "enroll", json(cfg), cfg.seed, {dataset_path}, outputs);

    std::size_t n_skipped_channels = 0;
    for (const auto& [_, um] : enr.users) n_skipped_channels += um.skipped_channels.size();
    std::cout << "enrolled " << enr.users.size() << " users (" << enr.skipped_users.size()
              << " users skipped, " << n_skipped_channels << " channel skips)\n";
    for (const auto& s : enr.skipped_users)
        std::cerr << "skip user " << s.user_id << ": " << s.reason << "\n";
    return 0;
}

static int cmd_score(const fs::path& dataset_path, const fs::path& models_dir,
                     const fs::path& out_dir, const std::string& claimed_user,
                     const std::string& subset_csv, bool count_test_duplicates,
                     bool impute_missing, int jobs) {
    auto enr = load_enrollment(models_dir);
    enr.config.count_test_duplicates = count_test_duplicates;
    enr.config.impute_missing = impute_missing;
    if (!enr.users.count(claimed_user))
        throw std::runtime_error("user '" + claimed_user + "' is not enrolled");
    const auto subset = parse_channels(subset_csv);

    const auto dataset = conauth::load_dataset(dataset_path.string(), enr.config.dataset());
    const auto split = conauth::split_by_days(dataset, enr.config.train_fraction);
    const auto table = conauth::compute_ota_table(enr, split.test, enr.config, jobs);
    const auto fused = conauth::fuse_table(table, subset, enr.config);

    fs::create_directories(out_dir);
    const fs::path scores_path = out_dir / "scores.csv";
    write_score_dump(scores_path, table, fused, subset, claimed_user);
    conauth::io::write_manifest(out_dir, "score", json(enr.config), enr.config.seed,
                                {dataset_path}, {scores_path});
    std::cout << "scored test sessions against user " << claimed_user << " -> "
              << scores_path.string() << "\n";
    return 0;
}

static int cmd_evaluate_ota(const fs::path& dataset_path, const fs::path& models_dir,
                            const fs::path& out_dir, const std::string& subset_csv, int jobs) {
    const auto enr = load_enrollment(models_dir);
    const auto subset = parse_channels(subset_csv);
    const auto dataset = conauth::load_dataset(dataset_path.string(), enr.config.dataset());
    const auto split = conauth::split_by_days(dataset, enr.config.train_fraction);
    const auto table = conauth::compute_ota_table(enr, split.test, enr.config, jobs);

    fs::create_directories(out_dir);
    std::vector<fs::path> outputs;

    const auto fused = conauth::fuse_table(table, subset, enr.config);
    const auto eval = conauth::evaluate_ota_scores(fused);
    write_score_dump(out_dir / "ota_scores.csv", table, fused, subset);
    write_roc_csv(out_dir / "roc.csv", eval, subset, enr.config.seed);
    write_per_user_eer_csv(out_dir / "per_user_eer.csv", eval, subset);
    outputs.push_back(out_dir / "ota_scores.csv");
    outputs.push_back(out_dir / "roc.csv");
    outputs.push_back(out_dir / "per_user_eer.csv");

    // biometric-rows x behavior-columns accuracy table
    {
        conauth::io::CsvWriter csv(out_dir / "summary.csv");
        csv.metadata("metric", "accuracy = 100 - EER (percent), averaged ROC across users");
        csv.metadata("subset_for_detail_files", channels_to_string(subset));
        std::vector<std::string> head = {"system"};
        for (const auto& col : summary_cols()) head.push_back(col.name);
        csv.header(head);
        for (const auto& row : summary_rows()) {
            std::vector<std::string> cells = {row.name};
            for (const auto& col : summary_cols()) {
                std::set<conauth::ChannelId> s(row.biometrics.begin(), row.biometrics.end());
                s.insert(col.behaviors.begin(), col.behaviors.end());
                const auto cell_eval =
                    conauth::evaluate_ota_scores(conauth::fuse_table(table, s, enr.config));
                cells.push_back(conauth::io::fmt(cell_eval.averaged.accuracy));
            }
            csv.line(cells);
        }
        outputs.push_back(out_dir / "summary.csv");
    }

    conauth::io::write_manifest(out_dir, "evaluate-ota", json(enr.config), enr.config.seed,
                                {dataset_path}, outputs);
    std::cout << "OTA accuracy (" << channels_to_string(subset)
              << "): " << conauth::io::fmt(eval.averaged.accuracy)
              << " (EER " << conauth::io::fmt(eval.averaged.eer) << ")\n";
    return 0;
}

static int cmd_evaluate_aa(const fs::path& dataset_path, const fs::path& models_dir,
                           const fs::path& out_dir, const std::string& subset_csv,
                           conauth::AaEvalConfig acfg, int jobs) {
    const auto enr = load_enrollment(models_dir);
    const auto subset = parse_channels(subset_csv);
    const auto dataset = conauth::load_dataset(dataset_path.string(), enr.config.dataset());

    conauth::OtaContext ota;
    {
        auto split = conauth::split_by_days(dataset, enr.config.train_fraction);
        ota.train = std::move(split.train);
        ota.test = std::move(split.test);
        ota.split_skips = std::move(split.skipped);
        ota.enrollment = enr;
        ota.table = conauth::compute_ota_table(enr, ota.test, enr.config, jobs);
    }
    const auto aa_ctx = conauth::build_aa_context(ota, enr.config, jobs);

    fs::create_directories(out_dir);
    std::vector<fs::path> outputs;

    const auto eval = conauth::evaluate_aa_subset(ota, aa_ctx, subset, enr.config, acfg);
    {
        conauth::io::CsvWriter csv(out_dir / "aa_curves.csv");
        csv.metadata("convention", "crossing h flags an intruder; PFD/PND in percent");
        csv.metadata("add", "mean sessions to detect; undetected sequences contribute the full "
                            "impostor-suffix length");
        csv.metadata("subset", channels_to_string(subset));
        csv.metadata("h_grid", std::to_string(eval.curves.h_grid.size()) + " points");
        csv.metadata("users", std::to_string(eval.curves.per_user.size()));
        csv.metadata("seed", std::to_string(acfg.seed));
        csv.metadata("aa_eer", conauth::io::fmt(eval.curves.eer));
        csv.metadata("aa_accuracy", conauth::io::fmt(eval.curves.accuracy));
        csv.metadata("add_at_eer", conauth::io::fmt(eval.curves.add_at_eer));
        csv.metadata("h_at_eer", conauth::io::fmt(eval.curves.h_at_eer));
        csv.metadata("mean_of_user_eers", conauth::io::fmt(eval.curves.mean_of_user_eers));
        csv.metadata("ota_accuracy_same_subset", conauth::io::fmt(eval.ota.accuracy));
        csv.header({"h", "pfd", "pnd", "add"});
        for (const auto& p : eval.curves.averaged) {
            csv.line({conauth::io::fmt(p.h), conauth::io::fmt(p.pfd), conauth::io::fmt(p.pnd),
                      conauth::io::fmt(p.add)});
        }
        outputs.push_back(out_dir / "aa_curves.csv");
    }
    {
        conauth::io::CsvWriter csv(out_dir / "aa_traces.csv");
        csv.metadata("threshold", conauth::io::fmt(eval.curves.h_at_eer));
        csv.metadata("subset", channels_to_string(subset));
        csv.header({"sequence_id", "user_id", "impostor_user", "change_point", "j", "fused", "llr",
                    "cumulative", "detected"});
        for (const auto& tr : eval.traces) {
            for (const auto& row : tr.run.rows) {
                csv.line({tr.sequence_id, tr.user_id, tr.impostor_user,
                          std::to_string(tr.change_point), std::to_string(row.j),
                          conauth::io::fmt(row.fused), conauth::io::fmt(row.llr),
                          conauth::io::fmt(row.cumulative), row.detected ? "1" : "0"});
            }
        }
        outputs.push_back(out_dir / "aa_traces.csv");
    }
    {
        conauth::io::CsvWriter csv(out_dir / "aa_summary.csv");
        csv.metadata("metric", "accuracy = 100 - EER (percent); add = sessions at the EER point");
        csv.metadata("sequences", std::to_string(acfg.genuine_len) + " genuine + " +
                                      std::to_string(acfg.impostor_len) + " impostor, " +
                                      std::to_string(acfg.pairs_per_user) + " pairs/user");
        csv.header({"system", "ota_accuracy", "aa_accuracy", "add_at_eer", "h_at_eer"});
        for (const auto& row : summary_rows()) {
            std::set<conauth::ChannelId> s(row.biometrics.begin(), row.biometrics.end());
            s.insert(conauth::kBehaviorChannels.begin(), conauth::kBehaviorChannels.end());
            const auto row_eval = conauth::evaluate_aa_subset(ota, aa_ctx, s, enr.config, acfg);
            csv.line({row.name + "+all", conauth::io::fmt(row_eval.ota.accuracy),
                      conauth::io::fmt(row_eval.curves.accuracy),
                      conauth::io::fmt(row_eval.curves.add_at_eer),
                      conauth::io::fmt(row_eval.curves.h_at_eer)});
        }
        outputs.push_back(out_dir / "aa_summary.csv");
    }

    conauth::io::write_manifest(out_dir, "evaluate-aa", json(enr.config), acfg.seed,
                                {dataset_path}, outputs);
    for (const auto& w : eval.warnings) std::cerr << "warning: " << w << "\n";
    std::cout << "AA accuracy (" << channels_to_string(subset)
              << "): " << conauth::io::fmt(eval.curves.accuracy) << " at ADD "
              << conauth::io::fmt(eval.curves.add_at_eer) << " (OTA "
              << conauth::io::fmt(eval.ota.accuracy) << ")\n";
    return 0;
}

static int cmd_features_dump(const fs::path& dataset_path, const fs::path& out_dir,
                             const std::string& channel_name_arg, double burst_gap) {
    const auto channel = conauth::channel_from_name(channel_name_arg);
    if (!channel || !conauth::is_biometric_channel(*channel))
        throw CLI::ValidationError("--channel", "needs one of: touch, keystroke, accelerometer, gyroscope");
    const auto dataset = conauth::load_dataset(dataset_path.string());

    fs::create_directories(out_dir);
    const fs::path out_path = out_dir / ("features_" + std::string(conauth::channel_name(*channel)) + ".csv");
    conauth::io::CsvWriter csv(out_path);
    csv.metadata("channel", conauth::channel_name(*channel));
    csv.metadata("dim", std::to_string(conauth::feature_dim(*channel)));
    std::vector<std::string> head = {"user_id", "session_id", "sample_index"};
    for (const auto& n : conauth::feature_names(*channel)) head.push_back(n);
    csv.header(head);

    conauth::FeatureConfig fcfg;
    fcfg.key_burst_gap_s = burst_gap;
    std::size_t rows = 0;
    for (const auto& [uid, sessions] : dataset.users) {
        for (const auto& s : sessions) {
            const auto vecs = conauth::session_feature_vectors(s, *channel, fcfg);
            for (std::size_t i = 0; i < vecs.size(); ++i) {
                std::vector<std::string> cells = {uid, s.session_id, std::to_string(i)};
                for (double v : vecs[i].values) cells.push_back(conauth::io::fmt(v));
                csv.line(cells);
                ++rows;
            }
        }
    }
    conauth::io::write_manifest(out_dir, "features dump", json{{"channel", channel_name_arg}}, 0,
                                {dataset_path}, {out_path});
    std::cout << rows << " feature vectors -> " << out_path.string() << "\n";
    return 0;
}

static int cmd_curves_roc(const fs::path& scores_path, const fs::path& out_dir) {
    // fused rows of a score dump, grouped by claimed user
    std::ifstream f(scores_path);
    if (!f) throw std::runtime_error("cannot open: " + scores_path.string());
    std::map<std::string, std::pair<std::vector<double>, std::vector<double>>> per_user;
    std::string line;
    bool saw_header = false;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {  // header row
            saw_header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) cells.push_back(tok);
        if (cells.size() < 8 || cells[4] != "fused") continue;
        auto& [genuine, impostor] = per_user[cells[2]];
        (cells[3] == "genuine" ? genuine : impostor).push_back(std::stod(cells[7]));
    }
    if (per_user.empty()) throw std::runtime_error("no fused rows found in " + scores_path.string());

    conauth::OtaEvaluation eval;
    std::vector<conauth::RocCurve> curves;
    for (const auto& [uid, scores] : per_user) {
        auto roc = conauth::compute_eer(scores.first, scores.second);
        curves.push_back(roc);
        eval.per_user.emplace_back(uid, std::move(roc));
    }
    eval.averaged = conauth::average_rocs(curves);

    fs::create_directories(out_dir);
    std::set<conauth::ChannelId> unknown;  // subset is whatever the dump carried
    write_roc_csv(out_dir / "roc.csv", eval, unknown, 0);
    write_per_user_eer_csv(out_dir / "per_user_eer.csv", eval, unknown);
    conauth::io::write_manifest(out_dir, "curves roc", json::object(), 0, {scores_path},
                                {out_dir / "roc.csv", out_dir / "per_user_eer.csv"});
    std::cout << "EER " << conauth::io::fmt(eval.averaged.eer) << " over "
              << eval.per_user.size() << " users\n";
    return 0;
}

static int cmd_curves_aa(const fs::path& traces_path, const fs::path& out_dir, int h_steps,
                         double h_max) {
    std::ifstream f(traces_path);
    if (!f) throw std::runtime_error("cannot open: " + traces_path.string());
    struct Trace {
        std::string user_id;
        int change_point = 0;
        std::vector<double> cumulative;
    };
    std::map<std::string, Trace> traces;
    std::string line;
    bool saw_header = false;
    while (std::getline(f, line)) {
        if (line.empty() || line[0] == '#') continue;
        if (!saw_header) {
            saw_header = true;
            continue;
        }
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string tok;
        while (std::getline(ss, tok, ',')) cells.push_back(tok);
        if (cells.size() < 9) continue;
        auto& tr = traces[cells[0]];
        tr.user_id = cells[1];
        tr.change_point = std::stoi(cells[3]);
        tr.cumulative.push_back(std::stod(cells[7]));
    }
    if (traces.empty()) throw std::runtime_error("no trace rows found in " + traces_path.string());

    double top = h_max;
    if (top <= 0.0) {
        for (const auto& [_, tr] : traces) {
            for (double c : tr.cumulative) top = std::max(top, c);
        }
        top = std::max(top, 1e-6) * 1.02;
    }

    // rebuild per-user PFD/PND/ADD from stored cumulative sums
    std::map<std::string, std::vector<Trace>> by_user;
    for (auto& [_, tr] : traces) by_user[tr.user_id].push_back(std::move(tr));

    fs::create_directories(out_dir);
    conauth::io::CsvWriter csv(out_dir / "aa_curves.csv");
    csv.metadata("source", traces_path.string());
    csv.metadata("add", "mean sessions to detect; undetected sequences contribute the full "
                        "impostor-suffix length");
    csv.header({"h", "pfd", "pnd", "add"});
    for (int i = 0; i < h_steps; ++i) {
        const double h = top * static_cast<double>(i) / std::max(1, h_steps - 1);
        double pfd = 0, pnd = 0, add = 0;
        std::size_t users_with_gonly = 0, users_with_change = 0;
        for (const auto& [_, trs] : by_user) {
            int n_gonly = 0, crossed = 0, n_change = 0, undetected = 0;
            double delay_sum = 0;
            for (const auto& tr : trs) {
                const int len = static_cast<int>(tr.cumulative.size());
                if (tr.change_point >= len) {
                    ++n_gonly;
                    for (double c : tr.cumulative) {
                        if (c >= h) {
                            ++crossed;
                            break;
                        }
                    }
                } else {
                    ++n_change;
                    int delay = len - tr.change_point;
                    bool detected = false;
                    for (int j = tr.change_point + 1; j <= len; ++j) {
                        if (tr.cumulative[static_cast<std::size_t>(j) - 1] >= h) {
                            delay = j - tr.change_point;
                            detected = true;
                            break;
                        }
                    }
                    if (!detected) ++undetected;
                    delay_sum += delay;
                }
            }
            if (n_gonly > 0) {
                pfd += 100.0 * crossed / n_gonly;
                ++users_with_gonly;
            }
            if (n_change > 0) {
                pnd += 100.0 * undetected / n_change;
                add += delay_sum / n_change;
                ++users_with_change;
            }
        }
        if (users_with_gonly) pfd /= static_cast<double>(users_with_gonly);
        if (users_with_change) {
            pnd /= static_cast<double>(users_with_change);
            add /= static_cast<double>(users_with_change);
        }
        csv.line({conauth::io::fmt(h), conauth::io::fmt(pfd), conauth::io::fmt(pnd),
                  conauth::io::fmt(add)});
    }
    conauth::io::write_manifest(out_dir, "curves aa", json{{"h_steps", h_steps}}, 0, {traces_path},
                                {out_dir / "aa_curves.csv"});
    std::cout << "recomputed AA curves over " << by_user.size() << " users\n";
    return 0;
}

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
    CLI::App app{"continuous smartphone authentication engine"};
    app.require_subcommand(1);

    // generate
    auto* gen = app.add_subcommand("generate", "synthesize a labeled session dataset");
    std::string gen_config, gen_out;
    std::map<std::string, double> gen_overrides;
    gen->add_option("--config", gen_config, "generator config JSON");
    gen->add_option("--out", gen_out, "output directory")->required();
    double ov_seed = -1, ov_users = -1, ov_days = -1, ov_sessions = -1, ov_delta = -1,
           ov_presence = -1;
    gen->add_option("--seed", ov_seed, "root seed");
    gen->add_option("--users", ov_users, "number of users");
    gen->add_option("--days", ov_days, "days per user");
    gen->add_option("--sessions", ov_sessions, "sessions per day");
    gen->add_option("--delta", ov_delta, "separability for all channels [0,1]");
    gen->add_option("--presence", ov_presence, "channel presence probability [0,1]");

    // enroll
    auto* enroll = app.add_subcommand("enroll", "train per-user models on the training days");
    std::string en_dataset, en_out, en_channels = "all", en_config;
    conauth::PipelineConfig en_cfg;
    int en_jobs = 1;
    enroll->add_option("--dataset", en_dataset, "JSONL dataset")->required();
    enroll->add_option("--out", en_out, "output directory")->required();
    enroll->add_option("--channels", en_channels, "comma list or 'all'");
    enroll->add_option("--config", en_config, "pipeline config JSON");
    enroll->add_option("--train-fraction", en_cfg.train_fraction, "fraction of days for training");
    enroll->add_option("--slots", en_cfg.slots_per_day, "time slots per day");
    enroll->add_option("--tz-offset", en_cfg.tz_offset_s, "day boundary offset, seconds");
    enroll->add_option("--seed", en_cfg.seed, "root seed");
    enroll->add_option("--jobs", en_jobs, "parallel workers");

    // score
    auto* score = app.add_subcommand("score", "score test sessions against one enrolled user");
    std::string sc_dataset, sc_models, sc_out, sc_user, sc_subset = "all";
    bool sc_dups = false, sc_impute = false;
    int sc_jobs = 1;
    score->add_option("--dataset", sc_dataset)->required();
    score->add_option("--models", sc_models, "enrollment directory")->required();
    score->add_option("--out", sc_out)->required();
    score->add_option("--user", sc_user, "claimed user id")->required();
    score->add_option("--subset", sc_subset, "fusion channel subset");
    score->add_flag("--count-test-duplicates", sc_dups,
                    "count repeated (event,slot) pairs in test sessions");
    score->add_flag("--impute-missing", sc_impute, "impute absent channels at 0.5");
    score->add_option("--jobs", sc_jobs);

    // evaluate-ota
    auto* eota = app.add_subcommand("evaluate-ota", "single-session authentication evaluation");
    std::string eo_dataset, eo_models, eo_out, eo_subset = "all";
    int eo_jobs = 1;
    eota->add_option("--dataset", eo_dataset)->required();
    eota->add_option("--models", eo_models)->required();
    eota->add_option("--out", eo_out)->required();
    eota->add_option("--subset", eo_subset, "fusion channel subset for detail files");
    eota->add_option("--jobs", eo_jobs);

    // evaluate-aa
    auto* eaa = app.add_subcommand("evaluate-aa", "sequential (multi-session) evaluation");
    std::string ea_dataset, ea_models, ea_out, ea_subset = "all";
    conauth::AaEvalConfig ea_cfg;
    int ea_jobs = 1;
    eaa->add_option("--dataset", ea_dataset)->required();
    eaa->add_option("--models", ea_models)->required();
    eaa->add_option("--out", ea_out)->required();
    eaa->add_option("--subset", ea_subset, "fusion channel subset");
    eaa->add_option("--genuine-len", ea_cfg.genuine_len, "genuine prefix length");
    eaa->add_option("--impostor-len", ea_cfg.impostor_len, "impostor suffix length");
    eaa->add_option("--pairs", ea_cfg.pairs_per_user, "sequences of each kind per user");
    eaa->add_option("--h-steps", ea_cfg.h_steps, "threshold sweep size");
    eaa->add_option("--h-max", ea_cfg.h_max, "threshold sweep top (auto when <= 0)");
    eaa->add_option("--seed", ea_cfg.seed, "sequence sampling seed");
    eaa->add_option("--jobs", ea_jobs);

    // features dump
    auto* features = app.add_subcommand("features", "feature vector utilities");
    features->require_subcommand(1);
    auto* fdump = features->add_subcommand("dump", "emit per-sample feature vectors as CSV");
    std::string fd_dataset, fd_out, fd_channel;
    double fd_gap = 5.0;
    fdump->add_option("--dataset", fd_dataset)->required();
    fdump->add_option("--out", fd_out)->required();
    fdump->add_option("--channel", fd_channel, "touch|keystroke|accelerometer|gyroscope")
        ->required();
    fdump->add_option("--burst-gap", fd_gap, "keystroke burst split gap, seconds");

    // curves
    auto* curves = app.add_subcommand("curves", "recompute evaluation curves from score dumps");
    curves->require_subcommand(1);
    auto* croc = curves->add_subcommand("roc", "ROC/EER from an OTA score dump");
    std::string cr_scores, cr_out;
    croc->add_option("--scores", cr_scores, "ota_scores.csv / scores.csv")->required();
    croc->add_option("--out", cr_out)->required();
    auto* caa = curves->add_subcommand("aa", "PFD/PND/ADD curves from a trace dump");
    std::string ca_traces, ca_out;
    int ca_steps = 201;
    double ca_hmax = 0.0;
    caa->add_option("--traces", ca_traces, "aa_traces.csv")->required();
    caa->add_option("--out", ca_out)->required();
    caa->add_option("--h-steps", ca_steps);
    caa->add_option("--h-max", ca_hmax);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    try {
        if (gen->parsed()) {
            if (ov_seed >= 0) gen_overrides["seed"] = ov_seed;
            if (ov_users >= 0) gen_overrides["users"] = ov_users;
            if (ov_days >= 0) gen_overrides["days"] = ov_days;
            if (ov_sessions >= 0) gen_overrides["sessions"] = ov_sessions;
            if (ov_delta >= 0) gen_overrides["delta"] = ov_delta;
            if (ov_presence >= 0) gen_overrides["presence"] = ov_presence;
            return cmd_generate(gen_config, gen_out, gen_overrides);
        }
        if (enroll->parsed()) {
            conauth::PipelineConfig cfg;
            if (!en_config.empty()) cfg = load_json_file(en_config).get<conauth::PipelineConfig>();
            // flags override the file, which overrides defaults
            if (enroll->count("--train-fraction")) cfg.train_fraction = en_cfg.train_fraction;
            if (enroll->count("--slots")) cfg.slots_per_day = en_cfg.slots_per_day;
            if (enroll->count("--tz-offset")) cfg.tz_offset_s = en_cfg.tz_offset_s;
            if (enroll->count("--seed")) cfg.seed = en_cfg.seed;
            return cmd_enroll(en_dataset, en_out, en_channels, cfg, en_jobs);
        }
        if (score->parsed())
            return cmd_score(sc_dataset, sc_models, sc_out, sc_user, sc_subset, sc_dups, sc_impute,
                             sc_jobs);
        if (eota->parsed()) return cmd_evaluate_ota(eo_dataset, eo_models, eo_out, eo_subset, eo_jobs);
        if (eaa->parsed())
            return cmd_evaluate_aa(ea_dataset, ea_models, ea_out, ea_subset, ea_cfg, ea_jobs);
        if (fdump->parsed()) return cmd_features_dump(fd_dataset, fd_out, fd_channel, fd_gap);
        if (croc->parsed()) return cmd_curves_roc(cr_scores, cr_out);
        if (caa->parsed()) return cmd_curves_aa(ca_traces, ca_out, ca_steps, ca_hmax);
    } catch (const CLI::ValidationError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 2;
}
