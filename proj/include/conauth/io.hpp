#pragma once

#include <chrono>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "json.hpp"

#include "conauth/version.hpp"

namespace conauth::io {

/// fixed text form for doubles in CSV output; 12 significant digits keep
/// reruns byte-comparable and downstream recomputation faithful
inline std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

/// CSV with `#key: value` metadata lines ahead of the header row
class CsvWriter {
public:
    explicit CsvWriter(const std::filesystem::path& path) : out_(path) {
        if (!out_) throw std::runtime_error("cannot open for writing: " + path.string());
    }

    void metadata(const std::string& key, const std::string& value) {
        out_ << "#" << key << ": " << value << "\n";
    }

    void header(const std::vector<std::string>& columns) { line(columns); }

    void line(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out_ << ",";
            out_ << cells[i];
        }
        out_ << "\n";
    }

private:
    std::ofstream out_;
};

inline std::uint64_t fnv1a_bytes(const std::string& data) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open: " + path.string());
    std::ostringstream ss;
    ss << f.rdbuf();
    return ss.str();
}

inline void write_file(const std::filesystem::path& path, const std::string& content) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot open for writing: " + path.string());
    f << content;
}

inline std::string file_digest(const std::filesystem::path& path) {
    char buf[24];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a_bytes(read_file(path))));
    return buf;
}

inline std::string iso_timestamp_utc() {
    const auto now = std::chrono::system_clock::now();
    const std::time_t t = std::chrono::system_clock::to_time_t(now);
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

/// One manifest per command run: command, config snapshot, seed, and digests
/// of every input and output file. Digests are FNV-1a (change detection, not
/// tamper proofing). The timestamp is the only field expected to differ
/// between identical reruns.
inline void write_manifest(const std::filesystem::path& out_dir, const std::string& command,
                           const nlohmann::json& config, std::uint64_t seed,
                           const std::vector<std::filesystem::path>& inputs,
                           const std::vector<std::filesystem::path>& outputs) {
    nlohmann::json m;
    m["command"] = command;
    m["config"] = config;
    m["seed"] = seed;
    m["version"] = kVersion;
    m["model_format_version"] = kModelFormatVersion;
    m["timestamp"] = iso_timestamp_utc();
    nlohmann::json in = nlohmann::json::object();
    for (const auto& p : inputs) in[p.filename().string()] = file_digest(p);
    m["inputs"] = std::move(in);
    nlohmann::json out = nlohmann::json::object();
    for (const auto& p : outputs) out[p.filename().string()] = file_digest(p);
    m["outputs"] = std::move(out);
    write_file(out_dir / "manifest.json", m.dump(2) + "\n");
}

}  // namespace conauth::io
