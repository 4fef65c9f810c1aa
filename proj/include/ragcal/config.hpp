#pragma once

#include <charconv>
#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <variant>
#include <vector>

#include "ragcal/error.hpp"
#include "ragcal/gateway.hpp"
#include "ragcal/jsonl.hpp"
#include "ragcal/text.hpp"

namespace ragcal {

// Minimal TOML-style config reader. Supported subset: [section] headers
// (dotted allowed), key = value lines, # comments, and scalar values of type
// string ("..."), integer, float, bool, plus single-line string arrays.
class ConfigFile {
public:
    using Value = std::variant<std::string, std::int64_t, double, bool, std::vector<std::string>>;

    static ConfigFile parse(const std::string& text, const std::string& origin = "<config>") {
        ConfigFile cfg;
        std::string section;
        std::size_t line_no = 0;
        for (const auto& raw_line : split_lines(text)) {
            ++line_no;
            std::string line = strip_comment(raw_line);
            line = trim(line);
            if (line.empty()) continue;
            if (line.front() == '[') {
                if (line.back() != ']') fail(origin, line_no, "unterminated section header");
                section = trim(line.substr(1, line.size() - 2));
                if (section.empty()) fail(origin, line_no, "empty section name");
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) fail(origin, line_no, "expected key = value");
            std::string key = trim(line.substr(0, eq));
            std::string value = trim(line.substr(eq + 1));
            if (key.empty()) fail(origin, line_no, "empty key");
            const std::string full_key = section.empty() ? key : section + "." + key;
            cfg.values_[full_key] = parse_value(value, origin, line_no);
        }
        return cfg;
    }

    static ConfigFile load(const std::filesystem::path& path) {
        return parse(read_text(path), path.string());
    }

    bool has(const std::string& key) const { return values_.count(key) > 0; }

    std::string get_string(const std::string& key, const std::string& fallback = {}) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (auto* s = std::get_if<std::string>(&it->second)) return *s;
        throw_usage("config key '" + key + "' is not a string");
    }

    std::int64_t get_int(const std::string& key, std::int64_t fallback = 0) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (auto* i = std::get_if<std::int64_t>(&it->second)) return *i;
        throw_usage("config key '" + key + "' is not an integer");
    }

    double get_double(const std::string& key, double fallback = 0.0) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (auto* d = std::get_if<double>(&it->second)) return *d;
        if (auto* i = std::get_if<std::int64_t>(&it->second)) return static_cast<double>(*i);
        throw_usage("config key '" + key + "' is not a number");
    }

    bool get_bool(const std::string& key, bool fallback = false) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (auto* b = std::get_if<bool>(&it->second)) return *b;
        throw_usage("config key '" + key + "' is not a bool");
    }

    std::vector<std::string> get_strings(const std::string& key,
                                         std::vector<std::string> fallback = {}) const {
        auto it = values_.find(key);
        if (it == values_.end()) return fallback;
        if (auto* v = std::get_if<std::vector<std::string>>(&it->second)) return *v;
        if (auto* s = std::get_if<std::string>(&it->second)) return {*s};
        throw_usage("config key '" + key + "' is not a string array");
    }

private:
    [[noreturn]] static void fail(const std::string& origin, std::size_t line, const std::string& msg) {
        throw_usage(origin + ":" + std::to_string(line) + ": " + msg);
    }

    static std::string strip_comment(const std::string& line) {
        bool in_string = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
            if (line[i] == '#' && !in_string) return line.substr(0, i);
        }
        return line;
    }

    static std::string parse_string(const std::string& value, const std::string& origin,
                                    std::size_t line) {
        if (value.size() < 2 || value.back() != '"') fail(origin, line, "unterminated string");
        std::string out;
        for (std::size_t i = 1; i + 1 < value.size(); ++i) {
            char c = value[i];
            if (c == '\\' && i + 2 < value.size()) {
                char next = value[++i];
                switch (next) {
                    case 'n': out.push_back('\n'); break;
                    case 't': out.push_back('\t'); break;
                    case '"': out.push_back('"'); break;
                    case '\\': out.push_back('\\'); break;
                    default: out.push_back(next); break;
                }
            } else {
                out.push_back(c);
            }
        }
        return out;
    }

    static Value parse_value(const std::string& value, const std::string& origin, std::size_t line) {
        if (value.empty()) fail(origin, line, "empty value");
        if (value.front() == '"') return parse_string(value, origin, line);
        if (value.front() == '[') {
            if (value.back() != ']') fail(origin, line, "unterminated array");
            std::vector<std::string> items;
            std::string inner = value.substr(1, value.size() - 2);
            std::string cur;
            bool in_string = false;
            for (std::size_t i = 0; i < inner.size(); ++i) {
                char c = inner[i];
                if (c == '"' && (i == 0 || inner[i - 1] != '\\')) in_string = !in_string;
                if (c == ',' && !in_string) {
                    const std::string item = trim(cur);
                    if (!item.empty()) items.push_back(parse_string(item, origin, line));
                    cur.clear();
                } else {
                    cur.push_back(c);
                }
            }
            const std::string item = trim(cur);
            if (!item.empty()) items.push_back(parse_string(item, origin, line));
            return items;
        }
        if (value == "true") return true;
        if (value == "false") return false;
        std::int64_t i = 0;
        auto [p, ec] = std::from_chars(value.data(), value.data() + value.size(), i);
        if (ec == std::errc() && p == value.data() + value.size()) return i;
        try {
            std::size_t used = 0;
            double d = std::stod(value, &used);
            if (used == value.size()) return d;
        } catch (const std::exception&) {
        }
        fail(origin, line, "unparseable value: " + value);
    }

    std::map<std::string, Value> values_;
};

// ---------------------------------------------------------------------------
// Run configuration shared by the CLI subcommands.
// ---------------------------------------------------------------------------

struct RunConfig {
    // paths
    std::filesystem::path instances;
    std::filesystem::path passages;
    std::filesystem::path corpus;
    std::filesystem::path contexts;
    std::filesystem::path responses;
    std::filesystem::path records;
    std::filesystem::path out_dir = "out";
    std::filesystem::path prompt_dir;  // optional override of embedded templates

    EndpointConfig endpoint;

    // build
    std::string build_mode = "setting";  // "setting" or "group"
    std::string setting = "gold_only";
    std::string group = "counterfactual";
    int k = 3;
    int gold_pos = -1;  // -1 = randomized

    // generation
    std::string template_name = "cot";
    double temperature = 0.0;
    int max_tokens = 2048;
    int n_samples = 1;

    // seeds
    std::int64_t shuffle_seed = 1;
    std::int64_t sample_seed = 2;
    std::int64_t bootstrap_seed = 3;
    std::int64_t balance_seed = 4;
    std::int64_t mock_seed = 5;

    // pipeline toggles
    bool expect_judgments = true;
    bool stage_judgment_on = true;
    bool stage_rule_on = true;
    bool common_ids_on = true;
    bool balance_on = true;
    bool label_only = false;

    // metrics
    int metric_bins = 10;
    int bootstrap_resamples = 0;

    static RunConfig from_file(const std::filesystem::path& path) {
        const ConfigFile cfg = ConfigFile::load(path);
        RunConfig rc;
        rc.instances = cfg.get_string("paths.instances");
        rc.passages = cfg.get_string("paths.passages");
        rc.corpus = cfg.get_string("paths.corpus");
        rc.contexts = cfg.get_string("paths.contexts");
        rc.responses = cfg.get_string("paths.responses");
        rc.records = cfg.get_string("paths.records");
        rc.out_dir = cfg.get_string("paths.out_dir", "out");
        rc.prompt_dir = cfg.get_string("paths.prompt_dir");

        rc.endpoint.base_url = cfg.get_string("endpoint.base_url");
        rc.endpoint.path = cfg.get_string("endpoint.path", rc.endpoint.path);
        rc.endpoint.model_tag = cfg.get_string("endpoint.model", rc.endpoint.model_tag);
        rc.endpoint.auth_env = cfg.get_string("endpoint.auth_env");
        rc.endpoint.auth_header = cfg.get_string("endpoint.auth_header", rc.endpoint.auth_header);
        rc.endpoint.timeout_s = static_cast<int>(cfg.get_int("endpoint.timeout_s", rc.endpoint.timeout_s));
        rc.endpoint.max_retries = static_cast<int>(cfg.get_int("endpoint.max_retries", rc.endpoint.max_retries));
        rc.endpoint.backoff_ms = static_cast<int>(cfg.get_int("endpoint.backoff_ms", rc.endpoint.backoff_ms));
        rc.endpoint.parallel = static_cast<int>(cfg.get_int("endpoint.parallel", rc.endpoint.parallel));
        rc.endpoint.rate_limit_qps = cfg.get_double("endpoint.rate_limit_qps", 0.0);

        rc.build_mode = cfg.get_string("build.mode", rc.build_mode);
        rc.setting = cfg.get_string("build.setting", rc.setting);
        rc.group = cfg.get_string("build.group", rc.group);
        rc.k = static_cast<int>(cfg.get_int("build.k", rc.k));
        rc.gold_pos = static_cast<int>(cfg.get_int("build.gold_pos", rc.gold_pos));

        rc.template_name = cfg.get_string("generation.template", rc.template_name);
        rc.temperature = cfg.get_double("generation.temperature", rc.temperature);
        rc.max_tokens = static_cast<int>(cfg.get_int("generation.max_tokens", rc.max_tokens));
        rc.n_samples = static_cast<int>(cfg.get_int("generation.n_samples", rc.n_samples));

        rc.shuffle_seed = cfg.get_int("seeds.shuffle", rc.shuffle_seed);
        rc.sample_seed = cfg.get_int("seeds.sample", rc.sample_seed);
        rc.bootstrap_seed = cfg.get_int("seeds.bootstrap", rc.bootstrap_seed);
        rc.balance_seed = cfg.get_int("seeds.balance", rc.balance_seed);
        rc.mock_seed = cfg.get_int("seeds.mock", rc.mock_seed);

        rc.expect_judgments = cfg.get_bool("pipeline.expect_judgments", rc.expect_judgments);
        rc.stage_judgment_on = cfg.get_bool("pipeline.stage_judgment", rc.stage_judgment_on);
        rc.stage_rule_on = cfg.get_bool("pipeline.stage_rule", rc.stage_rule_on);
        rc.common_ids_on = cfg.get_bool("pipeline.common_ids", rc.common_ids_on);
        rc.balance_on = cfg.get_bool("pipeline.balance", rc.balance_on);
        rc.label_only = cfg.get_bool("pipeline.label_only", rc.label_only);

        rc.metric_bins = static_cast<int>(cfg.get_int("metrics.bins", rc.metric_bins));
        rc.bootstrap_resamples =
            static_cast<int>(cfg.get_int("metrics.bootstrap_resamples", rc.bootstrap_resamples));

        if (rc.k < 1) throw_usage("build.k must be >= 1");
        if (rc.metric_bins < 1) throw_usage("metrics.bins must be >= 1");
        if (rc.n_samples < 1) throw_usage("generation.n_samples must be >= 1");
        return rc;
    }

    // Commands validate only the inputs they actually consume.
    void require_paths(const std::vector<std::pair<std::string, std::filesystem::path>>& needed) const {
        for (const auto& [name, p] : needed) {
            if (p.empty()) throw_usage("config is missing paths." + name);
            if (!std::filesystem::exists(p)) {
                throw_data("paths." + name + " does not exist: " + p.string());
            }
        }
    }
};

}  // namespace ragcal
