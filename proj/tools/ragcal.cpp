// ragcal - noise-controlled RAG calibration toolkit CLI.
//
// Subcommands: gen-noise, build, generate, evaluate, filter, report.
// Exit codes: 0 success, 1 usage, 2 data error, 3 endpoint error.

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <mutex>
#include <set>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ragcal/config.hpp"
#include "ragcal/context.hpp"
#include "ragcal/gateway.hpp"
#include "ragcal/jsonl.hpp"
#include "ragcal/metrics.hpp"
#include "ragcal/mock.hpp"
#include "ragcal/parser.hpp"
#include "ragcal/pipeline.hpp"
#include "ragcal/prompts.hpp"
#include "ragcal/types.hpp"

namespace fs = std::filesystem;
using namespace ragcal;

namespace {

struct GlobalOptions {
    std::string config_path;
    std::string out_dir_override;
    std::string mock_path;
    std::int64_t seed_override = INT64_MIN;
};

RunConfig load_run_config(const GlobalOptions& opts) {
    if (opts.config_path.empty()) throw_usage("--config is required");
    RunConfig rc = RunConfig::from_file(opts.config_path);
    if (!opts.out_dir_override.empty()) rc.out_dir = opts.out_dir_override;
    if (opts.seed_override != INT64_MIN) rc.shuffle_seed = opts.seed_override;
    fs::create_directories(rc.out_dir);
    if (rc.passages.empty()) rc.passages = rc.out_dir / "passages.jsonl";
    if (rc.contexts.empty()) rc.contexts = rc.out_dir / "contexts.jsonl";
    if (rc.responses.empty()) rc.responses = rc.out_dir / "responses.jsonl";
    if (rc.records.empty()) rc.records = rc.out_dir / "records.jsonl";
    return rc;
}

PromptTemplate resolve_template(const RunConfig& rc, const std::string& name) {
    if (!rc.prompt_dir.empty()) {
        const fs::path p = rc.prompt_dir / (name + ".txt");
        if (!fs::exists(p)) throw_data("template file missing: " + p.string());
        return PromptTemplate{name, read_text(p)};
    }
    return get_template(name);
}

std::map<std::string, QAInstance> load_instances(const fs::path& path) {
    std::map<std::string, QAInstance> by_id;
    for (auto& inst : read_jsonl<QAInstance>(path)) {
        if (!by_id.emplace(inst.id, inst).second) {
            throw_data("duplicate instance id: " + inst.id);
        }
    }
    return by_id;
}

std::map<std::string, NoisePool> load_pools(const fs::path& path) {
    std::map<std::string, NoisePool> pools;
    for (const auto& lp : read_jsonl<LabeledPassage>(path)) {
        pools[lp.query_id].add(lp.passage);
    }
    return pools;
}

std::unique_ptr<ResponseSource> make_source(const RunConfig& rc, const GlobalOptions& opts) {
    if (!opts.mock_path.empty()) {
        return load_mock(opts.mock_path).source;
    }
    if (rc.endpoint.base_url.empty()) {
        throw_usage("no endpoint.base_url configured and no --mock given");
    }
    auto backend = std::make_shared<HttpChatBackend>(rc.endpoint);
    return std::make_unique<EndpointResponseSource>(
        backend, RetryPolicy{rc.endpoint.max_retries, rc.endpoint.backoff_ms});
}

std::string sanitize_tag(const std::string& tag) {
    std::string out;
    for (char c : tag) {
        out.push_back(std::isalnum(static_cast<unsigned char>(c)) ? c : '_');
    }
    return out;
}

std::int64_t per_query_seed(std::int64_t base, const std::string& query_id) {
    return static_cast<std::int64_t>(fnv1a64(query_id) ^ static_cast<std::uint64_t>(base));
}

void log_line(std::ofstream& log, const std::string& msg) {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    char stamp[32];
    std::strftime(stamp, sizeof(stamp), "%F %T", std::gmtime(&now));
    log << "[" << stamp << "] " << msg << "\n";
    std::cerr << msg << "\n";
}

// ---------------------------------------------------------------------------
// gen-noise
// ---------------------------------------------------------------------------

int cmd_gen_noise(const GlobalOptions& opts) {
    RunConfig rc = load_run_config(opts);
    rc.require_paths({{"instances", rc.instances}});
    auto instances = read_jsonl<QAInstance>(rc.instances);
    auto source = make_source(rc, opts);

    std::ofstream log(rc.out_dir / "gen_noise_errors.log", std::ios::app);
    std::vector<LabeledPassage> out;
    std::size_t tasks = 0, failures = 0;
    bool endpoint_failure = false;

    const std::pair<NoiseKind, const char*> kinds[] = {
        {NoiseKind::Cf, "noisegen_cf"}, {NoiseKind::Rel, "noisegen_rel"}, {NoiseKind::Irr, "noisegen_irr"}};

    for (std::size_t idx = 0; idx < instances.size(); ++idx) {
        const auto& inst = instances[idx];
        for (const auto& [kind, tmpl_name] : kinds) {
            ++tasks;
            try {
                const PromptTemplate tmpl = resolve_template(rc, tmpl_name);
                const std::string prompt = render_prompt(tmpl, inst);
                GenerationParams params = evaluation_preset(rc.endpoint.model_tag);
                RetrievalContext empty_ctx;
                empty_ctx.query_id = inst.id;
                auto result = source->generate_for(inst, empty_ctx, prompt, params);
                if (result.responses.empty()) throw_endpoint("no completion");
                auto passages = parse_noise_generation(result.responses[0].raw, kind);
                const std::string gold_norm = normalize_answer(inst.gold_answer);
                std::size_t rel_index = 0;
                for (auto& p : passages) {
                    if (kind == NoiseKind::Cf && p.supported_answer &&
                        normalize_answer(*p.supported_answer) == gold_norm) {
                        log_line(log, inst.id + "/cf: dropped passage whose supported answer "
                                          "matches gold");
                        continue;
                    }
                    if (kind == NoiseKind::Rel) {
                        Rng rng = Rng(static_cast<std::uint64_t>(rc.sample_seed))
                                      .derive(inst.id)
                                      .derive("rel_subtype")
                                      .derive(std::to_string(rel_index++));
                        switch (rng.uniform_index(3)) {
                            case 0: p.category = PassageCategory::RelevantEntity; break;
                            case 1: p.category = PassageCategory::RelevantRelation; break;
                            default: p.category = PassageCategory::RelevantTheme; break;
                        }
                    }
                    out.push_back(LabeledPassage{inst.id, std::move(p)});
                }
            } catch (const Error& e) {
                ++failures;
                if (e.kind() == ErrorKind::Endpoint) endpoint_failure = true;
                log_line(log, inst.id + "/" + to_string(kind) + ": " + e.what());
            }
        }
    }

    write_jsonl(rc.passages, out);
    std::cerr << "gen-noise: " << out.size() << " passages, " << failures << "/" << tasks
              << " tasks failed\n";
    if (tasks > 0 && failures * 10 > tasks) {
        return endpoint_failure ? 3 : 2;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// build
// ---------------------------------------------------------------------------

struct BuildFlags {
    std::string mode;
    std::string setting;
    std::string group;
    int k = 0;
    int gold_pos = INT32_MIN;
};

int cmd_build(const GlobalOptions& opts, const BuildFlags& flags) {
    RunConfig rc = load_run_config(opts);
    if (!flags.mode.empty()) rc.build_mode = flags.mode;
    if (!flags.setting.empty()) {
        rc.setting = flags.setting;
        if (flags.mode.empty()) rc.build_mode = "setting";
    }
    if (!flags.group.empty()) {
        rc.group = flags.group;
        if (flags.mode.empty()) rc.build_mode = "group";
    }
    if (flags.k > 0) rc.k = flags.k;
    if (flags.gold_pos != INT32_MIN) rc.gold_pos = flags.gold_pos;
    if (rc.build_mode != "setting" && rc.build_mode != "group") {
        throw_usage("build.mode must be 'setting' or 'group'");
    }
    try {
        if (rc.build_mode == "setting") controlled_setting_from_string(rc.setting);
        if (rc.build_mode == "group" && rc.group != "mixed") group_kind_from_string(rc.group);
    } catch (const Error&) {
        throw_usage("unknown " + rc.build_mode + " name: " +
                    (rc.build_mode == "setting" ? rc.setting : rc.group));
    }

    rc.require_paths({{"instances", rc.instances}});
    const bool needs_pool = !(rc.build_mode == "setting" && rc.setting == "gold_only");
    if (needs_pool) rc.require_paths({{"passages", rc.passages}});

    auto instances = read_jsonl<QAInstance>(rc.instances);
    {
        std::set<std::string> seen;
        for (const auto& inst : instances) {
            if (!seen.insert(inst.id).second) throw_data("duplicate instance id: " + inst.id);
        }
    }
    std::map<std::string, NoisePool> pools;
    if (needs_pool) pools = load_pools(rc.passages);

    std::vector<ContextRecord> records;
    std::size_t failures = 0;
    for (std::size_t i = 0; i < instances.size(); ++i) {
        const auto& inst = instances[i];
        const std::int64_t seed = per_query_seed(rc.shuffle_seed, inst.id);
        try {
            RetrievalContext ctx;
            const NoisePool& pool = pools[inst.id];
            if (rc.build_mode == "setting") {
                ctx = build_controlled_setting(inst, pool, controlled_setting_from_string(rc.setting),
                                               seed);
            } else if (rc.build_mode == "group") {
                GroupKind kind;
                if (rc.group == "mixed") {
                    kind = static_cast<GroupKind>(i % 3);
                } else {
                    kind = group_kind_from_string(rc.group);
                }
                ctx = build_group(inst, pool, GroupConfig{kind, rc.k, seed});
            } else {
                throw_usage("build.mode must be 'setting' or 'group'");
            }
            if (rc.gold_pos >= 0) ctx = place_gold_at(ctx, rc.gold_pos);
            ContextRecord rec;
            rec.gt = derive_gt_judgments(ctx, inst);
            rec.context = std::move(ctx);
            records.push_back(std::move(rec));
        } catch (const Error& e) {
            if (e.kind() == ErrorKind::Usage) throw;
            ++failures;
            std::cerr << "build: " << inst.id << ": " << e.what() << "\n";
        }
    }
    write_jsonl(rc.contexts, records);
    std::cerr << "build: " << records.size() << " contexts, " << failures << " instances skipped\n";
    if (records.empty()) throw_data("build produced no contexts");
    return 0;
}

// ---------------------------------------------------------------------------
// generate
// ---------------------------------------------------------------------------

int cmd_generate(const GlobalOptions& opts, const std::string& template_override, bool bon) {
    RunConfig rc = load_run_config(opts);
    rc.require_paths({{"instances", rc.instances}, {"contexts", rc.contexts}});
    auto instances = load_instances(rc.instances);
    auto contexts = read_jsonl<ContextRecord>(rc.contexts);
    auto source = make_source(rc, opts);

    std::string template_name = template_override.empty() ? rc.template_name : template_override;
    GenerationParams params;
    if (bon) {
        params = bon_preset(rc.endpoint.model_tag);
        if (template_override.empty()) template_name = "rules";
    } else {
        params.temperature = rc.temperature;
        params.max_tokens = rc.max_tokens;
        params.n_samples = rc.n_samples;
        params.model_tag = rc.endpoint.model_tag;
    }
    const PromptTemplate tmpl = resolve_template(rc, template_name);

    // resume: skip (query id, context tag) pairs already present for this model
    std::vector<ResponseRecord> existing;
    std::set<std::string> done;
    if (fs::exists(rc.responses)) {
        existing = read_jsonl<ResponseRecord>(rc.responses);
        for (const auto& r : existing) {
            if (r.model_tag == params.model_tag) done.insert(r.query_id + "\x1f" + r.context_tag);
        }
    }

    std::vector<const ContextRecord*> todo;
    for (const auto& rec : contexts) {
        if (done.count(rec.context.query_id + "\x1f" + rec.context.group_label)) continue;
        if (!context_composition_ok(rec.context)) {
            std::cerr << "generate: warning: context " << rec.context.query_id
                      << " has counterfactual passages but no gold\n";
        }
        todo.push_back(&rec);
    }

    std::vector<std::vector<ResponseRecord>> slots(todo.size());
    RateLimiter limiter(rc.endpoint.rate_limit_qps);
    std::mutex progress_mutex;
    std::size_t completed = 0;

    parallel_for(todo.size(), rc.endpoint.parallel, [&](std::size_t i) {
        const ContextRecord& rec = *todo[i];
        auto inst_it = instances.find(rec.context.query_id);
        if (inst_it == instances.end()) {
            throw_data("context query_id has no instance: " + rec.context.query_id);
        }
        const std::string prompt = render_prompt(tmpl, inst_it->second, rec.context);
        limiter.acquire();
        auto result = source->generate_for(inst_it->second, rec.context, prompt, params);
        auto& slot = slots[i];
        for (const auto& r : result.responses) {
            ResponseRecord row;
            row.query_id = rec.context.query_id;
            row.model_tag = params.model_tag;
            row.context_tag = rec.context.group_label;
            row.sample_index = r.sample_index;
            row.raw = r.raw;
            row.truncated = r.truncated;
            row.usage = r.token_usage;
            slot.push_back(std::move(row));
        }
        std::lock_guard<std::mutex> lock(progress_mutex);
        ++completed;
        if (completed % 25 == 0 || completed == todo.size()) {
            std::cerr << "generate: " << completed << "/" << todo.size() << " contexts\n";
        }
    });

    std::vector<ResponseRecord> merged = std::move(existing);
    for (auto& slot : slots) {
        for (auto& row : slot) merged.push_back(std::move(row));
    }
    write_jsonl(rc.responses, merged);
    std::cerr << "generate: wrote " << merged.size() << " responses (" << done.size()
              << " query ids resumed)\n";
    return 0;
}

// ---------------------------------------------------------------------------
// evaluate / report
// ---------------------------------------------------------------------------

void write_reports(const RunConfig& rc, const std::vector<EvalRecord>& records,
                   std::size_t parse_failures) {
    if (records.empty()) throw_data("no usable eval records");

    std::map<std::string, std::map<std::string, std::vector<EvalRecord>>> grouped;
    for (const auto& r : records) {
        grouped[r.model_tag.empty() ? "model" : r.model_tag][r.context_tag].push_back(r);
    }

    std::optional<BootstrapParams> bootstrap;
    if (rc.bootstrap_resamples > 0) {
        bootstrap = BootstrapParams{rc.bootstrap_resamples,
                                    static_cast<std::uint64_t>(rc.bootstrap_seed)};
    }

    nlohmann::ordered_json out;
    out["n_records"] = records.size();
    out["parse_failures"] = parse_failures;
    nlohmann::ordered_json models;
    for (const auto& [model, by_tag] : grouped) {
        std::map<std::string, CalibrationReport> reports;
        nlohmann::ordered_json settings;
        for (const auto& [tag, recs] : by_tag) {
            CalibrationReport rep = report(recs, rc.metric_bins, bootstrap);
            reports[tag] = rep;
            settings[tag.empty() ? "all" : tag] = to_json(rep);
            const std::string csv_name = "bins_" + sanitize_tag(model) + "_" +
                                         sanitize_tag(tag.empty() ? "all" : tag) + ".csv";
            write_text_atomic(rc.out_dir / csv_name, bins_csv(rep));
        }
        nlohmann::ordered_json entry;
        entry["settings"] = settings;
        if (reports.count("gold_only")) {
            nlohmann::ordered_json deltas;
            for (const auto& [tag, d] : compare_settings(reports)) {
                nlohmann::ordered_json dj;
                dj["d_ece"] = d.d_ece;
                dj["d_auroc"] = d.d_auroc ? nlohmann::ordered_json(*d.d_auroc)
                                          : nlohmann::ordered_json();
                dj["d_avg_confidence"] = d.d_avg_confidence;
                deltas[tag] = dj;
            }
            entry["deltas"] = deltas;
        }
        models[model] = entry;
    }
    out["models"] = models;
    write_text_atomic(rc.out_dir / "report.json", out.dump(2) + "\n");
}

int cmd_evaluate(const GlobalOptions& opts, const std::string& aggregate) {
    if (aggregate != "none" && aggregate != "ensemble" && aggregate != "self_freq") {
        throw_usage("--aggregate must be none, ensemble or self_freq");
    }
    RunConfig rc = load_run_config(opts);
    rc.require_paths(
        {{"instances", rc.instances}, {"contexts", rc.contexts}, {"responses", rc.responses}});
    auto instances = load_instances(rc.instances);
    auto contexts = read_jsonl<ContextRecord>(rc.contexts);
    auto responses = read_jsonl<ResponseRecord>(rc.responses);

    std::map<std::string, std::string> tag_by_id;  // fallback for tag-less rows
    for (const auto& rec : contexts) {
        auto [it, inserted] = tag_by_id.emplace(rec.context.query_id, rec.context.group_label);
        if (!inserted && it->second != rec.context.group_label) it->second = "\x1f";  // ambiguous
    }

    auto resolve_tag = [&](const ResponseRecord& row) {
        if (!row.context_tag.empty()) return row.context_tag;
        auto it = tag_by_id.find(row.query_id);
        if (it == tag_by_id.end()) {
            throw_data("response references unknown query id: " + row.query_id);
        }
        if (it->second == "\x1f") {
            throw_data("query " + row.query_id +
                       " appears under several settings; responses lack context_tag");
        }
        return it->second;
    };

    std::vector<EvalRecord> records;
    std::size_t parse_failures = 0;
    if (aggregate == "none") {
        for (const auto& row : responses) {
            auto inst_it = instances.find(row.query_id);
            if (inst_it == instances.end()) {
                throw_data("response references unknown query id: " + row.query_id);
            }
            ParseOutcome outcome = parse_final_response(row.raw, /*expect_judgments=*/false);
            if (!outcome.response.answer || !outcome.response.confidence) {
                ++parse_failures;
                continue;
            }
            EvalRecord rec;
            rec.instance_id = row.query_id;
            rec.correct = judge_correctness(*outcome.response.answer, inst_it->second);
            rec.confidence = *outcome.response.confidence;
            rec.context_tag = resolve_tag(row);
            rec.model_tag = row.model_tag;
            records.push_back(std::move(rec));
        }
    } else {
        // one record per (model, query, setting), aggregated over the samples
        std::map<std::string, std::vector<std::pair<std::string, double>>> groups;
        for (const auto& row : responses) {
            if (instances.find(row.query_id) == instances.end()) {
                throw_data("response references unknown query id: " + row.query_id);
            }
            const std::string key = row.model_tag + "\x1f" + row.query_id + "\x1f" + resolve_tag(row);
            auto& bucket = groups[key];
            ParseOutcome outcome = parse_final_response(row.raw, /*expect_judgments=*/false);
            if (!outcome.response.answer || !outcome.response.confidence) {
                ++parse_failures;
                continue;
            }
            bucket.emplace_back(*outcome.response.answer, *outcome.response.confidence);
        }
        for (const auto& [key, samples] : groups) {
            if (samples.empty()) continue;  // nothing parseable for this query
            const auto first = key.find('\x1f');
            const auto second = key.find('\x1f', first + 1);
            EvalRecord rec;
            rec.model_tag = key.substr(0, first);
            rec.instance_id = key.substr(first + 1, second - first - 1);
            rec.context_tag = key.substr(second + 1);
            std::string answer;
            if (aggregate == "ensemble") {
                auto [ans, conf] = ensemble_confidence(samples);
                answer = ans;
                rec.confidence = conf;
            } else {
                std::vector<std::string> answers;
                for (const auto& [a, _] : samples) answers.push_back(a);
                answer = majority_answer(answers);
                rec.confidence = self_frequency(answers);
            }
            rec.correct = judge_correctness(answer, instances.at(rec.instance_id));
            records.push_back(std::move(rec));
        }
    }
    if (records.empty()) throw_data("zero parseable responses");

    write_jsonl(rc.records, records);
    write_reports(rc, records, parse_failures);
    std::cerr << "evaluate: " << records.size() << " records, " << parse_failures
              << " parse failures\n";
    return 0;
}

int cmd_report(const GlobalOptions& opts) {
    RunConfig rc = load_run_config(opts);
    rc.require_paths({{"records", rc.records}});
    auto records = read_jsonl<EvalRecord>(rc.records);
    write_reports(rc, records, 0);
    std::cerr << "report: " << records.size() << " records\n";
    return 0;
}

// ---------------------------------------------------------------------------
// filter
// ---------------------------------------------------------------------------

int cmd_filter(const GlobalOptions& opts) {
    RunConfig rc = load_run_config(opts);
    rc.require_paths(
        {{"instances", rc.instances}, {"contexts", rc.contexts}, {"responses", rc.responses}});
    auto instances = load_instances(rc.instances);
    auto contexts = read_jsonl<ContextRecord>(rc.contexts);
    auto responses = read_jsonl<ResponseRecord>(rc.responses);
    if (responses.empty()) throw_data("no responses to filter");

    std::map<std::string, const ContextRecord*> context_by_id;
    for (const auto& rec : contexts) {
        if (!context_by_id.emplace(rec.context.query_id, &rec).second) {
            throw_data("filter requires one context per query; duplicate id " +
                       rec.context.query_id);
        }
        if (!context_composition_ok(rec.context)) {
            std::cerr << "filter: warning: context " << rec.context.query_id
                      << " has counterfactual passages but no gold\n";
        }
    }

    // group responses into per-model candidates, preserving context file order;
    // rows carrying a different context tag belong to another build and are
    // left alone
    std::map<std::string, std::map<std::string, std::vector<ModelResponse>>> raw_by_model;
    std::size_t skipped_rows = 0;
    for (const auto& row : responses) {
        auto ctx_it = context_by_id.find(row.query_id);
        if (ctx_it == context_by_id.end() ||
            (!row.context_tag.empty() &&
             row.context_tag != ctx_it->second->context.group_label)) {
            ++skipped_rows;
            continue;
        }
        ModelResponse r;
        r.raw = row.raw;
        r.sample_index = row.sample_index;
        r.truncated = row.truncated;
        r.token_usage = row.usage;
        raw_by_model[row.model_tag][row.query_id].push_back(std::move(r));
    }
    if (skipped_rows > 0) {
        std::cerr << "filter: skipped " << skipped_rows
                  << " responses not matching the current contexts\n";
    }
    if (raw_by_model.empty()) throw_data("no responses match the current contexts");

    std::map<std::string, std::vector<Candidate>> by_model;
    for (auto& [model, by_query] : raw_by_model) {
        auto& list = by_model[model];
        for (const auto& rec : contexts) {
            auto it = by_query.find(rec.context.query_id);
            if (it == by_query.end()) continue;
            auto inst_it = instances.find(rec.context.query_id);
            if (inst_it == instances.end()) {
                throw_data("context query_id has no instance: " + rec.context.query_id);
            }
            Candidate cand;
            cand.instance = inst_it->second;
            cand.context = rec.context;
            cand.gt = rec.gt ? *rec.gt : derive_gt_judgments(rec.context, inst_it->second);
            cand.responses = it->second;
            std::sort(cand.responses.begin(), cand.responses.end(),
                      [](const ModelResponse& a, const ModelResponse& b) {
                          return a.sample_index < b.sample_index;
                      });
            cand.model_tag = model;
            list.push_back(std::move(cand));
        }
    }

    PipelineConfig pc;
    pc.expect_judgments = rc.expect_judgments;
    pc.stage_judgment_on = rc.stage_judgment_on;
    pc.stage_rule_on = rc.stage_rule_on;
    pc.common_ids_on = rc.common_ids_on && by_model.size() > 1;
    pc.balance_on = rc.balance_on;
    pc.balance_seed = rc.balance_seed;
    pc.label_only = rc.label_only;
    pc.sft_template = rc.label_only ? "vanilla" : "rules";

    PipelineResult result = run_pipeline(by_model, pc);

    for (const auto& [model, examples] : result.sft) {
        const fs::path sft_path = result.sft.size() == 1
                                      ? rc.out_dir / "sft.jsonl"
                                      : rc.out_dir / ("sft_" + sanitize_tag(model) + ".jsonl");
        emit_sft(examples, sft_path, rc.out_dir / "train_config.json");
    }
    write_text_atomic(rc.out_dir / "stats.json", stats_to_json(result.stats).dump(2) + "\n");
    write_jsonl(rc.out_dir / "dropped.jsonl", result.dropped);

    for (const auto& [model, stats] : result.stats) {
        std::cerr << "filter[" << model << "]: total=" << stats.total << " format=" << stats.format
                  << " judgment=" << stats.passage_judgment << " rule=" << stats.rule_following
                  << " alignment=" << stats.alignment << " common=" << stats.common_ids
                  << " balance=" << stats.balance << "\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"noise-controlled RAG confidence-calibration toolkit"};
    app.require_subcommand(1);
    app.fallthrough();  // global flags may follow the subcommand name

    GlobalOptions opts;
    app.add_option("--config", opts.config_path, "TOML config file")->envname("RAGCAL_CONFIG");
    app.add_option("--out-dir", opts.out_dir_override, "override paths.out_dir");
    app.add_option("--mock", opts.mock_path, "mock LLM config (script JSONL or mode object)");
    app.add_option("--seed", opts.seed_override, "override seeds.shuffle");

    auto* gen_noise = app.add_subcommand("gen-noise", "generate labeled noise passages");
    auto* build = app.add_subcommand("build", "assemble noise-controlled contexts");
    std::string setting_flag, group_flag, mode_flag;
    int k_flag = 0, gold_pos_flag = INT32_MIN;
    build->add_option("--setting", setting_flag, "controlled setting (gold_only, gold_plus_cf, ...)");
    build->add_option("--group", group_flag, "training group (counterfactual, consistent, irrelevant, mixed)");
    build->add_option("--mode", mode_flag, "'setting' or 'group'");
    build->add_option("--k", k_flag, "context size for group mode");
    build->add_option("--gold-pos", gold_pos_flag, "pin gold passage position (0-based)");

    auto* generate_cmd = app.add_subcommand("generate", "drive the endpoint over all contexts");
    std::string template_flag;
    bool bon_flag = false;
    generate_cmd->add_option("--template", template_flag, "prompt template name");
    generate_cmd->add_flag("--bon", bon_flag, "best-of-16 sampling at temperature 1.0 (rules prompt)");

    auto* evaluate_cmd = app.add_subcommand("evaluate", "parse, judge and score responses");
    std::string aggregate_flag = "none";
    evaluate_cmd->add_option("--aggregate", aggregate_flag,
                             "fold samples per query: none, ensemble, self_freq");
    auto* filter_cmd = app.add_subcommand("filter", "run the data-quality pipeline, emit SFT data");
    auto* report_cmd = app.add_subcommand("report", "recompute metrics from records.jsonl");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (gen_noise->parsed()) return cmd_gen_noise(opts);
        if (build->parsed()) {
            BuildFlags flags;
            flags.mode = mode_flag;
            flags.setting = setting_flag;
            flags.group = group_flag;
            flags.k = k_flag;
            flags.gold_pos = gold_pos_flag;
            return cmd_build(opts, flags);
        }
        if (generate_cmd->parsed()) return cmd_generate(opts, template_flag, bon_flag);
        if (evaluate_cmd->parsed()) return cmd_evaluate(opts, aggregate_flag);
        if (filter_cmd->parsed()) return cmd_filter(opts);
        if (report_cmd->parsed()) return cmd_report(opts);
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return e.exit_code();
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 1;
}
