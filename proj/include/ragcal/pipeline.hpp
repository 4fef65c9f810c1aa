#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "json.hpp"
#include "ragcal/context.hpp"
#include "ragcal/jsonl.hpp"
#include "ragcal/metrics.hpp"
#include "ragcal/parser.hpp"
#include "ragcal/prompts.hpp"
#include "ragcal/types.hpp"

namespace ragcal {

// One query's best-of-N material for one model.
struct Candidate {
    QAInstance instance;
    RetrievalContext context;
    GroundTruthJudgments gt;
    std::vector<ModelResponse> responses;  // raw text; parsing happens in stage 1
    std::string model_tag;
};

// Kept counts after each stage, in table column order.
struct FilterStats {
    std::size_t total = 0;
    std::size_t format = 0;
    std::size_t passage_judgment = 0;
    std::size_t rule_following = 0;
    std::size_t alignment = 0;   // queries, not responses, from here on
    std::size_t common_ids = 0;
    std::size_t balance = 0;
};

inline bool stats_chain_ok(const FilterStats& s) {
    return s.total >= s.format && s.format >= s.passage_judgment &&
           s.passage_judgment >= s.rule_following && s.alignment <= s.rule_following &&
           s.common_ids <= s.alignment && s.balance <= s.common_ids;
}

struct PipelineConfig {
    bool expect_judgments = true;   // stage 1 requires parseable classifications
    bool stage_judgment_on = true;  // stage 2
    bool stage_rule_on = true;      // stage 3
    bool common_ids_on = true;      // stage 5 (single-model runs may disable)
    bool balance_on = true;         // stage 6
    std::int64_t balance_seed = 0;
    std::string sft_template = "rules";
    // Label-only baseline: keep the same filtered selections but emit bare
    // answer+confidence outputs instead of the full reasoning trace.
    bool label_only = false;
};

struct DroppedQuery {
    std::string query_id;
    std::string model_tag;
    std::string stage;  // the stage that eliminated the last response
};

inline json to_json(const DroppedQuery& d) {
    return json{{"query_id", d.query_id}, {"model_tag", d.model_tag}, {"stage", d.stage}};
}

inline DroppedQuery dropped_query_from_json(const json& j) {
    DroppedQuery d;
    d.query_id = detail::require_field(j, "query_id").get<std::string>();
    d.model_tag = detail::require_field(j, "model_tag").get<std::string>();
    d.stage = detail::require_field(j, "stage").get<std::string>();
    return d;
}

template <>
struct JsonCodec<DroppedQuery> {
    static json encode(const DroppedQuery& d) { return to_json(d); }
    static DroppedQuery decode(const json& j) { return dropped_query_from_json(j); }
};

struct PipelineResult {
    std::map<std::string, std::vector<SftExample>> sft;  // model tag -> examples
    std::map<std::string, FilterStats> stats;
    std::vector<DroppedQuery> dropped;
};

// ---------------------------------------------------------------------------
// Stages
// ---------------------------------------------------------------------------

// (1) Format: parse each raw response; keep those with answer, confidence and,
// when judgments are expected, a classification list matching the context size.
inline std::vector<ModelResponse> stage_format(const Candidate& candidate, bool expect_judgments) {
    std::vector<ModelResponse> kept;
    for (const auto& raw : candidate.responses) {
        ParseOutcome outcome = parse_final_response(raw.raw, expect_judgments);
        outcome.response.sample_index = raw.sample_index;
        outcome.response.token_usage = raw.token_usage;
        outcome.response.truncated = raw.truncated;
        if (!outcome.response.answer || !outcome.response.confidence) continue;
        if (expect_judgments) {
            if (!outcome.response.judgments) continue;
            if (outcome.response.judgments->per_passage.size() != candidate.context.passages.size()) {
                continue;
            }
        }
        kept.push_back(std::move(outcome.response));
    }
    return kept;
}

// (2) Passage judgment: keep responses whose J_p and J_g match the ground truth.
inline std::vector<ModelResponse> stage_judgment(const std::vector<ModelResponse>& responses,
                                                 const GroundTruthJudgments& gt) {
    std::vector<ModelResponse> kept;
    for (const auto& r : responses) {
        if (!r.judgments) continue;
        if (judge_passage_assessment(*r.judgments, gt)) kept.push_back(r);
    }
    return kept;
}

// (3) Rule adherence: both trace markers must be present.
inline std::vector<ModelResponse> stage_rule(const std::vector<ModelResponse>& responses) {
    std::vector<ModelResponse> kept;
    for (const auto& r : responses) {
        if (r.rule_trace.mentions_rules && r.rule_trace.has_step4) kept.push_back(r);
    }
    return kept;
}

// (4) Confidence alignment: the survivor with the lowest instance-level Brier
// score; ties break toward the lowest sample index.
inline std::optional<ModelResponse> select_min_brier(const std::vector<ModelResponse>& responses,
                                                     const QAInstance& instance) {
    std::optional<ModelResponse> best;
    double best_brier = 0.0;
    for (const auto& r : responses) {
        if (!r.answer || !r.confidence) continue;
        EvalRecord rec;
        rec.correct = judge_correctness(*r.answer, instance);
        rec.confidence = *r.confidence;
        const double b = brier(rec);
        if (!best || b < best_brier ||
            (b == best_brier && r.sample_index < best->sample_index)) {
            best = r;
            best_brier = b;
        }
    }
    return best;
}

// (5) Common IDs: queries with valid responses across every model.
inline std::set<std::string> intersect_common_ids(
    const std::map<std::string, std::set<std::string>>& per_model) {
    if (per_model.empty()) return {};
    std::set<std::string> common = per_model.begin()->second;
    for (const auto& [_, ids] : per_model) {
        std::set<std::string> next;
        for (const auto& id : common) {
            if (ids.count(id)) next.insert(id);
        }
        common = std::move(next);
    }
    return common;
}

// ---------------------------------------------------------------------------
// Full pipeline
// ---------------------------------------------------------------------------

namespace pipeline_detail {

struct Selection {
    ModelResponse response;
    double brier = 0.0;
};

// Percent text for label-only outputs; snaps float noise like 0.1*100 back
// to the integer the model actually stated.
inline std::string format_percent(double confidence) {
    const double pct = confidence * 100.0;
    const double rounded = std::round(pct);
    if (std::fabs(pct - rounded) < 1e-9) {
        return std::to_string(static_cast<long long>(rounded));
    }
    return nlohmann::json(pct).dump();
}

}  // namespace pipeline_detail

inline PipelineResult run_pipeline(const std::map<std::string, std::vector<Candidate>>& by_model,
                                   const PipelineConfig& config = {}) {
    if (by_model.empty()) throw_data("run_pipeline: no candidates");
    PipelineResult result;
    std::map<std::string, std::map<std::string, pipeline_detail::Selection>> selected;

    for (const auto& [model, candidates] : by_model) {
        FilterStats stats;
        for (const auto& cand : candidates) {
            stats.total += cand.responses.size();
            auto s1 = stage_format(cand, config.expect_judgments);
            stats.format += s1.size();
            auto s2 = config.stage_judgment_on && config.expect_judgments
                          ? stage_judgment(s1, cand.gt)
                          : s1;
            stats.passage_judgment += s2.size();
            auto s3 = config.stage_rule_on ? stage_rule(s2) : s2;
            stats.rule_following += s3.size();
            auto best = select_min_brier(s3, cand.instance);
            if (best) {
                EvalRecord rec;
                rec.correct = judge_correctness(*best->answer, cand.instance);
                rec.confidence = *best->confidence;
                selected[model][cand.context.query_id] =
                    pipeline_detail::Selection{*best, brier(rec)};
            } else {
                const char* stage = s1.empty() ? "format"
                                   : s2.empty() ? "passage_judgment"
                                                : "rule_following";
                result.dropped.push_back(DroppedQuery{cand.context.query_id, model, stage});
            }
        }
        stats.alignment = selected[model].size();
        if (stats.alignment == 0) {
            throw_data("pipeline eliminated all queries for model " + model +
                       " (format=" + std::to_string(stats.format) +
                       ", passage_judgment=" + std::to_string(stats.passage_judgment) +
                       ", rule_following=" + std::to_string(stats.rule_following) + ")");
        }
        result.stats[model] = stats;
    }

    // stage 5: id intersection across models
    std::set<std::string> shared_ids;
    if (config.common_ids_on) {
        std::map<std::string, std::set<std::string>> id_sets;
        for (const auto& [model, sel] : selected) {
            auto& ids = id_sets[model];
            for (const auto& [id, _] : sel) ids.insert(id);
        }
        shared_ids = intersect_common_ids(id_sets);
    }

    // stage 6: class balancing over the surviving contexts. With common IDs
    // on, the surviving set (and its group composition) is shared, so the
    // balancing draw happens once and applies to every model.
    auto balance_ids = [&](const std::vector<Candidate>& candidates,
                           const std::set<std::string>& ids) {
        std::vector<RetrievalContext> contexts;
        for (const auto& cand : candidates) {
            if (ids.count(cand.context.query_id)) contexts.push_back(cand.context);
        }
        std::set<std::string> out;
        if (config.balance_on) {
            if (contexts.empty()) throw_data("pipeline: nothing left to balance");
            for (const auto& c : balance_classes(contexts, config.balance_seed,
                                                 {"counterfactual", "consistent", "irrelevant"})) {
                out.insert(c.query_id);
            }
        } else {
            for (const auto& c : contexts) out.insert(c.query_id);
        }
        return out;
    };

    std::optional<std::set<std::string>> shared_final;
    const PromptTemplate tmpl = get_template(config.sft_template);
    for (const auto& [model, candidates] : by_model) {
        auto& stats = result.stats[model];
        std::set<std::string> ids;
        if (config.common_ids_on) {
            ids = shared_ids;
        } else {
            for (const auto& [id, _] : selected[model]) ids.insert(id);
        }
        stats.common_ids = ids.size();

        std::set<std::string> final_ids;
        if (config.common_ids_on) {
            if (!shared_final) shared_final = balance_ids(candidates, ids);
            final_ids = *shared_final;
        } else {
            final_ids = balance_ids(candidates, ids);
        }

        auto& out = result.sft[model];
        for (const auto& cand : candidates) {
            const auto& id = cand.context.query_id;
            if (!final_ids.count(id)) continue;
            auto sel_it = selected[model].find(id);
            if (sel_it == selected[model].end()) continue;
            SftExample ex;
            ex.instruction = render_prompt(tmpl, cand.instance, cand.context);
            ex.input = "";
            if (config.label_only) {
                const auto& resp = sel_it->second.response;
                ex.output = "Final Answer: " + *resp.answer + "\nConfidence: " +
                            pipeline_detail::format_percent(*resp.confidence) + "%";
            } else {
                ex.output = sel_it->second.response.raw;
            }
            ex.meta = SftMeta{id, cand.context.group_label, sel_it->second.brier};
            out.push_back(std::move(ex));
            stats.balance += 1;
        }
    }
    return result;
}

// ---------------------------------------------------------------------------
// Emission
// ---------------------------------------------------------------------------

// sft.jsonl plus the training-config sidecar the external trainer consumes.
inline void emit_sft(const std::vector<SftExample>& examples, const std::filesystem::path& sft_path,
                     const std::filesystem::path& train_config_path) {
    for (const auto& ex : examples) {
        ParseOutcome check = parse_final_response(ex.output, /*expect_judgments=*/false);
        if (!check.response.answer || !check.response.confidence) {
            throw_data("emit_sft: output for query " + ex.meta.query_id + " does not re-parse");
        }
    }
    write_jsonl(sft_path, examples);
    nlohmann::ordered_json cfg{{"learning_rate", 5.0e-5},
                               {"epochs", 2},
                               {"max_length", 2048},
                               {"method", "lora"}};
    write_text_atomic(train_config_path, cfg.dump(2) + "\n");
}

inline nlohmann::ordered_json stats_to_json(const std::map<std::string, FilterStats>& stats) {
    nlohmann::ordered_json out;
    for (const auto& [model, s] : stats) {
        out[model] = nlohmann::ordered_json{
            {"total", s.total},
            {"format", s.format},
            {"passage_judgment", s.passage_judgment},
            {"rule_following", s.rule_following},
            {"alignment", s.alignment},
            {"common_ids", s.common_ids},
            {"balance", s.balance},
        };
    }
    return out;
}

inline std::map<std::string, FilterStats> stats_from_json(const nlohmann::json& j) {
    std::map<std::string, FilterStats> out;
    for (const auto& [model, row] : j.items()) {
        FilterStats s;
        s.total = row.at("total").get<std::size_t>();
        s.format = row.at("format").get<std::size_t>();
        s.passage_judgment = row.at("passage_judgment").get<std::size_t>();
        s.rule_following = row.at("rule_following").get<std::size_t>();
        s.alignment = row.at("alignment").get<std::size_t>();
        s.common_ids = row.at("common_ids").get<std::size_t>();
        s.balance = row.at("balance").get<std::size_t>();
        out[model] = s;
    }
    return out;
}

}  // namespace ragcal
