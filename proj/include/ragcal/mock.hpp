#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ragcal/context.hpp"
#include "ragcal/gateway.hpp"
#include "ragcal/jsonl.hpp"
#include "ragcal/rng.hpp"

namespace ragcal {

inline std::string prompt_hash(std::string_view prompt) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx",
                  static_cast<unsigned long long>(fnv1a64(prompt)));
    return std::string(buf);
}

// ---------------------------------------------------------------------------
// Scripted mock chat backend
//
// Script entries map a prompt (or its hash) to canned replies; fail_times
// injects transient failures ahead of the scripted reply; top_logprobs feeds
// the P(True) probe. Without a matching entry the seeded sampler mode, when
// enabled, synthesizes a deterministic reply.
// ---------------------------------------------------------------------------

struct MockScriptEntry {
    std::vector<std::string> replies;
    int fail_times = 0;
    std::vector<TokenLogprob> top_logprobs;
};

class MockChatBackend : public ChatBackend {
public:
    MockChatBackend() = default;

    void add_entry(const std::string& prompt_or_hash, MockScriptEntry entry, bool is_hash = false) {
        entries_[is_hash ? prompt_or_hash : prompt_hash(prompt_or_hash)] = std::move(entry);
    }

    void enable_sampler(std::uint64_t seed) {
        sampler_seed_ = seed;
    }

    bool supports_logprobs() const override { return true; }

    std::vector<Completion> complete(const std::string& prompt,
                                     const GenerationParams& params) override {
        const std::string hash = prompt_hash(prompt);
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = entries_.find(hash);
        if (it != entries_.end()) {
            auto& entry = it->second;
            if (entry.fail_times > 0) {
                entry.fail_times -= 1;
                throw TransientEndpointError("scripted transient failure");
            }
            if (entry.replies.empty()) throw_endpoint("mock entry has no replies: " + hash);
            std::vector<Completion> out;
            for (int i = 0; i < params.n_samples; ++i) {
                Completion c;
                c.text = entry.replies[static_cast<std::size_t>(i) % entry.replies.size()];
                c.first_token_logprobs = entry.top_logprobs;
                out.push_back(std::move(c));
            }
            return out;
        }
        if (!sampler_seed_) {
            throw_endpoint("mock script has no entry for prompt hash " + hash);
        }
        // Seeded sampler: stochastic-looking but fully determined by
        // (seed, prompt, sample index, temperature bucket).
        std::vector<Completion> out;
        const std::uint64_t base = *sampler_seed_ ^ fnv1a64(prompt);
        for (int i = 0; i < params.n_samples; ++i) {
            Rng rng = Rng(base).derive(std::to_string(i));
            if (params.temperature == 0.0) rng = Rng(base).derive("greedy");
            const int option = static_cast<int>(rng.uniform_index(4));
            const int pct = static_cast<int>(rng.uniform_index(11)) * 10;
            Completion c;
            c.text = "Final Answer: option-" + std::to_string(option) +
                     "\nConfidence: " + std::to_string(pct) + "%";
            out.push_back(std::move(c));
        }
        return out;
    }

private:
    std::map<std::string, MockScriptEntry> entries_;
    std::optional<std::uint64_t> sampler_seed_;
    std::mutex mutex_;
};

// ---------------------------------------------------------------------------
// Policy response sources (test harness): deterministic answering strategies
// that emit raw conforming text, so parsing and judging still run for real.
// ---------------------------------------------------------------------------

// Answers from the first highly-relevant passage in context order at a fixed
// stated confidence; counterfactual passages answer with their supported
// answer, so position shuffles decide whether the policy lands on gold.
class FirstHrPolicySource : public ResponseSource {
public:
    FirstHrPolicySource(double confidence, std::string fallback_answer)
        : confidence_(confidence), fallback_(std::move(fallback_answer)) {}

    GenerationResult generate_for(const QAInstance& instance, const RetrievalContext& context,
                                  const std::string&, const GenerationParams& params) override {
        std::string answer = fallback_;
        for (const auto& p : context.passages) {
            if (p.category == PassageCategory::Gold) {
                answer = instance.gold_answer;
                break;
            }
            if (p.category == PassageCategory::Counterfactual) {
                answer = p.supported_answer.value_or(fallback_);
                break;
            }
        }
        return make_result(answer, confidence_, params.n_samples);
    }

protected:
    static GenerationResult make_result(const std::string& answer, double confidence, int n) {
        const int pct = static_cast<int>(std::lround(confidence * 100.0));
        GenerationResult result;
        for (int i = 0; i < n; ++i) {
            ModelResponse r;
            r.raw = "Final Answer: " + answer + "\nConfidence: " + std::to_string(pct) + "%";
            r.sample_index = i;
            result.responses.push_back(std::move(r));
        }
        return result;
    }

    double confidence_;
    std::string fallback_;
};

// Order-invariant variant: reads the gold passage wherever it sits.
class GoldOraclePolicySource : public FirstHrPolicySource {
public:
    using FirstHrPolicySource::FirstHrPolicySource;

    GenerationResult generate_for(const QAInstance& instance, const RetrievalContext& context,
                                  const std::string&, const GenerationParams& params) override {
        std::string answer = fallback_;
        for (const auto& p : context.passages) {
            if (p.category == PassageCategory::Gold) {
                answer = instance.gold_answer;
                break;
            }
        }
        return make_result(answer, confidence_, params.n_samples);
    }
};

// ---------------------------------------------------------------------------
// BoN sampler: synthesizes rule-style training responses with controlled
// conformance / judgment / rule-marker / correctness rates. Used to exercise
// the full filter pipeline without a live model.
// ---------------------------------------------------------------------------

struct BonSamplerRates {
    double p_format = 0.85;
    double p_judgment = 0.75;
    double p_rule = 0.9;
    double p_correct = 0.5;
};

class BonSamplerSource : public ResponseSource {
public:
    BonSamplerSource(std::uint64_t seed, BonSamplerRates rates) : seed_(seed), rates_(rates) {}

    GenerationResult generate_for(const QAInstance& instance, const RetrievalContext& context,
                                  const std::string&, const GenerationParams& params) override {
        const GroundTruthJudgments gt = derive_gt_judgments(context, instance);
        GenerationResult result;
        for (int i = 0; i < params.n_samples; ++i) {
            Rng rng = Rng(seed_)
                          .derive(params.model_tag)
                          .derive(context.query_id)
                          .derive(std::to_string(i));
            ModelResponse r;
            r.raw = synthesize(instance, context, gt, rng);
            r.sample_index = i;
            result.responses.push_back(std::move(r));
        }
        return result;
    }

private:
    static const char* label_text(PassageJudgment j) {
        switch (j) {
            case PassageJudgment::HighlyRelevant: return "Highly Relevant";
            case PassageJudgment::Relevant: return "Relevant";
            case PassageJudgment::Irrelevant: return "Irrelevant";
        }
        return "?";
    }

    std::string synthesize(const QAInstance& instance, const RetrievalContext& context,
                           const GroundTruthJudgments& gt, Rng& rng) const {
        // Draw everything up front so the stream shape is branch-independent.
        const bool conform = rng.bernoulli(rates_.p_format);
        const bool judge_ok = rng.bernoulli(rates_.p_judgment);
        const bool rule_ok = rng.bernoulli(rates_.p_rule);
        const bool correct = rng.bernoulli(rates_.p_correct);
        const int pct = static_cast<int>(rng.uniform_index(11)) * 10;
        const std::size_t flip_at = rng.uniform_index(std::max<std::size_t>(1, gt.per_passage.size()));
        const std::size_t break_mode = rng.uniform_index(3);

        std::string answer = correct ? instance.gold_answer : wrong_answer(instance, context);

        std::vector<PassageJudgment> labels = gt.per_passage;
        if (!judge_ok && !labels.empty()) {
            labels[flip_at] = labels[flip_at] == PassageJudgment::HighlyRelevant
                                  ? PassageJudgment::Relevant
                                  : PassageJudgment::HighlyRelevant;
        }

        std::string text;
        for (std::size_t i = 0; i < context.passages.size(); ++i) {
            text += "- Passage " + std::to_string(i + 1) + " reads as " +
                    label_text(labels.size() > i ? labels[i] : PassageJudgment::Irrelevant) + ".\n";
        }
        if (rule_ok) {
            text += "Step 4: Apply Rules\n";
            switch (gt.group) {
                case GroupJudgment::Contradictory:
                    text += "The rules flag a contradiction between the highly relevant passages, "
                            "so the answer comes from internal knowledge.\n";
                    break;
                case GroupJudgment::ConsistentAnswer:
                    text += "Following the rules, the highly relevant evidence is consistent with "
                            "no contradiction.\n";
                    break;
                case GroupJudgment::NoAnswer:
                    text += "Per the rules, no passage directly answers the question, so internal "
                            "knowledge is used.\n";
                    break;
            }
        } else {
            switch (gt.group) {
                case GroupJudgment::Contradictory:
                    text += "There is a contradiction between the passages.\n";
                    break;
                case GroupJudgment::ConsistentAnswer:
                    text += "The passages agree with no contradiction.\n";
                    break;
                case GroupJudgment::NoAnswer:
                    text += "No passage directly answers the question.\n";
                    break;
            }
        }
        text += "Final Output:\n";
        if (conform || break_mode != 2) {
            text += "Passage Classifications:\n";
            for (std::size_t i = 0; i < labels.size(); ++i) {
                text += std::to_string(i + 1) + ". " + label_text(labels[i]) + "\n";
            }
        } else {
            text += "Passage assessment withheld.\n";
        }
        if (conform || break_mode != 1) text += "Answer: " + answer + "\n";
        if (conform || break_mode != 0) text += "Confidence: " + std::to_string(pct) + "%";
        return text;
    }

    static std::string wrong_answer(const QAInstance& instance, const RetrievalContext& context) {
        const std::string gold_norm = normalize_answer(instance.gold_answer);
        for (const auto& p : context.passages) {
            if (p.category == PassageCategory::Counterfactual && p.supported_answer &&
                normalize_answer(*p.supported_answer) != gold_norm) {
                return *p.supported_answer;
            }
        }
        return "not " + instance.gold_answer;
    }

    std::uint64_t seed_;
    BonSamplerRates rates_;
};

// ---------------------------------------------------------------------------
// Mock config loading (the CLI's --mock flag)
//
// Two file shapes are accepted:
//   * a single JSON object with a "mode" key:
//       {"mode":"sampler","seed":7}
//       {"mode":"policy_first_hr","confidence":0.85,"fallback":"unknown"}
//       {"mode":"policy_gold_oracle","confidence":0.85,"fallback":"unknown"}
//       {"mode":"bon_sampler","seed":7,"p_format":0.85,"p_judgment":0.75,
//        "p_rule":0.9,"p_correct":0.5}
//   * JSONL script lines: {"prompt":"..."|"prompt_hash":"...","replies":[...],
//     "fail_times":0,"top_logprobs":{"True":-0.1,"False":-2.4}}
// ---------------------------------------------------------------------------

struct MockSetup {
    std::unique_ptr<ResponseSource> source;
    std::shared_ptr<ChatBackend> backend;  // set when the mock is backend-shaped
};

inline MockSetup load_mock(const std::filesystem::path& path) {
    const std::string content = read_text(path);
    const auto lines = split_lines(content);

    std::optional<json> single;
    for (const auto& line : lines) {
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw_data("mock config: malformed JSON line in " + path.string());
        if (!single && j.contains("mode")) single = j;
        break;
    }

    MockSetup setup;
    if (single) {
        const std::string mode = (*single)["mode"].get<std::string>();
        if (mode == "sampler") {
            auto backend = std::make_shared<MockChatBackend>();
            backend->enable_sampler(single->value("seed", std::uint64_t{0}));
            setup.backend = backend;
            setup.source = std::make_unique<EndpointResponseSource>(backend, RetryPolicy{3, 0});
        } else if (mode == "policy_first_hr") {
            setup.source = std::make_unique<FirstHrPolicySource>(
                single->value("confidence", 0.85), single->value("fallback", std::string("unknown")));
        } else if (mode == "policy_gold_oracle") {
            setup.source = std::make_unique<GoldOraclePolicySource>(
                single->value("confidence", 0.85), single->value("fallback", std::string("unknown")));
        } else if (mode == "bon_sampler") {
            BonSamplerRates rates;
            rates.p_format = single->value("p_format", rates.p_format);
            rates.p_judgment = single->value("p_judgment", rates.p_judgment);
            rates.p_rule = single->value("p_rule", rates.p_rule);
            rates.p_correct = single->value("p_correct", rates.p_correct);
            setup.source = std::make_unique<BonSamplerSource>(single->value("seed", std::uint64_t{0}), rates);
        } else {
            throw_usage("unknown mock mode: " + mode);
        }
        return setup;
    }

    auto backend = std::make_shared<MockChatBackend>();
    std::size_t entries = 0;
    for (const auto& line : lines) {
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) throw_data("mock script: malformed JSON line in " + path.string());
        MockScriptEntry entry;
        if (auto it = j.find("replies"); it != j.end()) {
            entry.replies = it->get<std::vector<std::string>>();
        }
        entry.fail_times = j.value("fail_times", 0);
        if (auto it = j.find("top_logprobs"); it != j.end() && it->is_object()) {
            for (const auto& [token, lp] : it->items()) {
                entry.top_logprobs.push_back(TokenLogprob{token, lp.get<double>()});
            }
        }
        if (j.contains("prompt")) {
            backend->add_entry(j["prompt"].get<std::string>(), std::move(entry));
        } else if (j.contains("prompt_hash")) {
            backend->add_entry(j["prompt_hash"].get<std::string>(), std::move(entry), /*is_hash=*/true);
        } else {
            throw_data("mock script line needs prompt or prompt_hash");
        }
        ++entries;
    }
    if (entries == 0) throw_data("mock script is empty: " + path.string());
    setup.backend = backend;
    setup.source = std::make_unique<EndpointResponseSource>(backend, RetryPolicy{3, 0});
    return setup;
}

}  // namespace ragcal
