#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "ragcal/error.hpp"

namespace ragcal {

// ---------------------------------------------------------------------------
// Closed enumerations. Deserializing an unknown label fails loudly.
// ---------------------------------------------------------------------------

enum class PassageCategory {
    Gold,
    Counterfactual,
    RelevantEntity,
    RelevantRelation,
    RelevantTheme,
    Irrelevant,
};

inline bool is_relevant_noise(PassageCategory c) {
    return c == PassageCategory::RelevantEntity || c == PassageCategory::RelevantRelation ||
           c == PassageCategory::RelevantTheme;
}

inline const char* to_string(PassageCategory c) {
    switch (c) {
        case PassageCategory::Gold: return "gold";
        case PassageCategory::Counterfactual: return "counterfactual";
        case PassageCategory::RelevantEntity: return "relevant_entity";
        case PassageCategory::RelevantRelation: return "relevant_relation";
        case PassageCategory::RelevantTheme: return "relevant_theme";
        case PassageCategory::Irrelevant: return "irrelevant";
    }
    return "?";
}

inline PassageCategory passage_category_from_string(const std::string& s) {
    if (s == "gold") return PassageCategory::Gold;
    if (s == "counterfactual") return PassageCategory::Counterfactual;
    if (s == "relevant_entity") return PassageCategory::RelevantEntity;
    if (s == "relevant_relation") return PassageCategory::RelevantRelation;
    if (s == "relevant_theme") return PassageCategory::RelevantTheme;
    if (s == "irrelevant") return PassageCategory::Irrelevant;
    throw_data("unknown passage category: " + s);
}

// Per-passage utility judgment, as verbalized by the model and as derived
// from ground-truth categories.
enum class PassageJudgment { HighlyRelevant, Relevant, Irrelevant };

inline const char* to_string(PassageJudgment j) {
    switch (j) {
        case PassageJudgment::HighlyRelevant: return "highly_relevant";
        case PassageJudgment::Relevant: return "relevant";
        case PassageJudgment::Irrelevant: return "irrelevant";
    }
    return "?";
}

inline PassageJudgment passage_judgment_from_string(const std::string& s) {
    if (s == "highly_relevant") return PassageJudgment::HighlyRelevant;
    if (s == "relevant") return PassageJudgment::Relevant;
    if (s == "irrelevant") return PassageJudgment::Irrelevant;
    throw_data("unknown passage judgment: " + s);
}

enum class GroupJudgment { ConsistentAnswer, Contradictory, NoAnswer };

inline const char* to_string(GroupJudgment g) {
    switch (g) {
        case GroupJudgment::ConsistentAnswer: return "consistent_answer";
        case GroupJudgment::Contradictory: return "contradictory";
        case GroupJudgment::NoAnswer: return "no_answer";
    }
    return "?";
}

inline GroupJudgment group_judgment_from_string(const std::string& s) {
    if (s == "consistent_answer") return GroupJudgment::ConsistentAnswer;
    if (s == "contradictory") return GroupJudgment::Contradictory;
    if (s == "no_answer") return GroupJudgment::NoAnswer;
    throw_data("unknown group judgment: " + s);
}

// Controlled analysis settings (gold-only / gold + two noise passages).
enum class ControlledSetting { GoldOnly, GoldPlusCf, GoldPlusRel, GoldPlusIrr };

inline const char* to_string(ControlledSetting s) {
    switch (s) {
        case ControlledSetting::GoldOnly: return "gold_only";
        case ControlledSetting::GoldPlusCf: return "gold_plus_cf";
        case ControlledSetting::GoldPlusRel: return "gold_plus_rel";
        case ControlledSetting::GoldPlusIrr: return "gold_plus_irr";
    }
    return "?";
}

inline ControlledSetting controlled_setting_from_string(const std::string& s) {
    if (s == "gold_only") return ControlledSetting::GoldOnly;
    if (s == "gold_plus_cf") return ControlledSetting::GoldPlusCf;
    if (s == "gold_plus_rel") return ControlledSetting::GoldPlusRel;
    if (s == "gold_plus_irr") return ControlledSetting::GoldPlusIrr;
    throw_data("unknown controlled setting: " + s);
}

// Training passage groups.
enum class GroupKind { Counterfactual, Consistent, Irrelevant };

inline const char* to_string(GroupKind g) {
    switch (g) {
        case GroupKind::Counterfactual: return "counterfactual";
        case GroupKind::Consistent: return "consistent";
        case GroupKind::Irrelevant: return "irrelevant";
    }
    return "?";
}

inline GroupKind group_kind_from_string(const std::string& s) {
    if (s == "counterfactual") return GroupKind::Counterfactual;
    if (s == "consistent") return GroupKind::Consistent;
    if (s == "irrelevant") return GroupKind::Irrelevant;
    throw_data("unknown group kind: " + s);
}

// Every label a RetrievalContext may carry: the four controlled settings plus
// the three training groups.
inline void validate_context_label(const std::string& s) {
    static const char* known[] = {"gold_only",      "gold_plus_cf", "gold_plus_rel",
                                  "gold_plus_irr",  "counterfactual", "consistent",
                                  "irrelevant"};
    for (const char* k : known) {
        if (s == k) return;
    }
    throw_data("unknown context label: " + s);
}

// ---------------------------------------------------------------------------
// Domain value types
// ---------------------------------------------------------------------------

struct Passage {
    std::string text;
    PassageCategory category = PassageCategory::Irrelevant;
    std::optional<std::string> supported_answer;        // required iff counterfactual
    std::optional<std::vector<std::string>> shared_keywords;  // relevant noise only
};

struct QAInstance {
    std::string id;
    std::string question;
    std::string gold_answer;
    std::vector<std::string> answer_aliases;
    Passage gold_passage;  // category must be Gold
    std::string dataset_tag;
};

struct RetrievalContext {
    std::string query_id;
    std::vector<Passage> passages;
    std::string group_label;  // one of the seven context labels
    std::optional<int> gold_position;  // 0-based index of the unique gold passage
    std::int64_t seed = 0;             // seed used for position randomization
};

struct GroundTruthJudgments {
    std::vector<PassageJudgment> per_passage;
    GroupJudgment group = GroupJudgment::NoAnswer;

    bool operator==(const GroundTruthJudgments&) const = default;
};

struct RuleTrace {
    bool mentions_rules = false;
    bool has_step4 = false;

    bool operator==(const RuleTrace&) const = default;
};

struct ParsedJudgments {
    std::vector<PassageJudgment> per_passage;
    std::optional<GroupJudgment> group;

    bool operator==(const ParsedJudgments&) const = default;
};

struct TokenUsage {
    int prompt_tokens = 0;
    int completion_tokens = 0;
};

struct ModelResponse {
    std::string raw;
    std::optional<std::string> answer;
    std::optional<double> confidence;  // fraction in [0,1]
    std::optional<ParsedJudgments> judgments;
    RuleTrace rule_trace;
    int sample_index = 0;
    std::optional<TokenUsage> token_usage;
    bool truncated = false;
};

struct EvalRecord {
    std::string instance_id;
    int correct = 0;          // y in {0,1}
    double confidence = 0.0;  // fraction in [0,1]
    std::string context_tag;
    std::string model_tag;
};

struct SftMeta {
    std::string query_id;
    std::string group_label;
    double brier = 0.0;
};

struct SftExample {
    std::string instruction;
    std::string input;   // empty; the instruction already embeds the context
    std::string output;  // full selected response text
    SftMeta meta;
};

// Wire record binding a generated noise passage to its query.
struct LabeledPassage {
    std::string query_id;
    Passage passage;
};

// Wire record for contexts.jsonl: a context plus its derived ground truth.
struct ContextRecord {
    RetrievalContext context;
    std::optional<GroundTruthJudgments> gt;
};

// Wire record for responses.jsonl. context_tag disambiguates runs where one
// query appears under several settings.
struct ResponseRecord {
    std::string query_id;
    std::string model_tag;
    std::string context_tag;
    int sample_index = 0;
    std::string raw;
    bool truncated = false;
    std::optional<TokenUsage> usage;
};

}  // namespace ragcal
