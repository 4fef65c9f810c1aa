#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ragcal/error.hpp"
#include "ragcal/prompts_data.hpp"
#include "ragcal/text.hpp"
#include "ragcal/types.hpp"

namespace ragcal {

struct PromptTemplate {
    std::string name;
    std::string body;
};

// All placeholders any template may carry. Rendering fails if one of these
// survives substitution.
inline const std::vector<std::string>& known_placeholders() {
    static const std::vector<std::string> names = {
        "question",        "retrieved passages", "sentence_length", "word_length",
        "query",           "gt_answer",          "gt_passage",      "proposed_answer",
    };
    return names;
}

inline const std::map<std::string, std::string>& builtin_templates() {
    static const std::map<std::string, std::string> registry = {
        {"vanilla", prompt_data::k_vanilla},
        {"cot", prompt_data::k_cot},
        {"multi_step", prompt_data::k_multi_step},
        {"noise_aware", prompt_data::k_noise_aware},
        {"rules", prompt_data::k_rules},
        {"noisegen_cf", prompt_data::k_noisegen_cf},
        {"noisegen_rel", prompt_data::k_noisegen_rel},
        {"noisegen_irr", prompt_data::k_noisegen_irr},
        {"p_true", prompt_data::k_p_true},
    };
    return registry;
}

inline PromptTemplate get_template(const std::string& name) {
    auto it = builtin_templates().find(name);
    if (it == builtin_templates().end()) throw_usage("unknown prompt template: " + name);
    return PromptTemplate{it->first, it->second};
}

// Passages joined as the numbered list the prompts expect.
inline std::string numbered_passages(const RetrievalContext& context) {
    std::string out;
    for (std::size_t i = 0; i < context.passages.size(); ++i) {
        if (!out.empty()) out.push_back('\n');
        out += std::to_string(i + 1);
        out += ". ";
        out += context.passages[i].text;
    }
    return out;
}

// Pure placeholder substitution; errors name the first unfilled placeholder.
inline std::string render_prompt(const PromptTemplate& tmpl,
                                 const std::map<std::string, std::string>& values) {
    std::string text = tmpl.body;
    for (const auto& [key, value] : values) {
        text = replace_all(std::move(text), "{" + key + "}", value);
    }
    for (const auto& name : known_placeholders()) {
        if (text.find("{" + name + "}") != std::string::npos) {
            throw_data("template '" + tmpl.name + "': placeholder '" + name + "' unfilled");
        }
    }
    return text;
}

// Builds the substitution map from an instance and optional context. The
// noise-generation length placeholders come from the gold passage: sentence
// count is the number of terminator characters, word length the rounded
// words-per-sentence ratio.
inline std::string render_prompt(const PromptTemplate& tmpl, const QAInstance& instance,
                                 const std::optional<RetrievalContext>& context = std::nullopt,
                                 const std::map<std::string, std::string>& extra = {}) {
    std::map<std::string, std::string> values = extra;
    values.emplace("question", instance.question);
    values.emplace("query", instance.question);
    values.emplace("gt_answer", instance.gold_answer);
    values.emplace("gt_passage", instance.gold_passage.text);
    values.emplace("sentence_length", std::to_string(count_sentences(instance.gold_passage.text)));
    values.emplace("word_length", std::to_string(words_per_sentence(instance.gold_passage.text)));
    if (context && !context->passages.empty()) {
        values.emplace("retrieved passages", numbered_passages(*context));
    }
    return render_prompt(tmpl, values);
}

}  // namespace ragcal
