#pragma once

#include <cctype>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "ragcal/text.hpp"
#include "ragcal/types.hpp"

namespace ragcal {

struct ParseFailure {
    std::string field;
    std::string reason;
};

// A field is either filled on the response or listed in failures, never both.
struct ParseOutcome {
    ModelResponse response;
    std::vector<ParseFailure> failures;

    bool has_failure(std::string_view field) const {
        for (const auto& f : failures) {
            if (f.field == field) return true;
        }
        return false;
    }
};

namespace parse_detail {

inline bool ieq(char a, char b) {
    return std::tolower(static_cast<unsigned char>(a)) == std::tolower(static_cast<unsigned char>(b));
}

inline bool starts_with_ci(std::string_view s, std::string_view prefix) {
    if (s.size() < prefix.size()) return false;
    for (std::size_t i = 0; i < prefix.size(); ++i) {
        if (!ieq(s[i], prefix[i])) return false;
    }
    return true;
}

// Skip markdown bullets, heading hashes and emphasis before a marker.
inline std::size_t skip_line_decoration(std::string_view s, std::size_t i) {
    while (i < s.size() && (std::isspace(static_cast<unsigned char>(s[i])) || s[i] == '#' ||
                            s[i] == '*' || s[i] == '-' || s[i] == '>')) {
        ++i;
    }
    return i;
}

// If `line` is "<marker> [*]*: rest" (case-insensitive, decoration-tolerant),
// returns the rest.
inline std::optional<std::string> match_marker_line(std::string_view line, std::string_view marker) {
    std::size_t i = skip_line_decoration(line, 0);
    if (!starts_with_ci(line.substr(i), marker)) return std::nullopt;
    i += marker.size();
    while (i < line.size() && (line[i] == ' ' || line[i] == '*')) ++i;
    if (i >= line.size() || line[i] != ':') return std::nullopt;
    ++i;
    return std::string(line.substr(i));
}

// Strip one level of matching surrounding brackets plus whitespace.
inline std::string strip_brackets(std::string value) {
    value = trim(value);
    auto matched = [&](char open, char close) {
        return value.size() >= 2 && value.front() == open && value.back() == close;
    };
    if (matched('[', ']') || matched('(', ')') || matched('{', '}')) {
        value = trim(value.substr(1, value.size() - 2));
    }
    return value;
}

// Parse a decimal number starting at `i`, returning the value and end index.
inline std::optional<std::pair<double, std::size_t>> scan_number(std::string_view s, std::size_t i) {
    std::size_t start = i;
    bool digits = false, dot = false;
    while (i < s.size()) {
        char c = s[i];
        if (std::isdigit(static_cast<unsigned char>(c))) {
            digits = true;
        } else if (c == '.' && !dot) {
            dot = true;
        } else {
            break;
        }
        ++i;
    }
    if (!digits) return std::nullopt;
    try {
        return std::make_pair(std::stod(std::string(s.substr(start, i - start))), i);
    } catch (const std::exception&) {
        return std::nullopt;  // absurd digit runs in arbitrary bytes
    }
}

inline std::size_t find_last_ci(std::string_view haystack, std::string_view needle) {
    std::size_t found = std::string_view::npos;
    for (std::size_t i = 0; i + needle.size() <= haystack.size(); ++i) {
        if (starts_with_ci(haystack.substr(i), needle)) found = i;
    }
    return found;
}

}  // namespace parse_detail

// ---------------------------------------------------------------------------
// normalize_answer: lowercase, strip, drop punctuation, drop articles
// (a/an/the), collapse whitespace. Idempotent.
// ---------------------------------------------------------------------------
inline std::string normalize_answer(std::string_view raw) {
    std::string depunct;
    depunct.reserve(raw.size());
    for (unsigned char c : raw) {
        if (std::isalnum(c) || std::isspace(c)) {
            depunct.push_back(static_cast<char>(std::tolower(c)));
        }
        // punctuation dropped entirely
    }
    std::string out;
    for (const auto& tok : split_whitespace(depunct)) {
        if (tok == "a" || tok == "an" || tok == "the") continue;
        if (!out.empty()) out.push_back(' ');
        out += tok;
    }
    return out;
}

// y = 1 iff the normalized answer equals the normalized gold answer or any alias.
inline int judge_correctness(std::string_view answer, const QAInstance& instance) {
    const std::string norm = normalize_answer(answer);
    if (norm == normalize_answer(instance.gold_answer)) return 1;
    for (const auto& alias : instance.answer_aliases) {
        if (norm == normalize_answer(alias)) return 1;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// parse_final_response
// ---------------------------------------------------------------------------

namespace parse_detail {

inline std::optional<PassageJudgment> match_judgment_keyword(std::string_view s, std::size_t& i) {
    // Order matters: "highly relevant" and "irrelevant" both contain "relevant".
    static constexpr std::pair<const char*, PassageJudgment> table[] = {
        {"highly relevant", PassageJudgment::HighlyRelevant},
        {"highly-relevant", PassageJudgment::HighlyRelevant},
        {"irrelevant", PassageJudgment::Irrelevant},
        {"relevant", PassageJudgment::Relevant},
    };
    for (const auto& [kw, label] : table) {
        if (starts_with_ci(s.substr(i), kw)) {
            i += std::string_view(kw).size();
            return label;
        }
    }
    return std::nullopt;
}

// Scan "1. <label> 2. <label> ..." (possibly across lines) starting at `pos`.
inline std::vector<PassageJudgment> scan_classifications(std::string_view text, std::size_t pos) {
    std::vector<PassageJudgment> labels;
    int expected = 1;
    std::size_t i = pos;
    while (i < text.size()) {
        // find the next digit
        while (i < text.size() && !std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        if (i >= text.size()) break;
        std::size_t num_start = i;
        while (i < text.size() && std::isdigit(static_cast<unsigned char>(text[i]))) ++i;
        if (i - num_start > 6) continue;  // not a list index
        int number = std::stoi(std::string(text.substr(num_start, i - num_start)));
        if (number != expected) {
            if (labels.empty()) continue;  // stray number before the list starts
            break;                          // list ended
        }
        // separator after the index: '.', ')', ':' then optional decoration
        if (i < text.size() && (text[i] == '.' || text[i] == ')' || text[i] == ':')) ++i;
        while (i < text.size() && (text[i] == ' ' || text[i] == '\t' || text[i] == '[' ||
                                   text[i] == '(' || text[i] == '*')) {
            ++i;
        }
        auto label = match_judgment_keyword(text, i);
        if (!label) break;
        labels.push_back(*label);
        ++expected;
    }
    return labels;
}

inline std::optional<GroupJudgment> derive_group_verdict(std::string_view raw,
                                                         const std::vector<PassageJudgment>& labels) {
    int hr = 0;
    for (auto l : labels) {
        if (l == PassageJudgment::HighlyRelevant) ++hr;
    }
    if (hr == 0) return GroupJudgment::NoAnswer;
    if (hr == 1) return GroupJudgment::ConsistentAnswer;
    // Two or more highly-relevant passages: the verdict has to come from the
    // reasoning text. Each contradiction/conflict mention is classified by its
    // local negation window ("without any contradictions" stays consistent)
    // and the last mention is the commitment.
    std::optional<GroupJudgment> verdict;
    for (std::size_t pos = 0; pos < raw.size(); ++pos) {
        if (!starts_with_ci(raw.substr(pos), "contradict") &&
            !starts_with_ci(raw.substr(pos), "conflict")) {
            continue;
        }
        const std::size_t window_start = pos > 24 ? pos - 24 : 0;
        bool negated = false;
        for (const auto& tok : tokenize(raw.substr(window_start, pos - window_start))) {
            if (tok == "no" || tok == "not" || tok == "without" || tok == "neither" ||
                tok == "cannot" || tok == "none") {
                negated = true;
                break;
            }
        }
        verdict = negated ? GroupJudgment::ConsistentAnswer : GroupJudgment::Contradictory;
    }
    return verdict;
}

}  // namespace parse_detail

// Extract the structured fields from raw model output. Last occurrences win:
// reasoning traces frequently restate the response format, the final stated
// value is the commitment.
inline ParseOutcome parse_final_response(std::string_view raw, bool expect_judgments) {
    using namespace parse_detail;
    ParseOutcome outcome;
    outcome.response.raw = std::string(raw);

    // answer: last "Final Answer:" / "Answer:" line, with an inline fallback
    // for replies that keep everything on one line
    std::optional<std::string> answer;
    for (const auto& line : split_lines(raw)) {
        std::optional<std::string> rest = match_marker_line(line, "final answer");
        if (!rest) rest = match_marker_line(line, "answer");
        if (rest) {
            std::string value = strip_brackets(*rest);
            if (!value.empty()) answer = value;
        }
    }
    if (!answer) {
        for (std::size_t pos = 0; pos < raw.size(); ++pos) {
            if (pos != 0 && !std::isspace(static_cast<unsigned char>(raw[pos - 1]))) continue;
            std::size_t i = pos;
            if (starts_with_ci(raw.substr(i), "final answer")) {
                i += 12;
            } else if (starts_with_ci(raw.substr(i), "answer")) {
                i += 6;
            } else {
                continue;
            }
            while (i < raw.size() && (raw[i] == ' ' || raw[i] == '*')) ++i;
            if (i >= raw.size() || raw[i] != ':') continue;
            ++i;
            std::size_t end = raw.find('\n', i);
            if (end == std::string_view::npos) end = raw.size();
            std::string value(raw.substr(i, end - i));
            // drop a trailing inline "Confidence: ..." tail
            const std::size_t conf = find_last_ci(value, "confidence");
            if (conf != std::string_view::npos) value = value.substr(0, conf);
            value = strip_brackets(value);
            if (!value.empty()) answer = value;
        }
    }
    if (answer) {
        outcome.response.answer = *answer;
    } else {
        outcome.failures.push_back({"answer", "marker not found"});
    }

    // confidence: last "Confidence: <percent>" occurrence anywhere in the text
    std::optional<double> last_pct;
    bool saw_marker = false;
    for (std::size_t pos = 0; pos + 10 <= raw.size(); ++pos) {
        if (!starts_with_ci(raw.substr(pos), "confidence")) continue;
        std::size_t i = pos + std::string_view("confidence").size();
        while (i < raw.size() && (raw[i] == ' ' || raw[i] == '*')) ++i;
        if (i >= raw.size() || raw[i] != ':') continue;
        saw_marker = true;
        ++i;
        while (i < raw.size() && (raw[i] == ' ' || raw[i] == '[' || raw[i] == '(')) ++i;
        if (auto num = scan_number(raw, i)) last_pct = num->first;
    }
    if (last_pct) {
        if (*last_pct < 0.0 || *last_pct > 100.0) {
            outcome.failures.push_back({"confidence", "out of range"});
        } else {
            outcome.response.confidence = *last_pct / 100.0;
        }
    } else {
        outcome.failures.push_back({"confidence", saw_marker ? "no numeric value" : "marker not found"});
    }

    // passage classifications + group verdict
    if (expect_judgments) {
        std::size_t marker = find_last_ci(raw, "passage classifications");
        std::vector<PassageJudgment> labels;
        if (marker != std::string_view::npos) {
            labels = scan_classifications(raw, marker + std::string_view("passage classifications").size());
        }
        if (labels.empty()) {
            outcome.failures.push_back({"judgments", "classifications not found"});
        } else {
            ParsedJudgments pj;
            pj.per_passage = std::move(labels);
            pj.group = derive_group_verdict(raw, pj.per_passage);
            outcome.response.judgments = std::move(pj);
        }
    }

    outcome.response.rule_trace.mentions_rules = contains_ci(raw, "rules");
    outcome.response.rule_trace.has_step4 = contains_ci(raw, "step 4");
    return outcome;
}

// True iff every per-passage label and the group verdict match the ground truth.
inline bool judge_passage_assessment(const ParsedJudgments& parsed, const GroundTruthJudgments& gt) {
    if (parsed.per_passage.size() != gt.per_passage.size()) {
        throw_data("judgment count mismatch: parsed " + std::to_string(parsed.per_passage.size()) +
                   ", context has " + std::to_string(gt.per_passage.size()));
    }
    if (parsed.per_passage != gt.per_passage) return false;
    return parsed.group.has_value() && *parsed.group == gt.group;
}

// ---------------------------------------------------------------------------
// Noise-generation reply parsing
// ---------------------------------------------------------------------------

enum class NoiseKind { Cf, Rel, Irr };

inline const char* to_string(NoiseKind k) {
    switch (k) {
        case NoiseKind::Cf: return "cf";
        case NoiseKind::Rel: return "rel";
        case NoiseKind::Irr: return "irr";
    }
    return "?";
}

namespace parse_detail {

// Matches "Passage 3:" style markers; returns (number, rest-of-line).
inline std::optional<std::pair<int, std::string>> match_numbered_marker(std::string_view line,
                                                                        std::string_view word) {
    std::size_t i = skip_line_decoration(line, 0);
    if (!starts_with_ci(line.substr(i), word)) return std::nullopt;
    i += word.size();
    while (i < line.size() && line[i] == ' ') ++i;
    std::size_t num_start = i;
    while (i < line.size() && std::isdigit(static_cast<unsigned char>(line[i]))) ++i;
    if (i == num_start || i - num_start > 6) return std::nullopt;
    int number = std::stoi(std::string(line.substr(num_start, i - num_start)));
    while (i < line.size() && line[i] == ' ') ++i;
    if (i >= line.size() || line[i] != ':') return std::nullopt;
    return std::make_pair(number, std::string(line.substr(i + 1)));
}

// Companion markers are numbered for cf/rel replies and bare for irr replies.
inline std::optional<std::string> match_companion(std::string_view line, NoiseKind kind) {
    switch (kind) {
        case NoiseKind::Cf:
            if (auto m = match_numbered_marker(line, "counterfactual answer")) return m->second;
            return std::nullopt;
        case NoiseKind::Rel:
            if (auto m = match_numbered_marker(line, "shared topic/keywords")) return m->second;
            if (auto m = match_marker_line(line, "shared topic/keywords")) return m;
            return std::nullopt;
        case NoiseKind::Irr:
            if (auto m = match_marker_line(line, "alternative expression")) return m;
            if (auto m = match_numbered_marker(line, "alternative expression")) return m->second;
            return std::nullopt;
    }
    return std::nullopt;
}

}  // namespace parse_detail

// Extracts (Passage N, companion) pairs from a noise-generation reply and
// keeps the last three. Cf companions become supported_answer, Rel companions
// become shared_keywords, Irr companions (alternative expressions) are
// discarded. Relevant passages default to the theme subtype; callers may
// re-tag entity/relation/theme.
inline std::vector<Passage> parse_noise_generation(std::string_view raw, NoiseKind kind) {
    using namespace parse_detail;

    struct Entry {
        std::string text;
        std::string companion;
        bool in_companion = false;
    };
    std::vector<Entry> entries;

    for (const auto& line : split_lines(raw)) {
        if (auto pm = match_numbered_marker(line, "passage")) {
            entries.push_back(Entry{trim(pm->second), "", false});
            continue;
        }
        if (!entries.empty()) {
            if (auto cm = match_companion(line, kind)) {
                entries.back().companion = trim(*cm);
                entries.back().in_companion = true;
                continue;
            }
            std::string t = trim(line);
            if (t.empty()) continue;
            auto& e = entries.back();
            std::string& target = e.in_companion ? e.companion : e.text;
            if (!target.empty()) target.push_back(' ');
            target += t;
        }
    }

    std::vector<Passage> passages;
    for (const auto& e : entries) {
        if (e.text.empty()) continue;
        Passage p;
        p.text = strip_brackets(e.text);
        switch (kind) {
            case NoiseKind::Cf: {
                std::string ans = strip_brackets(e.companion);
                if (ans.empty()) continue;  // cf passage without an answer is unusable
                p.category = PassageCategory::Counterfactual;
                p.supported_answer = ans;
                break;
            }
            case NoiseKind::Rel: {
                p.category = PassageCategory::RelevantTheme;
                std::vector<std::string> keywords;
                std::string cur;
                for (char c : strip_brackets(e.companion)) {
                    if (c == ',') {
                        if (!trim(cur).empty()) keywords.push_back(trim(cur));
                        cur.clear();
                    } else {
                        cur.push_back(c);
                    }
                }
                if (!trim(cur).empty()) keywords.push_back(trim(cur));
                if (!keywords.empty()) p.shared_keywords = keywords;
                break;
            }
            case NoiseKind::Irr:
                p.category = PassageCategory::Irrelevant;
                break;
        }
        passages.push_back(std::move(p));
    }

    if (passages.size() < 3) {
        throw_data("noise reply yielded " + std::to_string(passages.size()) +
                   " parseable passages, need at least 3");
    }
    if (passages.size() > 3) {
        passages.erase(passages.begin(), passages.end() - 3);
    }
    return passages;
}

}  // namespace ragcal
