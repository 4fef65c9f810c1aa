#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "ragcal/text.hpp"
#include "ragcal/types.hpp"

namespace ragcal {

using json = nlohmann::json;

namespace detail {

inline const json& require_field(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end()) throw_data(std::string("missing field ") + field);
    return *it;
}

inline std::optional<std::string> opt_string(const json& j, const char* field) {
    auto it = j.find(field);
    if (it == j.end() || it->is_null()) return std::nullopt;
    return it->get<std::string>();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Per-type JSON encoding. Unknown fields are ignored on read and never written.
// ---------------------------------------------------------------------------

inline json to_json(const Passage& p) {
    json j{{"text", p.text}, {"category", to_string(p.category)}};
    if (p.supported_answer) j["supported_answer"] = *p.supported_answer;
    if (p.shared_keywords) j["shared_keywords"] = *p.shared_keywords;
    return j;
}

inline Passage passage_from_json(const json& j) {
    Passage p;
    p.text = detail::require_field(j, "text").get<std::string>();
    p.category = passage_category_from_string(detail::require_field(j, "category").get<std::string>());
    p.supported_answer = detail::opt_string(j, "supported_answer");
    if (auto it = j.find("shared_keywords"); it != j.end() && !it->is_null()) {
        p.shared_keywords = it->get<std::vector<std::string>>();
    }
    if (p.category == PassageCategory::Counterfactual &&
        (!p.supported_answer || p.supported_answer->empty())) {
        throw_data("counterfactual passage without supported_answer");
    }
    return p;
}

inline json to_json(const QAInstance& q) {
    return json{{"id", q.id},
                {"question", q.question},
                {"gold_answer", q.gold_answer},
                {"answer_aliases", q.answer_aliases},
                {"gold_passage", to_json(q.gold_passage)},
                {"dataset_tag", q.dataset_tag}};
}

inline QAInstance qa_instance_from_json(const json& j) {
    QAInstance q;
    q.id = detail::require_field(j, "id").get<std::string>();
    q.question = detail::require_field(j, "question").get<std::string>();
    q.gold_answer = detail::require_field(j, "gold_answer").get<std::string>();
    if (auto it = j.find("answer_aliases"); it != j.end() && !it->is_null()) {
        q.answer_aliases = it->get<std::vector<std::string>>();
    }
    q.gold_passage = passage_from_json(detail::require_field(j, "gold_passage"));
    if (q.gold_passage.category != PassageCategory::Gold) {
        throw_data("gold_passage of instance " + q.id + " is not category gold");
    }
    if (auto it = j.find("dataset_tag"); it != j.end() && !it->is_null()) {
        q.dataset_tag = it->get<std::string>();
    }
    return q;
}

inline json to_json(const LabeledPassage& lp) {
    json j = to_json(lp.passage);
    j["query_id"] = lp.query_id;
    return j;
}

inline LabeledPassage labeled_passage_from_json(const json& j) {
    LabeledPassage lp;
    lp.query_id = detail::require_field(j, "query_id").get<std::string>();
    lp.passage = passage_from_json(j);
    return lp;
}

inline json to_json(const GroundTruthJudgments& gt) {
    json per = json::array();
    for (auto p : gt.per_passage) per.push_back(to_string(p));
    return json{{"per_passage", per}, {"group", to_string(gt.group)}};
}

inline GroundTruthJudgments gt_judgments_from_json(const json& j) {
    GroundTruthJudgments gt;
    for (const auto& p : detail::require_field(j, "per_passage")) {
        gt.per_passage.push_back(passage_judgment_from_string(p.get<std::string>()));
    }
    gt.group = group_judgment_from_string(detail::require_field(j, "group").get<std::string>());
    return gt;
}

inline json to_json(const RetrievalContext& c) {
    json passages = json::array();
    for (const auto& p : c.passages) passages.push_back(to_json(p));
    json j{{"query_id", c.query_id},
           {"passages", passages},
           {"group_label", c.group_label},
           {"seed", c.seed}};
    if (c.gold_position) j["gold_position"] = *c.gold_position;
    return j;
}

inline RetrievalContext retrieval_context_from_json(const json& j) {
    RetrievalContext c;
    c.query_id = detail::require_field(j, "query_id").get<std::string>();
    for (const auto& p : detail::require_field(j, "passages")) {
        c.passages.push_back(passage_from_json(p));
    }
    c.group_label = detail::require_field(j, "group_label").get<std::string>();
    validate_context_label(c.group_label);
    if (auto it = j.find("gold_position"); it != j.end() && !it->is_null()) {
        int pos = it->get<int>();
        if (pos < 0 || pos >= static_cast<int>(c.passages.size()) ||
            c.passages[static_cast<std::size_t>(pos)].category != PassageCategory::Gold) {
            throw_data("gold_position does not index a gold passage");
        }
        c.gold_position = pos;
    }
    if (auto it = j.find("seed"); it != j.end() && !it->is_null()) c.seed = it->get<std::int64_t>();
    return c;
}

inline json to_json(const ContextRecord& r) {
    json j = to_json(r.context);
    if (r.gt) j["gt"] = to_json(*r.gt);
    return j;
}

inline ContextRecord context_record_from_json(const json& j) {
    ContextRecord r;
    r.context = retrieval_context_from_json(j);
    if (auto it = j.find("gt"); it != j.end() && !it->is_null()) {
        r.gt = gt_judgments_from_json(*it);
    }
    return r;
}

inline json to_json(const ResponseRecord& r) {
    json j{{"query_id", r.query_id},
           {"model_tag", r.model_tag},
           {"sample_index", r.sample_index},
           {"raw", r.raw},
           {"truncated", r.truncated}};
    if (!r.context_tag.empty()) j["context_tag"] = r.context_tag;
    if (r.usage) {
        j["usage"] = json{{"prompt_tokens", r.usage->prompt_tokens},
                          {"completion_tokens", r.usage->completion_tokens}};
    }
    return j;
}

inline ResponseRecord response_record_from_json(const json& j) {
    ResponseRecord r;
    r.query_id = detail::require_field(j, "query_id").get<std::string>();
    r.model_tag = detail::require_field(j, "model_tag").get<std::string>();
    r.sample_index = detail::require_field(j, "sample_index").get<int>();
    r.raw = detail::require_field(j, "raw").get<std::string>();
    if (auto it = j.find("context_tag"); it != j.end() && !it->is_null()) {
        r.context_tag = it->get<std::string>();
    }
    if (auto it = j.find("truncated"); it != j.end() && !it->is_null()) r.truncated = it->get<bool>();
    if (auto it = j.find("usage"); it != j.end() && !it->is_null()) {
        TokenUsage u;
        u.prompt_tokens = it->value("prompt_tokens", 0);
        u.completion_tokens = it->value("completion_tokens", 0);
        r.usage = u;
    }
    return r;
}

inline json to_json(const EvalRecord& r) {
    return json{{"instance_id", r.instance_id},
                {"correct", r.correct},
                {"confidence", r.confidence},
                {"context_tag", r.context_tag},
                {"model_tag", r.model_tag}};
}

inline EvalRecord eval_record_from_json(const json& j) {
    EvalRecord r;
    r.instance_id = detail::require_field(j, "instance_id").get<std::string>();
    r.correct = detail::require_field(j, "correct").get<int>();
    r.confidence = detail::require_field(j, "confidence").get<double>();
    if (r.correct != 0 && r.correct != 1) throw_data("correct must be 0 or 1");
    if (r.confidence < 0.0 || r.confidence > 1.0) throw_data("confidence outside [0,1]");
    if (auto it = j.find("context_tag"); it != j.end() && !it->is_null()) r.context_tag = it->get<std::string>();
    if (auto it = j.find("model_tag"); it != j.end() && !it->is_null()) r.model_tag = it->get<std::string>();
    return r;
}

inline json to_json(const SftExample& e) {
    return json{{"instruction", e.instruction},
                {"input", e.input},
                {"output", e.output},
                {"meta", json{{"query_id", e.meta.query_id},
                              {"group_label", e.meta.group_label},
                              {"brier", e.meta.brier}}}};
}

inline SftExample sft_example_from_json(const json& j) {
    SftExample e;
    e.instruction = detail::require_field(j, "instruction").get<std::string>();
    e.input = detail::require_field(j, "input").get<std::string>();
    e.output = detail::require_field(j, "output").get<std::string>();
    if (auto it = j.find("meta"); it != j.end() && !it->is_null()) {
        e.meta.query_id = it->value("query_id", std::string());
        e.meta.group_label = it->value("group_label", std::string());
        e.meta.brier = it->value("brier", 0.0);
    }
    return e;
}

// Dispatch table so read_jsonl<T>/write_jsonl<T> stay generic.
template <typename T>
struct JsonCodec;

#define RAGCAL_JSON_CODEC(Type, decode_fn)                           \
    template <>                                                      \
    struct JsonCodec<Type> {                                         \
        static json encode(const Type& v) { return to_json(v); }     \
        static Type decode(const json& j) { return decode_fn(j); }   \
    };

RAGCAL_JSON_CODEC(Passage, passage_from_json)
RAGCAL_JSON_CODEC(QAInstance, qa_instance_from_json)
RAGCAL_JSON_CODEC(LabeledPassage, labeled_passage_from_json)
RAGCAL_JSON_CODEC(ContextRecord, context_record_from_json)
RAGCAL_JSON_CODEC(ResponseRecord, response_record_from_json)
RAGCAL_JSON_CODEC(EvalRecord, eval_record_from_json)
RAGCAL_JSON_CODEC(SftExample, sft_example_from_json)

#undef RAGCAL_JSON_CODEC

// ---------------------------------------------------------------------------
// Line-delimited file I/O
// ---------------------------------------------------------------------------

inline void write_text_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path() && !path.parent_path().empty() && !fs::exists(path.parent_path())) {
        throw_data("parent directory does not exist: " + path.parent_path().string());
    }
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw_data("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw_data("write failed: " + tmp.string());
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) throw_data("rename failed for " + path.string() + ": " + ec.message());
}

inline std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_data("cannot open: " + path.string());
    std::string content((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return content;
}

template <typename T>
std::vector<T> read_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw_data("cannot open: " + path.string());
    std::vector<T> records;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        json j = json::parse(line, nullptr, false);
        if (j.is_discarded()) {
            throw_data("line " + std::to_string(line_no) + ": malformed JSON in " + path.string());
        }
        try {
            records.push_back(JsonCodec<T>::decode(j));
        } catch (const Error& e) {
            throw Error(e.kind(), "line " + std::to_string(line_no) + ": " + e.what());
        } catch (const json::exception& e) {
            throw_data("line " + std::to_string(line_no) + ": " + e.what());
        }
    }
    return records;
}

template <typename T>
void write_jsonl(const std::filesystem::path& path, const std::vector<T>& records) {
    std::string buf;
    for (const auto& r : records) {
        buf += JsonCodec<T>::encode(r).dump();
        buf += '\n';
    }
    write_text_atomic(path, buf);
}

}  // namespace ragcal
