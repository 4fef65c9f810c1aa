#include <filesystem>

#include "doctest.h"
#include "helpers.hpp"
#include "ragcal/jsonl.hpp"
#include "ragcal/rng.hpp"

using namespace ragcal;
namespace fs = std::filesystem;

TEST_CASE("read_jsonl on an empty file returns an empty list") {
    const auto dir = testutil::fresh_dir("jsonl_empty");
    testutil::write_file(dir / "empty.jsonl", "");
    CHECK(read_jsonl<QAInstance>(dir / "empty.jsonl").empty());
}

TEST_CASE("three instances round-trip in order") {
    const auto dir = testutil::fresh_dir("jsonl_rt");
    std::vector<QAInstance> instances;
    for (int i = 0; i < 3; ++i) instances.push_back(testutil::make_instance(i));
    write_jsonl(dir / "instances.jsonl", instances);
    const auto back = read_jsonl<QAInstance>(dir / "instances.jsonl");
    REQUIRE(back.size() == 3);
    for (int i = 0; i < 3; ++i) {
        CHECK(back[i].id == instances[i].id);
        CHECK(back[i].question == instances[i].question);
        CHECK(back[i].gold_answer == instances[i].gold_answer);
        CHECK(back[i].gold_passage.text == instances[i].gold_passage.text);
    }
}

TEST_CASE("missing field errors carry the line number") {
    const auto dir = testutil::fresh_dir("jsonl_missing");
    const auto good = to_json(testutil::make_instance(0)).dump();
    json bad = to_json(testutil::make_instance(1));
    bad.erase("question");
    testutil::write_file(dir / "broken.jsonl", good + "\n" + bad.dump() + "\n");
    try {
        read_jsonl<QAInstance>(dir / "broken.jsonl");
        FAIL("expected an error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()) == "line 2: missing field question");
        CHECK(e.kind() == ErrorKind::Data);
    }
}

TEST_CASE("malformed JSON reports the line number") {
    const auto dir = testutil::fresh_dir("jsonl_malformed");
    testutil::write_file(dir / "broken.jsonl", "{\"x\": 1}\nnot-json\n");
    CHECK_THROWS_WITH_AS(read_jsonl<EvalRecord>(dir / "broken.jsonl"),
                         doctest::Contains("line 1"), Error);
}

TEST_CASE("unknown fields are ignored on read") {
    const auto dir = testutil::fresh_dir("jsonl_unknown");
    json j = to_json(testutil::make_instance(0));
    j["extra_field"] = "ignored";
    testutil::write_file(dir / "inst.jsonl", j.dump() + "\n");
    const auto back = read_jsonl<QAInstance>(dir / "inst.jsonl");
    REQUIRE(back.size() == 1);
    CHECK(back[0].id == "q1000");
}

TEST_CASE("closed enumerations fail loudly on unknown labels") {
    CHECK_THROWS_AS(passage_category_from_string("golden"), Error);
    CHECK_THROWS_AS(passage_judgment_from_string("very relevant"), Error);
    CHECK_THROWS_AS(group_judgment_from_string("mixed"), Error);
    CHECK_THROWS_AS(controlled_setting_from_string("gold"), Error);
    CHECK_THROWS_AS(group_kind_from_string("noise"), Error);
    CHECK_THROWS_AS(validate_context_label("gold-only"), Error);
}

TEST_CASE("schema invariants enforced on read") {
    const auto dir = testutil::fresh_dir("jsonl_invariants");

    SUBCASE("counterfactual passage requires supported_answer") {
        testutil::write_file(dir / "p.jsonl",
                             R"({"query_id":"q","text":"t","category":"counterfactual"})"
                             "\n");
        CHECK_THROWS_AS(read_jsonl<LabeledPassage>(dir / "p.jsonl"), Error);
    }
    SUBCASE("gold_passage must be gold") {
        json j = to_json(testutil::make_instance(0));
        j["gold_passage"]["category"] = "irrelevant";
        testutil::write_file(dir / "i.jsonl", j.dump() + "\n");
        CHECK_THROWS_AS(read_jsonl<QAInstance>(dir / "i.jsonl"), Error);
    }
    SUBCASE("eval record bounds") {
        testutil::write_file(dir / "r.jsonl", R"({"instance_id":"a","correct":2,"confidence":0.5})"
                                              "\n");
        CHECK_THROWS_AS(read_jsonl<EvalRecord>(dir / "r.jsonl"), Error);
        testutil::write_file(dir / "r2.jsonl", R"({"instance_id":"a","correct":1,"confidence":1.5})"
                                               "\n");
        CHECK_THROWS_AS(read_jsonl<EvalRecord>(dir / "r2.jsonl"), Error);
    }
    SUBCASE("gold_position must index a gold passage") {
        json j = json{{"query_id", "q"},
                      {"passages", json::array({json{{"text", "t"}, {"category", "irrelevant"}}})},
                      {"group_label", "gold_only"},
                      {"gold_position", 0},
                      {"seed", 1}};
        testutil::write_file(dir / "c.jsonl", j.dump() + "\n");
        CHECK_THROWS_AS(read_jsonl<ContextRecord>(dir / "c.jsonl"), Error);
    }
}

namespace {

Passage random_passage(Rng& rng) {
    Passage p;
    switch (rng.uniform_index(6)) {
        case 0: p.category = PassageCategory::Gold; break;
        case 1: p.category = PassageCategory::Counterfactual; break;
        case 2: p.category = PassageCategory::RelevantEntity; break;
        case 3: p.category = PassageCategory::RelevantRelation; break;
        case 4: p.category = PassageCategory::RelevantTheme; break;
        default: p.category = PassageCategory::Irrelevant; break;
    }
    p.text = "passage-" + std::to_string(rng.next_u64() % 100000);
    if (p.category == PassageCategory::Counterfactual) {
        p.supported_answer = "answer-" + std::to_string(rng.next_u64() % 1000);
    }
    if (is_relevant_noise(p.category) && rng.bernoulli(0.5)) {
        p.shared_keywords = std::vector<std::string>{"kw1", "kw2"};
    }
    return p;
}

bool passages_equal(const Passage& a, const Passage& b) {
    return a.text == b.text && a.category == b.category && a.supported_answer == b.supported_answer &&
           a.shared_keywords == b.shared_keywords;
}

}  // namespace

TEST_CASE("serialization round-trip identity over random records") {
    const auto dir = testutil::fresh_dir("jsonl_prop");
    Rng rng(9001);

    std::vector<LabeledPassage> passages;
    for (int i = 0; i < 100; ++i) {
        passages.push_back(LabeledPassage{"q" + std::to_string(i), random_passage(rng)});
    }
    write_jsonl(dir / "p.jsonl", passages);
    auto p_back = read_jsonl<LabeledPassage>(dir / "p.jsonl");
    REQUIRE(p_back.size() == passages.size());
    for (std::size_t i = 0; i < passages.size(); ++i) {
        CHECK(p_back[i].query_id == passages[i].query_id);
        CHECK(passages_equal(p_back[i].passage, passages[i].passage));
    }

    std::vector<EvalRecord> records;
    for (int i = 0; i < 100; ++i) {
        EvalRecord r;
        r.instance_id = "i" + std::to_string(i);
        r.correct = rng.bernoulli(0.5);
        r.confidence = rng.uniform_real();
        r.context_tag = "gold_only";
        r.model_tag = "m";
        records.push_back(r);
    }
    write_jsonl(dir / "r.jsonl", records);
    auto r_back = read_jsonl<EvalRecord>(dir / "r.jsonl");
    REQUIRE(r_back.size() == records.size());
    for (std::size_t i = 0; i < records.size(); ++i) {
        CHECK(r_back[i].instance_id == records[i].instance_id);
        CHECK(r_back[i].correct == records[i].correct);
        CHECK(r_back[i].confidence == records[i].confidence);
    }

    // re-serialize: identical bytes
    write_jsonl(dir / "r_again.jsonl", r_back);
    CHECK(testutil::slurp(dir / "r.jsonl") == testutil::slurp(dir / "r_again.jsonl"));
}

TEST_CASE("write_jsonl needs an existing parent directory") {
    const auto dir = testutil::fresh_dir("jsonl_parent");
    std::vector<EvalRecord> empty;
    CHECK_THROWS_AS(write_jsonl(dir / "no_such" / "out.jsonl", empty), Error);
    write_jsonl(dir / "ok.jsonl", empty);
    CHECK(fs::exists(dir / "ok.jsonl"));
    CHECK(testutil::slurp(dir / "ok.jsonl").empty());
}

TEST_CASE("single record writes one line with a trailing newline") {
    const auto dir = testutil::fresh_dir("jsonl_single");
    EvalRecord r;
    r.instance_id = "a";
    r.correct = 1;
    r.confidence = 0.5;
    write_jsonl(dir / "one.jsonl", std::vector<EvalRecord>{r});
    const std::string content = testutil::slurp(dir / "one.jsonl");
    CHECK(!content.empty());
    CHECK(content.back() == '\n');
    CHECK(std::count(content.begin(), content.end(), '\n') == 1);
}
