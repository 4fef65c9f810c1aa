#include <filesystem>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "ragcal/context.hpp"
#include "ragcal/jsonl.hpp"
#include "ragcal/prompts.hpp"

using namespace ragcal;
namespace fs = std::filesystem;

TEST_CASE("embedded templates are byte-identical to the prompt asset files") {
    const fs::path dir = fs::path(RAGCAL_SOURCE_DIR) / "prompts";
    for (const auto& [name, body] : builtin_templates()) {
        const fs::path file = dir / (name + ".txt");
        const std::string label = "asset drift: " + name;
        REQUIRE_MESSAGE(fs::exists(file), file.string());
        CHECK_MESSAGE(read_text(file) == body, label);
    }
}

TEST_CASE("the response-format line is present verbatim in the direct prompts") {
    const std::string line = "Confidence: [Your confidence score between 0% - 100%]";
    CHECK(get_template("vanilla").body.find(line) != std::string::npos);
    CHECK(get_template("cot").body.find(line) != std::string::npos);
    CHECK(get_template("cot").body.find("Analyze step by step") != std::string::npos);
    CHECK(get_template("noise_aware").body.find(line) != std::string::npos);
    // the rules prompt leaves the response format open
    CHECK(get_template("rules").body.find(line) == std::string::npos);
    CHECK(get_template("rules").body.find("follow the rules above") != std::string::npos);
}

TEST_CASE("unknown template names are usage errors") {
    CHECK_THROWS_AS(get_template("chain_of_thought"), Error);
}

TEST_CASE("rendering fails when a placeholder stays unfilled") {
    const auto inst = testutil::make_instance(1);
    try {
        render_prompt(get_template("vanilla"), inst);  // no context given
        FAIL("expected error");
    } catch (const Error& e) {
        CHECK(std::string(e.what()).find("retrieved passages") != std::string::npos);
    }
}

TEST_CASE("passages render as a numbered list in order") {
    const auto inst = testutil::make_instance(2);
    const auto pool = testutil::make_pool(inst, 0, 2, 0);
    RetrievalContext ctx;
    ctx.query_id = inst.id;
    ctx.group_label = "consistent";
    ctx.passages = {inst.gold_passage, pool.rel[0], pool.rel[1]};

    const std::string text = render_prompt(get_template("cot"), inst, ctx);
    CHECK(text.find("1. " + inst.gold_passage.text) != std::string::npos);
    CHECK(text.find("2. " + pool.rel[0].text) != std::string::npos);
    CHECK(text.find("3. " + pool.rel[1].text) != std::string::npos);
    CHECK(text.find("Question: " + inst.question) != std::string::npos);
    CHECK(text.find('{') == std::string::npos);
}

TEST_CASE("rendering is deterministic and order-sensitive") {
    const auto inst = testutil::make_instance(3);
    const auto pool = testutil::make_pool(inst, 0, 2, 0);
    RetrievalContext a;
    a.query_id = inst.id;
    a.group_label = "consistent";
    a.passages = {inst.gold_passage, pool.rel[0], pool.rel[1]};
    RetrievalContext b = a;
    std::swap(b.passages[0], b.passages[2]);

    const auto tmpl = get_template("vanilla");
    CHECK(render_prompt(tmpl, inst, a) == render_prompt(tmpl, inst, a));
    CHECK(render_prompt(tmpl, inst, a) != render_prompt(tmpl, inst, b));
}

TEST_CASE("noise-generation length placeholders derive from the gold passage") {
    QAInstance inst = testutil::make_instance(4);
    // exactly 4 sentences, 80 words: 20 words per sentence
    std::string text;
    for (int s = 0; s < 4; ++s) {
        for (int w = 0; w < 20; ++w) {
            text += "word" + std::to_string(s * 20 + w);
            text += (w == 19) ? "." : " ";
        }
        if (s < 3) text += " ";
    }
    inst.gold_passage.text = text;

    const std::string rendered = render_prompt(get_template("noisegen_cf"), inst);
    CHECK(rendered.find("Be 4 sentences long, 20 words each") != std::string::npos);
    CHECK(rendered.find("Question: " + inst.question) != std::string::npos);
    CHECK(rendered.find("Ground truth answer: " + inst.gold_answer) != std::string::npos);
}

TEST_CASE("irr noise template carries the gt passage and p_true the proposed answer") {
    const auto inst = testutil::make_instance(5);
    const std::string irr = render_prompt(get_template("noisegen_irr"), inst);
    CHECK(irr.find("Ground truth passage: " + inst.gold_passage.text) != std::string::npos);

    RetrievalContext ctx;
    ctx.query_id = inst.id;
    ctx.group_label = "gold_only";
    ctx.passages = {inst.gold_passage};
    const std::string pt =
        render_prompt(get_template("p_true"), inst, ctx, {{"proposed_answer", "Aster Spire 5"}});
    CHECK(pt.find("Proposed Answer: Aster Spire 5") != std::string::npos);
}

TEST_CASE("noise prompts request five candidates for cf/rel and three for irr") {
    CHECK(get_template("noisegen_cf").body.find("exactly 5 counterfactual passages") !=
          std::string::npos);
    CHECK(get_template("noisegen_rel").body.find("exactly 5 relevant noise passages") !=
          std::string::npos);
    CHECK(get_template("noisegen_irr").body.find("exactly 3 consistent passages") !=
          std::string::npos);
}
