#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "doctest.h"
#include "helpers.hpp"
#include "ragcal/context.hpp"

using namespace ragcal;

namespace {

std::multiset<std::string> passage_texts(const RetrievalContext& ctx) {
    std::multiset<std::string> out;
    for (const auto& p : ctx.passages) out.insert(p.text);
    return out;
}

}  // namespace

TEST_CASE("gold-only setting is exactly the gold passage") {
    const auto inst = testutil::make_instance(1);
    const auto ctx = build_controlled_setting(inst, {}, ControlledSetting::GoldOnly, 9);
    REQUIRE(ctx.passages.size() == 1);
    CHECK(ctx.passages[0].category == PassageCategory::Gold);
    CHECK(ctx.group_label == "gold_only");
    CHECK(ctx.gold_position == 0);
}

TEST_CASE("gold+cf with a pool of exactly two is forced") {
    const auto inst = testutil::make_instance(2);
    const auto pool = testutil::make_pool(inst, 2, 0, 0);
    const auto ctx = build_controlled_setting(inst, pool, ControlledSetting::GoldPlusCf, 4);
    REQUIRE(ctx.passages.size() == 3);
    std::multiset<std::string> expected{inst.gold_passage.text, pool.cf[0].text, pool.cf[1].text};
    CHECK(passage_texts(ctx) == expected);
    CHECK(ctx.group_label == "gold_plus_cf");
}

TEST_CASE("gold+rel sampling repeats under a fixed seed") {
    const auto inst = testutil::make_instance(3);
    const auto pool = testutil::make_pool(inst, 0, 5, 0);
    const auto a = build_controlled_setting(inst, pool, ControlledSetting::GoldPlusRel, 42);
    const auto b = build_controlled_setting(inst, pool, ControlledSetting::GoldPlusRel, 42);
    CHECK(passage_texts(a) == passage_texts(b));
    for (std::size_t i = 0; i < a.passages.size(); ++i) {
        CHECK(a.passages[i].text == b.passages[i].text);  // order too
    }
}

TEST_CASE("insufficient noise pools name the category and shortfall") {
    const auto inst = testutil::make_instance(4);
    const auto pool = testutil::make_pool(inst, 1, 0, 0);
    CHECK_THROWS_WITH_AS(build_controlled_setting(inst, pool, ControlledSetting::GoldPlusCf, 1),
                         doctest::Contains("counterfactual"), Error);
    CHECK_THROWS_WITH_AS(build_controlled_setting(inst, pool, ControlledSetting::GoldPlusIrr, 1),
                         doctest::Contains("need 2, have 0"), Error);
}

TEST_CASE("consistent group with a forced pool") {
    const auto inst = testutil::make_instance(5);
    const auto pool = testutil::make_pool(inst, 0, 1, 1);
    const auto ctx = build_group(inst, pool, GroupConfig{GroupKind::Consistent, 3, 7});
    REQUIRE(ctx.passages.size() == 3);
    std::multiset<std::string> expected{inst.gold_passage.text, pool.rel[0].text, pool.irr[0].text};
    CHECK(passage_texts(ctx) == expected);
    CHECK(ctx.group_label == "consistent");
}

TEST_CASE("irrelevant group never selects counterfactual or gold passages") {
    const auto inst = testutil::make_instance(6);
    const auto pool = testutil::make_pool(inst, 3, 2, 2);
    for (int seed = 0; seed < 50; ++seed) {
        const auto ctx = build_group(inst, pool, GroupConfig{GroupKind::Irrelevant, 3, seed});
        REQUIRE(ctx.passages.size() == 3);
        for (const auto& p : ctx.passages) {
            CHECK(p.category != PassageCategory::Counterfactual);
            CHECK(p.category != PassageCategory::Gold);
        }
    }
}

TEST_CASE("counterfactual groups always contain gold and at least one cf") {
    const auto inst = testutil::make_instance(7);
    const auto pool = testutil::make_pool(inst, 3, 2, 2);
    for (int seed = 0; seed < 200; ++seed) {
        const auto ctx = build_group(inst, pool, GroupConfig{GroupKind::Counterfactual, 3, seed});
        REQUIRE(ctx.passages.size() == 3);
        int golds = 0, cfs = 0;
        for (const auto& p : ctx.passages) {
            golds += p.category == PassageCategory::Gold;
            cfs += p.category == PassageCategory::Counterfactual;
        }
        CHECK(golds == 1);
        CHECK(cfs >= 1);
    }
    CHECK_THROWS_AS(build_group(inst, pool, GroupConfig{GroupKind::Counterfactual, 1, 0}), Error);
    CHECK_THROWS_AS(
        build_group(inst, testutil::make_pool(inst, 0, 2, 2), GroupConfig{GroupKind::Counterfactual, 3, 0}),
        Error);
}

TEST_CASE("group output length always equals k") {
    const auto inst = testutil::make_instance(8);
    const auto pool = testutil::make_pool(inst, 4, 4, 4);
    for (int k = 2; k <= 5; ++k) {
        for (auto kind : {GroupKind::Counterfactual, GroupKind::Consistent, GroupKind::Irrelevant}) {
            const auto ctx = build_group(inst, pool, GroupConfig{kind, k, 3 * k});
            CHECK(ctx.passages.size() == static_cast<std::size_t>(k));
        }
    }
}

TEST_CASE("shuffle_positions basics") {
    const auto inst = testutil::make_instance(9);
    SUBCASE("length-1 context is unchanged") {
        auto ctx = build_controlled_setting(inst, {}, ControlledSetting::GoldOnly, 1);
        const auto shuffled = shuffle_positions(ctx, 99);
        CHECK(shuffled.passages.size() == 1);
        CHECK(shuffled.gold_position == 0);
    }
    SUBCASE("same seed gives the identical permutation") {
        const auto pool = testutil::make_pool(inst, 2, 2, 2);
        auto ctx = build_controlled_setting(inst, pool, ControlledSetting::GoldPlusRel, 5);
        const auto a = shuffle_positions(ctx, 31);
        const auto b = shuffle_positions(ctx, 31);
        for (std::size_t i = 0; i < a.passages.size(); ++i) {
            CHECK(a.passages[i].text == b.passages[i].text);
        }
    }
    SUBCASE("gold_position tracks the gold passage") {
        const auto pool = testutil::make_pool(inst, 2, 2, 2);
        for (int seed = 0; seed < 30; ++seed) {
            const auto ctx = build_controlled_setting(inst, pool, ControlledSetting::GoldPlusIrr, seed);
            REQUIRE(ctx.gold_position.has_value());
            CHECK(ctx.passages[static_cast<std::size_t>(*ctx.gold_position)].category ==
                  PassageCategory::Gold);
        }
    }
}

TEST_CASE("10k length-3 shuffles hit each permutation at 1/6 within 0.02") {
    RetrievalContext ctx;
    ctx.query_id = "q";
    ctx.group_label = "consistent";
    for (int i = 0; i < 3; ++i) {
        Passage p;
        p.category = PassageCategory::Irrelevant;
        p.text = std::to_string(i);
        ctx.passages.push_back(p);
    }
    std::map<std::string, int> freq;
    const int trials = 10000;
    for (int seed = 0; seed < trials; ++seed) {
        const auto shuffled = shuffle_positions(ctx, seed);
        std::string key;
        for (const auto& p : shuffled.passages) key += p.text;
        freq[key] += 1;
    }
    CHECK(freq.size() == 6);
    for (const auto& [_, count] : freq) {
        const double f = static_cast<double>(count) / trials;
        CHECK(std::fabs(f - 1.0 / 6.0) < 0.02);
    }
}

TEST_CASE("place_gold_at moves gold and keeps the rest in relative order") {
    const auto inst = testutil::make_instance(10);
    const auto pool = testutil::make_pool(inst, 0, 2, 2);
    auto ctx = build_controlled_setting(inst, pool, ControlledSetting::GoldPlusRel, 8);

    SUBCASE("identity when already in place") {
        const auto moved = place_gold_at(place_gold_at(ctx, 0), 0);
        CHECK(moved.gold_position == 0);
        CHECK(moved.passages[0].category == PassageCategory::Gold);
    }
    SUBCASE("forced example: [n1, gold, n2] to position 2") {
        auto at1 = place_gold_at(ctx, 1);
        const std::string n1 = at1.passages[0].text;
        const std::string n2 = at1.passages[2].text;
        const auto at2 = place_gold_at(at1, 2);
        CHECK(at2.passages[0].text == n1);
        CHECK(at2.passages[1].text == n2);
        CHECK(at2.passages[2].category == PassageCategory::Gold);
    }
    SUBCASE("loop over positions") {
        for (int pos = 0; pos < 3; ++pos) {
            const auto moved = place_gold_at(ctx, pos);
            CHECK(moved.gold_position == pos);
        }
    }
    SUBCASE("errors") {
        CHECK_THROWS_AS(place_gold_at(ctx, 3), Error);
        RetrievalContext no_gold;
        no_gold.query_id = "x";
        no_gold.group_label = "irrelevant";
        Passage p;
        p.category = PassageCategory::Irrelevant;
        p.text = "t";
        no_gold.passages = {p};
        CHECK_THROWS_AS(place_gold_at(no_gold, 0), Error);
    }
}

TEST_CASE("derive_gt_judgments category map and group rules") {
    const auto inst = testutil::make_instance(11);
    const auto pool = testutil::make_pool(inst, 2, 2, 2);

    SUBCASE("gold + rel + irr is consistent") {
        RetrievalContext ctx;
        ctx.query_id = inst.id;
        ctx.group_label = "consistent";
        ctx.passages = {inst.gold_passage, pool.rel[0], pool.irr[0]};
        const auto gt = derive_gt_judgments(ctx, inst);
        CHECK(gt.per_passage == std::vector<PassageJudgment>{PassageJudgment::HighlyRelevant,
                                                             PassageJudgment::Relevant,
                                                             PassageJudgment::Irrelevant});
        CHECK(gt.group == GroupJudgment::ConsistentAnswer);
    }
    SUBCASE("gold + cf is contradictory") {
        RetrievalContext ctx;
        ctx.query_id = inst.id;
        ctx.group_label = "counterfactual";
        ctx.passages = {inst.gold_passage, pool.cf[0], pool.irr[0]};
        const auto gt = derive_gt_judgments(ctx, inst);
        CHECK(gt.per_passage[0] == PassageJudgment::HighlyRelevant);
        CHECK(gt.per_passage[1] == PassageJudgment::HighlyRelevant);
        CHECK(gt.per_passage[2] == PassageJudgment::Irrelevant);
        CHECK(gt.group == GroupJudgment::Contradictory);
    }
    SUBCASE("rel + rel + irr has no answer") {
        RetrievalContext ctx;
        ctx.query_id = inst.id;
        ctx.group_label = "irrelevant";
        ctx.passages = {pool.rel[0], pool.rel[1], pool.irr[0]};
        const auto gt = derive_gt_judgments(ctx, inst);
        CHECK(gt.group == GroupJudgment::NoAnswer);
    }
    SUBCASE("two passages supporting the same answer are consistent") {
        Passage cf_same = pool.cf[0];
        cf_same.supported_answer = inst.gold_answer;  // agrees with gold
        RetrievalContext ctx;
        ctx.query_id = inst.id;
        ctx.group_label = "consistent";
        ctx.passages = {inst.gold_passage, cf_same};
        CHECK(derive_gt_judgments(ctx, inst).group == GroupJudgment::ConsistentAnswer);
    }
}

TEST_CASE("gt judgments are permutation-equivariant; group label shuffle-invariant") {
    const auto inst = testutil::make_instance(12);
    const auto pool = testutil::make_pool(inst, 2, 2, 2);
    const auto base = build_group(inst, pool, GroupConfig{GroupKind::Counterfactual, 3, 5});
    const auto base_gt = derive_gt_judgments(base, inst);
    for (int seed = 100; seed < 130; ++seed) {
        const auto shuffled = shuffle_positions(base, seed);
        CHECK(shuffled.group_label == base.group_label);
        const auto gt = derive_gt_judgments(shuffled, inst);
        CHECK(gt.group == base_gt.group);
        // the multiset of labels is preserved and tracks passage categories
        for (std::size_t i = 0; i < shuffled.passages.size(); ++i) {
            const auto cat = shuffled.passages[i].category;
            const auto expected = cat == PassageCategory::Gold || cat == PassageCategory::Counterfactual
                                      ? PassageJudgment::HighlyRelevant
                                  : cat == PassageCategory::Irrelevant ? PassageJudgment::Irrelevant
                                                                       : PassageJudgment::Relevant;
            CHECK(gt.per_passage[i] == expected);
        }
    }
}

TEST_CASE("balance_classes downsamples to the minority class") {
    auto make_ctx = [](const std::string& id, const std::string& label) {
        RetrievalContext ctx;
        ctx.query_id = id;
        ctx.group_label = label;
        return ctx;
    };
    std::vector<RetrievalContext> contexts;
    for (int i = 0; i < 5; ++i) contexts.push_back(make_ctx("cf" + std::to_string(i), "counterfactual"));
    for (int i = 0; i < 9; ++i) contexts.push_back(make_ctx("co" + std::to_string(i), "consistent"));
    for (int i = 0; i < 3; ++i) contexts.push_back(make_ctx("ir" + std::to_string(i), "irrelevant"));

    const auto balanced = balance_classes(contexts, 17);
    CHECK(balanced.size() == 9);
    std::map<std::string, int> counts;
    for (const auto& c : balanced) counts[c.group_label] += 1;
    CHECK(counts["counterfactual"] == 3);
    CHECK(counts["consistent"] == 3);
    CHECK(counts["irrelevant"] == 3);

    // survivors keep their original relative order
    std::vector<std::string> kept_ids;
    for (const auto& c : balanced) kept_ids.push_back(c.query_id);
    std::vector<std::string> filtered;
    for (const auto& c : contexts) {
        if (std::find(kept_ids.begin(), kept_ids.end(), c.query_id) != kept_ids.end()) {
            filtered.push_back(c.query_id);
        }
    }
    CHECK(kept_ids == filtered);

    // idempotence
    const auto again = balance_classes(balanced, 17);
    REQUIRE(again.size() == balanced.size());
    for (std::size_t i = 0; i < again.size(); ++i) CHECK(again[i].query_id == balanced[i].query_id);

    // equal counts stay untouched
    std::vector<RetrievalContext> equal;
    for (int i = 0; i < 4; ++i) {
        equal.push_back(make_ctx("a" + std::to_string(i), "counterfactual"));
        equal.push_back(make_ctx("b" + std::to_string(i), "consistent"));
        equal.push_back(make_ctx("c" + std::to_string(i), "irrelevant"));
    }
    CHECK(balance_classes(equal, 3).size() == equal.size());

    // required labels
    std::vector<RetrievalContext> missing{make_ctx("x", "counterfactual"), make_ctx("y", "consistent")};
    CHECK_THROWS_WITH_AS(balance_classes(missing, 1, {"counterfactual", "consistent", "irrelevant"}),
                         doctest::Contains("irrelevant"), Error);
    CHECK_THROWS_AS(balance_classes({}, 1), Error);
}

TEST_CASE("context composition check flags cf-without-gold") {
    const auto inst = testutil::make_instance(13);
    const auto pool = testutil::make_pool(inst, 1, 1, 1);
    RetrievalContext bad;
    bad.query_id = inst.id;
    bad.group_label = "irrelevant";
    bad.passages = {pool.cf[0], pool.irr[0]};
    CHECK(!context_composition_ok(bad));
    RetrievalContext ok = bad;
    ok.passages.push_back(inst.gold_passage);
    CHECK(context_composition_ok(ok));
}
