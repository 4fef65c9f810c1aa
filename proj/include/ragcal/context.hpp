#pragma once

#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "ragcal/error.hpp"
#include "ragcal/parser.hpp"
#include "ragcal/rng.hpp"
#include "ragcal/types.hpp"

namespace ragcal {

// Per-query noise passages, bucketed by coarse category.
struct NoisePool {
    std::vector<Passage> cf;
    std::vector<Passage> rel;  // all three relevant subtypes
    std::vector<Passage> irr;

    void add(const Passage& p) {
        switch (p.category) {
            case PassageCategory::Counterfactual: cf.push_back(p); break;
            case PassageCategory::Irrelevant: irr.push_back(p); break;
            case PassageCategory::Gold: break;  // gold lives on the instance
            default: rel.push_back(p); break;
        }
    }
};

struct GroupConfig {
    GroupKind kind = GroupKind::Counterfactual;
    int k = 3;
    std::int64_t seed = 0;
};

namespace context_detail {

inline std::optional<int> locate_gold(const std::vector<Passage>& passages) {
    std::optional<int> pos;
    int golds = 0;
    for (std::size_t i = 0; i < passages.size(); ++i) {
        if (passages[i].category == PassageCategory::Gold) {
            ++golds;
            pos = static_cast<int>(i);
        }
    }
    if (golds != 1) return std::nullopt;
    return pos;
}

inline std::vector<Passage> pick(const std::vector<Passage>& pool, std::size_t m, Rng& rng) {
    std::vector<Passage> out;
    for (std::size_t idx : rng.sample_indices(pool.size(), m)) out.push_back(pool[idx]);
    return out;
}

}  // namespace context_detail

// Seeded uniform permutation of the passages; group label untouched,
// gold_position recomputed.
inline RetrievalContext shuffle_positions(RetrievalContext context, std::int64_t seed) {
    Rng rng = Rng(static_cast<std::uint64_t>(seed)).derive("shuffle");
    rng.shuffle(context.passages);
    context.gold_position = context_detail::locate_gold(context.passages);
    context.seed = seed;
    return context;
}

// Moves the unique gold passage to `position`, keeping the relative order of
// the other passages.
inline RetrievalContext place_gold_at(RetrievalContext context, int position) {
    auto gold = context_detail::locate_gold(context.passages);
    if (!gold) throw_data("place_gold_at: context must contain exactly one gold passage");
    if (position < 0 || position >= static_cast<int>(context.passages.size())) {
        throw_data("place_gold_at: position " + std::to_string(position) + " out of range");
    }
    Passage gold_passage = context.passages[static_cast<std::size_t>(*gold)];
    context.passages.erase(context.passages.begin() + *gold);
    context.passages.insert(context.passages.begin() + position, gold_passage);
    context.gold_position = position;
    return context;
}

// Controlled analysis settings: gold-only, or gold plus two same-category
// noise passages, order randomized.
inline RetrievalContext build_controlled_setting(const QAInstance& instance, const NoisePool& pool,
                                                 ControlledSetting setting, std::int64_t seed) {
    RetrievalContext context;
    context.query_id = instance.id;
    context.group_label = to_string(setting);
    context.seed = seed;

    if (setting == ControlledSetting::GoldOnly) {
        context.passages = {instance.gold_passage};
        context.gold_position = 0;
        return context;
    }

    const std::vector<Passage>* source = nullptr;
    const char* category = "";
    switch (setting) {
        case ControlledSetting::GoldPlusCf: source = &pool.cf; category = "counterfactual"; break;
        case ControlledSetting::GoldPlusRel: source = &pool.rel; category = "relevant"; break;
        case ControlledSetting::GoldPlusIrr: source = &pool.irr; category = "irrelevant"; break;
        default: break;
    }
    if (source->size() < 2) {
        throw_data("insufficient " + std::string(category) + " passages for " +
                   to_string(setting) + ": need 2, have " + std::to_string(source->size()));
    }
    Rng rng = Rng(static_cast<std::uint64_t>(seed)).derive("sample");
    context.passages = {instance.gold_passage};
    for (auto& p : context_detail::pick(*source, 2, rng)) context.passages.push_back(std::move(p));
    return shuffle_positions(std::move(context), seed);
}

// Training passage groups:
//   counterfactual: gold + >=1 cf, remaining slots from cf/rel/irr
//   consistent:     gold + (k-1) from rel/irr, no cf
//   irrelevant:     k from rel/irr, no gold, no cf
inline RetrievalContext build_group(const QAInstance& instance, const NoisePool& pool,
                                   const GroupConfig& config) {
    if (config.k < 1) throw_data("build_group: k must be >= 1");
    if (config.kind == GroupKind::Counterfactual && config.k < 2) {
        throw_data("build_group: counterfactual group needs k >= 2");
    }
    Rng rng = Rng(static_cast<std::uint64_t>(config.seed)).derive("sample");

    RetrievalContext context;
    context.query_id = instance.id;
    context.group_label = to_string(config.kind);
    context.seed = config.seed;

    std::vector<Passage> filler = pool.rel;
    filler.insert(filler.end(), pool.irr.begin(), pool.irr.end());

    switch (config.kind) {
        case GroupKind::Counterfactual: {
            if (pool.cf.empty()) {
                throw_data("insufficient counterfactual passages for group: need 1, have 0");
            }
            context.passages = {instance.gold_passage};
            auto cf_indices = rng.sample_indices(pool.cf.size(), 1);
            context.passages.push_back(pool.cf[cf_indices[0]]);
            // remaining slots mix leftover cf with rel/irr noise
            std::vector<Passage> rest;
            for (std::size_t i = 0; i < pool.cf.size(); ++i) {
                if (i != cf_indices[0]) rest.push_back(pool.cf[i]);
            }
            rest.insert(rest.end(), filler.begin(), filler.end());
            const std::size_t need = static_cast<std::size_t>(config.k) - 2;
            if (rest.size() < need) {
                throw_data("insufficient noise passages for counterfactual group: need " +
                           std::to_string(need) + ", have " + std::to_string(rest.size()));
            }
            for (auto& p : context_detail::pick(rest, need, rng)) context.passages.push_back(std::move(p));
            break;
        }
        case GroupKind::Consistent: {
            const std::size_t need = static_cast<std::size_t>(config.k) - 1;
            if (filler.size() < need) {
                throw_data("insufficient relevant/irrelevant passages for consistent group: need " +
                           std::to_string(need) + ", have " + std::to_string(filler.size()));
            }
            context.passages = {instance.gold_passage};
            for (auto& p : context_detail::pick(filler, need, rng)) context.passages.push_back(std::move(p));
            break;
        }
        case GroupKind::Irrelevant: {
            const std::size_t need = static_cast<std::size_t>(config.k);
            if (filler.size() < need) {
                throw_data("insufficient relevant/irrelevant passages for irrelevant group: need " +
                           std::to_string(need) + ", have " + std::to_string(filler.size()));
            }
            for (auto& p : context_detail::pick(filler, need, rng)) context.passages.push_back(std::move(p));
            break;
        }
    }
    return shuffle_positions(std::move(context), config.seed);
}

// Ground truth for the judgment filter: gold and counterfactual passages are
// highly relevant regardless of which answer they push; the group verdict
// compares the normalized answers the highly-relevant passages support.
inline GroundTruthJudgments derive_gt_judgments(const RetrievalContext& context,
                                                const QAInstance& instance) {
    GroundTruthJudgments gt;
    std::set<std::string> hr_answers;
    int hr_count = 0;
    for (const auto& p : context.passages) {
        switch (p.category) {
            case PassageCategory::Gold:
                gt.per_passage.push_back(PassageJudgment::HighlyRelevant);
                hr_answers.insert(normalize_answer(instance.gold_answer));
                ++hr_count;
                break;
            case PassageCategory::Counterfactual:
                if (!p.supported_answer) throw_data("counterfactual passage without supported_answer");
                gt.per_passage.push_back(PassageJudgment::HighlyRelevant);
                hr_answers.insert(normalize_answer(*p.supported_answer));
                ++hr_count;
                break;
            case PassageCategory::Irrelevant:
                gt.per_passage.push_back(PassageJudgment::Irrelevant);
                break;
            default:
                gt.per_passage.push_back(PassageJudgment::Relevant);
                break;
        }
    }
    if (hr_count == 0) {
        gt.group = GroupJudgment::NoAnswer;
    } else if (hr_answers.size() > 1) {
        gt.group = GroupJudgment::Contradictory;
    } else {
        gt.group = GroupJudgment::ConsistentAnswer;
    }
    return gt;
}

// Downsamples every label to the minority label size by seeded uniform
// sampling, keeping the original relative order. Idempotent.
inline std::vector<RetrievalContext> balance_classes(
    const std::vector<RetrievalContext>& contexts, std::int64_t seed,
    const std::vector<std::string>& required_labels = {}) {
    if (contexts.empty()) throw_data("balance_classes: no contexts");
    std::map<std::string, std::vector<std::size_t>> by_label;
    for (std::size_t i = 0; i < contexts.size(); ++i) {
        by_label[contexts[i].group_label].push_back(i);
    }
    for (const auto& label : required_labels) {
        if (by_label.find(label) == by_label.end()) {
            throw_data("balance_classes: group '" + label + "' is empty");
        }
    }
    std::size_t minority = contexts.size();
    for (const auto& [label, idx] : by_label) minority = std::min(minority, idx.size());

    std::vector<bool> keep(contexts.size(), false);
    Rng base(static_cast<std::uint64_t>(seed));
    for (const auto& [label, idx] : by_label) {
        Rng rng = base.derive(label);
        for (std::size_t chosen : rng.sample_indices(idx.size(), minority)) {
            keep[idx[chosen]] = true;
        }
    }
    std::vector<RetrievalContext> out;
    out.reserve(minority * by_label.size());
    for (std::size_t i = 0; i < contexts.size(); ++i) {
        if (keep[i]) out.push_back(contexts[i]);
    }
    return out;
}

// Contexts read from external files may violate the composition rules
// (a counterfactual passage without any gold); callers warn rather than fail.
inline bool context_composition_ok(const RetrievalContext& context) {
    bool has_gold = false, has_cf = false;
    for (const auto& p : context.passages) {
        has_gold |= p.category == PassageCategory::Gold;
        has_cf |= p.category == PassageCategory::Counterfactual;
    }
    return !(has_cf && !has_gold);
}

}  // namespace ragcal
