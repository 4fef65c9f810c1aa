#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "ragcal/error.hpp"
#include "ragcal/rng.hpp"
#include "ragcal/types.hpp"

namespace ragcal {

struct ReliabilityBin {
    int index = 0;  // 1..M
    double lo = 0.0;
    double hi = 0.0;
    std::size_t count = 0;
    double acc = 0.0;
    double conf = 0.0;
};

struct ConfidenceIntervals {
    double ece_lo = 0.0;
    double ece_hi = 0.0;
    std::optional<double> auroc_lo;
    std::optional<double> auroc_hi;
};

struct CalibrationReport {
    std::size_t n = 0;
    double accuracy = 0.0;
    double avg_confidence = 0.0;
    double ece = 0.0;
    std::optional<double> auroc;  // absent when records are all-correct or all-incorrect
    double brier_mean = 0.0;
    std::vector<ReliabilityBin> bins;
    std::optional<ConfidenceIntervals> ci;
};

struct BootstrapParams {
    int resamples = 1000;
    std::uint64_t seed = 0;
};

// Bin m covers ((m-1)/M, m/M]; bin 1 additionally includes 0. Membership is
// defined by comparisons against the edge doubles, not by the ceil shortcut
// alone.
inline int confidence_bin(double c, int bins) {
    int m = static_cast<int>(std::ceil(c * bins));
    m = std::clamp(m, 1, bins);
    while (m > 1 && c <= static_cast<double>(m - 1) / bins) --m;
    while (m < bins && c > static_cast<double>(m) / bins) ++m;
    return m;
}

inline std::vector<ReliabilityBin> reliability_bins(const std::vector<EvalRecord>& records, int bins) {
    if (bins < 1) throw_data("bin count must be >= 1");
    std::vector<double> sum_conf(static_cast<std::size_t>(bins), 0.0);
    std::vector<double> sum_corr(static_cast<std::size_t>(bins), 0.0);
    std::vector<std::size_t> count(static_cast<std::size_t>(bins), 0);
    for (const auto& r : records) {
        if (r.confidence < 0.0 || r.confidence > 1.0) throw_data("confidence outside [0,1]");
        const int m = confidence_bin(r.confidence, bins);
        sum_conf[static_cast<std::size_t>(m - 1)] += r.confidence;
        sum_corr[static_cast<std::size_t>(m - 1)] += r.correct;
        count[static_cast<std::size_t>(m - 1)] += 1;
    }
    std::vector<ReliabilityBin> out;
    out.reserve(static_cast<std::size_t>(bins));
    for (int m = 1; m <= bins; ++m) {
        ReliabilityBin b;
        b.index = m;
        b.lo = static_cast<double>(m - 1) / bins;
        b.hi = static_cast<double>(m) / bins;
        b.count = count[static_cast<std::size_t>(m - 1)];
        if (b.count > 0) {
            b.acc = sum_corr[static_cast<std::size_t>(m - 1)] / static_cast<double>(b.count);
            b.conf = sum_conf[static_cast<std::size_t>(m - 1)] / static_cast<double>(b.count);
        }
        out.push_back(b);
    }
    return out;
}

// Expected calibration error over M equal-width bins.
inline double ece(const std::vector<EvalRecord>& records, int bins = 10) {
    if (records.empty()) throw_data("ece over empty record set");
    const auto bs = reliability_bins(records, bins);
    double total = 0.0;
    for (const auto& b : bs) {
        if (b.count == 0) continue;
        total += (static_cast<double>(b.count) / static_cast<double>(records.size())) *
                 std::fabs(b.acc - b.conf);
    }
    return total;
}

// Mann-Whitney AUROC with ties counted as half wins. Throws when one class
// is missing; use try_auroc when "n/a" is an acceptable outcome.
inline double auroc(const std::vector<EvalRecord>& records) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& r : records) (r.correct ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) {
        throw_data("auroc undefined: needs at least one correct and one incorrect record");
    }

    // Rank-sum formulation with average ranks for ties.
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].confidence < records[b].confidence;
    });
    std::vector<double> rank(records.size(), 0.0);
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j + 1 < order.size() &&
               records[order[j + 1]].confidence == records[order[i]].confidence) {
            ++j;
        }
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j + 1)) / 2.0;
        for (std::size_t k = i; k <= j; ++k) rank[order[k]] = avg_rank;
        i = j + 1;
    }
    double rank_sum_pos = 0.0;
    for (std::size_t k = 0; k < records.size(); ++k) {
        if (records[k].correct) rank_sum_pos += rank[k];
    }
    const double np = static_cast<double>(n_pos);
    const double nn = static_cast<double>(n_neg);
    const double u = rank_sum_pos - np * (np + 1.0) / 2.0;
    return u / (np * nn);
}

inline std::optional<double> try_auroc(const std::vector<EvalRecord>& records) {
    std::size_t n_pos = 0, n_neg = 0;
    for (const auto& r : records) (r.correct ? n_pos : n_neg) += 1;
    if (n_pos == 0 || n_neg == 0) return std::nullopt;
    return auroc(records);
}

inline double brier(const EvalRecord& r) {
    const double d = r.confidence - static_cast<double>(r.correct);
    return d * d;
}

namespace metrics_detail {

// Linearly interpolated percentile over a sorted sample.
inline double percentile(std::vector<double> values, double q) {
    std::sort(values.begin(), values.end());
    if (values.empty()) return 0.0;
    if (values.size() == 1) return values.front();
    const double pos = q * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const auto hi = static_cast<std::size_t>(std::ceil(pos));
    const double frac = pos - static_cast<double>(lo);
    return values[lo] * (1.0 - frac) + values[hi] * frac;
}

}  // namespace metrics_detail

inline CalibrationReport report(const std::vector<EvalRecord>& records, int bins = 10,
                                std::optional<BootstrapParams> bootstrap = std::nullopt) {
    if (records.empty()) throw_data("report over empty record set");
    CalibrationReport rep;
    rep.n = records.size();
    double sum_corr = 0.0, sum_conf = 0.0, sum_brier = 0.0;
    for (const auto& r : records) {
        sum_corr += r.correct;
        sum_conf += r.confidence;
        sum_brier += brier(r);
    }
    rep.accuracy = sum_corr / static_cast<double>(records.size());
    rep.avg_confidence = sum_conf / static_cast<double>(records.size());
    rep.brier_mean = sum_brier / static_cast<double>(records.size());
    rep.bins = reliability_bins(records, bins);
    rep.ece = ece(records, bins);
    rep.auroc = try_auroc(records);

    if (bootstrap && bootstrap->resamples > 0) {
        Rng rng(bootstrap->seed);
        std::vector<double> eces, aurocs;
        eces.reserve(static_cast<std::size_t>(bootstrap->resamples));
        std::vector<EvalRecord> resample(records.size());
        for (int it = 0; it < bootstrap->resamples; ++it) {
            for (auto& slot : resample) {
                slot = records[static_cast<std::size_t>(rng.uniform_index(records.size()))];
            }
            eces.push_back(ece(resample, bins));
            if (auto a = try_auroc(resample)) aurocs.push_back(*a);
        }
        ConfidenceIntervals ci;
        ci.ece_lo = metrics_detail::percentile(eces, 0.025);
        ci.ece_hi = metrics_detail::percentile(eces, 0.975);
        if (!aurocs.empty()) {
            ci.auroc_lo = metrics_detail::percentile(aurocs, 0.025);
            ci.auroc_hi = metrics_detail::percentile(aurocs, 0.975);
        }
        rep.ci = ci;
    }
    return rep;
}

// Per-setting deltas against the gold-only baseline.
struct SettingDelta {
    double d_ece = 0.0;
    std::optional<double> d_auroc;
    double d_avg_confidence = 0.0;
};

inline std::map<std::string, SettingDelta> compare_settings(
    const std::map<std::string, CalibrationReport>& reports,
    const std::string& baseline_tag = "gold_only") {
    auto base_it = reports.find(baseline_tag);
    if (base_it == reports.end()) {
        throw_data("compare_settings: baseline '" + baseline_tag + "' missing");
    }
    const CalibrationReport& base = base_it->second;
    std::map<std::string, SettingDelta> deltas;
    for (const auto& [tag, rep] : reports) {
        SettingDelta d;
        d.d_ece = rep.ece - base.ece;
        if (rep.auroc && base.auroc) d.d_auroc = *rep.auroc - *base.auroc;
        d.d_avg_confidence = rep.avg_confidence - base.avg_confidence;
        deltas[tag] = d;
    }
    return deltas;
}

// ---------------------------------------------------------------------------
// Serialization
// ---------------------------------------------------------------------------

inline nlohmann::json to_json(const CalibrationReport& rep) {
    nlohmann::json bins = nlohmann::json::array();
    for (const auto& b : rep.bins) {
        bins.push_back(nlohmann::json{{"index", b.index},
                                      {"lo", b.lo},
                                      {"hi", b.hi},
                                      {"count", b.count},
                                      {"acc", b.acc},
                                      {"conf", b.conf}});
    }
    nlohmann::json j{{"n", rep.n},
                     {"accuracy", rep.accuracy},
                     {"avg_confidence", rep.avg_confidence},
                     {"ece", rep.ece},
                     {"auroc", rep.auroc ? nlohmann::json(*rep.auroc) : nlohmann::json()},
                     {"brier_mean", rep.brier_mean},
                     {"bins", bins}};
    if (rep.ci) {
        nlohmann::json ci{{"ece_lo", rep.ci->ece_lo}, {"ece_hi", rep.ci->ece_hi}};
        if (rep.ci->auroc_lo) {
            ci["auroc_lo"] = *rep.ci->auroc_lo;
            ci["auroc_hi"] = *rep.ci->auroc_hi;
        }
        j["ci"] = ci;
    }
    return j;
}

inline std::string bins_csv(const CalibrationReport& rep) {
    std::string out = "bin_lo,bin_hi,count,acc,conf\n";
    for (const auto& b : rep.bins) {
        out += nlohmann::json(b.lo).dump();
        out += ',';
        out += nlohmann::json(b.hi).dump();
        out += ',';
        out += std::to_string(b.count);
        out += ',';
        out += nlohmann::json(b.acc).dump();
        out += ',';
        out += nlohmann::json(b.conf).dump();
        out += '\n';
    }
    return out;
}

}  // namespace ragcal
