#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace hopmix {

struct RankedSentence {
    std::int32_t para;
    std::int32_t sent;
    double score;
};

struct Prediction {
    std::string query_id;
    std::vector<RankedSentence> ranked;
    std::optional<int> class_idx;
    std::optional<std::array<double, 4>> class_probs;
};

using SentenceSet = std::set<std::pair<std::int32_t, std::int32_t>>;

// Only the fields a given evaluation produced are set.
struct MetricReport {
    std::optional<double> hits_at_1;
    std::optional<double> evidence_coverage;
    std::optional<double> em;
    std::optional<double> f1;
    std::optional<double> easy_acc;
    std::optional<double> strict_acc;
    std::optional<double> throughput_qps;
};

// Fraction of predictions whose top-ranked sentence is one of the gold
// sentences for that query id.
double hits_at_1(const std::vector<Prediction>& predictions,
                 const std::unordered_map<std::string, SentenceSet>& gold);

// Fraction of examples whose evidence set is contained in the retrieved set.
double evidence_coverage(const std::vector<SentenceSet>& retrieved_sets,
                         const std::vector<SentenceSet>& evidence_sets);

// easy = class-match rate; strict = rate of class match AND evidence subset.
std::pair<double, double> strict_accuracy(
    const std::vector<int>& class_preds, const std::vector<int>& class_gold,
    const std::vector<SentenceSet>& retrieved_sets,
    const std::vector<SentenceSet>& evidence_sets);

// SQuAD-style normalized exact match and token F1, max over gold answers.
std::pair<double, double> em_f1(const std::string& pred_text,
                                const std::vector<std::string>& gold_texts);

}  // namespace hopmix
