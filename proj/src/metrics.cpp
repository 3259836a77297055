#include "hopmix/metrics.hpp"

#include <algorithm>
#include <map>

#include "hopmix/errors.hpp"
#include "hopmix/text.hpp"

namespace hopmix {

double hits_at_1(const std::vector<Prediction>& predictions,
                 const std::unordered_map<std::string, SentenceSet>& gold) {
    if (predictions.empty()) throw ValidationError("hits@1 over no predictions");
    std::size_t hits = 0;
    for (const Prediction& pred : predictions) {
        const auto it = gold.find(pred.query_id);
        if (it == gold.end())
            throw ValidationError("no gold sentences for query id '" +
                                  pred.query_id + "'");
        if (pred.ranked.empty()) continue;  // counts as a miss
        const RankedSentence& top = pred.ranked.front();
        if (it->second.count({top.para, top.sent})) ++hits;
    }
    return static_cast<double>(hits) / static_cast<double>(predictions.size());
}

double evidence_coverage(const std::vector<SentenceSet>& retrieved_sets,
                         const std::vector<SentenceSet>& evidence_sets) {
    if (retrieved_sets.size() != evidence_sets.size())
        throw ValidationError("retrieved/evidence set counts differ");
    if (retrieved_sets.empty())
        throw ValidationError("evidence coverage over no examples");
    std::size_t covered = 0;
    for (std::size_t i = 0; i < retrieved_sets.size(); ++i) {
        if (std::includes(retrieved_sets[i].begin(), retrieved_sets[i].end(),
                          evidence_sets[i].begin(), evidence_sets[i].end()))
            ++covered;
    }
    return static_cast<double>(covered) / static_cast<double>(retrieved_sets.size());
}

std::pair<double, double> strict_accuracy(
    const std::vector<int>& class_preds, const std::vector<int>& class_gold,
    const std::vector<SentenceSet>& retrieved_sets,
    const std::vector<SentenceSet>& evidence_sets) {
    const std::size_t n = class_preds.size();
    if (class_gold.size() != n || retrieved_sets.size() != n ||
        evidence_sets.size() != n)
        throw ValidationError("strict accuracy inputs are not aligned");
    if (n == 0) throw ValidationError("strict accuracy over no examples");
    std::size_t easy = 0, strict = 0;
    for (std::size_t i = 0; i < n; ++i) {
        if (class_preds[i] != class_gold[i]) continue;
        ++easy;
        if (std::includes(retrieved_sets[i].begin(), retrieved_sets[i].end(),
                          evidence_sets[i].begin(), evidence_sets[i].end()))
            ++strict;
    }
    return {static_cast<double>(easy) / static_cast<double>(n),
            static_cast<double>(strict) / static_cast<double>(n)};
}

namespace {

std::pair<double, double> em_f1_single(const std::vector<std::string>& pred_tokens,
                                       const std::vector<std::string>& gold_tokens) {
    if (pred_tokens.empty() && gold_tokens.empty()) return {1.0, 1.0};
    if (pred_tokens.empty() || gold_tokens.empty()) return {0.0, 0.0};
    const double em = pred_tokens == gold_tokens ? 1.0 : 0.0;
    std::map<std::string, int> gold_counts;
    for (const std::string& t : gold_tokens) ++gold_counts[t];
    int common = 0;
    for (const std::string& t : pred_tokens) {
        auto it = gold_counts.find(t);
        if (it != gold_counts.end() && it->second > 0) {
            ++common;
            --it->second;
        }
    }
    if (common == 0) return {em, 0.0};
    const double precision =
        static_cast<double>(common) / static_cast<double>(pred_tokens.size());
    const double recall =
        static_cast<double>(common) / static_cast<double>(gold_tokens.size());
    return {em, 2.0 * precision * recall / (precision + recall)};
}

}  // namespace

std::pair<double, double> em_f1(const std::string& pred_text,
                                const std::vector<std::string>& gold_texts) {
    if (gold_texts.empty()) throw ValidationError("EM/F1 needs at least one gold");
    const auto pred_tokens = whitespace_tokens(normalize_answer(pred_text));
    double best_em = 0.0, best_f1 = 0.0;
    for (const std::string& gold : gold_texts) {
        const auto gold_tokens = whitespace_tokens(normalize_answer(gold));
        const auto [em, f1] = em_f1_single(pred_tokens, gold_tokens);
        best_em = std::max(best_em, em);
        best_f1 = std::max(best_f1, f1);
    }
    return {best_em, best_f1};
}

}  // namespace hopmix
