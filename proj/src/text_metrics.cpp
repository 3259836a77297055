#include "hopmix/text_metrics.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "hopmix/errors.hpp"
#include "hopmix/text.hpp"

namespace hopmix {

namespace {

// n-gram counts keyed by the joined token span; '\x1f' never appears in tokens
// split on whitespace.
std::map<std::string, int> ngram_counts(const std::vector<std::string>& tokens,
                                        int n) {
    std::map<std::string, int> counts;
    if (static_cast<int>(tokens.size()) < n) return counts;
    for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
        std::string key = tokens[i];
        for (int j = 1; j < n; ++j) {
            key.push_back('\x1f');
            key += tokens[i + static_cast<std::size_t>(j)];
        }
        ++counts[key];
    }
    return counts;
}

}  // namespace

double bleu_no_bp(const std::vector<std::string>& candidate,
                  const std::vector<std::string>& reference, int max_n) {
    if (candidate.empty() || reference.empty())
        throw ValidationError("BLEU over empty token list");
    if (max_n < 1) throw ValidationError("BLEU max_n must be >= 1");

    const int top = std::min<int>(max_n, static_cast<int>(candidate.size()));
    double log_sum = 0.0;
    for (int n = 1; n <= top; ++n) {
        const auto cand = ngram_counts(candidate, n);
        const auto ref = ngram_counts(reference, n);
        long matched = 0;
        long total = 0;
        for (const auto& [gram, count] : cand) {
            total += count;
            auto it = ref.find(gram);
            if (it != ref.end()) matched += std::min(count, it->second);
        }
        if (matched == 0) return 0.0;
        log_sum += std::log(static_cast<double>(matched) / static_cast<double>(total));
    }
    return std::exp(log_sum / top);
}

int edit_distance(const std::vector<std::string>& a,
                  const std::vector<std::string>& b) {
    const std::size_t m = a.size(), n = b.size();
    std::vector<int> prev(n + 1), cur(n + 1);
    std::iota(prev.begin(), prev.end(), 0);
    for (std::size_t i = 1; i <= m; ++i) {
        cur[0] = static_cast<int>(i);
        for (std::size_t j = 1; j <= n; ++j) {
            const int sub = prev[j - 1] + (a[i - 1] == b[j - 1] ? 0 : 1);
            cur[j] = std::min({prev[j] + 1, cur[j - 1] + 1, sub});
        }
        std::swap(prev, cur);
    }
    return prev[n];
}

int lcs_len(std::string_view a, std::string_view b) {
    const std::string na = normalize_light(a);
    const std::string nb = normalize_light(b);
    if (na.empty() || nb.empty()) return 0;
    std::vector<int> prev(nb.size() + 1, 0), cur(nb.size() + 1, 0);
    int best = 0;
    for (std::size_t i = 1; i <= na.size(); ++i) {
        for (std::size_t j = 1; j <= nb.size(); ++j) {
            if (na[i - 1] == nb[j - 1]) {
                cur[j] = prev[j - 1] + 1;
                best = std::max(best, cur[j]);
            } else {
                cur[j] = 0;
            }
        }
        std::swap(prev, cur);
    }
    return best;
}

}  // namespace hopmix
