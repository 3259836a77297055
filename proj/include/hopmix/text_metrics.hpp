#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hopmix {

// Geometric mean of modified n-gram precisions for n = 1..min(max_n, |candidate|),
// with the brevity penalty deliberately dropped. Plain (unsmoothed) mean: a zero
// precision at any order gives 0. Throws on empty inputs.
double bleu_no_bp(const std::vector<std::string>& candidate,
                  const std::vector<std::string>& reference, int max_n = 4);

// Unit-cost Levenshtein distance over token lists.
int edit_distance(const std::vector<std::string>& a,
                  const std::vector<std::string>& b);

// Length of the longest contiguous common substring, character level, computed
// on lowercased / whitespace-collapsed copies of both inputs.
int lcs_len(std::string_view a, std::string_view b);

}  // namespace hopmix
