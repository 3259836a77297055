#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace hopmix {

std::string trim(std::string_view s);
std::string lower_ascii(std::string_view s);
std::string collapse_whitespace(std::string_view s);

// Lowercase, strip ASCII punctuation, collapse whitespace. Used for answer
// containment and EM/F1.
std::string normalize_answer(std::string_view s);

// Lowercase + collapse whitespace only (punctuation kept). Used by lcs_len.
std::string normalize_light(std::string_view s);

std::vector<std::string> whitespace_tokens(std::string_view s);
std::vector<std::string> lower_tokens(std::string_view s);

// Deterministic rule-based sentence splitter: a sentence ends at terminal
// punctuation (. ! ?) followed by whitespace and an uppercase letter, a digit,
// or a newline. No linguistic smarts; determinism is the contract.
std::vector<std::string> split_sentences(std::string_view text);

}  // namespace hopmix
