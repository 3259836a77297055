#include "hopmix/text.hpp"

#include <cctype>

namespace hopmix {

namespace {
inline bool is_space(unsigned char c) { return std::isspace(c) != 0; }
inline bool is_punct(unsigned char c) { return std::ispunct(c) != 0; }
}  // namespace

std::string trim(std::string_view s) {
    std::size_t b = 0, e = s.size();
    while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::string lower_ascii(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

std::string collapse_whitespace(std::string_view s) {
    std::string out;
    out.reserve(s.size());
    bool in_ws = false;
    for (char c : s) {
        if (is_space(static_cast<unsigned char>(c))) {
            in_ws = true;
            continue;
        }
        if (in_ws && !out.empty()) out.push_back(' ');
        in_ws = false;
        out.push_back(c);
    }
    return out;
}

std::string normalize_answer(std::string_view s) {
    std::string stripped;
    stripped.reserve(s.size());
    for (char c : s) {
        if (is_punct(static_cast<unsigned char>(c))) continue;
        stripped.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    }
    return collapse_whitespace(stripped);
}

std::string normalize_light(std::string_view s) {
    return collapse_whitespace(lower_ascii(s));
}

std::vector<std::string> whitespace_tokens(std::string_view s) {
    std::vector<std::string> toks;
    std::size_t i = 0;
    while (i < s.size()) {
        while (i < s.size() && is_space(static_cast<unsigned char>(s[i]))) ++i;
        std::size_t j = i;
        while (j < s.size() && !is_space(static_cast<unsigned char>(s[j]))) ++j;
        if (j > i) toks.emplace_back(s.substr(i, j - i));
        i = j;
    }
    return toks;
}

std::vector<std::string> lower_tokens(std::string_view s) {
    return whitespace_tokens(lower_ascii(s));
}

std::vector<std::string> split_sentences(std::string_view text) {
    std::vector<std::string> out;
    std::size_t start = 0;
    const std::size_t n = text.size();
    for (std::size_t i = 0; i < n; ++i) {
        char c = text[i];
        if (c != '.' && c != '!' && c != '?') continue;
        // absorb a run of terminal punctuation and closing quotes/brackets
        std::size_t end = i + 1;
        while (end < n && (text[end] == '.' || text[end] == '!' || text[end] == '?' ||
                           text[end] == '"' || text[end] == '\'' || text[end] == ')'))
            ++end;
        std::size_t ws = end;
        bool saw_newline = false;
        while (ws < n && is_space(static_cast<unsigned char>(text[ws]))) {
            if (text[ws] == '\n') saw_newline = true;
            ++ws;
        }
        if (ws == end) continue;  // no whitespace after the punctuation: not a boundary
        bool boundary = ws == n || saw_newline ||
                        std::isupper(static_cast<unsigned char>(text[ws])) != 0 ||
                        std::isdigit(static_cast<unsigned char>(text[ws])) != 0;
        if (!boundary) continue;
        std::string sent = trim(text.substr(start, end - start));
        if (!sent.empty()) out.push_back(std::move(sent));
        start = ws;
        i = end - 1;
    }
    std::string tail = trim(text.substr(start));
    if (!tail.empty()) out.push_back(std::move(tail));
    return out;
}

}  // namespace hopmix
