#pragma once

#include <fstream>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "tcmeval/error.hpp"

namespace tcmeval {

enum class NormKind { none, verbatim, forgiving };

inline const char* to_string(NormKind k) {
    switch (k) {
    case NormKind::none: return "none";
    case NormKind::verbatim: return "verbatim";
    case NormKind::forgiving: return "forgiving";
    }
    return "?";
}

inline NormKind parse_norm_kind(std::string_view s) {
    if (s == "none") return NormKind::none;
    if (s == "verbatim") return NormKind::verbatim;
    if (s == "forgiving") return NormKind::forgiving;
    throw ParameterError("unknown normalizer '" + std::string(s) + "'");
}

inline std::set<std::string> default_filler_lexicon() {
    return {"uh", "um", "mm", "hmm", "mhm", "uhhuh", "eh", "ah", "huh", "er", "erm"};
}

/// One token per line; blank lines and surrounding whitespace ignored.
inline std::set<std::string> load_filler_lexicon(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open filler lexicon '" + path + "'");
    std::set<std::string> out;
    std::string line;
    while (std::getline(in, line)) {
        const auto b = line.find_first_not_of(" \t\r");
        if (b == std::string::npos) continue;
        const auto e = line.find_last_not_of(" \t\r");
        std::string tok = line.substr(b, e - b + 1);
        for (auto& c : tok)
            if (c >= 'A' && c <= 'Z') c = static_cast<char>(c - 'A' + 'a');
        out.insert(std::move(tok));
    }
    return out;
}

struct NormScheme {
    NormKind kind = NormKind::verbatim;
    std::set<std::string> filler_lexicon; // consulted by `forgiving` only

    static NormScheme none() { return {NormKind::none, {}}; }
    static NormScheme verbatim() { return {NormKind::verbatim, {}}; }
    static NormScheme forgiving(std::set<std::string> lexicon = default_filler_lexicon()) {
        if (lexicon.empty()) throw ParameterError("forgiving normalizer needs a filler lexicon");
        return {NormKind::forgiving, std::move(lexicon)};
    }
    static NormScheme make(NormKind kind, std::set<std::string> lexicon = default_filler_lexicon()) {
        if (kind == NormKind::forgiving) return forgiving(std::move(lexicon));
        return {kind, {}};
    }
};

namespace detail {

inline bool is_space(char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline std::vector<std::string> split_whitespace(std::string_view text) {
    std::vector<std::string> out;
    std::size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_space(text[i])) ++i;
        std::size_t j = i;
        while (j < text.size() && !is_space(text[j])) ++j;
        if (j > i) out.emplace_back(text.substr(i, j - i));
        i = j;
    }
    return out;
}

/// Replaces every `[...]` and `<...>` span (innermost closing delimiter wins)
/// with a single space.
inline std::string drop_bracket_tags(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (c == '[' || c == '<') {
            const char close = c == '[' ? ']' : '>';
            const auto end = text.find(close, i + 1);
            if (end != std::string_view::npos) {
                out.push_back(' ');
                i = end;
                continue;
            }
        }
        out.push_back(c);
    }
    return out;
}

inline bool starts_with_at(std::string_view s, std::size_t i, std::string_view prefix) {
    return s.substr(i, prefix.size()) == prefix;
}

} // namespace detail

/// Tokenizes `text` under `scheme`.
///
/// verbatim:  lowercase; `. , ? ! ; : " ( )` and the em-dash character, hyphens and bracket characters
///            become separators; apostrophes are trimmed from token edges.
/// forgiving: as verbatim, but bracketed tags are removed whole and tokens in
///            the filler lexicon are dropped.
/// none:      whitespace split only.
inline std::vector<std::string> normalize(std::string_view text, const NormScheme& scheme) {
    if (scheme.kind == NormKind::none) return detail::split_whitespace(text);

    std::string work = scheme.kind == NormKind::forgiving ? detail::drop_bracket_tags(text)
                                                          : std::string(text);
    std::string cleaned;
    cleaned.reserve(work.size());
    static constexpr std::string_view kEmDash = "\xE2\x80\x94";
    static constexpr std::string_view kRightQuote = "\xE2\x80\x99";
    for (std::size_t i = 0; i < work.size(); ++i) {
        const char c = work[i];
        if (detail::starts_with_at(work, i, kEmDash)) {
            cleaned.push_back(' ');
            i += kEmDash.size() - 1;
            continue;
        }
        if (detail::starts_with_at(work, i, kRightQuote)) {
            cleaned.push_back('\'');
            i += kRightQuote.size() - 1;
            continue;
        }
        switch (c) {
        case '.': case ',': case '?': case '!': case ';': case ':': case '"':
        case '(': case ')': case '-': case '[': case ']': case '<': case '>':
            cleaned.push_back(' ');
            break;
        default:
            cleaned.push_back(c >= 'A' && c <= 'Z' ? static_cast<char>(c - 'A' + 'a') : c);
        }
    }

    std::vector<std::string> tokens;
    for (auto& tok : detail::split_whitespace(cleaned)) {
        const auto b = tok.find_first_not_of('\'');
        if (b == std::string::npos) continue;
        const auto e = tok.find_last_not_of('\'');
        tok = tok.substr(b, e - b + 1);
        if (scheme.kind == NormKind::forgiving && scheme.filler_lexicon.count(tok)) continue;
        tokens.push_back(std::move(tok));
    }
    return tokens;
}

inline std::string join_tokens(const std::vector<std::string>& tokens) {
    std::string out;
    for (std::size_t i = 0; i < tokens.size(); ++i) {
        if (i) out.push_back(' ');
        out += tokens[i];
    }
    return out;
}

} // namespace tcmeval
