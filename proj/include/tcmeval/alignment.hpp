#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "tcmeval/error.hpp"
#include "tcmeval/transcript.hpp"

namespace tcmeval {

enum class OpKind : std::uint8_t { match, substitute, deletion, insertion };

inline const char* to_string(OpKind k) {
    switch (k) {
    case OpKind::match: return "match";
    case OpKind::substitute: return "substitute";
    case OpKind::deletion: return "delete";
    case OpKind::insertion: return "insert";
    }
    return "?";
}

struct AlignOp {
    OpKind kind = OpKind::match;
    std::optional<std::size_t> ref_index;
    std::optional<std::size_t> hyp_index;

    bool operator==(const AlignOp&) const = default;
};

struct ErrorCounts {
    std::int64_t sub = 0;
    std::int64_t del = 0;
    std::int64_t ins = 0;

    std::int64_t total() const { return sub + del + ins; }

    ErrorCounts& operator+=(const ErrorCounts& o) {
        sub += o.sub;
        del += o.del;
        ins += o.ins;
        return *this;
    }
    bool operator==(const ErrorCounts&) const = default;
};

struct Alignment {
    std::vector<AlignOp> ops;
    ErrorCounts errors;
    std::size_t n_ref = 0;

    bool operator==(const Alignment&) const = default;
};

/// Which side of a word pair the collar widens.
enum class CollarMode { reference_only, symmetric };

inline const char* to_string(CollarMode m) {
    return m == CollarMode::reference_only ? "reference" : "symmetric";
}

inline CollarMode parse_collar_mode(const std::string& s) {
    if (s == "reference" || s == "reference_only") return CollarMode::reference_only;
    if (s == "symmetric") return CollarMode::symmetric;
    throw ParameterError("unknown collar mode '" + s + "'");
}

/// True when reference word `r` may be matched or substituted with `h`:
/// [r.start - c, r.end + c] must intersect [h.start, h.end] (both widened in
/// symmetric mode).
inline bool time_admissible(const TimedWord& r, const TimedWord& h, double collar,
                            CollarMode mode = CollarMode::reference_only) {
    const double hyp_pad = mode == CollarMode::symmetric ? collar : 0.0;
    return h.start - hyp_pad <= r.end + collar && h.end + hyp_pad >= r.start - collar;
}

namespace detail {

using Cell = std::uint32_t;

/// Edit distance only, two rolling rows.
template <class Equal, class Admissible>
std::int64_t edit_cost(std::size_t n, std::size_t m, Equal&& equal, Admissible&& admissible) {
    std::vector<Cell> prev(m + 1), cur(m + 1);
    for (std::size_t j = 0; j <= m; ++j) prev[j] = static_cast<Cell>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        cur[0] = static_cast<Cell>(i);
        for (std::size_t j = 1; j <= m; ++j) {
            Cell best = std::min(prev[j], cur[j - 1]) + 1;
            if (admissible(i - 1, j - 1)) {
                best = std::min<Cell>(best, prev[j - 1] + (equal(i - 1, j - 1) ? 0 : 1));
            }
            cur[j] = best;
        }
        std::swap(prev, cur);
    }
    return prev[m];
}

/// Full DP with deterministic backtrace. At every cell the predecessor is
/// chosen in the order match > substitute > delete > insert.
template <class Equal, class Admissible>
Alignment edit_align(std::size_t n, std::size_t m, Equal&& equal, Admissible&& admissible) {
    const std::size_t width = m + 1;
    std::vector<Cell> d((n + 1) * width);
    auto at = [&](std::size_t i, std::size_t j) -> Cell& { return d[i * width + j]; };

    for (std::size_t j = 0; j <= m; ++j) at(0, j) = static_cast<Cell>(j);
    for (std::size_t i = 1; i <= n; ++i) {
        at(i, 0) = static_cast<Cell>(i);
        for (std::size_t j = 1; j <= m; ++j) {
            Cell best = std::min(at(i - 1, j), at(i, j - 1)) + 1;
            if (admissible(i - 1, j - 1))
                best = std::min<Cell>(best, at(i - 1, j - 1) + (equal(i - 1, j - 1) ? 0 : 1));
            at(i, j) = best;
        }
    }

    Alignment out;
    out.n_ref = n;
    std::size_t i = n, j = m;
    while (i > 0 || j > 0) {
        const Cell here = at(i, j);
        if (i > 0 && j > 0 && admissible(i - 1, j - 1)) {
            const bool same = equal(i - 1, j - 1);
            if (at(i - 1, j - 1) + (same ? 0 : 1) == here) {
                out.ops.push_back({same ? OpKind::match : OpKind::substitute, i - 1, j - 1});
                if (!same) ++out.errors.sub;
                --i;
                --j;
                continue;
            }
        }
        if (i > 0 && at(i - 1, j) + 1 == here) {
            out.ops.push_back({OpKind::deletion, i - 1, std::nullopt});
            ++out.errors.del;
            --i;
            continue;
        }
        out.ops.push_back({OpKind::insertion, std::nullopt, j - 1});
        ++out.errors.ins;
        --j;
    }
    std::reverse(out.ops.begin(), out.ops.end());
    return out;
}

struct Identity {
    template <class T>
    const T& operator()(const T& v) const { return v; }
};

inline void check_collar(double collar) {
    if (!(collar >= 0.0)) throw ParameterError("collar must be >= 0");
}

} // namespace detail

/// Unit-cost Levenshtein alignment. `proj` maps elements to the value
/// compared for equality (e.g. `&TimedWord::token`).
template <class Seq, class Proj = detail::Identity>
Alignment levenshtein_align(const Seq& ref, const Seq& hyp, Proj proj = {}) {
    return detail::edit_align(
        ref.size(), hyp.size(),
        [&](std::size_t i, std::size_t j) {
            return std::invoke(proj, ref[i]) == std::invoke(proj, hyp[j]);
        },
        [](std::size_t, std::size_t) { return true; });
}

template <class Seq, class Proj = detail::Identity>
std::int64_t levenshtein_cost(const Seq& ref, const Seq& hyp, Proj proj = {}) {
    return detail::edit_cost(
        ref.size(), hyp.size(),
        [&](std::size_t i, std::size_t j) {
            return std::invoke(proj, ref[i]) == std::invoke(proj, hyp[j]);
        },
        [](std::size_t, std::size_t) { return true; });
}

/// Levenshtein alignment in which a reference/hypothesis word pair further
/// apart than `collar` seconds can only be expressed as delete + insert.
inline Alignment time_constrained_align(const std::vector<TimedWord>& ref,
                                        const std::vector<TimedWord>& hyp, double collar,
                                        CollarMode mode = CollarMode::reference_only) {
    detail::check_collar(collar);
    return detail::edit_align(
        ref.size(), hyp.size(),
        [&](std::size_t i, std::size_t j) { return ref[i].token == hyp[j].token; },
        [&](std::size_t i, std::size_t j) { return time_admissible(ref[i], hyp[j], collar, mode); });
}

inline std::int64_t time_constrained_cost(const std::vector<TimedWord>& ref,
                                          const std::vector<TimedWord>& hyp, double collar,
                                          CollarMode mode = CollarMode::reference_only) {
    detail::check_collar(collar);
    return detail::edit_cost(
        ref.size(), hyp.size(),
        [&](std::size_t i, std::size_t j) { return ref[i].token == hyp[j].token; },
        [&](std::size_t i, std::size_t j) { return time_admissible(ref[i], hyp[j], collar, mode); });
}

} // namespace tcmeval
