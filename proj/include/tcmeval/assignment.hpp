#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "tcmeval/error.hpp"
#include "tcmeval/transcript.hpp"

namespace tcmeval {

/// Dense square cost matrix, row-major.
template <class T>
class CostMatrix {
public:
    CostMatrix() = default;
    explicit CostMatrix(std::size_t n, T fill = T{}) : n_(n), data_(n * n, fill) {}

    std::size_t size() const { return n_; }
    T& operator()(std::size_t r, std::size_t c) { return data_[r * n_ + c]; }
    const T& operator()(std::size_t r, std::size_t c) const { return data_[r * n_ + c]; }

private:
    std::size_t n_ = 0;
    std::vector<T> data_;
};

template <class T>
struct AssignmentResult {
    std::vector<std::size_t> row_to_col;
    T cost{};
};

/// Minimum-cost perfect matching on a square matrix (Hungarian method with
/// potentials, O(n^3)).
template <class T>
AssignmentResult<T> solve_assignment(const CostMatrix<T>& c) {
    const std::size_t n = c.size();
    AssignmentResult<T> out;
    out.row_to_col.assign(n, 0);
    if (n == 0) return out;

    const T inf = std::numeric_limits<T>::has_infinity ? std::numeric_limits<T>::infinity()
                                                        : std::numeric_limits<T>::max() / 4;
    std::vector<T> u(n + 1, T{}), v(n + 1, T{});
    std::vector<std::size_t> p(n + 1, 0), way(n + 1, 0);
    for (std::size_t i = 1; i <= n; ++i) {
        p[0] = i;
        std::size_t j0 = 0;
        std::vector<T> minv(n + 1, inf);
        std::vector<char> used(n + 1, 0);
        do {
            used[j0] = 1;
            const std::size_t i0 = p[j0];
            T delta = inf;
            std::size_t j1 = 0;
            for (std::size_t j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const T cur = c(i0 - 1, j - 1) - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (std::size_t j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const std::size_t j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    for (std::size_t j = 1; j <= n; ++j) out.row_to_col[p[j] - 1] = j - 1;
    for (std::size_t r = 0; r < n; ++r) out.cost += c(r, out.row_to_col[r]);
    return out;
}

/// Exact integer assignment that, among all optimal matchings, returns the
/// lexicographically smallest row→column vector.
inline AssignmentResult<std::int64_t> solve_assignment_lexicographic(
    const CostMatrix<std::int64_t>& c) {
    const std::size_t n = c.size();
    AssignmentResult<std::int64_t> out;
    out.row_to_col.assign(n, 0);
    if (n == 0) return out;

    std::int64_t remaining = solve_assignment(c).cost;
    out.cost = remaining;
    std::vector<std::size_t> free_cols(n);
    std::iota(free_cols.begin(), free_cols.end(), 0);

    for (std::size_t r = 0; r < n; ++r) {
        const std::size_t k = n - r - 1; // rows left after fixing r
        for (std::size_t pos = 0; pos < free_cols.size(); ++pos) {
            const std::size_t col = free_cols[pos];
            CostMatrix<std::int64_t> sub(k);
            for (std::size_t a = 0; a < k; ++a) {
                std::size_t b = 0;
                for (std::size_t q = 0; q < free_cols.size(); ++q) {
                    if (q == pos) continue;
                    sub(a, b++) = c(r + 1 + a, free_cols[q]);
                }
            }
            const std::int64_t rest = solve_assignment(sub).cost;
            if (c(r, col) + rest == remaining) {
                out.row_to_col[r] = col;
                remaining = rest;
                free_cols.erase(free_cols.begin() + static_cast<std::ptrdiff_t>(pos));
                break;
            }
        }
    }
    return out;
}

// ─── Speaker streams ─────────────────────────────────────────────────────────

struct SpeakerPair {
    std::optional<std::string> ref; // nullopt: padding stream
    std::optional<std::string> hyp;
    std::int64_t cost = 0;

    bool operator==(const SpeakerPair&) const = default;
};

struct StreamAssignment {
    std::vector<SpeakerPair> pairs;
    std::int64_t total_cost = 0;

    bool operator==(const StreamAssignment&) const = default;
};

inline bool stream_less(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    return a < b;
}

inline bool stream_less(const std::vector<TimedWord>& a, const std::vector<TimedWord>& b) {
    return std::lexicographical_compare(a.begin(), a.end(), b.begin(), b.end(), content_less);
}

/// Content-first ordering of streams; used so that tie-breaking between
/// equally good pairings does not depend on speaker labels.
struct StreamLess {
    template <class Stream>
    bool operator()(const Stream& a, const Stream& b) const { return stream_less(a, b); }
};

namespace detail {

template <class Stream>
struct Slot {
    std::optional<std::string> label;
    const Stream* stream = nullptr; // nullptr: padding
};

template <class Stream, class Less>
std::vector<Slot<Stream>> ordered_slots(const std::map<std::string, Stream>& streams,
                                        std::size_t padded, Less& less) {
    std::vector<Slot<Stream>> slots;
    for (const auto& [label, s] : streams) slots.push_back({label, &s});
    std::stable_sort(slots.begin(), slots.end(), [&](const Slot<Stream>& a, const Slot<Stream>& b) {
        if (less(*a.stream, *b.stream)) return true;
        if (less(*b.stream, *a.stream)) return false;
        return *a.label < *b.label;
    });
    while (slots.size() < padded) slots.push_back({std::nullopt, nullptr});
    return slots;
}

template <class Stream, class PairCost>
CostMatrix<std::int64_t> pair_cost_matrix(const std::vector<Slot<Stream>>& rows,
                                          const std::vector<Slot<Stream>>& cols,
                                          PairCost& pair_cost) {
    const Stream empty{};
    CostMatrix<std::int64_t> m(rows.size());
    for (std::size_t r = 0; r < rows.size(); ++r) {
        for (std::size_t c = 0; c < cols.size(); ++c) {
            if (!rows[r].stream && !cols[c].stream) continue;
            m(r, c) = static_cast<std::int64_t>(pair_cost(rows[r].stream ? *rows[r].stream : empty,
                                                          cols[c].stream ? *cols[c].stream : empty));
        }
    }
    return m;
}

template <class Stream>
StreamAssignment make_assignment(const std::vector<Slot<Stream>>& rows,
                                 const std::vector<Slot<Stream>>& cols,
                                 const CostMatrix<std::int64_t>& m,
                                 const std::vector<std::size_t>& row_to_col) {
    StreamAssignment out;
    for (std::size_t r = 0; r < rows.size(); ++r) {
        const auto& col = cols[row_to_col[r]];
        if (!rows[r].stream && !col.stream) continue;
        const std::int64_t cost = m(r, row_to_col[r]);
        out.pairs.push_back({rows[r].label, col.label, cost});
        out.total_cost += cost;
    }
    std::sort(out.pairs.begin(), out.pairs.end(), [](const SpeakerPair& a, const SpeakerPair& b) {
        if (a.ref.has_value() != b.ref.has_value()) return a.ref.has_value();
        if (a.ref != b.ref) return a.ref < b.ref;
        return a.hyp < b.hyp;
    });
    return out;
}

} // namespace detail

/// One-to-one pairing of reference and hypothesis speaker streams minimizing
/// the summed `pair_cost`. The smaller side is padded with empty streams, so
/// `pair_cost(empty, h)` / `pair_cost(r, empty)` must price full insertion or
/// deletion. Ties resolve to the lexicographically smallest pairing over
/// streams ordered by content, then label.
template <class Stream, class PairCost, class Less = StreamLess>
StreamAssignment assign_streams(const std::map<std::string, Stream>& ref,
                                const std::map<std::string, Stream>& hyp, PairCost&& pair_cost,
                                Less less = {}) {
    const std::size_t n = std::max(ref.size(), hyp.size());
    const auto rows = detail::ordered_slots(ref, n, less);
    const auto cols = detail::ordered_slots(hyp, n, less);
    const auto m = detail::pair_cost_matrix(rows, cols, pair_cost);
    const auto solved = solve_assignment_lexicographic(m);
    return detail::make_assignment(rows, cols, m, solved.row_to_col);
}

/// Brute-force counterpart of assign_streams for at most 8 streams per side.
template <class Stream, class PairCost, class Less = StreamLess>
StreamAssignment exhaustive_assignment(const std::map<std::string, Stream>& ref,
                                       const std::map<std::string, Stream>& hyp,
                                       PairCost&& pair_cost, Less less = {}) {
    const std::size_t n = std::max(ref.size(), hyp.size());
    if (n > 8) throw ParameterError("exhaustive_assignment supports at most 8 streams per side");
    const auto rows = detail::ordered_slots(ref, n, less);
    const auto cols = detail::ordered_slots(hyp, n, less);
    const auto m = detail::pair_cost_matrix(rows, cols, pair_cost);

    std::vector<std::size_t> perm(n), best;
    std::iota(perm.begin(), perm.end(), 0);
    std::int64_t best_cost = std::numeric_limits<std::int64_t>::max();
    do {
        std::int64_t cost = 0;
        for (std::size_t r = 0; r < n; ++r) cost += m(r, perm[r]);
        if (cost < best_cost) {
            best_cost = cost;
            best = perm;
        }
    } while (std::next_permutation(perm.begin(), perm.end()));
    return detail::make_assignment(rows, cols, m, best);
}

} // namespace tcmeval
