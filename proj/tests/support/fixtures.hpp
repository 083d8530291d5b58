#pragma once

// Test-only helpers: fixture builders, a random session generator and
// brute-force oracles that share no code with the scoring path.

#include <algorithm>
#include <cstdint>
#include <functional>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <vector>

#include "tcmeval/tcmeval.hpp"

namespace tcmeval::testing {

inline Segment seg(const std::string& speaker, double start, double end, const std::string& text,
                   const std::string& session = "s1") {
    Segment s;
    s.session_id = session;
    s.speaker = speaker;
    s.start_time = start;
    s.end_time = end;
    s.text = text;
    return s;
}

inline SessionTranscript ref_session(std::vector<Segment> segs, const std::string& id = "s1") {
    return make_session(id, Side::reference, std::move(segs));
}

inline SessionTranscript hyp_session(std::vector<Segment> segs, const std::string& id = "s1") {
    return make_session(id, Side::hypothesis, std::move(segs));
}

inline TimedWord tw(const std::string& token, double start, double end) {
    return TimedWord{token, start, end, "x", 0};
}

/// Renames speakers on one side through `rename` and rebuilds the session.
inline SessionTranscript relabel(const SessionTranscript& s,
                                 const std::map<std::string, std::string>& rename) {
    std::vector<Segment> segs;
    std::vector<Segment> by_input(s.segments.begin(), s.segments.end());
    std::sort(by_input.begin(), by_input.end(),
              [](const Segment& a, const Segment& b) { return a.input_order < b.input_order; });
    for (auto seg : by_input) {
        seg.speaker = rename.at(seg.speaker);
        segs.push_back(seg);
    }
    return make_session(s.session_id, s.side, std::move(segs));
}

inline SessionTranscript random_relabel(const SessionTranscript& s, std::mt19937& rng) {
    std::vector<std::string> labels;
    for (const auto& spk : s.speakers()) labels.push_back(spk);
    std::vector<std::string> fresh;
    for (std::size_t i = 0; i < labels.size(); ++i) fresh.push_back("spk" + std::to_string(rng() % 1000) + "_" + std::to_string(i));
    std::shuffle(fresh.begin(), fresh.end(), rng);
    std::map<std::string, std::string> rename;
    for (std::size_t i = 0; i < labels.size(); ++i) rename[labels[i]] = fresh[i];
    return relabel(s, rename);
}

// ─── Random sessions ─────────────────────────────────────────────────────────

struct SessionGenParams {
    int min_speakers = 2;
    int max_speakers = 7;
    double max_overlap = 0.6;
    int min_turns = 6;
    int max_turns = 18;
    int max_words = 7;
};

inline const std::vector<std::string>& vocabulary() {
    static const std::vector<std::string> v = {
        "yeah", "that", "is", "a", "great", "idea", "okay", "so", "we", "can",
        "do", "it", "the", "meeting", "next", "week", "i", "think", "not", "really",
        "maybe", "like", "slogan", "uh", "um", "right", "you", "know", "good", "plan"};
    return v;
}

inline std::string random_words(std::mt19937& rng, int n) {
    const auto& v = vocabulary();
    std::string out;
    for (int i = 0; i < n; ++i) {
        if (i) out += ' ';
        out += v[rng() % v.size()];
    }
    return out;
}

/// Reference: turn-taking conversation where each new turn overlaps the
/// previous one with probability `overlap`.
/// Hypothesis: same turns with relabeled / merged speakers, jittered times,
/// word-level substitutions, deletions and insertions, dropped and spurious
/// segments.
inline std::pair<SessionTranscript, SessionTranscript> random_session_pair(
    std::mt19937& rng, const std::string& id = "s1", SessionGenParams p = {}) {
    std::uniform_int_distribution<int> spk_dist(p.min_speakers, p.max_speakers);
    const int n_spk = spk_dist(rng);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double overlap = u01(rng) * p.max_overlap;
    const int turns = std::uniform_int_distribution<int>(p.min_turns, p.max_turns)(rng);

    std::vector<Segment> ref;
    double cursor = u01(rng) * 2.0;
    double prev_end = cursor;
    int prev_spk = -1;
    for (int t = 0; t < turns; ++t) {
        int spk = static_cast<int>(rng() % n_spk);
        if (spk == prev_spk) spk = (spk + 1) % n_spk;
        // Make sure every speaker gets at least one turn early on.
        if (t < n_spk) spk = t;
        const double dur = 0.5 + u01(rng) * 5.5;
        double start;
        if (t > 0 && u01(rng) < overlap)
            start = std::max(0.0, prev_end - u01(rng) * dur);
        else
            start = prev_end + u01(rng) * 2.0;
        const int n_words = 1 + static_cast<int>(rng() % p.max_words);
        ref.push_back(seg("R" + std::to_string(spk), start, start + dur, random_words(rng, n_words), id));
        prev_end = std::max(prev_end, start + dur);
        prev_spk = spk;
    }

    // Hypothesis speaker map: mostly a permutation, sometimes merging two.
    std::vector<int> hyp_label(n_spk);
    std::iota(hyp_label.begin(), hyp_label.end(), 0);
    std::shuffle(hyp_label.begin(), hyp_label.end(), rng);
    if (n_spk > 2 && u01(rng) < 0.3) hyp_label[rng() % n_spk] = hyp_label[rng() % n_spk];

    std::vector<Segment> hyp;
    const auto& vocab = vocabulary();
    for (const auto& r : ref) {
        if (u01(rng) < 0.05) continue;
        std::vector<std::string> words = normalize(r.text, NormScheme::none());
        std::vector<std::string> out;
        for (const auto& w : words) {
            const double x = u01(rng);
            if (x < 0.08) continue;
            if (x < 0.16) out.push_back(vocab[rng() % vocab.size()]);
            else out.push_back(w);
            if (u01(rng) < 0.06) out.push_back(vocab[rng() % vocab.size()]);
        }
        const int rs = std::stoi(r.speaker.substr(1));
        std::string spk = "H" + std::to_string(hyp_label[rs]);
        if (u01(rng) < 0.08) spk = "H" + std::to_string(rng() % (n_spk + 1));
        const double shift = (u01(rng) - 0.5) * (u01(rng) < 0.1 ? 16.0 : 3.0);
        const double start = std::max(0.0, r.start_time + shift);
        const double dur = std::max(0.0, r.duration() * (0.7 + 0.6 * u01(rng)));
        hyp.push_back(seg(spk, start, start + dur, join_tokens(out), id));
    }
    if (u01(rng) < 0.5) {
        const double start = u01(rng) * prev_end;
        hyp.push_back(seg("H" + std::to_string(rng() % (n_spk + 1)), start, start + 1.0 + u01(rng) * 3,
                          random_words(rng, 1 + static_cast<int>(rng() % 4)), id));
    }
    return {ref_session(std::move(ref), id), hyp_session(std::move(hyp), id)};
}

inline double session_span(const SessionTranscript& a, const SessionTranscript& b) {
    double lo = std::numeric_limits<double>::infinity(), hi = 0.0;
    for (const auto* s : {&a, &b})
        for (const auto& seg : s->segments) {
            lo = std::min(lo, seg.start_time);
            hi = std::max(hi, seg.end_time);
        }
    return std::isfinite(lo) ? hi - lo : 0.0;
}

// ─── Oracles ─────────────────────────────────────────────────────────────────

/// Minimum edit cost over every monotone alignment path, enumerated without
/// memoization. `admissible(i, j)` gates pairing ref i with hyp j.
inline std::int64_t brute_force_edit_cost(
    const std::vector<std::string>& ref, const std::vector<std::string>& hyp,
    const std::function<bool(std::size_t, std::size_t)>& admissible) {
    std::function<std::int64_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::int64_t {
        if (i == ref.size()) return static_cast<std::int64_t>(hyp.size() - j);
        if (j == hyp.size()) return static_cast<std::int64_t>(ref.size() - i);
        std::int64_t best = 1 + std::min(go(i + 1, j), go(i, j + 1));
        if (admissible(i, j)) best = std::min(best, (ref[i] == hyp[j] ? 0 : 1) + go(i + 1, j + 1));
        return best;
    };
    return go(0, 0);
}

inline std::int64_t brute_force_tc_cost(const std::vector<TimedWord>& ref,
                                        const std::vector<TimedWord>& hyp, double collar) {
    std::vector<std::string> r, h;
    for (const auto& w : ref) r.push_back(w.token);
    for (const auto& w : hyp) h.push_back(w.token);
    return brute_force_edit_cost(r, h, [&](std::size_t i, std::size_t j) {
        const double lo = ref[i].start - collar, hi = ref[i].end + collar;
        return !(hyp[j].end < lo || hyp[j].start > hi);
    });
}

/// Minimum over all padded permutations of a cost matrix, by enumeration.
inline std::int64_t brute_force_assignment(const std::vector<std::vector<std::int64_t>>& m) {
    const std::size_t n = m.size();
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    std::int64_t best = std::numeric_limits<std::int64_t>::max();
    do {
        std::int64_t c = 0;
        for (std::size_t i = 0; i < n; ++i) c += m[i][perm[i]];
        best = std::min(best, c);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return n == 0 ? 0 : best;
}

/// Independent FNV-1a 64 used to check the built-in embedder.
inline std::uint64_t oracle_fnv1a(const std::string& s) {
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (char c : s) {
        h = h ^ static_cast<std::uint8_t>(c);
        h = h * 0x100000001b3ull;
    }
    return h;
}

/// Cosine of two bag-of-words vectors bucketed by oracle_fnv1a mod 256.
inline double oracle_bow_cosine(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::map<std::uint64_t, double> va, vb;
    for (const auto& t : a) va[oracle_fnv1a(t) % 256] += 1;
    for (const auto& t : b) vb[oracle_fnv1a(t) % 256] += 1;
    double dot = 0, na = 0, nb = 0;
    for (auto& [k, x] : va) {
        na += x * x;
        if (vb.count(k)) dot += x * vb[k];
    }
    for (auto& [k, x] : vb) nb += x * x;
    if (na == 0 || nb == 0) return 0.0;
    return dot / std::sqrt(na * nb);
}

/// Provider returning a fixed similarity for distinct texts and 1 for equal
/// ones, through 2-d vectors at the required angle.
class FixedSimProvider final : public EmbeddingProvider {
public:
    explicit FixedSimProvider(double sim) : sim_(sim) {}
    std::string name() const override { return "fixed"; }
    std::size_t dimension() const override { return 2; }
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
        // First distinct text maps to e1; every other text to the unit vector at
        // angle acos(sim) from e1. Only pairwise sims against the first text are
        // meaningful, which is all single-pair tests use.
        std::vector<Embedding> out;
        for (const auto& t : texts) {
            if (first_.empty()) first_ = t;
            if (t == first_) out.push_back({1.0, 0.0});
            else out.push_back({sim_, std::sqrt(std::max(0.0, 1.0 - sim_ * sim_))});
        }
        return out;
    }

private:
    double sim_;
    std::string first_;
};

} // namespace tcmeval::testing
