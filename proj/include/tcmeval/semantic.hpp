#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "tcmeval/error.hpp"
#include "tcmeval/normalize.hpp"
#include "tcmeval/transcript.hpp"
#include "tcmeval/wer.hpp"

namespace tcmeval {

using Embedding = std::vector<double>;

/// Sentence-embedding backend. Implementations must be deterministic and safe
/// to call from several threads at once.
class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::string name() const = 0;
    virtual std::size_t dimension() const = 0;
    /// One vector per input text, same order.
    virtual std::vector<Embedding> embed(const std::vector<std::string>& texts) = 0;
};

// ─── Built-in hashed bag-of-words ────────────────────────────────────────────

inline constexpr std::size_t kBuiltinDimension = 256;

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

/// 256-bucket hashed bag of words, L2-normalized. Empty input → zero vector.
inline Embedding builtin_embed(const std::vector<std::string>& tokens) {
    Embedding v(kBuiltinDimension, 0.0);
    for (const auto& t : tokens) v[fnv1a64(t) % kBuiltinDimension] += 1.0;
    double norm = 0.0;
    for (double x : v) norm += x * x;
    if (norm > 0.0) {
        norm = std::sqrt(norm);
        for (double& x : v) x /= norm;
    }
    return v;
}

class BuiltinEmbedder final : public EmbeddingProvider {
public:
    std::string name() const override { return "builtin"; }
    std::size_t dimension() const override { return kBuiltinDimension; }
    std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
        std::vector<Embedding> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(builtin_embed(detail::split_whitespace(t)));
        return out;
    }
};

/// Content-addressed cache in front of another provider. Only missing texts
/// are forwarded, in one batch per call.
class CachedEmbedder final : public EmbeddingProvider {
public:
    explicit CachedEmbedder(EmbeddingProvider& inner) : inner_(inner) {}

    std::string name() const override { return inner_.name(); }
    std::size_t dimension() const override { return inner_.dimension(); }

    std::vector<Embedding> embed(const std::vector<std::string>& texts) override {
        std::vector<std::string> missing;
        {
            std::lock_guard lock(mu_);
            for (const auto& t : texts) {
                if (!cache_.count(t) &&
                    std::find(missing.begin(), missing.end(), t) == missing.end())
                    missing.push_back(t);
            }
        }
        std::vector<Embedding> fresh;
        if (!missing.empty()) {
            fresh = inner_.embed(missing);
            if (fresh.size() != missing.size())
                throw EmbeddingError("provider returned " + std::to_string(fresh.size()) +
                                     " vectors for " + std::to_string(missing.size()) + " texts");
        }
        std::lock_guard lock(mu_);
        for (std::size_t i = 0; i < missing.size(); ++i) cache_.emplace(missing[i], std::move(fresh[i]));
        std::vector<Embedding> out;
        out.reserve(texts.size());
        for (const auto& t : texts) out.push_back(cache_.at(t));
        return out;
    }

    std::size_t cached() const {
        std::lock_guard lock(mu_);
        return cache_.size();
    }

private:
    EmbeddingProvider& inner_;
    mutable std::mutex mu_;
    std::unordered_map<std::string, Embedding> cache_;
};

// ─── Similarity ──────────────────────────────────────────────────────────────

/// Cosine similarity; clamped to [0, 1] unless `clamp` is false. A zero vector
/// on either side gives 0, identical nonzero vectors give exactly 1.
inline double sent_sim(const Embedding& a, const Embedding& b, bool clamp = true) {
    if (a.size() != b.size())
        throw ParameterError("embedding dimension mismatch: " + std::to_string(a.size()) + " vs " +
                             std::to_string(b.size()));
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    if (a == b) return 1.0;
    const double cos = dot / (std::sqrt(na) * std::sqrt(nb));
    return clamp ? std::clamp(cos, 0.0, 1.0) : std::min(cos, 1.0);
}

// ─── Utterance pairs ─────────────────────────────────────────────────────────

/// Where an insertion that falls between two reference utterances goes.
enum class InsertAttachment { following, preceding };

inline const char* to_string(InsertAttachment a) {
    return a == InsertAttachment::following ? "following" : "preceding";
}

inline InsertAttachment parse_insert_attachment(const std::string& s) {
    if (s == "following") return InsertAttachment::following;
    if (s == "preceding") return InsertAttachment::preceding;
    throw ParameterError("unknown insert attachment '" + s + "'");
}

struct UtterancePair {
    std::vector<std::string> ref_text; // empty: R = ∅
    std::vector<std::string> hyp_text; // empty: H = ∅
    std::optional<std::size_t> ref_segment;
    std::vector<std::size_t> hyp_segments;
    std::optional<std::string> ref_speaker;
    std::optional<std::string> hyp_speaker;
    double sem_err = 0.0;
    std::optional<double> sim; // two-sided pairs only

    std::size_t ref_len() const { return ref_text.size(); }
    std::size_t hyp_len() const { return hyp_text.size(); }
};

namespace detail {

inline void add_unique(std::vector<std::size_t>& v, std::size_t x) {
    if (std::find(v.begin(), v.end(), x) == v.end()) v.push_back(x);
}

/// One (∅, H) pair per hypothesis segment, in first-appearance order.
inline void insertion_pairs(const std::vector<const TimedWord*>& words,
                            const std::optional<std::string>& hyp_speaker,
                            std::vector<UtterancePair>& out) {
    std::vector<std::size_t> order;
    std::map<std::size_t, UtterancePair> by_seg;
    for (const TimedWord* w : words) {
        auto [it, fresh] = by_seg.try_emplace(w->segment_index);
        if (fresh) {
            order.push_back(w->segment_index);
            it->second.hyp_segments.push_back(w->segment_index);
            it->second.hyp_speaker = hyp_speaker;
        }
        it->second.hyp_text.push_back(w->token);
    }
    for (std::size_t s : order) out.push_back(std::move(by_seg.at(s)));
}

} // namespace detail

/// Builds utterance-level (R, H) pairs from the alignments of a tcpWER report.
/// Hypothesis words matched or substituted against a reference utterance,
/// plus insertions strictly inside its span, form H. An insertion at an
/// utterance boundary joins the neighbouring utterance that already holds
/// words of the same hypothesis segment; failing that, it goes to the
/// following utterance (or the preceding one, per `attach`). Leading
/// insertions join the first utterance. Trailing insertions left over (with
/// `following`) and streams without a reference counterpart become one
/// (∅, H) pair per hypothesis segment.
inline std::vector<UtterancePair> derive_pairs(const WerReport& report,
                                               const SessionTranscript& ref,
                                               InsertAttachment attach = InsertAttachment::following) {
    if (!report.alignments_retained)
        throw ValidationError("derive_pairs needs a report with alignments");
    if (report.session_id != ref.session_id)
        throw ValidationError("session mismatch: report '" + report.session_id +
                              "' vs reference '" + ref.session_id + "'");

    std::vector<UtterancePair> out;
    for (const auto& sa : report.alignments) {
        const auto& ops = sa.alignment.ops;

        if (!sa.ref_speaker || sa.ref_words.empty()) {
            std::vector<const TimedWord*> words;
            for (const auto& w : sa.hyp_words) words.push_back(&w);
            detail::insertion_pairs(words, sa.hyp_speaker, out);
            continue;
        }

        // Group index of each ref-carrying op; groups are contiguous because a
        // segment's words are contiguous in the stream.
        constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
        std::vector<std::size_t> group_of(ops.size(), kNone);
        std::vector<UtterancePair> groups;
        std::size_t current_seg = kNone;
        for (std::size_t k = 0; k < ops.size(); ++k) {
            if (!ops[k].ref_index) continue;
            const auto& w = sa.ref_words[*ops[k].ref_index];
            if (groups.empty() || w.segment_index != current_seg) {
                if (w.segment_index >= ref.segments.size())
                    throw ValidationError("alignment references unknown segment");
                UtterancePair p;
                p.ref_segment = w.segment_index;
                p.ref_speaker = sa.ref_speaker;
                p.hyp_speaker = sa.hyp_speaker;
                groups.push_back(std::move(p));
                current_seg = w.segment_index;
            }
            groups.back().ref_text.push_back(w.token);
            group_of[k] = groups.size() - 1;
        }

        std::vector<std::size_t> prev_group(ops.size(), kNone), next_group(ops.size(), kNone);
        for (std::size_t k = 0, last = kNone; k < ops.size(); ++k) {
            prev_group[k] = last;
            if (group_of[k] != kNone) last = group_of[k];
        }
        for (std::size_t k = ops.size(), last = kNone; k-- > 0;) {
            next_group[k] = last;
            if (group_of[k] != kNone) last = group_of[k];
        }

        // Matched and substituted words first, so that insertions can see which
        // hypothesis segments each utterance already holds.
        std::vector<std::vector<std::size_t>> held(groups.size());
        for (std::size_t k = 0; k < ops.size(); ++k)
            if (ops[k].hyp_index && ops[k].kind != OpKind::insertion)
                detail::add_unique(held[group_of[k]], sa.hyp_words[*ops[k].hyp_index].segment_index);
        auto holds = [&](std::size_t g, std::size_t seg) {
            return g != kNone && std::find(held[g].begin(), held[g].end(), seg) != held[g].end();
        };

        std::vector<const TimedWord*> trailing;
        for (std::size_t k = 0; k < ops.size(); ++k) {
            const auto& op = ops[k];
            if (!op.hyp_index) continue;
            const TimedWord& hw = sa.hyp_words[*op.hyp_index];
            const std::size_t prev = prev_group[k], next = next_group[k];
            std::size_t target = kNone;
            if (op.kind != OpKind::insertion) {
                target = group_of[k];
            } else if (prev != kNone && prev == next) {
                target = prev;
            } else if (holds(prev, hw.segment_index) != holds(next, hw.segment_index)) {
                target = holds(prev, hw.segment_index) ? prev : next;
            } else if (prev == kNone) {
                target = next; // leading
            } else if (next == kNone) {
                if (attach == InsertAttachment::preceding) target = prev;
            } else {
                target = attach == InsertAttachment::following ? next : prev;
            }
            if (target == kNone) {
                trailing.push_back(&hw);
                continue;
            }
            groups[target].hyp_text.push_back(hw.token);
            detail::add_unique(groups[target].hyp_segments, hw.segment_index);
        }

        for (auto& g : groups) {
            if (g.hyp_text.empty()) g.hyp_speaker.reset();
            out.push_back(std::move(g));
        }
        detail::insertion_pairs(trailing, sa.hyp_speaker, out);
    }

    std::stable_sort(out.begin(), out.end(), [](const UtterancePair& a, const UtterancePair& b) {
        if (a.ref_segment.has_value() != b.ref_segment.has_value()) return a.ref_segment.has_value();
        if (a.ref_segment != b.ref_segment) return a.ref_segment < b.ref_segment;
        return a.hyp_segments < b.hyp_segments;
    });
    return out;
}

struct SemOptions {
    bool clamp = true;
    InsertAttachment attach = InsertAttachment::following;
};

struct SemReport {
    std::string session_id;
    std::size_t n_ref = 0;
    double total_sem_err = 0.0;
    std::vector<UtterancePair> pairs;

    bool defined() const { return n_ref > 0; }
    double rate() const { return safe_ratio(total_sem_err, static_cast<double>(n_ref)); }
};

/// Order-independent sum: ascending values, so relabeled inputs that yield
/// the same multiset of terms give a bit-identical total.
inline double stable_sum(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    double total = 0.0;
    for (double v : values) total += v;
    return total;
}

/// Fills `sim` and `sem_err` of each pair. Two-sided pairs are embedded in one
/// batch on their space-joined normalized text.
inline void score_pairs(std::vector<UtterancePair>& pairs, EmbeddingProvider& provider,
                        bool clamp = true) {
    std::vector<std::string> texts;
    std::unordered_map<std::string, std::size_t> slot;
    std::vector<std::size_t> first_pair; // pair index that introduced each text
    auto intern = [&](const std::vector<std::string>& tokens, std::size_t pair) {
        auto text = join_tokens(tokens);
        auto [it, fresh] = slot.try_emplace(text, texts.size());
        if (fresh) {
            texts.push_back(std::move(text));
            first_pair.push_back(pair);
        }
        return it->second;
    };

    std::vector<std::pair<std::size_t, std::size_t>> idx(pairs.size(), {0, 0});
    for (std::size_t i = 0; i < pairs.size(); ++i) {
        if (!pairs[i].ref_text.empty() && !pairs[i].hyp_text.empty())
            idx[i] = {intern(pairs[i].ref_text, i), intern(pairs[i].hyp_text, i)};
    }

    std::vector<Embedding> vectors;
    if (!texts.empty()) {
        try {
            vectors = provider.embed(texts);
        } catch (const std::exception& e) {
            throw EmbeddingError("embedding failed for pair " + std::to_string(first_pair.front()) +
                                 ": " + e.what());
        }
        if (vectors.size() != texts.size())
            throw EmbeddingError("embedding failed for pair " + std::to_string(first_pair.front()) +
                                 ": provider returned " + std::to_string(vectors.size()) +
                                 " vectors for " + std::to_string(texts.size()) + " texts");
        for (std::size_t t = 0; t < vectors.size(); ++t) {
            if (vectors[t].size() != provider.dimension())
                throw EmbeddingError("embedding failed for pair " + std::to_string(first_pair[t]) +
                                     ": vector has dimension " + std::to_string(vectors[t].size()));
        }
    }

    for (std::size_t i = 0; i < pairs.size(); ++i) {
        auto& p = pairs[i];
        if (p.ref_text.empty() && p.hyp_text.empty())
            throw ValidationError("pair " + std::to_string(i) + " is empty on both sides");
        if (p.ref_text.empty()) {
            p.sim.reset();
            p.sem_err = static_cast<double>(p.hyp_len());
        } else if (p.hyp_text.empty()) {
            p.sim.reset();
            p.sem_err = static_cast<double>(p.ref_len());
        } else {
            const double s = sent_sim(vectors[idx[i].first], vectors[idx[i].second], clamp);
            p.sim = s;
            p.sem_err = (1.0 - s) * static_cast<double>(p.ref_len());
        }
    }
}

inline SemReport tcpsemer_from_report(const WerReport& report, const SessionTranscript& ref,
                                      EmbeddingProvider& provider, const SemOptions& options = {}) {
    SemReport out;
    out.session_id = report.session_id;
    out.n_ref = report.n_ref;
    out.pairs = derive_pairs(report, ref, options.attach);
    score_pairs(out.pairs, provider, options.clamp);
    std::vector<double> terms;
    terms.reserve(out.pairs.size());
    for (const auto& p : out.pairs) terms.push_back(p.sem_err);
    out.total_sem_err = stable_sum(std::move(terms));
    return out;
}

/// Time-constrained minimum-permutation semantic error rate.
inline SemReport tcpsemer(const SessionTranscript& ref, const SessionTranscript& hyp,
                          double collar, const NormScheme& scheme, EmbeddingProvider& provider,
                          const SemOptions& options = {},
                          CollarMode mode = CollarMode::reference_only) {
    const auto report = tcpwer(ref, hyp, collar, scheme, mode);
    return tcpsemer_from_report(report, ref, provider, options);
}

} // namespace tcmeval
