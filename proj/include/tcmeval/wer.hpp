#pragma once

#include <algorithm>
#include <cstdint>
#include <limits>
#include <map>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "tcmeval/alignment.hpp"
#include "tcmeval/assignment.hpp"
#include "tcmeval/error.hpp"
#include "tcmeval/normalize.hpp"
#include "tcmeval/transcript.hpp"

namespace tcmeval {

/// a / b with the conventions used for every reported rate: 0/0 = 0 and
/// x/0 = +inf for x > 0.
inline double safe_ratio(double num, double den) {
    if (den == 0.0) return num == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
    return num / den;
}

using SpeakerStreams = std::map<std::string, std::vector<TimedWord>>;

/// Per-speaker word streams: each speaker's segments concatenated in
/// start-time order (ties keep input order), words timed by equal division.
inline SpeakerStreams build_speaker_streams(const SessionTranscript& session,
                                            const NormScheme& scheme) {
    std::map<std::string, std::vector<std::size_t>> owned;
    for (std::size_t i = 0; i < session.segments.size(); ++i)
        owned[session.segments[i].speaker].push_back(i);

    SpeakerStreams streams;
    for (auto& [speaker, idx] : owned) {
        std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
            const auto& sa = session.segments[a];
            const auto& sb = session.segments[b];
            if (sa.start_time != sb.start_time) return sa.start_time < sb.start_time;
            return sa.input_order < sb.input_order;
        });
        auto& stream = streams[speaker];
        for (std::size_t i : idx) {
            const auto& seg = session.segments[i];
            const auto tokens = normalize(seg.text, scheme);
            auto words = interpolate_word_times(seg, tokens, i);
            stream.insert(stream.end(), words.begin(), words.end());
        }
    }
    return streams;
}

struct StreamAlignment {
    std::optional<std::string> ref_speaker;
    std::optional<std::string> hyp_speaker;
    std::vector<TimedWord> ref_words;
    std::vector<TimedWord> hyp_words;
    Alignment alignment;
};

struct WerReport {
    std::string session_id;
    bool time_constrained = false;
    double collar = 0.0;
    CollarMode collar_mode = CollarMode::reference_only;

    std::size_t n_ref = 0;
    ErrorCounts errors;
    StreamAssignment assignment;
    std::vector<StreamAlignment> alignments;
    bool alignments_retained = true;

    /// False for an empty reference; such sessions are left out of corpus rates.
    bool defined() const { return n_ref > 0; }

    /// Errors over reference words. Empty reference: 0 if there are no errors,
    /// +inf otherwise.
    double rate() const {
        return safe_ratio(static_cast<double>(errors.total()), static_cast<double>(n_ref));
    }

    void strip_alignments() {
        alignments.clear();
        alignments_retained = false;
    }
};

namespace detail {

inline void check_same_session(const SessionTranscript& ref, const SessionTranscript& hyp) {
    if (ref.session_id != hyp.session_id)
        throw ValidationError("session mismatch: reference '" + ref.session_id +
                              "' vs hypothesis '" + hyp.session_id + "'");
}

template <class CostFn, class AlignFn>
WerReport score_streams(const SessionTranscript& ref, const SessionTranscript& hyp,
                        const NormScheme& scheme, CostFn&& cost_fn, AlignFn&& align_fn) {
    check_same_session(ref, hyp);
    const auto ref_streams = build_speaker_streams(ref, scheme);
    const auto hyp_streams = build_speaker_streams(hyp, scheme);

    WerReport report;
    report.session_id = ref.session_id;
    report.assignment = assign_streams(ref_streams, hyp_streams, cost_fn);

    static const std::vector<TimedWord> kEmpty;
    for (const auto& pair : report.assignment.pairs) {
        StreamAlignment sa;
        sa.ref_speaker = pair.ref;
        sa.hyp_speaker = pair.hyp;
        sa.ref_words = pair.ref ? ref_streams.at(*pair.ref) : kEmpty;
        sa.hyp_words = pair.hyp ? hyp_streams.at(*pair.hyp) : kEmpty;
        sa.alignment = align_fn(sa.ref_words, sa.hyp_words);
        if (sa.alignment.errors.total() != pair.cost)
            throw Error("internal: alignment cost disagrees with assignment cost");
        report.errors += sa.alignment.errors;
        report.n_ref += sa.ref_words.size();
        report.alignments.push_back(std::move(sa));
    }
    return report;
}

} // namespace detail

/// Concatenated minimum-permutation WER.
inline WerReport cpwer(const SessionTranscript& ref, const SessionTranscript& hyp,
                       const NormScheme& scheme) {
    auto cost = [](const std::vector<TimedWord>& r, const std::vector<TimedWord>& h) {
        return levenshtein_cost(r, h, &TimedWord::token);
    };
    auto align = [](const std::vector<TimedWord>& r, const std::vector<TimedWord>& h) {
        return levenshtein_align(r, h, &TimedWord::token);
    };
    return detail::score_streams(ref, hyp, scheme, cost, align);
}

/// Time-constrained minimum-permutation WER; `collar` in seconds.
inline WerReport tcpwer(const SessionTranscript& ref, const SessionTranscript& hyp,
                        double collar, const NormScheme& scheme,
                        CollarMode mode = CollarMode::reference_only) {
    detail::check_collar(collar);
    auto cost = [&](const std::vector<TimedWord>& r, const std::vector<TimedWord>& h) {
        return time_constrained_cost(r, h, collar, mode);
    };
    auto align = [&](const std::vector<TimedWord>& r, const std::vector<TimedWord>& h) {
        return time_constrained_align(r, h, collar, mode);
    };
    auto report = detail::score_streams(ref, hyp, scheme, cost, align);
    report.time_constrained = true;
    report.collar = collar;
    report.collar_mode = mode;
    return report;
}

// ─── Overlap decomposition ───────────────────────────────────────────────────

struct OverlapDecomposition {
    std::int64_t e_ov = 0;
    std::int64_t e_1spk = 0;
    std::int64_t n_ref = 0;
    std::int64_t n_ref_ov = 0;
    std::int64_t n_ref_1spk = 0;

    std::int64_t errors() const { return e_ov + e_1spk; }
    double rate() const { return safe_ratio(static_cast<double>(errors()), static_cast<double>(n_ref)); }

    // Contribution of each region to the overall rate.
    double tcpwer_ov() const { return safe_ratio(static_cast<double>(e_ov), static_cast<double>(n_ref)); }
    double tcpwer_1spk() const { return safe_ratio(static_cast<double>(e_1spk), static_cast<double>(n_ref)); }
    // Rate within each region.
    double tcpwer_ov_norm() const { return safe_ratio(static_cast<double>(e_ov), static_cast<double>(n_ref_ov)); }
    double tcpwer_1spk_norm() const { return safe_ratio(static_cast<double>(e_1spk), static_cast<double>(n_ref_1spk)); }

    OverlapDecomposition& operator+=(const OverlapDecomposition& o) {
        e_ov += o.e_ov;
        e_1spk += o.e_1spk;
        n_ref += o.n_ref;
        n_ref_ov += o.n_ref_ov;
        n_ref_1spk += o.n_ref_1spk;
        return *this;
    }
    bool operator==(const OverlapDecomposition&) const = default;
};

inline std::vector<OverlapClass> segment_classes(const SessionTranscript& ref,
                                                 const OverlapTimeline& timeline) {
    std::vector<OverlapClass> out;
    out.reserve(ref.segments.size());
    for (const auto& seg : ref.segments) out.push_back(classify_segment_overlap(seg, timeline));
    return out;
}

/// Splits the errors of a scored session into overlapped and single-speaker
/// reference regions. Substitutions and deletions follow the segment owning
/// the reference word. An insertion sitting between two ops of the same
/// reference segment takes that segment's class; any other insertion is
/// classified by its hypothesis-word midpoint against the overlap timeline,
/// falling back to the other region when the session has no reference words
/// in the region the midpoint selects.
inline OverlapDecomposition decompose_overlap(const WerReport& report,
                                              const SessionTranscript& ref) {
    if (!report.alignments_retained)
        throw ValidationError("decompose_overlap needs a report with alignments");
    if (report.session_id != ref.session_id)
        throw ValidationError("session mismatch: report '" + report.session_id +
                              "' vs reference '" + ref.session_id + "'");

    const auto timeline = build_overlap_timeline(ref);
    const auto classes = segment_classes(ref, timeline);
    auto class_of = [&](std::size_t seg) {
        if (seg >= classes.size()) throw ValidationError("alignment references unknown segment");
        return classes[seg];
    };

    OverlapDecomposition out;
    auto add_error = [&](OverlapClass c) { (c == OverlapClass::overlapped ? out.e_ov : out.e_1spk)++; };

    for (const auto& sa : report.alignments) {
        for (const auto& w : sa.ref_words) {
            ++out.n_ref;
            (class_of(w.segment_index) == OverlapClass::overlapped ? out.n_ref_ov : out.n_ref_1spk)++;
        }
    }
    // An insertion is never charged to a region without reference words.
    auto insertion_class = [&](double mid) {
        const auto c = timeline.contains(mid) ? OverlapClass::overlapped : OverlapClass::single_speaker;
        if (c == OverlapClass::overlapped && out.n_ref_ov == 0 && out.n_ref_1spk > 0)
            return OverlapClass::single_speaker;
        if (c == OverlapClass::single_speaker && out.n_ref_1spk == 0 && out.n_ref_ov > 0)
            return OverlapClass::overlapped;
        return c;
    };

    for (const auto& sa : report.alignments) {
        const auto& ops = sa.alignment.ops;
        // Segment of the nearest ref-carrying op before / after each position.
        constexpr std::size_t kNone = std::numeric_limits<std::size_t>::max();
        std::vector<std::size_t> prev_seg(ops.size(), kNone), next_seg(ops.size(), kNone);
        std::size_t last = kNone;
        for (std::size_t k = 0; k < ops.size(); ++k) {
            prev_seg[k] = last;
            if (ops[k].ref_index) last = sa.ref_words[*ops[k].ref_index].segment_index;
        }
        last = kNone;
        for (std::size_t k = ops.size(); k-- > 0;) {
            next_seg[k] = last;
            if (ops[k].ref_index) last = sa.ref_words[*ops[k].ref_index].segment_index;
        }

        for (std::size_t k = 0; k < ops.size(); ++k) {
            const auto& op = ops[k];
            switch (op.kind) {
            case OpKind::match:
                break;
            case OpKind::substitute:
            case OpKind::deletion:
                add_error(class_of(sa.ref_words[*op.ref_index].segment_index));
                break;
            case OpKind::insertion:
                if (prev_seg[k] != kNone && prev_seg[k] == next_seg[k]) {
                    add_error(class_of(prev_seg[k]));
                } else {
                    add_error(insertion_class(sa.hyp_words[*op.hyp_index].midpoint()));
                }
                break;
            }
        }
    }
    return out;
}

} // namespace tcmeval
