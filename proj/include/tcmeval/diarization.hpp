#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "tcmeval/assignment.hpp"
#include "tcmeval/error.hpp"
#include "tcmeval/transcript.hpp"

namespace tcmeval {

struct DerReport {
    double scored_speech = 0.0; // speaker-seconds
    double miss = 0.0;
    double false_alarm = 0.0;
    double confusion = 0.0;
    std::vector<std::pair<std::string, std::string>> mapping; // ref → hyp

    double errors() const { return miss + false_alarm + confusion; }
    /// Undefined when nothing is left to score after masking.
    std::optional<double> rate() const {
        if (scored_speech <= 0.0) return std::nullopt;
        return errors() / scored_speech;
    }
};

namespace detail {

inline std::vector<Interval> merge_intervals(std::vector<Interval> ivs) {
    std::sort(ivs.begin(), ivs.end(), [](const Interval& a, const Interval& b) {
        return a.start < b.start || (a.start == b.start && a.end < b.end);
    });
    std::vector<Interval> out;
    for (const auto& iv : ivs) {
        if (!out.empty() && iv.start <= out.back().end)
            out.back().end = std::max(out.back().end, iv.end);
        else
            out.push_back(iv);
    }
    return out;
}

inline bool covers(const std::vector<Interval>& sorted, double t) {
    auto it = std::upper_bound(sorted.begin(), sorted.end(), t,
                               [](double v, const Interval& iv) { return v < iv.start; });
    if (it == sorted.begin()) return false;
    --it;
    return t >= it->start && t <= it->end;
}

} // namespace detail

/// Diarization error rate. A no-score zone of ±collar is put around every
/// reference segment boundary; overlapped speech is scored per speaker; the
/// ref↔hyp speaker mapping maximizes total co-active time.
inline DerReport der(const SessionTranscript& ref, const SessionTranscript& hyp,
                     double collar = 0.25) {
    if (!(collar >= 0.0)) throw ParameterError("DER collar must be >= 0");

    const auto ref_act = detail::speaker_activity(ref);
    const auto hyp_act = detail::speaker_activity(hyp);

    std::vector<Interval> mask;
    for (const auto& seg : ref.segments) {
        if (seg.end_time <= seg.start_time) continue;
        for (double b : {seg.start_time, seg.end_time}) mask.push_back({b - collar, b + collar});
    }
    mask = detail::merge_intervals(std::move(mask));

    std::vector<double> points;
    for (const auto* act : {&ref_act, &hyp_act})
        for (const auto& [spk, ivs] : *act)
            for (const auto& iv : ivs) {
                points.push_back(iv.start);
                points.push_back(iv.end);
            }
    for (const auto& iv : mask) {
        points.push_back(iv.start);
        points.push_back(iv.end);
    }
    std::sort(points.begin(), points.end());
    points.erase(std::unique(points.begin(), points.end()), points.end());

    std::vector<std::string> ref_spk, hyp_spk;
    std::vector<const std::vector<Interval>*> ref_iv, hyp_iv;
    for (const auto& [s, ivs] : ref_act) {
        ref_spk.push_back(s);
        ref_iv.push_back(&ivs);
    }
    for (const auto& [s, ivs] : hyp_act) {
        hyp_spk.push_back(s);
        hyp_iv.push_back(&ivs);
    }

    struct Piece {
        double duration;
        std::vector<std::size_t> refs, hyps;
    };
    std::vector<Piece> pieces;
    for (std::size_t k = 0; k + 1 < points.size(); ++k) {
        const double lo = points[k], hi = points[k + 1];
        const double mid = 0.5 * (lo + hi);
        if (detail::covers(mask, mid)) continue;
        Piece p{hi - lo, {}, {}};
        for (std::size_t r = 0; r < ref_iv.size(); ++r)
            if (detail::covers(*ref_iv[r], mid)) p.refs.push_back(r);
        for (std::size_t h = 0; h < hyp_iv.size(); ++h)
            if (detail::covers(*hyp_iv[h], mid)) p.hyps.push_back(h);
        if (!p.refs.empty() || !p.hyps.empty()) pieces.push_back(std::move(p));
    }

    const std::size_t n = std::max(ref_spk.size(), hyp_spk.size());
    CostMatrix<double> cost(n, 0.0);
    for (const auto& p : pieces)
        for (std::size_t r : p.refs)
            for (std::size_t h : p.hyps) cost(r, h) -= p.duration;
    const auto solved = solve_assignment(cost);

    DerReport out;
    std::vector<std::size_t> ref_to_hyp(ref_spk.size(), n);
    for (std::size_t r = 0; r < ref_spk.size(); ++r) {
        const std::size_t h = solved.row_to_col[r];
        if (h < hyp_spk.size()) {
            ref_to_hyp[r] = h;
            out.mapping.emplace_back(ref_spk[r], hyp_spk[h]);
        }
    }

    for (const auto& p : pieces) {
        const double nr = static_cast<double>(p.refs.size());
        const double nh = static_cast<double>(p.hyps.size());
        double correct = 0.0;
        for (std::size_t r : p.refs)
            if (ref_to_hyp[r] < n &&
                std::find(p.hyps.begin(), p.hyps.end(), ref_to_hyp[r]) != p.hyps.end())
                correct += 1.0;
        out.scored_speech += p.duration * nr;
        out.miss += p.duration * std::max(0.0, nr - nh);
        out.false_alarm += p.duration * std::max(0.0, nh - nr);
        out.confusion += p.duration * (std::min(nr, nh) - correct);
    }
    return out;
}

// ─── Speaker counting ────────────────────────────────────────────────────────

struct SpeakerCount {
    std::size_t true_count = 0;
    std::size_t estimated = 0;

    bool operator==(const SpeakerCount&) const = default;
};

struct CountStats {
    double accuracy = 0.0;
    double mae = 0.0;
    std::vector<SpeakerCount> per_session;
};

inline std::size_t true_speaker_count(const SessionTranscript& ref) { return ref.speakers().size(); }

/// Distinct hypothesis speakers owning at least one segment of positive length.
inline std::size_t estimated_speaker_count(const SessionTranscript& hyp) {
    std::set<std::string> spk;
    for (const auto& s : hyp.segments)
        if (s.end_time > s.start_time) spk.insert(s.speaker);
    return spk.size();
}

inline CountStats speaker_count_stats(std::vector<SpeakerCount> sessions) {
    if (sessions.empty()) throw ParameterError("speaker_count_stats needs at least one session");
    std::size_t exact = 0;
    double abs_err = 0.0;
    for (const auto& s : sessions) {
        if (s.true_count == s.estimated) ++exact;
        abs_err += std::abs(static_cast<double>(s.true_count) - static_cast<double>(s.estimated));
    }
    const double n = static_cast<double>(sessions.size());
    return CountStats{static_cast<double>(exact) / n, abs_err / n, std::move(sessions)};
}

inline CountStats speaker_count_stats(
    const std::vector<std::pair<SessionTranscript, SessionTranscript>>& sessions) {
    std::vector<SpeakerCount> counts;
    counts.reserve(sessions.size());
    for (const auto& [ref, hyp] : sessions)
        counts.push_back({true_speaker_count(ref), estimated_speaker_count(hyp)});
    return speaker_count_stats(std::move(counts));
}

} // namespace tcmeval
