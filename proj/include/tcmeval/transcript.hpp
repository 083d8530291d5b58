#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <map>
#include <set>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tcmeval/error.hpp"

namespace tcmeval {

enum class Side { reference, hypothesis };

inline const char* to_string(Side side) {
    return side == Side::reference ? "reference" : "hypothesis";
}

// ─── Domain types ────────────────────────────────────────────────────────────

struct Segment {
    std::string session_id;
    std::string speaker;
    double start_time = 0.0; // seconds
    double end_time = 0.0;   // seconds
    std::string text;        // raw, before normalization
    Side side = Side::reference;
    std::size_t input_order = 0; // position in the source stream, breaks ties

    double duration() const { return end_time - start_time; }

    bool operator==(const Segment&) const = default;
};

struct TimedWord {
    std::string token;
    double start = 0.0;
    double end = 0.0;
    std::string speaker;
    std::size_t segment_index = 0; // ordinal of the owning segment in its session

    double midpoint() const { return 0.5 * (start + end); }

    bool operator==(const TimedWord&) const = default;
};

/// Orders words by (start, end, token) only. Speaker labels and segment
/// ordinals are deliberately excluded so that orderings derived from it do not
/// change when speakers are relabeled.
inline bool content_less(const TimedWord& a, const TimedWord& b) {
    if (a.start != b.start) return a.start < b.start;
    if (a.end != b.end) return a.end < b.end;
    return a.token < b.token;
}

struct SessionTranscript {
    std::string session_id;
    Side side = Side::reference;
    std::vector<Segment> segments; // sorted by start_time, then speaker, then text

    std::set<std::string> speakers() const {
        std::set<std::string> out;
        for (const auto& s : segments) out.insert(s.speaker);
        return out;
    }

    bool operator==(const SessionTranscript&) const = default;
};

struct Interval {
    double start = 0.0;
    double end = 0.0;

    double length() const { return end - start; }
    bool operator==(const Interval&) const = default;
};

/// Half-open regions [start, end) where at least two distinct reference
/// speakers talk at once. Disjoint, sorted, positive length.
struct OverlapTimeline {
    std::vector<Interval> intervals;

    double measure() const {
        double total = 0.0;
        for (const auto& iv : intervals) total += iv.length();
        return total;
    }

    /// Length of [start, end] ∩ timeline.
    double intersection(double start, double end) const {
        double total = 0.0;
        for (const auto& iv : intervals) {
            if (iv.start >= end) break;
            const double lo = std::max(start, iv.start);
            const double hi = std::min(end, iv.end);
            if (hi > lo) total += hi - lo;
        }
        return total;
    }

    bool contains(double t) const {
        auto it = std::upper_bound(intervals.begin(), intervals.end(), t,
                                   [](double v, const Interval& iv) { return v < iv.start; });
        if (it == intervals.begin()) return false;
        --it;
        return t >= it->start && t < it->end;
    }

    bool operator==(const OverlapTimeline&) const = default;
};

enum class OverlapClass { overlapped, single_speaker };

inline const char* to_string(OverlapClass c) {
    return c == OverlapClass::overlapped ? "overlapped" : "single_speaker";
}

// ─── Session construction ────────────────────────────────────────────────────

inline void validate_segment(const Segment& seg, const std::string& where) {
    if (seg.session_id.empty()) throw ValidationError(where + ": empty session_id");
    if (seg.speaker.empty()) throw ValidationError(where + ": empty speaker");
    if (!std::isfinite(seg.start_time) || !std::isfinite(seg.end_time))
        throw ValidationError(where + ": non-finite time");
    if (seg.start_time < 0.0)
        throw ValidationError(where + ": negative start_time " + std::to_string(seg.start_time));
    if (seg.end_time < seg.start_time)
        throw ValidationError(where + ": end_time " + std::to_string(seg.end_time) +
                              " < start_time " + std::to_string(seg.start_time));
}

/// Builds a session from segments in input order. Assigns `input_order`,
/// validates every segment and sorts by (start_time, speaker, text).
inline SessionTranscript make_session(std::string session_id, Side side,
                                      std::vector<Segment> segments) {
    for (std::size_t i = 0; i < segments.size(); ++i) {
        auto& seg = segments[i];
        if (seg.session_id.empty()) seg.session_id = session_id;
        if (seg.session_id != session_id)
            throw ValidationError("segment " + std::to_string(i) + " belongs to session '" +
                                  seg.session_id + "', expected '" + session_id + "'");
        seg.side = side;
        seg.input_order = i;
        validate_segment(seg, "segment " + std::to_string(i));
    }
    std::stable_sort(segments.begin(), segments.end(), [](const Segment& a, const Segment& b) {
        if (a.start_time != b.start_time) return a.start_time < b.start_time;
        if (a.speaker != b.speaker) return a.speaker < b.speaker;
        return a.text < b.text;
    });
    return SessionTranscript{std::move(session_id), side, std::move(segments)};
}

// ─── SegLST ──────────────────────────────────────────────────────────────────

namespace detail {

inline double seglst_time(const nlohmann::json& value, const char* field, std::size_t line) {
    if (value.is_number()) return value.get<double>();
    if (value.is_string()) {
        const auto& s = value.get_ref<const std::string&>();
        double out = 0.0;
        auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
        if (ec == std::errc() && ptr == s.data() + s.size()) return out;
    }
    throw SchemaError("line " + std::to_string(line) + ": field '" + field +
                      "' must be a number of seconds");
}

inline std::string seglst_string(const nlohmann::json& value, const char* field,
                                 std::size_t line) {
    if (!value.is_string())
        throw SchemaError("line " + std::to_string(line) + ": field '" + field +
                          "' must be a string");
    return value.get<std::string>();
}

} // namespace detail

/// Reads line-delimited SegLST. Blank lines are skipped. Returns one
/// transcript per session_id, ordered by session_id.
inline std::vector<SessionTranscript> parse_seglst(std::istream& in, Side side) {
    std::map<std::string, std::vector<Segment>> by_session;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.find_first_not_of(" \t\r\n") == std::string::npos) continue;

        nlohmann::json record;
        try {
            record = nlohmann::json::parse(line);
        } catch (const nlohmann::json::parse_error& e) {
            throw ParseError(line_no, std::string("malformed JSON: ") + e.what());
        }
        if (!record.is_object()) throw ParseError(line_no, "expected a JSON object");

        for (const char* field : {"session_id", "speaker", "start_time", "end_time", "words"}) {
            if (!record.contains(field))
                throw SchemaError("line " + std::to_string(line_no) + ": missing field '" +
                                  field + "'");
        }

        Segment seg;
        seg.session_id = detail::seglst_string(record["session_id"], "session_id", line_no);
        seg.speaker = detail::seglst_string(record["speaker"], "speaker", line_no);
        seg.start_time = detail::seglst_time(record["start_time"], "start_time", line_no);
        seg.end_time = detail::seglst_time(record["end_time"], "end_time", line_no);
        seg.text = detail::seglst_string(record["words"], "words", line_no);
        seg.side = side;
        validate_segment(seg, "line " + std::to_string(line_no) + " (session '" +
                                  seg.session_id + "', speaker '" + seg.speaker + "')");
        by_session[seg.session_id].push_back(std::move(seg));
    }

    std::vector<SessionTranscript> out;
    out.reserve(by_session.size());
    for (auto& [id, segs] : by_session) out.push_back(make_session(id, side, std::move(segs)));
    return out;
}

inline std::vector<SessionTranscript> parse_seglst_file(const std::string& path, Side side) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open '" + path + "'");
    return parse_seglst(in, side);
}

inline std::string to_seglst_line(const Segment& seg) {
    nlohmann::json j{{"session_id", seg.session_id},
                     {"speaker", seg.speaker},
                     {"start_time", seg.start_time},
                     {"end_time", seg.end_time},
                     {"words", seg.text}};
    return j.dump();
}

// ─── Word timing ─────────────────────────────────────────────────────────────

/// Splits the segment interval into n equal, contiguous word slots. The last
/// word always ends exactly at `end_time`.
inline std::vector<TimedWord> interpolate_word_times(const Segment& segment,
                                                     std::span<const std::string> tokens,
                                                     std::size_t segment_index = 0) {
    std::vector<TimedWord> words;
    const std::size_t n = tokens.size();
    if (n == 0) return words;
    words.reserve(n);

    const double start = segment.start_time;
    const double duration = segment.end_time - segment.start_time;
    auto boundary = [&](std::size_t i) {
        if (i == 0) return start;
        if (i == n) return segment.end_time;
        return std::min(segment.end_time, start + duration * static_cast<double>(i) /
                                                      static_cast<double>(n));
    };
    for (std::size_t i = 0; i < n; ++i) {
        words.push_back(TimedWord{tokens[i], boundary(i), boundary(i + 1), segment.speaker,
                                  segment_index});
    }
    return words;
}

// ─── Overlap ─────────────────────────────────────────────────────────────────

namespace detail {

/// Per-speaker union of positive-length segment intervals.
inline std::map<std::string, std::vector<Interval>> speaker_activity(
    const SessionTranscript& session) {
    std::map<std::string, std::vector<Interval>> raw;
    for (const auto& seg : session.segments) {
        if (seg.end_time > seg.start_time)
            raw[seg.speaker].push_back({seg.start_time, seg.end_time});
    }
    for (auto& [spk, ivs] : raw) {
        std::sort(ivs.begin(), ivs.end(), [](const Interval& a, const Interval& b) {
            return a.start < b.start || (a.start == b.start && a.end < b.end);
        });
        std::vector<Interval> merged;
        for (const auto& iv : ivs) {
            if (!merged.empty() && iv.start <= merged.back().end)
                merged.back().end = std::max(merged.back().end, iv.end);
            else
                merged.push_back(iv);
        }
        ivs = std::move(merged);
    }
    return raw;
}

/// Elementary sweep: calls fn(start, end, active_speaker_count) for each
/// maximal piece between consecutive activity boundaries.
template <class Fn>
void sweep_activity(const std::map<std::string, std::vector<Interval>>& activity, Fn&& fn) {
    std::vector<std::pair<double, int>> events;
    for (const auto& [spk, ivs] : activity) {
        for (const auto& iv : ivs) {
            events.emplace_back(iv.start, +1);
            events.emplace_back(iv.end, -1);
        }
    }
    // Ends sort before starts at the same instant: touching intervals do not overlap.
    std::sort(events.begin(), events.end());
    int active = 0;
    for (std::size_t i = 0; i < events.size();) {
        const double t = events[i].first;
        while (i < events.size() && events[i].first == t) active += events[i++].second;
        if (i < events.size() && events[i].first > t) fn(t, events[i].first, active);
    }
}

} // namespace detail

inline OverlapTimeline build_overlap_timeline(const SessionTranscript& reference) {
    OverlapTimeline timeline;
    detail::sweep_activity(detail::speaker_activity(reference),
                           [&](double lo, double hi, int active) {
                               if (active < 2) return;
                               if (!timeline.intervals.empty() &&
                                   timeline.intervals.back().end == lo)
                                   timeline.intervals.back().end = hi;
                               else
                                   timeline.intervals.push_back({lo, hi});
                           });
    return timeline;
}

inline OverlapClass classify_segment_overlap(const Segment& segment,
                                             const OverlapTimeline& timeline) {
    return timeline.intersection(segment.start_time, segment.end_time) > 0.0
               ? OverlapClass::overlapped
               : OverlapClass::single_speaker;
}

/// Reference speaker-time, total and the part spent in overlap. Each speaker
/// contributes the measure of the union of their own segments.
struct SpeechStats {
    double speaker_time = 0.0;
    double overlapped_speaker_time = 0.0;

    SpeechStats& operator+=(const SpeechStats& o) {
        speaker_time += o.speaker_time;
        overlapped_speaker_time += o.overlapped_speaker_time;
        return *this;
    }
    bool operator==(const SpeechStats&) const = default;
};

inline SpeechStats reference_speech_stats(const SessionTranscript& reference) {
    SpeechStats stats;
    detail::sweep_activity(detail::speaker_activity(reference),
                           [&](double lo, double hi, int active) {
                               const double d = (hi - lo) * active;
                               stats.speaker_time += d;
                               if (active >= 2) stats.overlapped_speaker_time += d;
                           });
    return stats;
}

} // namespace tcmeval
