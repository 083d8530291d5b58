#pragma once

#include <atomic>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <exception>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "tcmeval/diarization.hpp"
#include "tcmeval/error.hpp"
#include "tcmeval/normalize.hpp"
#include "tcmeval/semantic.hpp"
#include "tcmeval/transcript.hpp"
#include "tcmeval/wer.hpp"

namespace tcmeval {

// ─── Per-metric summaries (exact counts; rates are derived) ──────────────────

struct WerSummary {
    std::int64_t n_ref = 0;
    std::int64_t sub = 0;
    std::int64_t del = 0;
    std::int64_t ins = 0;

    static WerSummary from(const WerReport& r) {
        return {static_cast<std::int64_t>(r.n_ref), r.errors.sub, r.errors.del, r.errors.ins};
    }
    std::int64_t errors() const { return sub + del + ins; }
    double rate() const { return safe_ratio(static_cast<double>(errors()), static_cast<double>(n_ref)); }

    WerSummary& operator+=(const WerSummary& o) {
        n_ref += o.n_ref;
        sub += o.sub;
        del += o.del;
        ins += o.ins;
        return *this;
    }
    bool operator==(const WerSummary&) const = default;
};

struct SemSummary {
    std::int64_t n_ref = 0;
    double total_sem_err = 0.0;
    std::int64_t pairs = 0;

    static SemSummary from(const SemReport& r) {
        return {static_cast<std::int64_t>(r.n_ref), r.total_sem_err,
                static_cast<std::int64_t>(r.pairs.size())};
    }
    double rate() const { return safe_ratio(total_sem_err, static_cast<double>(n_ref)); }

    SemSummary& operator+=(const SemSummary& o) {
        n_ref += o.n_ref;
        total_sem_err += o.total_sem_err;
        pairs += o.pairs;
        return *this;
    }
    bool operator==(const SemSummary&) const = default;
};

struct DerSummary {
    double scored_speech = 0.0;
    double miss = 0.0;
    double false_alarm = 0.0;
    double confusion = 0.0;

    static DerSummary from(const DerReport& r) {
        return {r.scored_speech, r.miss, r.false_alarm, r.confusion};
    }
    std::optional<double> rate() const {
        if (scored_speech <= 0.0) return std::nullopt;
        return (miss + false_alarm + confusion) / scored_speech;
    }

    DerSummary& operator+=(const DerSummary& o) {
        scored_speech += o.scored_speech;
        miss += o.miss;
        false_alarm += o.false_alarm;
        confusion += o.confusion;
        return *this;
    }
    bool operator==(const DerSummary&) const = default;
};

struct CountSummary {
    std::int64_t sessions = 0;
    std::int64_t exact = 0;
    std::int64_t abs_error = 0;
    std::int64_t true_count = 0; // summed over sessions in the aggregate
    std::int64_t estimated = 0;

    static CountSummary from(const SpeakerCount& c) {
        const auto t = static_cast<std::int64_t>(c.true_count);
        const auto e = static_cast<std::int64_t>(c.estimated);
        return {1, t == e ? 1 : 0, t > e ? t - e : e - t, t, e};
    }
    double accuracy() const { return sessions ? static_cast<double>(exact) / static_cast<double>(sessions) : 0.0; }
    double mae() const { return sessions ? static_cast<double>(abs_error) / static_cast<double>(sessions) : 0.0; }

    CountSummary& operator+=(const CountSummary& o) {
        sessions += o.sessions;
        exact += o.exact;
        abs_error += o.abs_error;
        true_count += o.true_count;
        estimated += o.estimated;
        return *this;
    }
    bool operator==(const CountSummary&) const = default;
};

struct MetricSet {
    std::optional<WerSummary> cpwer;
    std::optional<WerSummary> tcpwer;
    std::optional<OverlapDecomposition> decomposition;
    std::optional<SemSummary> tcpsemer;
    std::optional<DerSummary> der;
    std::optional<CountSummary> speaker_count;
    SpeechStats speech;
    std::int64_t ref_speakers = 0; // per session; 0 in the aggregate

    bool operator==(const MetricSet&) const = default;
};

// ─── Configuration ───────────────────────────────────────────────────────────

struct EvalConfig {
    bool cpwer = false;
    bool tcpwer = false;
    bool decompose = false;
    bool tcpsemer = false;
    bool der = false;
    bool speaker_count = false;

    NormKind normalizer = NormKind::forgiving;
    std::set<std::string> filler_lexicon = default_filler_lexicon();
    double collar = 5.0;
    CollarMode collar_mode = CollarMode::reference_only;
    double der_collar = 0.25;
    std::string embedder = "builtin";
    bool clamp = true;
    InsertAttachment attach = InsertAttachment::following;

    static EvalConfig all() {
        EvalConfig c;
        c.cpwer = c.tcpwer = c.decompose = c.tcpsemer = c.der = c.speaker_count = true;
        return c;
    }
    NormScheme scheme() const { return NormScheme::make(normalizer, filler_lexicon); }

    /// Every scoring knob other than the normalizer and the metric selection.
    bool knobs_match_except_normalizer(const EvalConfig& o) const {
        return collar == o.collar && collar_mode == o.collar_mode && der_collar == o.der_collar &&
               embedder == o.embedder && clamp == o.clamp && attach == o.attach;
    }
    bool operator==(const EvalConfig&) const = default;
};

struct MetricReport {
    EvalConfig config;
    std::map<std::string, MetricSet> sessions;
    MetricSet aggregate;
    std::map<std::string, std::vector<std::string>> excluded; // metric → session ids

    bool operator==(const MetricReport&) const = default;
};

// ─── Scoring ─────────────────────────────────────────────────────────────────

/// Scores one session. `provider` is only consulted for tcpSemER.
inline MetricSet score_session(const SessionTranscript& ref, const SessionTranscript& hyp,
                               const EvalConfig& cfg, EmbeddingProvider& provider) {
    const auto scheme = cfg.scheme();
    MetricSet m;
    m.speech = reference_speech_stats(ref);
    m.ref_speakers = static_cast<std::int64_t>(true_speaker_count(ref));

    if (cfg.cpwer) m.cpwer = WerSummary::from(cpwer(ref, hyp, scheme));
    if (cfg.tcpwer || cfg.decompose || cfg.tcpsemer) {
        const auto report = tcpwer(ref, hyp, cfg.collar, scheme, cfg.collar_mode);
        if (cfg.tcpwer) m.tcpwer = WerSummary::from(report);
        if (cfg.decompose) m.decomposition = decompose_overlap(report, ref);
        if (cfg.tcpsemer)
            m.tcpsemer = SemSummary::from(
                tcpsemer_from_report(report, ref, provider, SemOptions{cfg.clamp, cfg.attach}));
    }
    if (cfg.der) m.der = DerSummary::from(der(ref, hyp, cfg.der_collar));
    if (cfg.speaker_count)
        m.speaker_count = CountSummary::from({true_speaker_count(ref), estimated_speaker_count(hyp)});
    return m;
}

/// Micro-aggregation: quantities are summed across sessions before any rate is
/// formed. Sessions whose metric is undefined (empty reference, nothing
/// scorable for DER) are left out of that metric and listed in `excluded`.
inline MetricReport aggregate(std::map<std::string, MetricSet> sessions, EvalConfig config = {}) {
    if (sessions.empty()) throw ParameterError("aggregate needs at least one session");
    MetricReport out;
    out.config = std::move(config);
    auto& agg = out.aggregate;

    auto fold = [&](const char* name, const auto& field, auto& target, bool defined,
                    const std::string& id) {
        if (!field) return;
        if (!defined) {
            out.excluded[name].push_back(id);
            if (!target) target.emplace();
            return;
        }
        if (!target) target.emplace();
        *target += *field;
    };

    for (const auto& [id, m] : sessions) {
        fold("cpwer", m.cpwer, agg.cpwer, m.cpwer && m.cpwer->n_ref > 0, id);
        fold("tcpwer", m.tcpwer, agg.tcpwer, m.tcpwer && m.tcpwer->n_ref > 0, id);
        fold("decomposition", m.decomposition, agg.decomposition,
             m.decomposition && m.decomposition->n_ref > 0, id);
        fold("tcpsemer", m.tcpsemer, agg.tcpsemer, m.tcpsemer && m.tcpsemer->n_ref > 0, id);
        fold("der", m.der, agg.der, m.der && m.der->scored_speech > 0.0, id);
        fold("speaker_count", m.speaker_count, agg.speaker_count, true, id);
        agg.speech += m.speech;
    }
    out.sessions = std::move(sessions);
    return out;
}

/// Scores every session id found on either side (a missing side counts as an
/// empty transcript) using `jobs` worker threads, then aggregates.
inline MetricReport score_corpus(const std::vector<SessionTranscript>& refs,
                                 const std::vector<SessionTranscript>& hyps, const EvalConfig& cfg,
                                 EmbeddingProvider& provider, unsigned jobs = 1) {
    std::map<std::string, std::pair<SessionTranscript, SessionTranscript>> work;
    for (const auto& r : refs) work[r.session_id].first = r;
    for (const auto& h : hyps) work[h.session_id].second = h;
    if (work.empty()) throw InputError("no sessions to score");

    std::vector<const std::string*> ids;
    for (auto& [id, p] : work) {
        if (p.first.session_id.empty()) p.first = SessionTranscript{id, Side::reference, {}};
        if (p.second.session_id.empty()) p.second = SessionTranscript{id, Side::hypothesis, {}};
        ids.push_back(&id);
    }

    CachedEmbedder cached(provider);
    std::vector<MetricSet> results(ids.size());
    std::vector<std::exception_ptr> failures(ids.size());
    std::atomic<std::size_t> next{0};
    auto worker = [&] {
        for (std::size_t i; (i = next.fetch_add(1)) < ids.size();) {
            try {
                const auto& [ref, hyp] = work.at(*ids[i]);
                results[i] = score_session(ref, hyp, cfg, cached);
            } catch (...) {
                failures[i] = std::current_exception();
            }
        }
    };
    jobs = std::max(1u, std::min<unsigned>(jobs, static_cast<unsigned>(ids.size())));
    if (jobs == 1) {
        worker();
    } else {
        std::vector<std::thread> pool;
        for (unsigned t = 0; t < jobs; ++t) pool.emplace_back(worker);
        for (auto& t : pool) t.join();
    }
    for (const auto& f : failures)
        if (f) std::rethrow_exception(f);

    std::map<std::string, MetricSet> sessions;
    for (std::size_t i = 0; i < ids.size(); ++i) sessions.emplace(*ids[i], std::move(results[i]));
    return aggregate(std::move(sessions), cfg);
}

// ─── Speaker-count breakdown ─────────────────────────────────────────────────

struct BreakdownRow {
    std::int64_t speaker_count = 0;
    std::int64_t sessions = 0;
    WerSummary wer;
    SpeechStats speech;

    double del_rate() const { return safe_ratio(static_cast<double>(wer.del), static_cast<double>(wer.n_ref)); }
    double ins_rate() const { return safe_ratio(static_cast<double>(wer.ins), static_cast<double>(wer.n_ref)); }
    double sub_rate() const { return safe_ratio(static_cast<double>(wer.sub), static_cast<double>(wer.n_ref)); }
    double overlap_ratio() const { return safe_ratio(speech.overlapped_speaker_time, speech.speaker_time); }
};

/// tcpWER deletion/insertion/substitution rates and overlap ratio, grouped by
/// the number of reference speakers. Sessions without tcpWER or with an empty
/// reference are skipped.
inline std::vector<BreakdownRow> error_breakdown(const MetricReport& report) {
    std::map<std::int64_t, BreakdownRow> buckets;
    for (const auto& [id, m] : report.sessions) {
        if (!m.tcpwer || m.tcpwer->n_ref == 0) continue;
        auto& row = buckets[m.ref_speakers];
        row.speaker_count = m.ref_speakers;
        ++row.sessions;
        row.wer += *m.tcpwer;
        row.speech += m.speech;
    }
    std::vector<BreakdownRow> out;
    for (auto& [k, row] : buckets) out.push_back(row);
    return out;
}

// ─── Normalization sensitivity ───────────────────────────────────────────────

struct NamedReport {
    std::string system;
    MetricReport report;
};

struct SensitivityRow {
    std::string metric; // "tcpwer" or "tcpsemer"
    std::vector<std::string> systems;
    std::vector<double> per_system_rel_change;
    double mean = 0.0;
    double std = 0.0; // sample standard deviation; 0 with fewer than two systems
    std::vector<std::string> warnings;
};

inline std::pair<double, double> mean_and_sample_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    double mean = 0.0;
    for (double x : v) mean += x;
    mean /= static_cast<double>(v.size());
    if (v.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double x : v) ss += (x - mean) * (x - mean);
    return {mean, std::sqrt(ss / static_cast<double>(v.size() - 1))};
}

/// Relative change (B − A) / A of corpus tcpWER and tcpSemER per system when
/// moving from the scheme-A reports to the scheme-B reports.
inline std::vector<SensitivityRow> sensitivity(const std::vector<NamedReport>& a,
                                               const std::vector<NamedReport>& b) {
    std::map<std::string, const MetricReport*> by_a, by_b;
    for (const auto& r : a) by_a[r.system] = &r.report;
    for (const auto& r : b) by_b[r.system] = &r.report;
    std::set<std::string> sa, sb;
    for (const auto& [k, v] : by_a) sa.insert(k);
    for (const auto& [k, v] : by_b) sb.insert(k);
    if (sa != sb) throw ValidationError("sensitivity: system sets differ between A and B");
    if (sa.empty()) throw ValidationError("sensitivity: no systems");

    const EvalConfig& ref_cfg = by_a.begin()->second->config;
    for (const auto& [sys, rep] : by_a) {
        if (!rep->config.knobs_match_except_normalizer(ref_cfg) ||
            !by_b.at(sys)->config.knobs_match_except_normalizer(ref_cfg))
            throw ValidationError("sensitivity: report '" + sys +
                                  "' was scored with different knobs");
    }

    auto metric_rate = [](const MetricSet& m, const std::string& metric) -> std::optional<double> {
        if (metric == "tcpwer" && m.tcpwer) return m.tcpwer->rate();
        if (metric == "tcpsemer" && m.tcpsemer) return m.tcpsemer->rate();
        return std::nullopt;
    };

    std::vector<SensitivityRow> rows;
    for (const std::string metric : {"tcpwer", "tcpsemer"}) {
        SensitivityRow row;
        row.metric = metric;
        for (const auto& [sys, rep_a] : by_a) {
            const auto va = metric_rate(rep_a->aggregate, metric);
            const auto vb = metric_rate(by_b.at(sys)->aggregate, metric);
            if (!va || !vb) {
                row.warnings.push_back(sys + ": " + metric + " missing, excluded");
                continue;
            }
            if (!(*va > 0.0) || !std::isfinite(*va) || !std::isfinite(*vb)) {
                row.warnings.push_back(sys + ": zero or undefined baseline, excluded");
                continue;
            }
            row.systems.push_back(sys);
            row.per_system_rel_change.push_back((*vb - *va) / *va);
        }
        std::tie(row.mean, row.std) = mean_and_sample_std(row.per_system_rel_change);
        rows.push_back(std::move(row));
    }
    return rows;
}

// ─── Serialization ───────────────────────────────────────────────────────────

inline std::string format_pct(double rate) {
    if (!std::isfinite(rate)) return rate > 0 ? "inf" : "nan";
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", rate * 100.0);
    return buf;
}

namespace detail {

inline nlohmann::json rate_json(double r) {
    return std::isfinite(r) ? nlohmann::json(r) : nlohmann::json(nullptr);
}

inline nlohmann::json to_json(const MetricSet& m) {
    using nlohmann::json;
    json j = json::object();
    auto wer = [](const WerSummary& w) {
        return json{{"n_ref", w.n_ref}, {"sub", w.sub}, {"del", w.del}, {"ins", w.ins},
                    {"errors", w.errors()}, {"rate", rate_json(w.rate())}, {"rate_pct", format_pct(w.rate())}};
    };
    if (m.cpwer) j["cpwer"] = wer(*m.cpwer);
    if (m.tcpwer) j["tcpwer"] = wer(*m.tcpwer);
    if (m.decomposition) {
        const auto& d = *m.decomposition;
        j["decomposition"] = json{
            {"e_ov", d.e_ov}, {"e_1spk", d.e_1spk}, {"n_ref", d.n_ref},
            {"n_ref_ov", d.n_ref_ov}, {"n_ref_1spk", d.n_ref_1spk},
            {"tcpwer_ov", rate_json(d.tcpwer_ov())}, {"tcpwer_1spk", rate_json(d.tcpwer_1spk())},
            {"tcpwer_ov_norm", rate_json(d.tcpwer_ov_norm())},
            {"tcpwer_1spk_norm", rate_json(d.tcpwer_1spk_norm())},
            {"tcpwer_ov_pct", format_pct(d.tcpwer_ov())}, {"tcpwer_1spk_pct", format_pct(d.tcpwer_1spk())},
            {"tcpwer_ov_norm_pct", format_pct(d.tcpwer_ov_norm())},
            {"tcpwer_1spk_norm_pct", format_pct(d.tcpwer_1spk_norm())}};
    }
    if (m.tcpsemer) {
        const auto& s = *m.tcpsemer;
        j["tcpsemer"] = json{{"n_ref", s.n_ref}, {"total_sem_err", s.total_sem_err},
                             {"pairs", s.pairs}, {"rate", rate_json(s.rate())},
                             {"rate_pct", format_pct(s.rate())}};
    }
    if (m.der) {
        const auto& d = *m.der;
        const auto r = d.rate();
        j["der"] = json{{"scored_speech", d.scored_speech}, {"miss", d.miss},
                        {"false_alarm", d.false_alarm}, {"confusion", d.confusion},
                        {"rate", r ? json(*r) : json(nullptr)},
                        {"rate_pct", r ? format_pct(*r) : "undefined"}};
    }
    if (m.speaker_count) {
        const auto& c = *m.speaker_count;
        j["speaker_count"] = json{{"sessions", c.sessions}, {"exact", c.exact},
                                  {"abs_error", c.abs_error}, {"true", c.true_count},
                                  {"estimated", c.estimated}, {"accuracy", c.accuracy()},
                                  {"mae", c.mae()}};
    }
    j["speech"] = json{{"speaker_time", m.speech.speaker_time},
                       {"overlapped_speaker_time", m.speech.overlapped_speaker_time},
                       {"overlap_ratio", safe_ratio(m.speech.overlapped_speaker_time, m.speech.speaker_time)}};
    j["ref_speakers"] = m.ref_speakers;
    return j;
}

inline MetricSet metric_set_from_json(const nlohmann::json& j) {
    MetricSet m;
    auto wer = [](const nlohmann::json& w) {
        return WerSummary{w.at("n_ref").get<std::int64_t>(), w.at("sub").get<std::int64_t>(),
                          w.at("del").get<std::int64_t>(), w.at("ins").get<std::int64_t>()};
    };
    if (j.contains("cpwer")) m.cpwer = wer(j["cpwer"]);
    if (j.contains("tcpwer")) m.tcpwer = wer(j["tcpwer"]);
    if (j.contains("decomposition")) {
        const auto& d = j["decomposition"];
        m.decomposition = OverlapDecomposition{
            d.at("e_ov").get<std::int64_t>(), d.at("e_1spk").get<std::int64_t>(),
            d.at("n_ref").get<std::int64_t>(), d.at("n_ref_ov").get<std::int64_t>(),
            d.at("n_ref_1spk").get<std::int64_t>()};
    }
    if (j.contains("tcpsemer")) {
        const auto& s = j["tcpsemer"];
        m.tcpsemer = SemSummary{s.at("n_ref").get<std::int64_t>(), s.at("total_sem_err").get<double>(),
                                s.at("pairs").get<std::int64_t>()};
    }
    if (j.contains("der")) {
        const auto& d = j["der"];
        m.der = DerSummary{d.at("scored_speech").get<double>(), d.at("miss").get<double>(),
                           d.at("false_alarm").get<double>(), d.at("confusion").get<double>()};
    }
    if (j.contains("speaker_count")) {
        const auto& c = j["speaker_count"];
        m.speaker_count = CountSummary{c.at("sessions").get<std::int64_t>(), c.at("exact").get<std::int64_t>(),
                                       c.at("abs_error").get<std::int64_t>(), c.at("true").get<std::int64_t>(),
                                       c.at("estimated").get<std::int64_t>()};
    }
    if (j.contains("speech")) {
        m.speech.speaker_time = j["speech"].at("speaker_time").get<double>();
        m.speech.overlapped_speaker_time = j["speech"].at("overlapped_speaker_time").get<double>();
    }
    m.ref_speakers = j.value("ref_speakers", std::int64_t{0});
    return m;
}

} // namespace detail

inline nlohmann::json config_to_json(const EvalConfig& c) {
    using nlohmann::json;
    json metrics = json::array();
    if (c.cpwer) metrics.push_back("cpwer");
    if (c.tcpwer) metrics.push_back("tcpwer");
    if (c.decompose) metrics.push_back("decomposition");
    if (c.tcpsemer) metrics.push_back("tcpsemer");
    if (c.der) metrics.push_back("der");
    if (c.speaker_count) metrics.push_back("speaker_count");
    return json{{"metrics", metrics},
                {"normalizer", to_string(c.normalizer)},
                {"filler_lexicon", c.filler_lexicon},
                {"collar", c.collar},
                {"collar_mode", to_string(c.collar_mode)},
                {"der_collar", c.der_collar},
                {"embedder", c.embedder},
                {"clamp_similarity", c.clamp},
                {"insert_attachment", to_string(c.attach)},
                // Fixed conventions, echoed so reports are self-describing.
                {"aggregation", "micro"},
                {"word_timing", "equal_division"},
                {"overlap_classification", "segment"},
                {"bracket_tags_verbatim", "keep_inner_token"},
                {"embedder_input", "normalized_text"},
                {"der_overlap", "scored"},
                {"der_collar_scope", "reference_boundaries"}};
}

inline EvalConfig config_from_json(const nlohmann::json& j) {
    EvalConfig c;
    for (const auto& m : j.at("metrics")) {
        const auto s = m.get<std::string>();
        if (s == "cpwer") c.cpwer = true;
        else if (s == "tcpwer") c.tcpwer = true;
        else if (s == "decomposition") c.decompose = true;
        else if (s == "tcpsemer") c.tcpsemer = true;
        else if (s == "der") c.der = true;
        else if (s == "speaker_count") c.speaker_count = true;
    }
    c.normalizer = parse_norm_kind(j.at("normalizer").get<std::string>());
    c.filler_lexicon = j.at("filler_lexicon").get<std::set<std::string>>();
    c.collar = j.at("collar").get<double>();
    c.collar_mode = parse_collar_mode(j.at("collar_mode").get<std::string>());
    c.der_collar = j.at("der_collar").get<double>();
    c.embedder = j.at("embedder").get<std::string>();
    c.clamp = j.at("clamp_similarity").get<bool>();
    c.attach = parse_insert_attachment(j.at("insert_attachment").get<std::string>());
    return c;
}

inline nlohmann::json to_json(const MetricReport& r) {
    using nlohmann::json;
    json sessions = json::object();
    for (const auto& [id, m] : r.sessions) sessions[id] = detail::to_json(m);
    json breakdown = json::array();
    for (const auto& row : error_breakdown(r)) {
        breakdown.push_back(json{{"speaker_count", row.speaker_count},
                                 {"sessions", row.sessions},
                                 {"n_ref", row.wer.n_ref},
                                 {"del_rate", detail::rate_json(row.del_rate())},
                                 {"ins_rate", detail::rate_json(row.ins_rate())},
                                 {"sub_rate", detail::rate_json(row.sub_rate())},
                                 {"overlap_ratio", detail::rate_json(row.overlap_ratio())}});
    }
    return json{{"config", config_to_json(r.config)},
                {"excluded", r.excluded},
                {"aggregate", detail::to_json(r.aggregate)},
                {"sessions", sessions},
                {"breakdown", breakdown}};
}

inline MetricReport report_from_json(const nlohmann::json& j) {
    try {
        MetricReport r;
        r.config = config_from_json(j.at("config"));
        r.excluded = j.value("excluded", std::map<std::string, std::vector<std::string>>{});
        r.aggregate = detail::metric_set_from_json(j.at("aggregate"));
        for (const auto& [id, m] : j.at("sessions").items())
            r.sessions[id] = detail::metric_set_from_json(m);
        return r;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("malformed report: ") + e.what());
    }
}

/// Flat tab-separated table: one row per session plus a final aggregate row.
/// Machine fields at full precision; empty cell where a metric was not run.
inline void write_tsv(std::ostream& os, const MetricReport& r) {
    auto num = [](std::optional<double> v) -> std::string {
        if (!v) return "";
        if (!std::isfinite(*v)) return *v > 0 ? "inf" : "nan";
        char buf[64];
        std::snprintf(buf, sizeof buf, "%.17g", *v);
        return buf;
    };
    os << "session\tref_speakers\tcpwer\ttcpwer\ttcpwer_ov\ttcpwer_1spk\ttcpwer_ov_norm\t"
          "tcpwer_1spk_norm\ttcpsemer\tder\ttrue_speakers\testimated_speakers\toverlap_ratio\n";
    auto row = [&](const std::string& name, const MetricSet& m) {
        os << name << '\t' << m.ref_speakers << '\t'
           << num(m.cpwer ? std::optional(m.cpwer->rate()) : std::nullopt) << '\t'
           << num(m.tcpwer ? std::optional(m.tcpwer->rate()) : std::nullopt) << '\t'
           << num(m.decomposition ? std::optional(m.decomposition->tcpwer_ov()) : std::nullopt) << '\t'
           << num(m.decomposition ? std::optional(m.decomposition->tcpwer_1spk()) : std::nullopt) << '\t'
           << num(m.decomposition ? std::optional(m.decomposition->tcpwer_ov_norm()) : std::nullopt) << '\t'
           << num(m.decomposition ? std::optional(m.decomposition->tcpwer_1spk_norm()) : std::nullopt) << '\t'
           << num(m.tcpsemer ? std::optional(m.tcpsemer->rate()) : std::nullopt) << '\t'
           << num(m.der ? m.der->rate() : std::nullopt) << '\t'
           << (m.speaker_count ? std::to_string(m.speaker_count->true_count) : "") << '\t'
           << (m.speaker_count ? std::to_string(m.speaker_count->estimated) : "") << '\t'
           << num(safe_ratio(m.speech.overlapped_speaker_time, m.speech.speaker_time)) << '\n';
    };
    for (const auto& [id, m] : r.sessions) row(id, m);
    row("_aggregate_", r.aggregate);
}

inline nlohmann::json to_json(const std::vector<SensitivityRow>& rows) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : rows) {
        out.push_back({{"metric", r.metric},
                       {"systems", r.systems},
                       {"per_system_rel_change", r.per_system_rel_change},
                       {"mean", r.mean},
                       {"std", r.std},
                       {"warnings", r.warnings}});
    }
    return out;
}

} // namespace tcmeval
