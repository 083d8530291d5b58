#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support/fixtures.hpp"

using namespace tcmeval;
using namespace tcmeval::testing;

namespace {

const NormScheme kVerbatim = NormScheme::verbatim();

double one_pair_wer(const std::string& r, const std::string& h) {
    return cpwer(ref_session({seg("A", 0, 5, r)}), hyp_session({seg("A", 0, 5, h)}), kVerbatim).rate();
}

} // namespace

TEST_CASE("single-utterance WER fixtures", "[wer]") {
    CHECK(format_pct(one_pair_wer("it is lovely", "it is not")) == "33.33");
    CHECK(one_pair_wer("yeah that is a mat", "yeah that is a lot") == Catch::Approx(0.20));
    CHECK(one_pair_wer("that is a great idea chris", "that is a great idea chris yeah yeah yeah") ==
          Catch::Approx(0.50));
    CHECK(one_pair_wer("or maybe like a slogan", "that could be like a slogan") == Catch::Approx(0.60));
}

TEST_CASE("cpwer examples", "[wer]") {
    SECTION("permuted hypothesis labels") {
        const auto ref = ref_session({seg("A", 0, 2, "hello there"), seg("B", 2, 4, "good morning")});
        const auto hyp = hyp_session({seg("Y", 0, 2, "hello there"), seg("X", 2, 4, "good morning")});
        const auto r = cpwer(ref, hyp, kVerbatim);
        CHECK(r.rate() == 0.0);
        CHECK(r.n_ref == 4);
    }
    SECTION("merged hypothesis speaker") {
        const auto ref = ref_session({seg("A", 0, 1, "a b"), seg("B", 1, 2, "c")});
        const auto hyp = hyp_session({seg("X", 0, 2, "a b c")});
        const auto r = cpwer(ref, hyp, kVerbatim);
        CHECK(r.errors.total() == 2);
        CHECK(r.rate() == Catch::Approx(2.0 / 3));
        CHECK(r.assignment.pairs[0] == SpeakerPair{"A", "X", 1});
        CHECK(r.assignment.pairs[1] == SpeakerPair{"B", std::nullopt, 1});
    }
    SECTION("session mismatch") {
        CHECK_THROWS_AS(cpwer(ref_session({seg("A", 0, 1, "x")}),
                              hyp_session({seg("A", 0, 1, "x", "s2")}, "s2"), kVerbatim),
                        ValidationError);
    }
    SECTION("empty reference") {
        const auto ref = ref_session({seg("A", 0, 1, "")});
        const auto empty_hyp = hyp_session({seg("A", 0, 1, "")});
        CHECK(cpwer(ref, empty_hyp, kVerbatim).rate() == 0.0);
        CHECK_FALSE(cpwer(ref, empty_hyp, kVerbatim).defined());
        CHECK(std::isinf(cpwer(ref, hyp_session({seg("A", 0, 1, "x")}), kVerbatim).rate()));
    }
}

TEST_CASE("tcpwer examples", "[wer][time]") {
    SECTION("identical") {
        const auto s = ref_session({seg("A", 0, 2, "a b"), seg("B", 1, 3, "c d")});
        CHECK(tcpwer(s, hyp_session(s.segments), 5.0, kVerbatim).rate() == 0.0);
    }
    SECTION("far-apart match costs two errors") {
        const auto r = tcpwer(ref_session({seg("A", 0, 1, "hello")}), hyp_session({seg("A", 10, 11, "hello")}),
                              5.0, kVerbatim);
        CHECK(r.errors == ErrorCounts{0, 1, 1});
        CHECK(r.rate() == 2.0);
        CHECK(r.time_constrained);
        CHECK(r.collar == 5.0);
    }
}

namespace {

/// Padded-permutation × exhaustive constrained alignment; streams built here
/// from segments directly.
std::int64_t brute_force_tcpwer(const SessionTranscript& ref, const SessionTranscript& hyp, double collar) {
    auto streams = [](const SessionTranscript& s) {
        std::map<std::string, std::vector<TimedWord>> out;
        std::vector<Segment> segs = s.segments;
        std::stable_sort(segs.begin(), segs.end(),
                         [](const Segment& a, const Segment& b) { return a.start_time < b.start_time; });
        for (std::size_t i = 0; i < segs.size(); ++i) {
            const auto toks = normalize(segs[i].text, NormScheme::verbatim());
            const double w = toks.empty() ? 0 : segs[i].duration() / toks.size();
            for (std::size_t k = 0; k < toks.size(); ++k) {
                const double st = segs[i].start_time + w * k;
                const double en = k + 1 == toks.size() ? segs[i].end_time : segs[i].start_time + w * (k + 1);
                out[segs[i].speaker].push_back(tw(toks[k], st, en));
            }
        }
        std::vector<std::vector<TimedWord>> v;
        for (auto& [k, x] : out) v.push_back(x);
        return v;
    };
    auto r = streams(ref), h = streams(hyp);
    const std::size_t n = std::max(r.size(), h.size());
    r.resize(n);
    h.resize(n);
    std::vector<std::vector<std::int64_t>> m(n, std::vector<std::int64_t>(n));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) m[i][j] = brute_force_tc_cost(r[i], h[j], collar);
    return brute_force_assignment(m);
}

} // namespace

TEST_CASE("tcpwer matches brute force on small 3-speaker sessions", "[wer][oracle]") {
    std::mt19937 rng(21);
    SessionGenParams p;
    p.min_speakers = p.max_speakers = 3;
    p.min_turns = 3;
    p.max_turns = 4;
    p.max_words = 2;
    for (int trial = 0; trial < 40; ++trial) {
        auto [ref, hyp] = random_session_pair(rng, "s1", p);
        INFO("trial " << trial);
        CHECK(tcpwer(ref, hyp, 5.0, kVerbatim).errors.total() == brute_force_tcpwer(ref, hyp, 5.0));
        CHECK(tcpwer(ref, hyp, 0.5, kVerbatim).errors.total() == brute_force_tcpwer(ref, hyp, 0.5));
    }
}

TEST_CASE("tcpwer bounds and collar behaviour on random sessions", "[wer][property]") {
    std::mt19937 rng(31);
    for (int trial = 0; trial < 100; ++trial) {
        auto [ref, hyp] = random_session_pair(rng);
        const auto cp = cpwer(ref, hyp, kVerbatim);
        std::int64_t last = std::numeric_limits<std::int64_t>::max();
        for (double c : {0.0, 1.0, 2.0, 5.0, 10.0}) {
            const auto tc = tcpwer(ref, hyp, c, kVerbatim);
            CHECK(tc.errors.total() >= cp.errors.total());
            CHECK(tc.errors.total() <= last);
            CHECK(tc.n_ref == cp.n_ref);
            last = tc.errors.total();
        }
        const double span = session_span(ref, hyp);
        CHECK(tcpwer(ref, hyp, span, kVerbatim).errors.total() == cp.errors.total());
        CHECK(tcpwer(ref, hyp, std::numeric_limits<double>::infinity(), kVerbatim).errors.total() ==
              cp.errors.total());
    }
}

TEST_CASE("decompose_overlap degenerate timelines", "[wer][decomposition]") {
    SECTION("no overlap") {
        const auto ref = ref_session({seg("A", 0, 2, "a b"), seg("B", 3, 5, "c d")});
        const auto hyp = hyp_session({seg("A", 0, 2, "a x"), seg("B", 3, 5, "c")});
        const auto rep = tcpwer(ref, hyp, 5.0, kVerbatim);
        const auto d = decompose_overlap(rep, ref);
        CHECK(d.e_ov == 0);
        CHECK(d.e_1spk == 2);
        CHECK(d.tcpwer_1spk() == rep.rate());
        CHECK(d.n_ref_ov == 0);
        CHECK(d.tcpwer_ov_norm() == 0.0);
    }
    SECTION("everything overlapped") {
        const auto ref = ref_session({seg("A", 0, 4, "a b"), seg("B", 0, 4, "c d")});
        const auto hyp = hyp_session({seg("A", 0, 4, "a"), seg("B", 0, 4, "c d e")});
        const auto rep = tcpwer(ref, hyp, 5.0, kVerbatim);
        const auto d = decompose_overlap(rep, ref);
        CHECK(d.e_1spk == 0);
        CHECK(d.e_ov == 2);
        CHECK(d.tcpwer_ov_norm() == rep.rate());
    }
    SECTION("insertion outside every reference segment uses the timeline") {
        const auto ref = ref_session({seg("A", 0, 4, "a"), seg("B", 2, 4, "b"), seg("A", 10, 12, "c")});
        const auto hyp = hyp_session({seg("A", 0, 4, "a"), seg("B", 2, 4, "b"), seg("A", 10, 12, "c"),
                                      seg("A", 20, 21, "z")});
        const auto d = decompose_overlap(tcpwer(ref, hyp, 5.0, kVerbatim), ref);
        CHECK(d.e_1spk == 1);
        CHECK(d.e_ov == 0);
    }
    SECTION("insertions avoid a region without reference words") {
        const auto ref = ref_session({seg("A", 0, 4, "a"), seg("B", 0, 4, "b")});
        const auto hyp = hyp_session({seg("A", 0, 4, "a"), seg("B", 0, 4, "b"), seg("A", 20, 21, "z")});
        const auto d = decompose_overlap(tcpwer(ref, hyp, 5.0, kVerbatim), ref);
        CHECK(d.n_ref_1spk == 0);
        CHECK(d.e_1spk == 0);
        CHECK(d.e_ov == 1);
    }
    SECTION("report without alignments") {
        const auto ref = ref_session({seg("A", 0, 1, "a")});
        auto rep = tcpwer(ref, hyp_session(ref.segments), 5.0, kVerbatim);
        rep.strip_alignments();
        CHECK_THROWS_AS(decompose_overlap(rep, ref), ValidationError);
    }
}

TEST_CASE("decompose_overlap partitions errors and reference words", "[wer][decomposition][property]") {
    std::mt19937 rng(41);
    for (int trial = 0; trial < 150; ++trial) {
        auto [ref, hyp] = random_session_pair(rng);
        const auto rep = tcpwer(ref, hyp, 5.0, kVerbatim);
        const auto d = decompose_overlap(rep, ref);
        CHECK(d.e_ov + d.e_1spk == rep.errors.total());
        CHECK(d.n_ref_ov + d.n_ref_1spk == d.n_ref);
        CHECK(d.n_ref == static_cast<std::int64_t>(rep.n_ref));
        CHECK(d.tcpwer_ov() + d.tcpwer_1spk() == Catch::Approx(rep.rate()).epsilon(1e-12));
        if (d.n_ref > 0) {
            CHECK(std::abs(d.tcpwer_ov() - d.tcpwer_ov_norm() * d.n_ref_ov / d.n_ref) < 1e-12);
            CHECK(std::abs(d.tcpwer_1spk() - d.tcpwer_1spk_norm() * d.n_ref_1spk / d.n_ref) < 1e-12);
        }
    }
}

TEST_CASE("relabeling speakers leaves WER unchanged", "[wer][property]") {
    std::mt19937 rng(51);
    for (int trial = 0; trial < 50; ++trial) {
        auto [ref, hyp] = random_session_pair(rng);
        const auto hyp2 = random_relabel(hyp, rng);
        const auto ref2 = random_relabel(ref, rng);
        const auto base = tcpwer(ref, hyp, 5.0, kVerbatim);
        CHECK(tcpwer(ref, hyp2, 5.0, kVerbatim).errors == base.errors);
        CHECK(tcpwer(ref2, hyp, 5.0, kVerbatim).errors == base.errors);
        CHECK(decompose_overlap(tcpwer(ref2, hyp, 5.0, kVerbatim), ref2) == decompose_overlap(base, ref));
        CHECK(cpwer(ref, hyp2, kVerbatim).errors.total() == cpwer(ref, hyp, kVerbatim).errors.total());
    }
}
