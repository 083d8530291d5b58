#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "support/fixtures.hpp"

using namespace tcmeval;
using namespace tcmeval::testing;

TEST_CASE("der examples", "[der]") {
    SECTION("reference against itself") {
        const auto ref = ref_session({seg("A", 0, 4, ""), seg("B", 2, 6, ""), seg("A", 7, 9, "")});
        const auto r = der(ref, hyp_session(ref.segments));
        REQUIRE(r.rate());
        CHECK(*r.rate() == 0.0);
    }
    SECTION("single truncated speaker") {
        // Scored: [0.25, 9.75] = 9.5 s. Hyp covers [0.25, 8], so miss = 9.75 - 8.
        const auto r = der(ref_session({seg("A", 0, 10, "")}), hyp_session({seg("X", 0, 8, "")}), 0.25);
        CHECK(std::abs(r.scored_speech - 9.5) < 1e-9);
        CHECK(std::abs(r.miss - 1.75) < 1e-9);
        CHECK(r.false_alarm == 0.0);
        CHECK(r.confusion == 0.0);
        CHECK(std::abs(*r.rate() - 1.75 / 9.5) < 1e-9);
    }
    SECTION("swapped labels") {
        const auto ref = ref_session({seg("A", 0, 4, ""), seg("B", 2, 6, "")});
        const auto hyp = hyp_session({seg("B", 0, 4, ""), seg("A", 2, 6, "")});
        CHECK(*der(ref, hyp).rate() == 0.0);
    }
    SECTION("confusion and false alarm") {
        const auto ref = ref_session({seg("A", 0, 10, ""), seg("B", 20, 30, "")});
        const auto hyp = hyp_session({seg("X", 0, 10, ""), seg("X", 20, 30, ""), seg("Y", 40, 42, "")});
        const auto r = der(ref, hyp, 0.0);
        CHECK(r.scored_speech == Catch::Approx(20));
        CHECK(r.confusion == Catch::Approx(10));
        CHECK(r.false_alarm == Catch::Approx(2));
        CHECK(r.miss == Catch::Approx(0));
    }
    SECTION("nothing to score") {
        const auto r = der(ref_session({seg("A", 0, 0.4, "")}), hyp_session({}), 0.25);
        CHECK_FALSE(r.rate().has_value());
    }
}

namespace {

/// Oracle: sample at 1 ms, best mapping by enumerating hypothesis permutations.
double brute_der(const SessionTranscript& ref, const SessionTranscript& hyp, double collar) {
    const auto ref_spk = ref.speakers(), hyp_spk = hyp.speakers();
    std::vector<std::string> rs(ref_spk.begin(), ref_spk.end());
    std::vector<std::string> hs(hyp_spk.begin(), hyp_spk.end());
    const std::size_t n = std::max(rs.size(), hs.size());
    rs.resize(n);
    hs.resize(n);
    auto active = [](const SessionTranscript& s, const std::string& spk, double t) {
        for (const auto& x : s.segments)
            if (x.speaker == spk && x.start_time <= t && t < x.end_time) return true;
        return false;
    };
    auto masked = [&](double t) {
        for (const auto& x : ref.segments)
            if (x.end_time > x.start_time)
                for (double b : {x.start_time, x.end_time})
                    if (t >= b - collar && t < b + collar) return true;
        return false;
    };
    const double dt = 0.001;
    const double end = session_span(ref, hyp) + 50;
    std::vector<std::size_t> perm(n);
    std::iota(perm.begin(), perm.end(), 0);
    double best = 1e300, scored = 0;
    std::vector<std::vector<char>> ra, ha;
    std::vector<double> times;
    for (double t = dt / 2; t < end; t += dt) {
        if (masked(t)) continue;
        times.push_back(t);
        std::vector<char> a(n), b(n);
        for (std::size_t i = 0; i < n; ++i) {
            a[i] = !rs[i].empty() && active(ref, rs[i], t);
            b[i] = !hs[i].empty() && active(hyp, hs[i], t);
        }
        ra.push_back(a);
        ha.push_back(b);
    }
    do {
        double err = 0;
        scored = 0;
        for (std::size_t k = 0; k < times.size(); ++k) {
            int nr = 0, nh = 0, correct = 0;
            for (std::size_t i = 0; i < n; ++i) {
                nr += ra[k][i];
                nh += ha[k][i];
                correct += ra[k][i] && ha[k][perm[i]];
            }
            scored += nr;
            err += std::max(nr, nh) - correct;
        }
        best = std::min(best, err);
    } while (std::next_permutation(perm.begin(), perm.end()));
    return best * dt / (scored * dt);
}

} // namespace

TEST_CASE("der agrees with a sampled oracle", "[der][oracle]") {
    std::mt19937 rng(61);
    SessionGenParams p;
    p.max_speakers = 4;
    p.max_turns = 8;
    for (int trial = 0; trial < 12; ++trial) {
        auto [ref, hyp] = random_session_pair(rng, "s1", p);
        const auto r = der(ref, hyp, 0.25);
        REQUIRE(r.rate());
        CHECK(std::abs(*r.rate() - brute_der(ref, hyp, 0.25)) < 5e-3);
    }
}

TEST_CASE("der invariances", "[der][property]") {
    std::mt19937 rng(71);
    for (int trial = 0; trial < 50; ++trial) {
        auto [ref, hyp] = random_session_pair(rng);
        const auto base = der(ref, hyp);
        CHECK(std::abs(*der(ref, random_relabel(hyp, rng)).rate() - *base.rate()) < 1e-12);

        // splitting a hypothesis segment at an interior point
        std::vector<Segment> segs = hyp.segments;
        for (std::size_t i = 0; i < segs.size(); ++i) {
            if (segs[i].duration() <= 0) continue;
            Segment right = segs[i];
            const double mid = segs[i].start_time + segs[i].duration() * 0.37;
            segs[i].end_time = mid;
            right.start_time = mid;
            segs.push_back(right);
            break;
        }
        CHECK(std::abs(*der(ref, hyp_session(segs)).rate() - *base.rate()) < 1e-9);
    }
}

TEST_CASE("speaker counting", "[der][count]") {
    SECTION("all exact") {
        const auto s = speaker_count_stats(std::vector<SpeakerCount>{{2, 2}, {4, 4}});
        CHECK(s.accuracy == 1.0);
        CHECK(s.mae == 0.0);
    }
    SECTION("plus and minus one") {
        const auto s = speaker_count_stats(std::vector<SpeakerCount>{{2, 3}, {4, 3}});
        CHECK(s.accuracy == 0.0);
        CHECK(s.mae == 1.0);
    }
    SECTION("8-session fixture") {
        std::vector<std::pair<SessionTranscript, SessionTranscript>> sessions;
        auto make = [&](int true_n, std::vector<std::string> hyp_spk, bool zero_len_extra = false) {
            std::vector<Segment> r, h;
            for (int i = 0; i < true_n; ++i) r.push_back(seg("R" + std::to_string(i), i, i + 1, "x"));
            for (std::size_t i = 0; i < hyp_spk.size(); ++i) h.push_back(seg(hyp_spk[i], i, i + 1, "x"));
            if (zero_len_extra) h.push_back(seg("ghost", 3, 3, "x"));
            sessions.emplace_back(ref_session(r), hyp_session(h));
        };
        make(2, {"a", "b"});                 // 2 vs 2
        make(3, {"a", "b", "c"});            // 3 vs 3
        make(4, {"a", "b", "a"});            // 4 vs 2, |e| = 2
        make(2, {"a", "b", "c"});            // 2 vs 3, |e| = 1
        make(5, {"a", "b", "c", "d", "e"});  // 5 vs 5
        make(3, {"a", "b", "c"}, true);      // zero-length ghost ignored: 3 vs 3
        make(6, {"a", "b", "c", "d"});       // 6 vs 4, |e| = 2
        make(1, {"a"});                      // 1 vs 1
        const auto s = speaker_count_stats(sessions);
        CHECK(s.accuracy == 5.0 / 8);
        CHECK(s.mae == 5.0 / 8);
        CHECK(s.per_session[2] == SpeakerCount{4, 2});
    }
    SECTION("empty input") {
        CHECK_THROWS_AS(speaker_count_stats(std::vector<SpeakerCount>{}), ParameterError);
    }
}
