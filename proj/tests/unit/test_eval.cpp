#include "flowvote/eval.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace flowvote;

namespace {

Diagnosis diag(std::size_t bin, Verdict v) {
    Diagnosis d;
    d.bin = bin;
    d.verdict = v;
    return d;
}

TruthRecord truth(std::size_t bin, AnomalyKind k) {
    TruthRecord t;
    t.bin = bin;
    t.kind = k;
    return t;
}

}  // namespace

TEST(Score, Perfect) {
    const std::vector<TruthRecord> t{truth(1, AnomalyKind::Scan), truth(4, AnomalyKind::DDoS)};
    const std::vector<Diagnosis> d{diag(1, Verdict::Scan), diag(4, Verdict::DDoS)};
    const auto c = score(d, t, Method::VoteH1);
    EXPECT_EQ(c.detection_rate, 1.0);
    EXPECT_EQ(c.false_positive_rate, 0.0);
    EXPECT_FALSE(c.fp_undefined);
    EXPECT_EQ(c.per_type[static_cast<std::size_t>(AnomalyKind::Scan)].detected, 1u);
}

TEST(Score, NoDiagnoses) {
    const std::vector<TruthRecord> t{truth(1, AnomalyKind::Scan)};
    const auto c = score({}, t, Method::VoteH2);
    EXPECT_EQ(c.detection_rate, 0.0);
    EXPECT_EQ(c.false_positive_rate, 0.0);
    EXPECT_TRUE(c.fp_undefined);
}

TEST(Score, OneCorrectOneSpurious) {
    const std::vector<TruthRecord> t{truth(2, AnomalyKind::DoS)};
    const std::vector<Diagnosis> d{diag(2, Verdict::DoS), diag(9, Verdict::Scan)};
    const auto c = score(d, t, Method::VoteH1);
    EXPECT_EQ(c.detection_rate, 1.0);
    EXPECT_EQ(c.false_positive_rate, 0.5);
    EXPECT_EQ(c.alarms, 2u);
}

TEST(Score, KindMismatchStrictVersusLenient) {
    const std::vector<TruthRecord> t{truth(2, AnomalyKind::DoS)};
    const std::vector<Diagnosis> d{diag(2, Verdict::DDoS)};
    EXPECT_EQ(score(d, t, Method::VoteH1).detected, 0u);
    const auto lenient = score(d, t, Method::VoteH1, MatchMode::Lenient);
    EXPECT_EQ(lenient.detected, 1u);
    EXPECT_EQ(lenient.false_positives, 0u);
}

TEST(Score, FalsePositiveVerdictsRaiseNoAlarm) {
    const std::vector<Diagnosis> d{diag(2, Verdict::FalsePositive)};
    EXPECT_TRUE(alarms_of(d).empty());
}

TEST(Score, EmptyTruthFlagged) {
    const auto c = score({}, {}, Method::Apriori);
    EXPECT_TRUE(c.detection_undefined);
    EXPECT_EQ(c.detection_rate, 0.0);
}

TEST(Score, PermutationInvariant) {
    std::mt19937_64 rng(83);
    std::vector<TruthRecord> t;
    std::vector<Diagnosis> d;
    for (int i = 0; i < 40; ++i) {
        t.push_back(truth(rng() % 30, static_cast<AnomalyKind>(rng() % 3)));
        d.push_back(diag(rng() % 30, static_cast<Verdict>(rng() % 4)));
    }
    const auto a = score(d, t, Method::VoteH1);
    std::shuffle(d.begin(), d.end(), rng);
    const auto b = score(d, t, Method::VoteH1);
    EXPECT_EQ(a.detected, b.detected);
    EXPECT_EQ(a.false_positives, b.false_positives);
    EXPECT_EQ(a.alarms, b.alarms);
}

TEST(Union, DisjointDetectionsAdd) {
    std::vector<TruthRecord> t;
    std::vector<Diagnosis> h1, h2;
    for (std::size_t i = 0; i < 7; ++i) {
        t.push_back(truth(i, AnomalyKind::Scan));
        (i < 3 ? h1 : h2).push_back(diag(i, Verdict::Scan));
    }
    EXPECT_EQ(union_scorecard(h1, h2, t).detected, 7u);
    EXPECT_EQ(union_scorecard(h1, h2, t).method, Method::VoteUnion);
}

TEST(Union, Idempotent) {
    const std::vector<TruthRecord> t{truth(1, AnomalyKind::DoS)};
    const std::vector<Diagnosis> h{diag(1, Verdict::DoS), diag(3, Verdict::Scan)};
    const auto u = union_scorecard(h, h, t);
    const auto s = score(h, t, Method::VoteH1);
    EXPECT_EQ(u.detected, s.detected);
    EXPECT_EQ(u.false_positives, s.false_positives);
    EXPECT_EQ(u.alarms, s.alarms);
}

TEST(Union, SharedFalsePositiveCountsOnce) {
    const std::vector<TruthRecord> t{truth(1, AnomalyKind::DoS), truth(2, AnomalyKind::Scan)};
    const std::vector<Diagnosis> h1{diag(1, Verdict::DoS), diag(2, Verdict::Scan), diag(5, Verdict::DDoS)};
    const std::vector<Diagnosis> h2{diag(1, Verdict::DoS), diag(2, Verdict::Scan)};
    const auto u = union_scorecard(h1, h2, t);
    EXPECT_EQ(u.false_positives, 1u);
    EXPECT_EQ(u.detected, 2u);
    EXPECT_EQ(union_scorecard(h1, h1, t).false_positives, 1u);
}

TEST(Union, SupersetOfEachRun) {
    std::mt19937_64 rng(89);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Diagnosis> h1, h2;
        for (int i = 0; i < 10; ++i) {
            h1.push_back(diag(rng() % 20, static_cast<Verdict>(rng() % 3)));
            h2.push_back(diag(rng() % 20, static_cast<Verdict>(rng() % 3)));
        }
        auto all = h1;
        all.insert(all.end(), h2.begin(), h2.end());
        const auto u = alarms_of(all);
        const auto a = alarms_of(h1), b = alarms_of(h2);
        EXPECT_TRUE(std::includes(u.begin(), u.end(), a.begin(), a.end()));
        EXPECT_TRUE(std::includes(u.begin(), u.end(), b.begin(), b.end()));
        EXPECT_EQ(union_scorecard(h1, h2, {}).alarms, u.size());
    }
}

TEST(Roc, SingleValueEqualsScore) {
    const std::vector<TruthRecord> t{truth(1, AnomalyKind::DoS), truth(4, AnomalyKind::Scan)};
    const std::vector<Diagnosis> d{diag(1, Verdict::DoS), diag(6, Verdict::Scan)};
    const std::vector<double> grid{2.0};
    const auto pts = roc_sweep(grid, [&](double) { return alarms_of(d); }, t);
    ASSERT_EQ(pts.size(), 1u);
    const auto c = score(d, t, Method::VoteH1);
    EXPECT_EQ(pts[0].detected, c.detected);
    EXPECT_EQ(pts[0].false_positives, c.false_positives);
    EXPECT_EQ(pts[0].detection_rate, c.detection_rate);
    EXPECT_EQ(pts[0].false_positive_rate, c.false_positive_rate);
}

TEST(Roc, OrderedAndNonEmpty) {
    const std::vector<double> grid{3.0, 1.5, 2.0};
    const auto pts = roc_sweep(grid, [](double) { return std::vector<Alarm>{}; }, {});
    ASSERT_EQ(pts.size(), 3u);
    EXPECT_EQ(pts[0].value, 1.5);
    EXPECT_EQ(pts[2].value, 3.0);
    for (const auto& p : pts) EXPECT_EQ(p.detected, 0u);
    EXPECT_THROW(roc_sweep({}, [](double) { return std::vector<Alarm>{}; }, {}), Error);
}

TEST(Methods, NamesRoundTrip) {
    for (auto m : {Method::VoteH1, Method::VoteH2, Method::VoteUnion, Method::Apriori}) {
        EXPECT_EQ(parse_method(to_string(m)), m);
    }
    EXPECT_FALSE(parse_method("nope").has_value());
}
