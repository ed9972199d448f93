#include "flowvote/decision.hpp"
#include "oracles/oracles.hpp"
#include "support/records.hpp"

#include <gtest/gtest.h>

#include <filesystem>
#include <random>

using namespace flowvote;
using testing_support::flow;

namespace {

SenatorSets senators(std::vector<FeatureValue> a, std::vector<FeatureValue> b, std::vector<FeatureValue> c,
                     std::vector<FeatureValue> d) {
    SenatorSets s;
    s[0] = {FeatureKind::SrcAs, std::move(a)};
    s[1] = {FeatureKind::DstAs, std::move(b)};
    s[2] = {FeatureKind::SrcPort, std::move(c)};
    s[3] = {FeatureKind::DstPort, std::move(d)};
    return s;
}

Thresholds th(double ddos, double dos, double scan) {
    Thresholds t;
    t.ddos = ddos;
    t.dos = dos;
    t.scan = scan;
    return t;
}

}  // namespace

TEST(Aggregates, OneEffectiveOfSixteen) {
    const auto s = senators({1, 2}, {3, 4}, {5, 6}, {7, 8});
    const std::vector<FlowRecord> recs{flow(0, 1, 3, 5, 7), flow(0, 1, 3, 5, 7), flow(0, 9, 3, 5, 7)};
    const auto a = enumerate_aggregates(recs, s);
    ASSERT_EQ(a.size(), 1u);
    EXPECT_EQ(a[0].flows.size(), 2u);
}

TEST(Aggregates, NoMatch) {
    const auto s = senators({1}, {2}, {3}, {4});
    const std::vector<FlowRecord> recs{flow(0, 9, 9, 9, 9)};
    EXPECT_TRUE(enumerate_aggregates(recs, s).empty());
}

TEST(Aggregates, MatchesCartesianOracle) {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<FlowRecord> recs;
        for (int i = 0; i < 400; ++i) {
            recs.push_back(flow(0, static_cast<AsNumber>(rng() % 6), static_cast<AsNumber>(rng() % 6),
                                static_cast<Port>(rng() % 6), static_cast<Port>(rng() % 6)));
        }
        const auto s = senators({0, 2, 3}, {1, 4}, {0, 1, 5}, {2, 3});
        const auto got = enumerate_aggregates(recs, s);
        const auto want = oracle::cartesian_aggregates(recs, s);
        ASSERT_EQ(got.size(), want.size());
        for (std::size_t i = 0; i < got.size(); ++i) {
            EXPECT_EQ(got[i].src_as, want[i].src_as);
            EXPECT_EQ(got[i].dst_as, want[i].dst_as);
            EXPECT_EQ(got[i].src_port, want[i].src_port);
            EXPECT_EQ(got[i].dst_port, want[i].dst_port);
            EXPECT_EQ(got[i].flows.size(), want[i].flows);
        }
    }
}

TEST(Classify, DdosForcedByFirstStep) {
    std::vector<FlowRecord> recs;
    for (int i = 0; i < 120; ++i) recs.push_back(flow(0, 10, 20, 1000, 80, static_cast<Ipv4>(100 + i), 7));
    const auto aggs = enumerate_aggregates(recs, senators({10}, {20}, {1000}, {80}));
    const auto d = classify(aggs, recs, th(100, 50, 30));
    EXPECT_EQ(d.verdict, Verdict::DDoS);
    EXPECT_EQ(d.intensity, 120u);
    ASSERT_TRUE(d.witness.has_value());
    EXPECT_EQ(d.witness->dst_ip, 7u);
    EXPECT_EQ(d.witness->key, WitnessKey::DstIp);
}

TEST(Classify, DosForcedBySecondStep) {
    std::vector<FlowRecord> recs;
    for (int i = 0; i < 30; ++i) recs.push_back(flow(0, 10, 20, 1000, static_cast<Port>(80 + i), 1, 7));
    for (int i = 0; i < 20; ++i) recs.push_back(flow(0, 10, 20, 1000, static_cast<Port>(80 + i), 2, 7));
    const auto aggs = enumerate_aggregates(recs, senators({10}, {20}, {1000}, {80}));
    ASSERT_EQ(aggs.size(), 1u);
    const auto d = classify(aggs, recs, th(100, 20, 100));
    EXPECT_EQ(d.verdict, Verdict::DoS);
    EXPECT_EQ(d.intensity, 30u);
    EXPECT_EQ(d.witness->src_ip, 1u);
    EXPECT_EQ(d.witness->key, WitnessKey::SrcDstPair);
}

TEST(Classify, ScanThirdStep) {
    std::vector<FlowRecord> recs;
    for (int i = 0; i < 40; ++i) recs.push_back(flow(0, 10, 20 + i % 3, 1000, 445, 5, static_cast<Ipv4>(500 + i)));
    const auto aggs = enumerate_aggregates(recs, senators({10}, {20}, {1000}, {445}));
    const auto d = classify(aggs, recs, th(100, 50, 30));
    EXPECT_EQ(d.verdict, Verdict::Scan);
    EXPECT_EQ(d.intensity, 40u);
    EXPECT_EQ(d.witness->key, WitnessKey::SrcIpDstPort);
}

TEST(Classify, FalsePositive) {
    std::vector<FlowRecord> recs;
    for (int i = 0; i < 10; ++i) recs.push_back(flow(0, 10, 20, 1000, 80, static_cast<Ipv4>(i), static_cast<Ipv4>(50 + i)));
    const auto aggs = enumerate_aggregates(recs, senators({10}, {20}, {1000}, {80}));
    const auto d = classify(aggs, recs, th(100, 50, 30));
    EXPECT_EQ(d.verdict, Verdict::FalsePositive);
    EXPECT_EQ(classify({}, recs, th(100, 50, 30)).verdict, Verdict::FalsePositive);
}

TEST(Classify, DdosHasPriorityOverDos) {
    std::vector<FlowRecord> recs;
    for (int i = 0; i < 150; ++i) recs.push_back(flow(0, 10, 20, 1000, 80, 1, 7));
    const auto aggs = enumerate_aggregates(recs, senators({10}, {20}, {1000}, {80}));
    const auto d = classify(aggs, recs, th(100, 50, 30));
    EXPECT_EQ(d.verdict, Verdict::DDoS);
    EXPECT_EQ(d.intensity, 150u);
}

TEST(Classify, RaisingThresholdsNeverCreatesPositives) {
    std::mt19937_64 rng(37);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<FlowRecord> recs;
        for (int i = 0; i < 300; ++i) {
            recs.push_back(flow(0, static_cast<AsNumber>(rng() % 3), static_cast<AsNumber>(rng() % 3), 1, 2,
                                static_cast<Ipv4>(rng() % 5), static_cast<Ipv4>(rng() % 5)));
        }
        const auto aggs = enumerate_aggregates(recs, senators({0, 1, 2}, {0, 1, 2}, {1}, {2}));
        const auto low = classify(aggs, recs, th(40, 20, 10));
        const auto high = classify(aggs, recs, th(80, 60, 40));
        if (low.verdict == Verdict::FalsePositive) {
            EXPECT_EQ(high.verdict, Verdict::FalsePositive);
        }
    }
}

TEST(DecisionStage, OnePerAnomalousBinInOrder) {
    std::vector<FlowRecord> recs;
    for (int i = 0; i < 120; ++i) recs.push_back(flow(0, 10, 20, 1000, 80, static_cast<Ipv4>(i), 7));
    for (int i = 0; i < 5; ++i) recs.push_back(flow(900, 10, 20, 1000, 80, static_cast<Ipv4>(i), static_cast<Ipv4>(i)));
    recs.push_back(flow(1800, 10, 20, 1000, 80));
    const auto b = bin_records(recs, 900);
    const auto s = senators({10}, {20}, {1000}, {80});
    std::vector<BinVerdict> v(3);
    for (std::size_t i = 0; i < 3; ++i) v[i].bin = i;
    EXPECT_TRUE(run_decision_stage(v, s, b, th(100, 50, 30)).empty());
    v[0].anomalous = true;
    v[1].anomalous = true;
    const auto d = run_decision_stage(v, s, b, th(100, 50, 30));
    ASSERT_EQ(d.size(), 2u);
    EXPECT_EQ(d[0].bin, 0u);
    EXPECT_EQ(d[0].verdict, Verdict::DDoS);
    EXPECT_EQ(d[1].bin, 1u);
    EXPECT_EQ(d[1].verdict, Verdict::FalsePositive);
}

TEST(Learner, SingleClassFallsBackToMinimum) {
    const std::vector<LabeledIntensity> data{{10, AnomalyKind::Scan}, {12, AnomalyKind::Scan}, {15, AnomalyKind::Scan}};
    const auto tree = IntensityTree::fit(data);
    EXPECT_EQ(tree.nodes().size(), 1u);
    const auto b = learn_class_bounds(data);
    EXPECT_EQ(b[2], 10.0);
    EXPECT_FALSE(b[0].has_value());
    EXPECT_THROW(learn_thresholds(data), Error);
}

TEST(Learner, SeparatedClasses) {
    const std::vector<LabeledIntensity> data{{10, AnomalyKind::Scan}, {20, AnomalyKind::Scan},
                                             {100, AnomalyKind::DoS}, {200, AnomalyKind::DoS},
                                             {1000, AnomalyKind::DDoS}, {2000, AnomalyKind::DDoS}};
    const auto t = learn_thresholds(data);
    EXPECT_FALSE(t.bootstrap);
    EXPECT_EQ(t.scan, 10.0);
    EXPECT_GT(t.dos, 20.0);
    EXPECT_LE(t.dos, 100.0);
    EXPECT_GT(t.ddos, 200.0);
    EXPECT_LE(t.ddos, 1000.0);
    const auto o = oracle::class_bounds(data);
    EXPECT_EQ(t.ddos, *o[0]);
    EXPECT_EQ(t.dos, *o[1]);
    EXPECT_EQ(t.scan, *o[2]);
}

TEST(Learner, OverlapResolvedByMajority) {
    const std::vector<LabeledIntensity> data{{10, AnomalyKind::Scan}, {20, AnomalyKind::Scan}, {50, AnomalyKind::Scan},
                                             {50, AnomalyKind::DoS},  {50, AnomalyKind::DoS},  {80, AnomalyKind::DoS},
                                             {500, AnomalyKind::DDoS}};
    const auto t = learn_thresholds(data);
    const auto o = oracle::class_bounds(data);
    EXPECT_EQ(t.ddos, *o[0]);
    EXPECT_EQ(t.dos, *o[1]);
    EXPECT_EQ(t.scan, *o[2]);
    const auto tree = IntensityTree::fit(data);
    EXPECT_EQ(tree.predict(50), AnomalyKind::DoS);
}

TEST(Learner, RandomAgainstOracle) {
    std::mt19937_64 rng(53);
    for (int trial = 0; trial < 30; ++trial) {
        std::vector<LabeledIntensity> data;
        const int n = 10 + static_cast<int>(rng() % 100);
        for (int i = 0; i < n; ++i) {
            const auto k = static_cast<AnomalyKind>(i % 3);
            const double base = k == AnomalyKind::Scan ? 10 : k == AnomalyKind::DoS ? 40 : 90;
            data.push_back({base + static_cast<double>(rng() % 60), k});
        }
        const auto got = learn_class_bounds(data);
        const auto want = oracle::class_bounds(data);
        for (std::size_t k = 0; k < 3; ++k) EXPECT_EQ(got[k], want[k]) << "trial " << trial << " class " << k;
    }
}

TEST(Learner, DepthLimit) {
    std::vector<LabeledIntensity> data;
    for (int i = 1; i <= 600; ++i) data.push_back({static_cast<double>(i), static_cast<AnomalyKind>(i % 3)});
    EXPECT_LE(IntensityTree::fit(data).depth(), 8);
    EXPECT_LE(IntensityTree::fit(data, {3}).depth(), 3);
}

TEST(Learner, RejectsBadIntensity) {
    const std::vector<LabeledIntensity> data{{0.5, AnomalyKind::Scan}};
    EXPECT_THROW(IntensityTree::fit(data), Error);
}

TEST(ThresholdsFile, RoundTrip) {
    const auto path = std::filesystem::temp_directory_path() / "flowvote_thresholds_rt.cfg";
    Thresholds t = th(123.5, 45.25, 17.0);
    t.bootstrap = false;
    write_thresholds(path, t);
    const auto back = read_thresholds(path);
    EXPECT_EQ(back.ddos, t.ddos);
    EXPECT_EQ(back.dos, t.dos);
    EXPECT_EQ(back.scan, t.scan);
    EXPECT_FALSE(back.bootstrap);
    std::filesystem::remove(path);
}
