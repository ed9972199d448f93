#include "flowvote/baseline.hpp"
#include "flowvote/synth.hpp"
#include "oracles/oracles.hpp"
#include "support/records.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numeric>
#include <random>

using namespace flowvote;
using testing_support::flow;

TEST(Kl, Identity) {
    const std::vector<double> p{0.1, 0.2, 0.3, 0.4};
    EXPECT_EQ(kl_distance(p, p), 0.0);
}

TEST(Kl, LnTwo) {
    const std::vector<double> p{1.0, 0.0}, q{0.5, 0.5};
    EXPECT_NEAR(kl_distance(p, q), std::log(2.0), 1e-12);
}

TEST(Kl, SmoothedAgainstDirectEvaluation) {
    const std::vector<double> praw{0.5, 0.5}, qraw{1.0, 0.0};
    const auto p = smooth(praw, 1e-6);
    const auto q = smooth(qraw, 1e-6);
    // normalize, add eps, renormalize, by hand
    const std::vector<double> ph{0.5, 0.5};
    const std::vector<double> qh{(1.0 + 1e-6) / (1.0 + 2e-6), 1e-6 / (1.0 + 2e-6)};
    EXPECT_NEAR(q[0], qh[0], 1e-15);
    EXPECT_NEAR(q[1], qh[1], 1e-15);
    const double d = kl_distance(p, q);
    EXPECT_TRUE(std::isfinite(d));
    EXPECT_GT(d, 0.0);
    EXPECT_NEAR(d, oracle::kl(ph, qh), 1e-12);
}

TEST(Kl, ConcentrationAfterUniform) {
    const std::size_t m = 64;
    std::vector<double> uniform(m, 10.0), spike(m, 0.0);
    spike[17] = 640.0;
    const auto p = smooth(spike);
    const auto q = smooth(uniform);
    const double d = kl_distance(p, q);
    EXPECT_NEAR(d, oracle::kl(p, q), 1e-12);
    EXPECT_LT(d, std::log(64.0));
    EXPECT_NEAR(d, std::log(64.0), 1e-3);
}

TEST(Kl, NonNegativeAndZeroOnlyWhenEqual) {
    std::mt19937_64 rng(61);
    std::uniform_real_distribution<double> u(0.0, 10.0);
    for (int trial = 0; trial < 200; ++trial) {
        std::vector<double> a(16), b(16);
        for (auto& x : a) x = u(rng) < 3.0 ? 0.0 : u(rng);
        for (auto& x : b) x = u(rng) < 3.0 ? 0.0 : u(rng);
        if (std::accumulate(a.begin(), a.end(), 0.0) == 0.0) a[0] = 1.0;
        if (std::accumulate(b.begin(), b.end(), 0.0) == 0.0) b[0] = 1.0;
        const auto p = smooth(a), q = smooth(b);
        EXPECT_GE(kl_distance(p, q), 0.0);
        EXPECT_EQ(kl_distance(p, p), 0.0);
        if (p != q) {
            EXPECT_GT(kl_distance(p, q), 0.0);
        }
    }
}

TEST(Projection, PreservesMass) {
    std::mt19937_64 rng(67);
    std::vector<FlowRecord> recs;
    for (int i = 0; i < 777; ++i) recs.push_back(flow(0, static_cast<AsNumber>(rng() % 3000), 1, 2, 3));
    HashProjection h{FeatureKind::SrcAs, 64, 5};
    const auto v = h.project(recs);
    ASSERT_EQ(v.size(), 64u);
    EXPECT_EQ(std::accumulate(v.begin(), v.end(), 0.0), 777.0);
    EXPECT_EQ(h.project(build_histogram(recs, FeatureKind::SrcAs)), v);
    for (FeatureValue x = 0; x < 1000; ++x) EXPECT_LT(h.bucket(x), 64u);
}

TEST(DetectKl, IdenticalBinsNeverAlarm) {
    std::vector<FlowRecord> recs;
    for (int t = 0; t < 5; ++t) {
        for (int i = 0; i < 50; ++i) recs.push_back(flow(t * 900 + i, static_cast<AsNumber>(i), 1, 2, 3));
    }
    const auto b = bin_records(recs, 900);
    const HashProjection h{FeatureKind::SrcAs, 64, 1};
    const auto series = kl_series(b, h);
    EXPECT_EQ(series[0], 0.0);
    EXPECT_TRUE(detect_kl(b, h, 1e-9).empty());
}

TEST(DetectKl, FirstBinNeverAlarmsAndConcentrationDoes) {
    // bin 0 spread over every bucket, bin 1 entirely on one value
    HashProjection h{FeatureKind::DstPort, 64, 3};
    std::vector<FlowRecord> recs;
    std::vector<bool> hit(64, false);
    for (FeatureValue v = 0; v < 100000 && std::count(hit.begin(), hit.end(), true) < 64; ++v) {
        if (hit[h.bucket(v)]) continue;
        hit[h.bucket(v)] = true;
        for (int i = 0; i < 10; ++i) recs.push_back(flow(0, 1, 1, 1, static_cast<Port>(v)));
    }
    for (int i = 0; i < 640; ++i) recs.push_back(flow(900, 1, 1, 1, 7));
    const auto b = bin_records(recs, 900);
    const auto alarms = detect_kl(b, h, 4.0);
    ASSERT_EQ(alarms.size(), 1u);
    EXPECT_EQ(alarms[0].bin, 1u);
    EXPECT_GT(alarms[0].distance, 4.0);
    EXPECT_LT(alarms[0].distance, std::log(64.0));
    EXPECT_TRUE(detect_kl(b, h, std::log(64.0)).empty());
}

TEST(DetectKl, NeedsTwoBins) {
    const std::vector<FlowRecord> recs{flow(0, 1, 2, 3, 4)};
    EXPECT_THROW(detect_kl(bin_records(recs, 900), {}, 0.1), Error);
}

TEST(Warmup, MeanPlusThreeSigma) {
    std::vector<double> s(20, 0.0);
    s[1] = 1.0;
    s[2] = 3.0;
    // window is bins 1..2 (ceil(0.1 * 20) = 2): mean 2, population sigma 1
    EXPECT_NEAR(warmup_threshold(s), 5.0, 1e-12);
}

namespace {

Transaction tx(std::uint32_t sip, std::uint32_t dip, std::uint32_t sp, std::uint32_t dp) {
    return {Item{ItemField::SrcIp, sip}, Item{ItemField::DstIp, dip}, Item{ItemField::SrcPort, sp},
            Item{ItemField::DstPort, dp}};
}

oracle::ItemKey key_of(const ItemSet& s) {
    oracle::ItemKey k;
    for (const auto& i : s.items) k.emplace_back(static_cast<int>(i.field), i.value);
    std::sort(k.begin(), k.end());
    return k;
}

}  // namespace

TEST(Apriori, SmallExample) {
    // A = srcIP 1, B = dstIP 2, C = dstIP 3; ports are unique per transaction
    const std::vector<Transaction> t{tx(1, 2, 10, 20), tx(1, 3, 11, 21), tx(1, 2, 12, 22)};
    const auto f = mine_frequent(t, 2);
    ASSERT_EQ(f.size(), 3u);
    EXPECT_EQ(f[0].items.size(), 2u);
    EXPECT_EQ(f[0].support, 2u);
    EXPECT_EQ(f[1].items, (std::vector<Item>{{ItemField::SrcIp, 1}}));
    EXPECT_EQ(f[1].support, 3u);
    EXPECT_EQ(f[2].items, (std::vector<Item>{{ItemField::DstIp, 2}}));
    EXPECT_EQ(f[2].support, 2u);
    const auto m = maximal_itemsets(f);
    ASSERT_EQ(m.size(), 1u);
    EXPECT_EQ(m[0].items.size(), 2u);
}

TEST(Apriori, SupportAboveTransactionCount) {
    const std::vector<Transaction> t{tx(1, 2, 3, 4), tx(1, 2, 3, 4)};
    EXPECT_TRUE(mine_frequent(t, 3).empty());
    EXPECT_THROW(mine_frequent(t, 0), Error);
}

TEST(Apriori, IdenticalTransactions) {
    const std::vector<Transaction> t(5, tx(1, 2, 3, 4));
    const auto f = mine_frequent(t, 1);
    EXPECT_EQ(f.size(), 15u);
    EXPECT_EQ(f[0].items.size(), 4u);
    for (const auto& s : f) EXPECT_EQ(s.support, 5u);
}

TEST(Apriori, MatchesExhaustiveAndIsAntiMonotone) {
    std::mt19937_64 rng(71);
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<Transaction> t;
        const int n = 1 + static_cast<int>(rng() % 12);
        for (int i = 0; i < n; ++i) {
            t.push_back(tx(static_cast<std::uint32_t>(rng() % 3), static_cast<std::uint32_t>(rng() % 3),
                           static_cast<std::uint32_t>(rng() % 2), static_cast<std::uint32_t>(rng() % 4)));
        }
        const std::size_t min_support = 1 + rng() % 3;
        const auto got = mine_frequent(t, min_support);
        const auto want = oracle::exhaustive_itemsets(t, min_support);
        std::map<oracle::ItemKey, std::size_t> got_map;
        for (const auto& s : got) got_map[key_of(s)] = s.support;
        EXPECT_EQ(got_map, want);
        for (const auto& [k, s] : got_map) {
            for (std::size_t drop = 0; k.size() > 1 && drop < k.size(); ++drop) {
                auto sub = k;
                sub.erase(sub.begin() + static_cast<std::ptrdiff_t>(drop));
                ASSERT_TRUE(got_map.count(sub));
                EXPECT_GE(got_map[sub], s);
            }
        }
    }
}

TEST(BaselineRun, FindsInjectedDdos) {
    ScenarioSpec spec;
    spec.duration_bins = 24;
    spec.flows_per_bin = 2000;
    spec.seed = 9;
    spec.injections.push_back({AnomalyKind::DDoS, 15, 600, Sizing::Tiny});
    const auto g = generate(spec);
    const auto b = bin_records(g.records, spec.bin_width);
    BaselineConfig cfg;
    cfg.seed = 4;
    const auto r = run_baseline(b, Thresholds{}, cfg);
    EXPECT_TRUE(std::find(r.alarmed_bins.begin(), r.alarmed_bins.end(), 15u) != r.alarmed_bins.end());
    const bool hit = std::any_of(r.diagnoses.begin(), r.diagnoses.end(),
                                 [](const Diagnosis& d) { return d.bin == 15 && d.verdict == Verdict::DDoS; });
    EXPECT_TRUE(hit);
    for (std::size_t i = 0; i < 4; ++i) EXPECT_GT(r.thresholds[i], 0.0);
}
