#include "igshm/attribution.hpp"
#include "igshm/error.hpp"
#include "igshm/models.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace igshm;
using namespace igshm::attribution;
using baselines::BaselineKind;

namespace {

net::Tensor randomSample(std::size_t c, std::size_t t, std::uint64_t seed)
{
    net::Tensor x({c, t});
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (double& v : x.storage()) v = n(rng);
    return x;
}

net::Model linearModel(std::size_t c, std::size_t t, std::uint64_t seed)
{
    net::Model m({c, t}, {net::LayerSpec::dense(1)});
    m.initialize(seed);
    std::get<net::Dense>(m.layers()[0]).bias[0] = 0.3;
    return m;
}

net::Model smallCnn(std::size_t c, std::size_t t, std::uint64_t seed)
{
    net::Model m = models::buildCnn(c, t, models::CnnArch{{6, 8, 6}, {5, 3, 3}, 4});
    m.initialize(seed);
    return m;
}

}  // namespace

TEST(IntegratedGradients, ExactOnLinearModel)
{
    const net::Model m = linearModel(4, 9, 1);
    const auto& w = std::get<net::Dense>(m.layers()[0]).weight;
    const net::Tensor x = randomSample(4, 9, 2);
    for (BaselineKind kind : baselines::kAllBaselines) {
        const net::Tensor base = baselines::makeBaseline(x, kind);
        for (int steps : {1, 7, 200}) {
            IgOptions o;
            o.steps = steps;
            const AttributionMap map = integratedGradients(m, x, kind, o);
            for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(map.scores[i], w[i] * (x[i] - base[i]), 1e-12);
            EXPECT_LT(map.completenessGap, 1e-12);
        }
    }
}

TEST(IntegratedGradients, ZeroDisplacementGivesZeroMap)
{
    const net::Model m = smallCnn(3, 20, 1);
    const net::Tensor x = randomSample(3, 20, 3);
    const AttributionMap map = integratedGradients(m, x, x);
    for (double v : map.scores.storage()) EXPECT_EQ(v, 0.0);
    EXPECT_FALSE(map.baselineKind.has_value());
}

TEST(IntegratedGradients, StepRangeEnforced)
{
    const net::Model m = linearModel(2, 3, 0);
    const net::Tensor x = randomSample(2, 3, 0);
    IgOptions o;
    o.steps = 0;
    EXPECT_THROW(integratedGradients(m, x, BaselineKind::APB, o), ConfigError);
    o.steps = 5001;
    EXPECT_THROW(integratedGradients(m, x, BaselineKind::APB, o), ConfigError);
}

TEST(IntegratedGradients, ChunkSizeDoesNotChangeResult)
{
    const net::Model m = smallCnn(3, 20, 4);
    const net::Tensor x = randomSample(3, 20, 5);
    IgOptions o;
    o.steps = 50;
    o.chunkSize = 1;
    const AttributionMap a = integratedGradients(m, x, BaselineKind::TVB, o);
    for (std::size_t chunk : {7u, 50u, 64u}) {
        o.chunkSize = chunk;
        EXPECT_EQ(integratedGradients(m, x, BaselineKind::TVB, o).scores, a.scores) << chunk;
    }
}

TEST(IntegratedGradients, DefaultTargetIsPrediction)
{
    const net::Model m = smallCnn(3, 20, 6);
    const net::Tensor x = randomSample(3, 20, 7);
    const net::Tensor p = m.forward(x.reshaped({1, 3, 20}));
    std::size_t best = 0;
    for (std::size_t k = 1; k < p.size(); ++k) {
        if (p[k] > p[best]) best = k;
    }
    EXPECT_EQ(integratedGradients(m, x, BaselineKind::APB).targetClass, best);
    IgOptions o;
    o.targetClass = 9;
    EXPECT_THROW(integratedGradients(m, x, BaselineKind::APB, o), ConfigError);
}

TEST(IntegratedGradients, CompletenessImprovesWithSteps)
{
    const net::Model m = smallCnn(3, 20, 8);
    for (std::uint64_t s = 0; s < 5; ++s) {
        const net::Tensor x = randomSample(3, 20, 100 + s);
        for (BaselineKind kind : baselines::kAllBaselines) {
            IgOptions lo, hi;
            lo.steps = 20;
            hi.steps = 2000;
            const AttributionMap a = integratedGradients(m, x, kind, lo);
            const AttributionMap b = integratedGradients(m, x, kind, hi);
            EXPECT_LE(b.completenessGap, a.completenessGap + 1e-12);
            EXPECT_LE(b.completenessGap, 1e-3 * std::abs(b.outputAtInput - b.outputAtBaseline) + 1e-9);
        }
    }
}

TEST(IntegratedGradients, LogitAndProbabilityTargetsDiffer)
{
    const net::Model m = smallCnn(3, 20, 9);
    const net::Tensor x = randomSample(3, 20, 10);
    IgOptions o;
    o.targetClass = 1;
    const AttributionMap logit = integratedGradients(m, x, BaselineKind::APB, o);
    o.output = net::OutputKind::Probability;
    const AttributionMap prob = integratedGradients(m, x, BaselineKind::APB, o);
    EXPECT_NE(logit.scores, prob.scores);
    EXPECT_EQ(prob.output, net::OutputKind::Probability);
    EXPECT_LE(prob.outputAtInput, 1.0);
}

TEST(IntegratedGradients, BaselinesGiveDifferentMaps)
{
    const net::Model m = smallCnn(3, 20, 11);
    const net::Tensor x = randomSample(3, 20, 12);
    const auto a = integratedGradients(m, x, BaselineKind::APB).scores;
    const auto t = integratedGradients(m, x, BaselineKind::TVB).scores;
    const auto v = integratedGradients(m, x, BaselineKind::MVB).scores;
    EXPECT_NE(a, t);
    EXPECT_NE(t, v);
    EXPECT_NE(a, v);
}

TEST(IntegratedGradients, SensorIdsFollowLayout)
{
    EXPECT_EQ(sensorIdsFor(37).back(), 39);
    EXPECT_EQ(sensorIdsFor(37)[20], 21);
    EXPECT_EQ(sensorIdsFor(3), (std::vector<int>{0, 1, 2}));
}

TEST(ChannelSum, SingleEntry)
{
    AttributionMap map;
    map.scores = net::Tensor({37, 150});
    map.scores.at(14, 7) = 0.5;
    const auto c = channelSum(map, 3);
    EXPECT_EQ(c.sampleId, 3u);
    for (std::size_t i = 0; i < 37; ++i) EXPECT_EQ(c.values[i], i == 14 ? 0.5 : 0.0);
}

TEST(ChannelSum, MatchesDoubleLoop)
{
    AttributionMap map;
    map.scores = randomSample(37, 150, 13);
    const auto c = channelSum(map);
    double total = 0.0, fromC = 0.0;
    for (std::size_t ch = 0; ch < 37; ++ch) {
        double s = 0.0;
        for (std::size_t t = 0; t < 150; ++t) s += map.scores.at(ch, t);
        EXPECT_EQ(c.values[ch], s);
        total += s;
        fromC += c.values[ch];
    }
    double flat = 0.0;
    for (double v : map.scores.storage()) flat += v;
    EXPECT_NEAR(fromC, flat, 1e-12);
}

TEST(PopulationStats, OneAndTwoVectors)
{
    const std::vector<ChannelAttributionVector> one{{{1.0, -2.0, 3.0}, 0}};
    const AttributionStats s1 = populationStats(one);
    for (std::size_t c = 0; c < 3; ++c) {
        EXPECT_EQ(s1.channels[c].mean, one[0].values[c]);
        EXPECT_EQ(s1.channels[c].median, one[0].values[c]);
    }
    const std::vector<ChannelAttributionVector> two{{{1.0, -2.0}, 0}, {{3.0, 4.0}, 1}};
    const AttributionStats s2 = populationStats(two);
    EXPECT_EQ(s2.channels[0].mean, 2.0);
    EXPECT_EQ(s2.channels[1].mean, 1.0);
    EXPECT_EQ(s2.channels[1].meanAbs, 3.0);
    EXPECT_EQ(s2.raw.size(), 2u);
    EXPECT_THROW(populationStats(std::vector<ChannelAttributionVector>{}), DataError);
}

TEST(PopulationStats, QuartilesInterpolateLinearly)
{
    std::vector<ChannelAttributionVector> v;
    for (double x : {7.0, 1.0, 3.0, 10.0, 4.0}) v.push_back({{x}, 0});
    const ChannelStats s = populationStats(v).channels[0];
    // Sorted 1 3 4 7 10: positions 1, 2, 3.
    EXPECT_EQ(s.q1, 3.0);
    EXPECT_EQ(s.median, 4.0);
    EXPECT_EQ(s.q3, 7.0);
    v.push_back({{12.0}, 0});
    const ChannelStats s6 = populationStats(v).channels[0];
    // Sorted 1 3 4 7 10 12: q1 at 1.25, median at 2.5, q3 at 3.75.
    EXPECT_DOUBLE_EQ(s6.q1, 3.25);
    EXPECT_DOUBLE_EQ(s6.median, 5.5);
    EXPECT_DOUBLE_EQ(s6.q3, 9.25);
    EXPECT_EQ(s6.min, 1.0);
    EXPECT_EQ(s6.max, 12.0);
}

TEST(PopulationStats, PlantedChannelsRankFirst)
{
    std::mt19937_64 rng(14);
    std::normal_distribution<double> n(0.0, 0.1);
    std::vector<ChannelAttributionVector> v;
    for (std::size_t i = 0; i < 200; ++i) {
        ChannelAttributionVector c{std::vector<double>(37), i};
        for (double& x : c.values) x = n(rng);
        c.values[14] += 2.0;
        c.values[15] -= 1.5;
        c.values[16] += 1.0;
        v.push_back(c);
    }
    const AttributionStats s = populationStats(v);
    std::vector<double> means;
    for (const auto& ch : s.channels) means.push_back(ch.mean);
    EXPECT_EQ(topChannels(means, 3), (std::vector<std::size_t>{14, 15, 16}));
}

TEST(TopChannels, MagnitudeOrderAndTies)
{
    std::vector<double> c(37, 0.0);
    c[14] = 2.0;
    c[15] = -1.5;
    c[16] = 1.0;
    EXPECT_EQ(topChannels(c), (std::vector<std::size_t>{14, 15, 16}));
    const std::vector<double> equal{1.0, -1.0, 1.0, -1.0};
    EXPECT_EQ(topChannels(equal, 4), (std::vector<std::size_t>{0, 1, 2, 3}));
    EXPECT_THROW(topChannels(equal, 5), ConfigError);
}

TEST(ConvergenceStudy, LinearModelHasNoGap)
{
    const net::Model m = linearModel(3, 10, 15);
    const std::vector<int> steps{1, 5, 50};
    for (const auto& row : convergenceStudy(m, randomSample(3, 10, 16), BaselineKind::TVB, steps)) {
        EXPECT_LT(row.completenessGap, 1e-12);
        EXPECT_LT(row.maxAbsDeltaVsReference, 1e-12);
    }
}

TEST(ConvergenceStudy, SingleStepOnNonlinearModelIsReported)
{
    const net::Model m = smallCnn(3, 20, 17);
    const std::vector<int> steps{1, 20, 50, 200, 1000};
    // TVB: a zero baseline would be exact here, the untrained net is positively homogeneous.
    const auto rows = convergenceStudy(m, randomSample(3, 20, 18), BaselineKind::TVB, steps);
    ASSERT_EQ(rows.size(), 5u);
    EXPECT_EQ(rows.back().maxAbsDeltaVsReference, 0.0);
    EXPECT_GT(rows.front().completenessGap, rows.back().completenessGap);
    EXPECT_THROW(convergenceStudy(m, randomSample(3, 20, 18), BaselineKind::APB, std::vector<int>{}), ConfigError);
}

TEST(Exports, CsvAndSidecar)
{
    const net::Model m = linearModel(37, 4, 19);
    const AttributionMap map = integratedGradients(m, randomSample(37, 4, 20), BaselineKind::MVB);
    const auto dir = std::filesystem::temp_directory_path() / "igshm_test_attr";
    std::filesystem::remove_all(dir);
    writeMapCsv(dir / "map.csv", map);
    std::ifstream in(dir / "map.csv");
    std::string header, first;
    std::getline(in, header);
    std::getline(in, first);
    EXPECT_EQ(header, "channel,sensor_id,t0,t1,t2,t3");
    EXPECT_EQ(first.rfind("0,0,", 0), 0u);
    const auto j = mapSidecar(map);
    EXPECT_EQ(j["baseline"], "mvb");
    EXPECT_EQ(j["steps"], 200);
    EXPECT_EQ(j["sensor_ids"].back(), 39);

    const std::vector<ChannelAttributionVector> v{channelSum(map, 4)};
    const AttributionStats stats = populationStats(v);
    writeStatsCsv(dir / "stats.csv", stats, map.sensorIds);
    writeRawCsv(dir / "raw.csv", stats, map.sensorIds);
    std::ifstream raw(dir / "raw.csv");
    std::getline(raw, header);
    EXPECT_NE(header.find(",s39"), std::string::npos);
}
