#include "igshm/baselines.hpp"
#include "igshm/dataset_io.hpp"
#include "igshm/error.hpp"
#include "igshm/preprocessing.hpp"
#include "igshm/sensor_layout.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

using namespace igshm;
using namespace igshm::data;
namespace fs = std::filesystem;

namespace {

fs::path scratchDir(const std::string& name)
{
    const fs::path p = fs::temp_directory_path() / ("igshm_test_" + name);
    fs::remove_all(p);
    fs::create_directories(p);
    return p;
}

RawRun randomRun(std::size_t channels, std::size_t steps, std::uint64_t seed)
{
    RawRun run;
    run.meta = {3, 4, 2, 8.0, 100.0, 24.0, 1.9};
    run.pressures = net::Tensor({channels, steps});
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> n(0.0, 1.0);
    for (double& v : run.pressures.storage()) v = n(rng);
    return run;
}

net::Tensor randomSample(std::size_t c, std::size_t t, std::uint64_t seed)
{
    net::Tensor x({c, t});
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> u(-3.0, 3.0);
    for (double& v : x.storage()) v = u(rng);
    return x;
}

// Tiny stand-in for the windowed 0 deg campaign: 4 series x 6 classes x 3 runs x 89 windows.
Dataset fakeCampaign()
{
    Dataset d;
    for (int ts = 1; ts <= 4; ++ts) {
        for (std::size_t label = 0; label < 6; ++label) {
            for (int run = 1; run <= 3; ++run) {
                for (int w = 0; w < 89; ++w) d.push_back({net::Tensor({1, 1}), label, {ts, run, w}});
            }
        }
    }
    return d;
}

}  // namespace

TEST(SensorLayout, StandardHas37Channels)
{
    const SensorLayout& l = SensorLayout::standard();
    EXPECT_EQ(l.channelCount(), 37u);
    for (int dead : {20, 29, 36}) {
        EXPECT_FALSE(l.isWorking(dead));
        EXPECT_FALSE(l.channelOf(dead).has_value());
    }
    for (int id = 0; id <= 19; ++id) EXPECT_EQ(l.channelOf(id), static_cast<std::size_t>(id));
    EXPECT_EQ(l.sensorId(36), 39);
    EXPECT_EQ(l.channelOf(21), 20u);
}

TEST(SensorLayout, LeadingEdgeAtSensor15)
{
    const SensorLayout& l = SensorLayout::standard();
    EXPECT_DOUBLE_EQ(l.chordPosition(15), 0.0);
    EXPECT_DOUBLE_EQ(l.chordPosition(0), 1.0);
    EXPECT_DOUBLE_EQ(l.chordPosition(39), 1.0);
    EXPECT_EQ(l.surface(14), Surface::Suction);
    EXPECT_EQ(l.surface(16), Surface::Pressure);
    EXPECT_THROW(l.chordPosition(40), DataError);
}

TEST(Preprocessing, WindowStrideForTrimmedRun)
{
    EXPECT_EQ(windowStride(10000, 150, 89), 111u);
    const RawRun run = randomRun(2, 15000, 1);
    const RawRun trimmed = trimRun(run);
    EXPECT_EQ(trimmed.steps(), 10000u);
    EXPECT_EQ(trimmed.pressures.at(1, 0), run.pressures.at(1, 4000));
    const Dataset windows = windowRun(trimmed);
    ASSERT_EQ(windows.size(), 89u);
    EXPECT_EQ(windows.back().values.at(0, 0), trimmed.pressures.at(0, 9768));
    EXPECT_EQ(windows.back().provenance.windowIndex, 88);
    EXPECT_EQ(windows.front().label, 4u);
}

TEST(Preprocessing, FiftySecondRunHasNothingLeft)
{
    EXPECT_THROW(trimRun(randomRun(2, 5000, 1)), DataError);
}

TEST(Preprocessing, ShortRunCannotBeWindowed)
{
    EXPECT_THROW(windowRun(randomRun(2, 100, 1)), DataError);
    EXPECT_EQ(windowStride(150, 150, 1), 0u);
}

TEST(Preprocessing, JointZScore)
{
    const net::Tensor x = randomSample(3, 50, 2);
    const net::Tensor z = zScore(x);
    double mean = 0, sq = 0;
    for (double v : z.storage()) mean += v;
    mean /= static_cast<double>(z.size());
    for (double v : z.storage()) sq += (v - mean) * (v - mean);
    EXPECT_NEAR(mean, 0.0, 1e-12);
    EXPECT_NEAR(sq / static_cast<double>(z.size()), 1.0, 1e-12);
}

TEST(Preprocessing, PerChannelZScore)
{
    const net::Tensor z = zScore(randomSample(3, 50, 3), ZScoreScope::PerChannel);
    for (std::size_t c = 0; c < 3; ++c) {
        double mean = 0;
        for (std::size_t t = 0; t < 50; ++t) mean += z.at(c, t);
        EXPECT_NEAR(mean / 50.0, 0.0, 1e-12);
    }
}

TEST(Preprocessing, ZeroVarianceNormalizesToZeros)
{
    const net::Tensor z = zScore(net::Tensor({2, 5}, 3.25));
    for (double v : z.storage()) EXPECT_EQ(v, 0.0);
    net::Tensor x({2, 4}, 1.0);
    x.at(1, 2) = 5.0;
    const net::Tensor pc = zScore(x, ZScoreScope::PerChannel);
    for (std::size_t t = 0; t < 4; ++t) EXPECT_EQ(pc.at(0, t), 0.0);
}

TEST(Preprocessing, RunMetaJsonRoundTrip)
{
    const RunMeta m{7, 1, 3, 8.0, 100.0, 12.0, 1.9};
    EXPECT_EQ(runMetaFromJson(toJson(m)), m);
    auto j = toJson(m);
    j["damage_class"] = 6;
    EXPECT_THROW(runMetaFromJson(j), DataError);
    j.erase("damage_class");
    EXPECT_THROW(runMetaFromJson(j), DataError);
}

TEST(Splits, CountsOfTheFullGrid)
{
    const Dataset d = fakeCampaign();
    ASSERT_EQ(d.size(), 6408u);
    for (int split = 1; split <= 3; ++split) {
        const SplitAssignment s = assignSplits(d, split, 0);
        EXPECT_EQ(s.train.size(), 3204u);
        EXPECT_EQ(s.validation.size(), 1068u);
        EXPECT_EQ(s.test.size(), 2136u);
        std::set<std::size_t> all(s.train.begin(), s.train.end());
        all.insert(s.validation.begin(), s.validation.end());
        all.insert(s.test.begin(), s.test.end());
        EXPECT_EQ(all.size(), d.size());
        for (std::size_t i : s.test) EXPECT_EQ(d[i].provenance.runIndex, heldOutRun(split));
        for (std::size_t i : s.validation) EXPECT_NE(d[i].provenance.runIndex, heldOutRun(split));
        std::vector<int> perClass(6, 0);
        for (std::size_t i : s.validation) ++perClass[d[i].label];
        for (int c : perClass) EXPECT_EQ(c, 178);
    }
}

TEST(Splits, RotationAndSeeding)
{
    EXPECT_EQ(heldOutRun(1), 3);
    EXPECT_EQ(heldOutRun(2), 1);
    EXPECT_EQ(heldOutRun(3), 2);
    EXPECT_THROW(heldOutRun(4), ConfigError);
    const Dataset d = fakeCampaign();
    EXPECT_EQ(assignSplits(d, 1, 5).validation, assignSplits(d, 1, 5).validation);
    EXPECT_NE(assignSplits(d, 1, 5).validation, assignSplits(d, 1, 6).validation);
}

TEST(Splits, MissingRunIsDataError)
{
    Dataset d = fakeCampaign();
    std::erase_if(d, [](const Sample& s) { return s.provenance.testSeries == 2 && s.label == 3 && s.provenance.runIndex == 1; });
    EXPECT_THROW(assignSplits(d, 1, 0), DataError);
    EXPECT_THROW(assignSplits(Dataset{}, 1, 0), DataError);
}

TEST(MeanVectorScaler, StandardizesTrainingVectors)
{
    const std::vector<std::vector<double>> v{{1, 10}, {3, 10}, {5, 10}};
    const MeanVectorScaler s = MeanVectorScaler::fit(v);
    const auto t = s.transform(v[2]);
    EXPECT_NEAR(t[0], 2.0 / std::sqrt(8.0 / 3.0), 1e-12);
    EXPECT_EQ(t[1], 0.0);
    const MeanVectorScaler back = MeanVectorScaler::fromJson(s.toJson());
    EXPECT_EQ(back.transform(v[0]), s.transform(v[0]));
    EXPECT_THROW(MeanVectorScaler{}.transform(v[0]), DataError);
}

TEST(DatasetIo, BinaryRoundTripIsBitExact)
{
    const fs::path root = scratchDir("binary");
    const RawRun run = randomRun(37, 300, 4);
    const fs::path dir = root / runDirName(run.meta);
    writeRun(dir, run);
    EXPECT_EQ(readRun(dir), run);
    const auto runs = loadRuns(root, 8.0);
    ASSERT_EQ(runs.size(), 1u);
    EXPECT_THROW(loadRuns(root, 0.0), DataError);
}

TEST(DatasetIo, CsvRoundTripIsBitExact)
{
    const fs::path root = scratchDir("csv");
    const RawRun run = randomRun(37, 120, 5);
    writeCsvRun(root / "run.csv", run);
    EXPECT_EQ(readCsvRun(root / "run.csv", run.meta), run);
}

TEST(DatasetIo, CsvDropsDeadSensorsAndNamesMissingOnes)
{
    const fs::path root = scratchDir("csv_missing");
    const SensorLayout& layout = SensorLayout::standard();
    {
        std::ofstream out(root / "full.csv");
        out << "time";
        for (int id = 0; id < 40; ++id) out << ",s" << id;
        out << "\n";
        for (int r = 0; r < 3; ++r) {
            out << r * 0.01;
            for (int id = 0; id < 40; ++id) out << "," << id + r;
            out << "\n";
        }
    }
    const RawRun full = readCsvRun(root / "full.csv", RunMeta{});
    EXPECT_EQ(full.channels(), 37u);
    EXPECT_EQ(full.pressures.at(*layout.channelOf(39), 2), 41.0);

    {
        std::ofstream out(root / "missing.csv");
        for (int id = 0; id < 40; ++id) {
            if (id != 17) out << (id ? "," : "") << id;
        }
        out << "\n";
        for (int id = 0; id < 40; ++id) {
            if (id != 17) out << (id ? "," : "") << 1.0;
        }
        out << "\n";
    }
    try {
        readCsvRun(root / "missing.csv", RunMeta{});
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("sensor 17"), std::string::npos) << e.what();
    }
}

TEST(DatasetIo, NanIsReportedWithLocation)
{
    const fs::path root = scratchDir("csv_nan");
    RawRun run = randomRun(37, 10, 6);
    run.pressures.at(5, 7) = std::nan("");
    writeCsvRun(root / "nan.csv", run);
    try {
        readCsvRun(root / "nan.csv", run.meta);
        FAIL() << "expected DataError";
    } catch (const DataError& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("sensor 5"), std::string::npos) << msg;
        EXPECT_NE(msg.find("step 7"), std::string::npos) << msg;
    }
}

TEST(Baselines, NamesRoundTrip)
{
    for (auto k : baselines::kAllBaselines) EXPECT_EQ(baselines::baselineFromString(baselines::toString(k)), k);
    EXPECT_EQ(baselines::baselineFromString("MVB"), baselines::BaselineKind::MVB);
    EXPECT_THROW(baselines::baselineFromString("xyz"), ConfigError);
}

TEST(Baselines, DefinitionsOnSmallSample)
{
    const net::Tensor x({2, 3}, std::vector<double>{1, 2, 3, -1, 0, 4});
    const net::Tensor apb = baselines::makeBaseline(x, baselines::BaselineKind::APB);
    const net::Tensor mvb = baselines::makeBaseline(x, baselines::BaselineKind::MVB);
    const net::Tensor tvb = baselines::makeBaseline(x, baselines::BaselineKind::TVB);
    for (double v : apb.storage()) EXPECT_EQ(v, 0.0);
    EXPECT_EQ(mvb, net::Tensor({2, 3}, std::vector<double>{2, 2, 2, 1, 1, 1}));
    EXPECT_EQ(tvb, net::Tensor({2, 3}, std::vector<double>{-1, 0, 1, -2, -1, 3}));
}

TEST(Baselines, TvbPlusMvbRecoversSample)
{
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const net::Tensor x = randomSample(37, 150, seed);
        const net::Tensor tvb = baselines::makeBaseline(x, baselines::BaselineKind::TVB);
        const net::Tensor mvb = baselines::makeBaseline(x, baselines::BaselineKind::MVB);
        for (std::size_t i = 0; i < x.size(); ++i) EXPECT_NEAR(tvb[i] + mvb[i], x[i], 1e-12);
        // TVB channels are zero-mean.
        for (double m : channelMeans(tvb)) EXPECT_NEAR(m, 0.0, 1e-12);
    }
}

TEST(Baselines, ReduceKeepsLabelsAndProvenance)
{
    Dataset d{{randomSample(2, 4, 1), 3, {1, 2, 5}}};
    const Dataset r = baselines::reduceDataset(d, baselines::BaselineKind::MVB);
    EXPECT_EQ(r[0].label, 3u);
    EXPECT_EQ(r[0].provenance, d[0].provenance);
    EXPECT_THROW(baselines::reduceDataset(Dataset{}, baselines::BaselineKind::TVB), DataError);
}
