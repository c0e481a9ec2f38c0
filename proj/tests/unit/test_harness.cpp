#include "igshm/error.hpp"
#include "igshm/harness.hpp"
#include "igshm/models.hpp"
#include "igshm/netcore/checkpoint.hpp"
#include "igshm/surrogate.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <filesystem>

using namespace igshm;
using namespace igshm::harness;
using baselines::BaselineKind;
namespace fs = std::filesystem;

namespace {

// Short runs keep the fixture cheap: 55 s still yields 89 windows after trimming.
const PreparedData& smallData()
{
    static const PreparedData data = [] {
        surrogate::GeneratorConfig g = surrogate::staticDominantConfig();
        g.durationSeconds = 55;
        const auto runs = surrogate::generateCampaign(g, 3, 0.0);
        ExperimentConfig c;
        return prepareData(runs, c);
    }();
    return data;
}

ExperimentConfig quickConfig()
{
    ExperimentConfig c;
    c.widthDivisor = 16;
    c.training.maxEpochs = 1;
    return c;
}

const TrainOutcome& quickCnn()
{
    static const TrainOutcome out = trainClassifier(quickConfig(), smallData());
    return out;
}

}  // namespace

TEST(Metrics, ConstantPredictorScoresOneSixth)
{
    std::vector<std::size_t> labels, preds;
    for (std::size_t c = 0; c < 6; ++c) {
        for (int i = 0; i < 10; ++i) {
            labels.push_back(c);
            preds.push_back(2);
        }
    }
    const EvaluationResult r = scorePredictions(labels, preds, 6);
    EXPECT_DOUBLE_EQ(r.balancedAccuracy, 1.0 / 6.0);
    EXPECT_DOUBLE_EQ(r.recall[2].value(), 1.0);
    EXPECT_EQ(r.confusion[4][2], 10u);
}

TEST(Metrics, BalancedAccuracySkipsAbsentClasses)
{
    const std::vector<std::size_t> labels{0, 0, 0, 1};
    const std::vector<std::size_t> preds{0, 0, 1, 1};
    const EvaluationResult r = scorePredictions(labels, preds, 3);
    EXPECT_DOUBLE_EQ(r.accuracy, 0.75);
    EXPECT_DOUBLE_EQ(r.balancedAccuracy, (2.0 / 3.0 + 1.0) / 2.0);
    EXPECT_FALSE(r.recall[2].has_value());
    EXPECT_THROW(scorePredictions({}, {}, 3), DataError);
}

TEST(Config, ExperimentRoundTrip)
{
    ExperimentConfig c;
    c.seed = 17;
    c.splitIndex = 3;
    c.baseline = BaselineKind::MVB;
    c.igSteps = 64;
    c.training.maxEpochs = 9;
    const ExperimentConfig back = experimentConfigFromJson(toJson(c));
    EXPECT_EQ(toJson(back), toJson(c));
}

TEST(Config, RejectsBadValues)
{
    EXPECT_THROW(experimentConfigFromJson({{"ig_steps", 10}}), ConfigError);
    EXPECT_THROW(experimentConfigFromJson({{"ig_steps", 6000}}), ConfigError);
    EXPECT_THROW(experimentConfigFromJson({{"split_index", 4}}), ConfigError);
    EXPECT_THROW(experimentConfigFromJson({{"architecture", "resnet"}}), ConfigError);
    EXPECT_THROW(experimentConfigFromJson({{"seed", "zero"}}), ConfigError);
    EXPECT_THROW(experimentConfigFromJson({{"training", {{"batch_size", 0}}}}), ConfigError);
}

TEST(Data, SplitSizesAndHash)
{
    const PreparedData& d = smallData();
    EXPECT_EQ(d.runCount, 72u);
    EXPECT_EQ(d.samples.size(), 72u * 89u);
    EXPECT_EQ(d.split.train.size(), 3204u);
    EXPECT_EQ(d.split.validation.size(), 1068u);
    EXPECT_EQ(d.split.test.size(), 2136u);
    EXPECT_EQ(d.datasetHash.size(), 64u);
    EXPECT_THROW(sliceFromString("holdout"), ConfigError);
}

TEST(Training, OneEpochSmoke)
{
    const TrainOutcome& t = quickCnn();
    EXPECT_EQ(t.checkpoint.architecture, "fcn-cnn");
    EXPECT_EQ(t.checkpoint.metadata.at("epochs_run"), 1);
    ASSERT_TRUE(t.report.metrics.has_value());
    EXPECT_EQ(t.report.metrics->count, 2136u);
    EXPECT_GE(t.report.metrics->balancedAccuracy, 0.0);
    EXPECT_LE(t.report.metrics->balancedAccuracy, 1.0);

    // A serialized round trip predicts identically.
    const net::Checkpoint back = net::deserializeCheckpoint(net::serializeCheckpoint(t.checkpoint));
    const Report a = evaluate(t.checkpoint, smallData(), Slice::Test);
    const Report b = evaluate(back, smallData(), Slice::Test);
    EXPECT_EQ(a.metrics->confusion, b.metrics->confusion);
}

TEST(Training, SameSeedSameWeights)
{
    const TrainOutcome again = trainClassifier(quickConfig(), smallData());
    EXPECT_EQ(checkpointHash(again.checkpoint), checkpointHash(quickCnn().checkpoint));
}

TEST(Training, FitRestoresBestEpoch)
{
    // Labels the model cannot learn: validation loss will stall, so early stopping fires.
    net::Model m = models::buildMlp(4);
    m.initialize(1);
    net::Rng rng(5);
    std::normal_distribution<double> g;
    net::Tensor x({64, 4}), vx({32, 4});
    for (double& v : x.values()) v = g(rng);
    for (double& v : vx.values()) v = g(rng);
    std::vector<std::size_t> y(64), vy(32);
    for (auto& v : y) v = rng() % 6;
    for (auto& v : vy) v = rng() % 6;
    TrainingConfig tc;
    tc.maxEpochs = 60;
    tc.earlyStopPatience = 3;
    tc.plateauPatience = 2;
    tc.optimizer.learningRate = 1e-2;
    const FitResult r = fit(m, x, y, vx, vy, tc, 2);
    ASSERT_FALSE(r.history.empty());
    const auto best = std::min_element(r.history.begin(), r.history.end(),
                                       [](const EpochRecord& a, const EpochRecord& b) {
                                           return a.validationLoss < b.validationLoss;
                                       });
    EXPECT_EQ(best->epoch, r.bestEpoch);
    EXPECT_DOUBLE_EQ(best->validationLoss, r.bestValidationLoss);
    if (r.stoppedEarly) EXPECT_EQ(static_cast<int>(r.history.size()), r.bestEpoch + 3);
    // Learning rate never rises and never drops below the floor.
    for (std::size_t i = 1; i < r.history.size(); ++i) {
        EXPECT_LE(r.history[i].learningRate, r.history[i - 1].learningRate);
        EXPECT_GE(r.history[i].learningRate, tc.minLearningRate);
    }
}

TEST(Ablation, AllZeroInputIsChanceLevel)
{
    const std::vector<BaselineKind> kinds{BaselineKind::APB, BaselineKind::TVB, BaselineKind::MVB};
    const auto reports = ablateOnBaselines(quickCnn().checkpoint, smallData(), Slice::Test, kinds);
    ASSERT_EQ(reports.size(), 3u);
    // Every ablated input is identical, so one class is predicted for all.
    EXPECT_DOUBLE_EQ(reports[0].metrics->balancedAccuracy, 1.0 / 6.0);
    EXPECT_EQ(reports[1].details.at("ablation"), "tvb");
}

TEST(Retrain, AllZeroBaselineIsRejected)
{
    EXPECT_THROW(retrainOnBaseline(quickConfig(), BaselineKind::APB, smallData()), ConfigError);
}

TEST(Retrain, MeanVectorModelCarriesScaler)
{
    ExperimentConfig c = quickConfig();
    c.training.maxEpochs = 3;
    const TrainOutcome t = retrainOnBaseline(c, BaselineKind::MVB, smallData());
    EXPECT_EQ(t.checkpoint.architecture, "mean-mlp");
    EXPECT_TRUE(t.checkpoint.metadata.contains("scaler"));
    EXPECT_EQ(t.checkpoint.metadata.at("reduction"), "mvb");
    const Report r = evaluate(t.checkpoint, smallData(), Slice::Validation);
    EXPECT_EQ(r.metrics->count, 1068u);
    // Ablation only makes sense for models trained on raw samples.
    const std::vector<BaselineKind> kinds{BaselineKind::APB};
    EXPECT_THROW(ablateOnBaselines(t.checkpoint, smallData(), Slice::Test, kinds), ConfigError);
    EXPECT_THROW(attributeCampaign(t.checkpoint, smallData(), Slice::Test, BaselineKind::TVB, {}), ConfigError);
}

TEST(Campaign, OnlyCorrectPredictionsAreAttributed)
{
    const TrainOutcome& t = quickCnn();
    attribution::IgOptions o;
    o.steps = 20;
    const AttributionCampaign c = attributeCampaign(t.checkpoint, smallData(), Slice::Test, BaselineKind::TVB, o, 2, 6);
    ASSERT_EQ(c.maps.size(), c.sampleIds.size());
    ASSERT_LE(c.maps.size(), 6u);
    ASSERT_FALSE(c.maps.empty());
    const std::vector<std::size_t> ids(c.sampleIds.begin(), c.sampleIds.end());
    const net::Tensor x = buildInputs(t.checkpoint, smallData(), ids);
    const auto pred = predict(t.checkpoint.model, x);
    for (std::size_t i = 0; i < ids.size(); ++i) {
        EXPECT_EQ(pred[i], smallData().samples[ids[i]].label);
        EXPECT_EQ(c.maps[i].targetClass, pred[i]);
    }
    EXPECT_EQ(c.stats.channels.size(), 37u);
    EXPECT_EQ(c.populationRanking.size(), 37u);

    // Threads do not change results.
    const AttributionCampaign serial =
        attributeCampaign(t.checkpoint, smallData(), Slice::Test, BaselineKind::TVB, o, 1, 6);
    EXPECT_EQ(serial.report.hashes.at("maps"), c.report.hashes.at("maps"));

    o.steps = 10;
    EXPECT_THROW(attributeCampaign(t.checkpoint, smallData(), Slice::Test, BaselineKind::TVB, o), ConfigError);

    const fs::path dir = fs::temp_directory_path() / "igshm_campaign_test";
    fs::remove_all(dir);
    exportCampaign(dir, serial);
    EXPECT_TRUE(fs::exists(dir / "stats.csv"));
    EXPECT_TRUE(fs::exists(dir / "raw.csv"));
    EXPECT_TRUE(fs::exists(dir / "maps" / ("sample_" + std::to_string(ids[0]) + ".json")));
    fs::remove_all(dir);
}

TEST(Reports, WritesJsonAndText)
{
    const fs::path dir = fs::temp_directory_path() / "igshm_report_test";
    fs::remove_all(dir);
    writeReport(dir, "eval", quickCnn().report);
    EXPECT_TRUE(fs::exists(dir / "eval.json"));
    EXPECT_NE(quickCnn().report.toText().find("balanced accuracy"), std::string::npos);
    fs::remove_all(dir);
}
