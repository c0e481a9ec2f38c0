#pragma once

#include "igshm/attribution.hpp"
#include "igshm/baselines.hpp"
#include "igshm/netcore/checkpoint.hpp"
#include "igshm/netcore/training.hpp"
#include "igshm/preprocessing.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

/// Experiment protocols: train, evaluate, ablate, retrain, attribute.
namespace igshm::harness {

inline constexpr int kMinIgSteps = 20;

struct TrainingConfig {
    net::AdamWConfig optimizer;
    double labelSmoothing = 0.05;
    std::size_t batchSize = 32;
    int maxEpochs = 150;
    // learning-rate reduction on a validation-loss plateau
    double plateauFactor = 0.5;
    int plateauPatience = 10;
    double plateauMinDelta = 1e-4;
    double minLearningRate = 1e-5;
    // early stopping on validation loss, best weights restored
    int earlyStopPatience = 12;

    void validate() const;
};

nlohmann::json toJson(const TrainingConfig& config);
TrainingConfig trainingConfigFromJson(const nlohmann::json& j);

struct ExperimentConfig {
    std::filesystem::path datasetDir = "data/surrogate";
    std::filesystem::path outputDir = "runs";
    double aoaDeg = 0.0;
    int splitIndex = 1;
    std::uint64_t seed = 0;  ///< split shuffle, weight init, batch order, dropout
    std::string architecture = "fcn-cnn";
    std::size_t widthDivisor = 1;  ///< CNN filters divided by this
    TrainingConfig training;
    baselines::BaselineKind baseline = baselines::BaselineKind::TVB;
    int igSteps = attribution::kDefaultSteps;
    net::OutputKind igOutput = net::OutputKind::Logit;
    std::size_t igChunk = 32;
    std::size_t threads = 1;
    data::ZScoreScope zscore = data::ZScoreScope::Joint;
    double validationFraction = 0.25;

    void validate() const;
};

nlohmann::json toJson(const ExperimentConfig& config);
ExperimentConfig experimentConfigFromJson(const nlohmann::json& j);

/// Windowed, normalized samples of one AoA plus their split.
struct PreparedData {
    data::Dataset samples;
    data::SplitAssignment split;
    std::string datasetHash;  ///< over run metadata and normalized sample values
    std::size_t runCount = 0;
};

PreparedData prepareData(std::span<const data::RawRun> runs, const ExperimentConfig& config);
/// Loads the runs of config.aoaDeg from config.datasetDir.
PreparedData loadData(const ExperimentConfig& config);

enum class Slice { Train, Validation, Test };
std::string_view toString(Slice slice);
Slice sliceFromString(std::string_view name);
const std::vector<std::size_t>& indicesOf(const PreparedData& data, Slice slice);

struct EvaluationResult {
    std::size_t count = 0;
    double accuracy = 0.0;
    double balancedAccuracy = 0.0;              ///< mean recall over classes present
    std::vector<std::optional<double>> recall;  ///< per class, empty when absent
    std::vector<std::vector<std::size_t>> confusion;  ///< [true][predicted]
};

EvaluationResult scorePredictions(std::span<const std::size_t> labels, std::span<const std::size_t> predictions,
                                  std::size_t classes);
nlohmann::json toJson(const EvaluationResult& r);

/// Arg-max class of every row, inferred in chunks.
std::vector<std::size_t> predict(const net::Model& model, const net::Tensor& inputs, std::size_t chunk = 256);

struct EpochRecord {
    int epoch = 0;
    double trainLoss = 0.0;
    double validationLoss = 0.0;
    double validationAccuracy = 0.0;
    double learningRate = 0.0;
};

struct FitResult {
    net::Model model;  ///< weights of the best validation-loss epoch
    std::vector<EpochRecord> history;
    int bestEpoch = 0;
    double bestValidationLoss = 0.0;
    bool stoppedEarly = false;
};

FitResult fit(net::Model model, const net::Tensor& trainX, std::span<const std::size_t> trainY,
              const net::Tensor& validationX, std::span<const std::size_t> validationY, const TrainingConfig& config,
              std::uint64_t seed);

struct Report {
    std::string command;
    nlohmann::json config = nlohmann::json::object();
    std::optional<EvaluationResult> metrics;
    nlohmann::json details = nlohmann::json::object();
    double wallSeconds = 0.0;
    std::map<std::string, std::string> hashes;

    nlohmann::json toJson() const;
    std::string toText() const;
};

/// Writes <stem>.json and <stem>.txt.
void writeReport(const std::filesystem::path& dir, const std::string& stem, const Report& report);

/// How a checkpoint consumes samples, read from its metadata.
enum class InputKind { Window, MeanVector };

struct TrainOutcome {
    net::Checkpoint checkpoint;
    Report report;  ///< test-slice metrics of the restored best weights
};

/// Trains config.architecture on the raw samples.
TrainOutcome trainClassifier(const ExperimentConfig& config, const PreparedData& data);

/// TVB: fcn-cnn on TVB-reduced samples. MVB: mean-mlp on mean vectors.
/// APB is rejected: every training sample would be identical.
TrainOutcome retrainOnBaseline(const ExperimentConfig& config, baselines::BaselineKind kind, const PreparedData& data);

/// Inputs the checkpoint expects for the given samples, optionally after
/// replacing every sample by a baseline.
net::Tensor buildInputs(const net::Checkpoint& checkpoint, const PreparedData& data, std::span<const std::size_t> ids,
                        std::optional<baselines::BaselineKind> ablation = std::nullopt);

/// Infer-mode metrics on a slice, optionally on baseline-reduced inputs.
Report evaluate(const net::Checkpoint& checkpoint, const PreparedData& data, Slice slice,
                std::optional<baselines::BaselineKind> ablation = std::nullopt);

/// The unmodified checkpoint evaluated on every baseline kind.
std::vector<Report> ablateOnBaselines(const net::Checkpoint& checkpoint, const PreparedData& data, Slice slice,
                                      std::span<const baselines::BaselineKind> kinds = baselines::kAllBaselines);

struct AttributionCampaign {
    std::vector<std::size_t> sampleIds;  ///< dataset indices, correctly classified only
    std::vector<attribution::AttributionMap> maps;
    std::vector<attribution::ChannelAttributionVector> vectors;
    attribution::AttributionStats stats;
    std::vector<std::vector<std::size_t>> topChannels;  ///< top 3 channels per sample
    std::vector<std::size_t> populationRanking;        ///< channels by mean |c|, descending
    std::size_t evaluated = 0;
    Report report;
};

/// IG maps for the correctly classified samples of a slice. `maxSamples`
/// keeps the first N of them in dataset order.
AttributionCampaign attributeCampaign(const net::Checkpoint& checkpoint, const PreparedData& data, Slice slice,
                                      baselines::BaselineKind kind, const attribution::IgOptions& options,
                                      std::size_t threads = 1, std::optional<std::size_t> maxSamples = std::nullopt);

/// maps/<sample>.csv|json (when `maps`), stats.csv, raw.csv, top_channels.csv.
void exportCampaign(const std::filesystem::path& dir, const AttributionCampaign& campaign, bool maps = true);

std::string checkpointHash(const net::Checkpoint& checkpoint);

}  // namespace igshm::harness
