#include "igshm/harness.hpp"

#include "igshm/dataset_io.hpp"
#include "igshm/error.hpp"
#include "igshm/io/binary.hpp"
#include "igshm/models.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <thread>

namespace igshm::harness {
namespace {

using Clock = std::chrono::steady_clock;
using baselines::BaselineKind;

double secondsSince(Clock::time_point start)
{
    return std::chrono::duration<double>(Clock::now() - start).count();
}

template <typename T>
void readOpt(const nlohmann::json& j, const char* key, T& out)
{
    if (j.contains(key)) out = j.at(key).get<T>();
}

std::string_view toString(InputKind k)
{
    return k == InputKind::Window ? "window" : "mean-vector";
}

InputKind inputKindOf(const net::Checkpoint& ck)
{
    const std::string s = ck.metadata.value("input", std::string("window"));
    if (s == "window") return InputKind::Window;
    if (s == "mean-vector") return InputKind::MeanVector;
    throw DataError("checkpoint declares unknown input kind '" + s + "'");
}

std::optional<BaselineKind> reductionOf(const net::Checkpoint& ck)
{
    const std::string s = ck.metadata.value("reduction", std::string("none"));
    if (s == "none") return std::nullopt;
    return baselines::baselineFromString(s);
}

std::vector<std::size_t> labelsOf(const PreparedData& data, std::span<const std::size_t> ids)
{
    std::vector<std::size_t> out;
    out.reserve(ids.size());
    for (std::size_t i : ids) out.push_back(data.samples[i].label);
    return out;
}

net::Tensor gatherRows(const net::Tensor& x, std::span<const std::size_t> rows)
{
    net::Shape shape = x.shape();
    const std::size_t stride = x.size() / shape[0];
    shape[0] = rows.size();
    net::Tensor out(shape);
    for (std::size_t r = 0; r < rows.size(); ++r) {
        std::copy_n(x.data() + rows[r] * stride, stride, out.data() + r * stride);
    }
    return out;
}

net::Tensor windowInputs(const PreparedData& data, std::span<const std::size_t> ids, std::optional<BaselineKind> kind)
{
    if (ids.empty()) throw DataError("no samples selected");
    const net::Shape& s = data.samples[ids[0]].values.shape();
    net::Tensor out({ids.size(), s[0], s[1]});
    const std::size_t stride = s[0] * s[1];
    for (std::size_t r = 0; r < ids.size(); ++r) {
        const net::Tensor& x = data.samples[ids[r]].values;
        if (x.shape() != s) throw ShapeError("samples differ in shape");
        if (kind) {
            const net::Tensor b = baselines::makeBaseline(x, *kind);
            std::copy_n(b.data(), stride, out.data() + r * stride);
        } else {
            std::copy_n(x.data(), stride, out.data() + r * stride);
        }
    }
    return out;
}

std::vector<std::vector<double>> rawMeanVectors(const PreparedData& data, std::span<const std::size_t> ids,
                                                std::optional<BaselineKind> kind)
{
    std::vector<std::vector<double>> out;
    out.reserve(ids.size());
    for (std::size_t i : ids) {
        const net::Tensor& x = data.samples[i].values;
        out.push_back(data::channelMeans(kind ? baselines::makeBaseline(x, *kind) : x));
    }
    return out;
}

net::Tensor meanVectorInputs(const std::vector<std::vector<double>>& vectors, const data::MeanVectorScaler& scaler)
{
    if (vectors.empty()) throw DataError("no samples selected");
    const std::size_t dim = vectors[0].size();
    net::Tensor out({vectors.size(), dim});
    for (std::size_t r = 0; r < vectors.size(); ++r) {
        const auto v = scaler.transform(vectors[r]);
        std::copy(v.begin(), v.end(), out.data() + r * dim);
    }
    return out;
}

nlohmann::json historyJson(const std::vector<EpochRecord>& h)
{
    nlohmann::json a = nlohmann::json::array();
    for (const auto& e : h) {
        a.push_back({{"epoch", e.epoch},
                     {"train_loss", e.trainLoss},
                     {"val_loss", e.validationLoss},
                     {"val_accuracy", e.validationAccuracy},
                     {"learning_rate", e.learningRate}});
    }
    return a;
}

std::string fmtPct(double v)
{
    std::ostringstream ss;
    ss.setf(std::ios::fixed);
    ss.precision(2);
    ss << 100.0 * v << '%';
    return ss.str();
}

// Shared training path for train and retrain.
TrainOutcome runTraining(const ExperimentConfig& config, const PreparedData& data, const std::string& command,
                         const std::string& architecture, std::optional<BaselineKind> reduction)
{
    config.validate();
    const auto start = Clock::now();
    const auto& trainIds = data.split.train;
    const auto& valIds = data.split.validation;
    if (trainIds.empty() || valIds.empty()) throw DataError("training and validation slices must be non-empty");

    net::Checkpoint ck;
    ck.architecture = architecture;
    ck.seed = config.seed;
    const net::Shape& sampleShape = data.samples.at(trainIds[0]).values.shape();
    net::Tensor trainX, valX;
    if (architecture == models::kCnnName) {
        ck.model = models::buildCnn(sampleShape[0], sampleShape[1], models::CnnArch{}.narrowed(config.widthDivisor));
        ck.metadata["input"] = toString(InputKind::Window);
        ck.metadata["width_divisor"] = config.widthDivisor;
        trainX = windowInputs(data, trainIds, reduction);
        valX = windowInputs(data, valIds, reduction);
    } else if (architecture == models::kMlpName) {
        ck.model = models::buildMlp(sampleShape[0]);
        ck.metadata["input"] = toString(InputKind::MeanVector);
        const auto trainVectors = rawMeanVectors(data, trainIds, reduction);
        const data::MeanVectorScaler scaler = data::MeanVectorScaler::fit(trainVectors);
        ck.metadata["scaler"] = scaler.toJson();
        trainX = meanVectorInputs(trainVectors, scaler);
        valX = meanVectorInputs(rawMeanVectors(data, valIds, reduction), scaler);
    } else {
        throw ConfigError("unknown architecture '" + architecture + "' (expected fcn-cnn or mean-mlp)");
    }
    ck.model.initialize(config.seed);
    ck.metadata["reduction"] = reduction ? std::string(baselines::toString(*reduction)) : "none";
    ck.metadata["zscore"] = data::toString(config.zscore);
    ck.metadata["sample_shape"] = sampleShape;
    ck.metadata["aoa_deg"] = config.aoaDeg;
    ck.metadata["split_index"] = config.splitIndex;
    ck.metadata["dataset_sha256"] = data.datasetHash;
    ck.metadata["training"] = toJson(config.training);

    FitResult fr = fit(std::move(ck.model), trainX, labelsOf(data, trainIds), valX, labelsOf(data, valIds),
                       config.training, config.seed);
    ck.model = std::move(fr.model);
    ck.metadata["best_epoch"] = fr.bestEpoch;
    ck.metadata["best_val_loss"] = fr.bestValidationLoss;
    ck.metadata["epochs_run"] = fr.history.size();
    ck.metadata["stopped_early"] = fr.stoppedEarly;
    ck.metadata["history"] = historyJson(fr.history);

    TrainOutcome out;
    out.checkpoint = std::move(ck);
    Report test = evaluate(out.checkpoint, data, Slice::Test);
    out.report = std::move(test);
    out.report.command = command;
    out.report.config = toJson(config);
    out.report.details["architecture"] = architecture;
    out.report.details["reduction"] = out.checkpoint.metadata["reduction"];
    out.report.details["parameters"] = out.checkpoint.model.parameterCount();
    out.report.details["best_epoch"] = fr.bestEpoch;
    out.report.details["epochs_run"] = fr.history.size();
    out.report.details["stopped_early"] = fr.stoppedEarly;
    out.report.details["history"] = historyJson(fr.history);
    out.report.details["validation"] = toJson(evaluate(out.checkpoint, data, Slice::Validation).metrics.value());
    out.report.hashes["checkpoint"] = checkpointHash(out.checkpoint);
    out.report.wallSeconds = secondsSince(start);
    return out;
}

}  // namespace

// ---------------------------------------------------------------- configs

void TrainingConfig::validate() const
{
    if (!(optimizer.learningRate > 0.0)) throw ConfigError("learning rate must be positive");
    if (!(optimizer.weightDecay >= 0.0)) throw ConfigError("weight decay must be non-negative");
    if (!(labelSmoothing >= 0.0 && labelSmoothing < 1.0)) throw ConfigError("label smoothing must lie in [0, 1)");
    if (batchSize == 0) throw ConfigError("batch size must be positive");
    if (maxEpochs < 1) throw ConfigError("max epochs must be positive");
    if (!(plateauFactor > 0.0 && plateauFactor < 1.0)) throw ConfigError("plateau factor must lie in (0, 1)");
    if (plateauPatience < 0 || earlyStopPatience < 0) throw ConfigError("patience must be non-negative");
    if (!(minLearningRate >= 0.0)) throw ConfigError("minimum learning rate must be non-negative");
}

nlohmann::json toJson(const TrainingConfig& c)
{
    return {{"learning_rate", c.optimizer.learningRate},
            {"weight_decay", c.optimizer.weightDecay},
            {"beta1", c.optimizer.beta1},
            {"beta2", c.optimizer.beta2},
            {"adam_epsilon", c.optimizer.epsilon},
            {"label_smoothing", c.labelSmoothing},
            {"batch_size", c.batchSize},
            {"max_epochs", c.maxEpochs},
            {"plateau_factor", c.plateauFactor},
            {"plateau_patience", c.plateauPatience},
            {"plateau_min_delta", c.plateauMinDelta},
            {"min_learning_rate", c.minLearningRate},
            {"early_stop_patience", c.earlyStopPatience}};
}

TrainingConfig trainingConfigFromJson(const nlohmann::json& j)
{
    TrainingConfig c;
    readOpt(j, "learning_rate", c.optimizer.learningRate);
    readOpt(j, "weight_decay", c.optimizer.weightDecay);
    readOpt(j, "beta1", c.optimizer.beta1);
    readOpt(j, "beta2", c.optimizer.beta2);
    readOpt(j, "adam_epsilon", c.optimizer.epsilon);
    readOpt(j, "label_smoothing", c.labelSmoothing);
    readOpt(j, "batch_size", c.batchSize);
    readOpt(j, "max_epochs", c.maxEpochs);
    readOpt(j, "plateau_factor", c.plateauFactor);
    readOpt(j, "plateau_patience", c.plateauPatience);
    readOpt(j, "plateau_min_delta", c.plateauMinDelta);
    readOpt(j, "min_learning_rate", c.minLearningRate);
    readOpt(j, "early_stop_patience", c.earlyStopPatience);
    return c;
}

void ExperimentConfig::validate() const
{
    data::heldOutRun(splitIndex);
    if (architecture != models::kCnnName && architecture != models::kMlpName) {
        throw ConfigError("unknown architecture '" + architecture + "' (expected fcn-cnn or mean-mlp)");
    }
    if (widthDivisor == 0) throw ConfigError("width divisor must be positive");
    training.validate();
    if (igSteps < kMinIgSteps || igSteps > attribution::kMaxSteps) {
        throw ConfigError("IG steps must lie in [" + std::to_string(kMinIgSteps) + ", " +
                          std::to_string(attribution::kMaxSteps) + "], got " + std::to_string(igSteps));
    }
    if (igChunk == 0) throw ConfigError("IG chunk size must be positive");
    if (threads == 0) throw ConfigError("thread count must be positive");
    if (!(validationFraction > 0.0 && validationFraction < 1.0)) {
        throw ConfigError("validation fraction must lie in (0, 1)");
    }
}

nlohmann::json toJson(const ExperimentConfig& c)
{
    return {{"dataset_dir", c.datasetDir.string()},
            {"output_dir", c.outputDir.string()},
            {"aoa_deg", c.aoaDeg},
            {"split_index", c.splitIndex},
            {"seed", c.seed},
            {"architecture", c.architecture},
            {"width_divisor", c.widthDivisor},
            {"training", toJson(c.training)},
            {"baseline", std::string(baselines::toString(c.baseline))},
            {"ig_steps", c.igSteps},
            {"ig_output", std::string(net::toString(c.igOutput))},
            {"ig_chunk", c.igChunk},
            {"threads", c.threads},
            {"zscore", std::string(data::toString(c.zscore))},
            {"validation_fraction", c.validationFraction}};
}

ExperimentConfig experimentConfigFromJson(const nlohmann::json& j)
{
    try {
        ExperimentConfig c;
        if (j.contains("dataset_dir")) c.datasetDir = j.at("dataset_dir").get<std::string>();
        if (j.contains("output_dir")) c.outputDir = j.at("output_dir").get<std::string>();
        readOpt(j, "aoa_deg", c.aoaDeg);
        readOpt(j, "split_index", c.splitIndex);
        readOpt(j, "seed", c.seed);
        readOpt(j, "architecture", c.architecture);
        readOpt(j, "width_divisor", c.widthDivisor);
        if (j.contains("training")) c.training = trainingConfigFromJson(j.at("training"));
        if (j.contains("baseline")) c.baseline = baselines::baselineFromString(j.at("baseline").get<std::string>());
        readOpt(j, "ig_steps", c.igSteps);
        if (j.contains("ig_output")) c.igOutput = net::outputKindFromString(j.at("ig_output").get<std::string>());
        readOpt(j, "ig_chunk", c.igChunk);
        readOpt(j, "threads", c.threads);
        if (j.contains("zscore")) c.zscore = data::zScoreScopeFromString(j.at("zscore").get<std::string>());
        readOpt(j, "validation_fraction", c.validationFraction);
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed experiment config: ") + e.what());
    }
}

// ------------------------------------------------------------------ data

PreparedData prepareData(std::span<const data::RawRun> runs, const ExperimentConfig& config)
{
    if (runs.empty()) throw DataError("no runs to prepare");
    PreparedData out;
    io::Sha256 hash;
    data::PreprocessOptions options;
    options.scope = config.zscore;
    for (const data::RawRun& run : runs) {
        if (run.meta.aoaDeg != config.aoaDeg) continue;
        hash.update(data::toJson(run.meta).dump());
        data::Dataset windows = data::prepareRun(run, options);
        for (auto& w : windows) {
            hash.update(w.values.values());
            out.samples.push_back(std::move(w));
        }
        ++out.runCount;
    }
    if (out.samples.empty()) throw DataError("no runs at AoA " + std::to_string(config.aoaDeg) + " deg");
    out.datasetHash = hash.hex();
    out.split = data::assignSplits(out.samples, config.splitIndex, config.seed, config.validationFraction);
    return out;
}

PreparedData loadData(const ExperimentConfig& config)
{
    const std::vector<data::RawRun> runs = data::loadRuns(config.datasetDir, config.aoaDeg);
    return prepareData(runs, config);
}

std::string_view toString(Slice slice)
{
    switch (slice) {
    case Slice::Train: return "train";
    case Slice::Validation: return "validation";
    case Slice::Test: return "test";
    }
    return "?";
}

Slice sliceFromString(std::string_view name)
{
    if (name == "train") return Slice::Train;
    if (name == "validation" || name == "val") return Slice::Validation;
    if (name == "test") return Slice::Test;
    throw ConfigError("unknown slice '" + std::string(name) + "' (expected train, validation or test)");
}

const std::vector<std::size_t>& indicesOf(const PreparedData& data, Slice slice)
{
    switch (slice) {
    case Slice::Train: return data.split.train;
    case Slice::Validation: return data.split.validation;
    case Slice::Test: return data.split.test;
    }
    throw ConfigError("unknown slice");
}

// ---------------------------------------------------------------- metrics

EvaluationResult scorePredictions(std::span<const std::size_t> labels, std::span<const std::size_t> predictions,
                                  std::size_t classes)
{
    if (labels.size() != predictions.size()) throw ShapeError("one prediction per label required");
    if (labels.empty()) throw DataError("cannot score an empty slice");
    EvaluationResult r;
    r.count = labels.size();
    r.confusion.assign(classes, std::vector<std::size_t>(classes, 0));
    std::size_t correct = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        if (labels[i] >= classes || predictions[i] >= classes) throw DataError("class index out of range");
        ++r.confusion[labels[i]][predictions[i]];
        correct += labels[i] == predictions[i];
    }
    r.accuracy = static_cast<double>(correct) / static_cast<double>(labels.size());
    double sum = 0.0;
    std::size_t present = 0;
    for (std::size_t c = 0; c < classes; ++c) {
        const std::size_t support = std::accumulate(r.confusion[c].begin(), r.confusion[c].end(), std::size_t{0});
        if (support == 0) {
            r.recall.emplace_back();
            continue;
        }
        const double recall = static_cast<double>(r.confusion[c][c]) / static_cast<double>(support);
        r.recall.emplace_back(recall);
        sum += recall;
        ++present;
    }
    r.balancedAccuracy = sum / static_cast<double>(present);
    return r;
}

nlohmann::json toJson(const EvaluationResult& r)
{
    nlohmann::json recall = nlohmann::json::array();
    for (const auto& v : r.recall) recall.push_back(v ? nlohmann::json(*v) : nlohmann::json(nullptr));
    return {{"count", r.count},
            {"accuracy", r.accuracy},
            {"balanced_accuracy", r.balancedAccuracy},
            {"recall", recall},
            {"confusion", r.confusion}};
}

std::vector<std::size_t> predict(const net::Model& model, const net::Tensor& inputs, std::size_t chunk)
{
    const std::size_t n = inputs.dim(0);
    std::vector<std::size_t> out;
    out.reserve(n);
    std::vector<std::size_t> rows;
    for (std::size_t begin = 0; begin < n; begin += chunk) {
        rows.resize(std::min(chunk, n - begin));
        std::iota(rows.begin(), rows.end(), begin);
        const net::Tensor logits = model.logits(gatherRows(inputs, rows));
        const std::size_t k = logits.dim(1);
        for (std::size_t r = 0; r < rows.size(); ++r) {
            const double* row = logits.data() + r * k;
            out.push_back(static_cast<std::size_t>(std::max_element(row, row + k) - row));
        }
    }
    return out;
}

// ---------------------------------------------------------------- training

FitResult fit(net::Model model, const net::Tensor& trainX, std::span<const std::size_t> trainY,
              const net::Tensor& validationX, std::span<const std::size_t> validationY, const TrainingConfig& config,
              std::uint64_t seed)
{
    config.validate();
    const std::size_t n = trainX.dim(0);
    if (n == 0 || n != trainY.size() || validationX.dim(0) != validationY.size() || validationY.empty()) {
        throw ShapeError("training inputs and labels do not line up");
    }

    net::AdamW optimizer(config.optimizer);
    net::Rng rng(seed ^ 0x7f4a7c159e3779b9ULL);
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);

    FitResult out;
    out.bestValidationLoss = std::numeric_limits<double>::infinity();
    out.model = model;
    double plateauBest = std::numeric_limits<double>::infinity();
    int plateauWait = 0;
    int stopWait = 0;

    std::vector<std::size_t> batchLabels;
    for (int epoch = 1; epoch <= config.maxEpochs; ++epoch) {
        std::shuffle(order.begin(), order.end(), rng);
        double lossSum = 0.0;
        for (std::size_t begin = 0; begin < n; begin += config.batchSize) {
            const std::span<const std::size_t> rows(order.data() + begin, std::min(config.batchSize, n - begin));
            batchLabels.clear();
            for (std::size_t r : rows) batchLabels.push_back(trainY[r]);
            const double loss = net::trainStep(model, gatherRows(trainX, rows), batchLabels, optimizer, rng,
                                               config.labelSmoothing);
            lossSum += loss * static_cast<double>(rows.size());
        }

        // Validation loss and accuracy in infer mode.
        double valLoss = 0.0;
        std::size_t correct = 0;
        const std::size_t nv = validationX.dim(0);
        std::vector<std::size_t> rows;
        for (std::size_t begin = 0; begin < nv; begin += 256) {
            rows.resize(std::min<std::size_t>(256, nv - begin));
            std::iota(rows.begin(), rows.end(), begin);
            const net::Tensor logits = model.logits(gatherRows(validationX, rows));
            std::vector<std::size_t> labels(validationY.begin() + static_cast<std::ptrdiff_t>(begin),
                                            validationY.begin() + static_cast<std::ptrdiff_t>(begin + rows.size()));
            valLoss += net::smoothedCrossEntropy(logits, labels, config.labelSmoothing).loss *
                       static_cast<double>(rows.size());
            const std::size_t k = logits.dim(1);
            for (std::size_t r = 0; r < rows.size(); ++r) {
                const double* row = logits.data() + r * k;
                correct += static_cast<std::size_t>(std::max_element(row, row + k) - row) == labels[r];
            }
        }
        valLoss /= static_cast<double>(nv);

        out.history.push_back({epoch, lossSum / static_cast<double>(n), valLoss,
                               static_cast<double>(correct) / static_cast<double>(nv), optimizer.learningRate()});

        if (valLoss < out.bestValidationLoss) {
            out.bestValidationLoss = valLoss;
            out.bestEpoch = epoch;
            out.model = model;
            stopWait = 0;
        } else if (++stopWait >= config.earlyStopPatience) {
            out.stoppedEarly = true;
            break;
        }

        if (valLoss < plateauBest - config.plateauMinDelta) {
            plateauBest = valLoss;
            plateauWait = 0;
        } else if (++plateauWait >= config.plateauPatience) {
            if (optimizer.learningRate() > config.minLearningRate) {
                optimizer.setLearningRate(std::max(optimizer.learningRate() * config.plateauFactor,
                                                   config.minLearningRate));
            }
            plateauWait = 0;
        }
    }
    return out;
}

TrainOutcome trainClassifier(const ExperimentConfig& config, const PreparedData& data)
{
    return runTraining(config, data, "train", config.architecture, std::nullopt);
}

TrainOutcome retrainOnBaseline(const ExperimentConfig& config, BaselineKind kind, const PreparedData& data)
{
    switch (kind) {
    case BaselineKind::APB:
        throw ConfigError("cannot retrain on APB: every training sample would be the same all-zero input");
    case BaselineKind::TVB: return runTraining(config, data, "retrain", std::string(models::kCnnName), kind);
    case BaselineKind::MVB: return runTraining(config, data, "retrain", std::string(models::kMlpName), kind);
    }
    throw ConfigError("unknown baseline");
}

// -------------------------------------------------------------- evaluation

net::Tensor buildInputs(const net::Checkpoint& ck, const PreparedData& data, std::span<const std::size_t> ids,
                        std::optional<BaselineKind> ablation)
{
    if (ids.empty()) throw DataError("cannot evaluate an empty slice");
    // Ablation replaces the sample; a reduction the model was trained on is applied after.
    const std::optional<BaselineKind> trained = reductionOf(ck);
    auto transform = [&](const net::Tensor& x) {
        net::Tensor y = ablation ? baselines::makeBaseline(x, *ablation) : x;
        return trained ? baselines::makeBaseline(y, *trained) : y;
    };
    const net::Shape& expected = ck.model.inputShape();
    if (inputKindOf(ck) == InputKind::Window) {
        const net::Shape& s = data.samples.at(ids[0]).values.shape();
        if (s != expected) {
            throw ShapeError("checkpoint expects samples of " + net::shapeString(expected) + ", data has " +
                             net::shapeString(s));
        }
        net::Tensor out({ids.size(), s[0], s[1]});
        const std::size_t stride = s[0] * s[1];
        for (std::size_t r = 0; r < ids.size(); ++r) {
            const net::Tensor y = transform(data.samples.at(ids[r]).values);
            std::copy_n(y.data(), stride, out.data() + r * stride);
        }
        return out;
    }
    if (!ck.metadata.contains("scaler")) throw DataError("mean-vector checkpoint lacks its scaler statistics");
    const data::MeanVectorScaler scaler = data::MeanVectorScaler::fromJson(ck.metadata.at("scaler"));
    std::vector<std::vector<double>> vectors;
    for (std::size_t i : ids) vectors.push_back(data::channelMeans(transform(data.samples.at(i).values)));
    if (vectors[0].size() != expected.at(0)) {
        throw ShapeError("checkpoint expects " + net::shapeString(expected) + " mean vectors, data has " +
                         std::to_string(vectors[0].size()) + " channels");
    }
    return meanVectorInputs(vectors, scaler);
}

Report evaluate(const net::Checkpoint& ck, const PreparedData& data, Slice slice, std::optional<BaselineKind> ablation)
{
    const auto start = Clock::now();
    const auto& ids = indicesOf(data, slice);
    const net::Tensor x = buildInputs(ck, data, ids, ablation);
    const std::vector<std::size_t> pred = predict(ck.model, x);
    Report r;
    r.command = ablation ? "ablate" : "eval";
    r.metrics = scorePredictions(labelsOf(data, ids), pred, ck.model.outputSize());
    r.details["slice"] = toString(slice);
    r.details["architecture"] = ck.architecture;
    r.details["ablation"] = ablation ? std::string(baselines::toString(*ablation)) : "none";
    r.hashes["checkpoint"] = checkpointHash(ck);
    r.hashes["dataset"] = data.datasetHash;
    r.wallSeconds = secondsSince(start);
    return r;
}

std::vector<Report> ablateOnBaselines(const net::Checkpoint& ck, const PreparedData& data, Slice slice,
                                      std::span<const BaselineKind> kinds)
{
    if (reductionOf(ck) || inputKindOf(ck) != InputKind::Window) {
        throw ConfigError("baseline ablation needs a checkpoint trained on raw samples");
    }
    std::vector<Report> out;
    for (BaselineKind k : kinds) out.push_back(evaluate(ck, data, slice, k));
    return out;
}

// -------------------------------------------------------------- attribution

AttributionCampaign attributeCampaign(const net::Checkpoint& ck, const PreparedData& data, Slice slice,
                                      BaselineKind kind, const attribution::IgOptions& options, std::size_t threads,
                                      std::optional<std::size_t> maxSamples)
{
    const auto start = Clock::now();
    if (inputKindOf(ck) != InputKind::Window) throw ConfigError("attribution needs a checkpoint on windowed samples");
    if (options.steps < kMinIgSteps || options.steps > attribution::kMaxSteps) {
        throw ConfigError("IG steps must lie in [" + std::to_string(kMinIgSteps) + ", " +
                          std::to_string(attribution::kMaxSteps) + "]");
    }
    if (threads == 0) throw ConfigError("thread count must be positive");

    const auto& ids = indicesOf(data, slice);
    const net::Tensor x = buildInputs(ck, data, ids);
    const std::vector<std::size_t> pred = predict(ck.model, x);

    AttributionCampaign out;
    out.evaluated = ids.size();
    std::vector<std::size_t> rows;
    for (std::size_t r = 0; r < ids.size(); ++r) {
        if (pred[r] != data.samples[ids[r]].label) continue;
        if (maxSamples && rows.size() >= *maxSamples) break;
        rows.push_back(r);
        out.sampleIds.push_back(ids[r]);
    }
    if (rows.empty()) throw DataError("no correctly classified samples in the " + std::string(toString(slice)) + " slice");

    out.maps.resize(rows.size());
    const std::size_t stride = x.size() / x.dim(0);
    const net::Shape sampleShape(x.shape().begin() + 1, x.shape().end());
    auto work = [&](std::size_t first, std::size_t last) {
        for (std::size_t i = first; i < last; ++i) {
            net::Tensor sample(sampleShape);
            std::copy_n(x.data() + rows[i] * stride, stride, sample.data());
            attribution::IgOptions o = options;
            o.targetClass = pred[rows[i]];
            out.maps[i] = attribution::integratedGradients(ck.model, sample, kind, o);
        }
    };
    const std::size_t workers = std::min(threads, rows.size());
    if (workers <= 1) {
        work(0, rows.size());
    } else {
        std::vector<std::jthread> pool;
        const std::size_t per = (rows.size() + workers - 1) / workers;
        for (std::size_t w = 0; w < workers; ++w) {
            const std::size_t first = w * per;
            const std::size_t last = std::min(rows.size(), first + per);
            if (first < last) pool.emplace_back(work, first, last);
        }
    }

    std::vector<double> relGaps;
    for (std::size_t i = 0; i < rows.size(); ++i) {
        out.vectors.push_back(attribution::channelSum(out.maps[i], out.sampleIds[i]));
        out.topChannels.push_back(attribution::topChannels(out.vectors.back().values, 3));
        const double delta = std::abs(out.maps[i].outputAtInput - out.maps[i].outputAtBaseline);
        relGaps.push_back(delta > 0.0 ? out.maps[i].completenessGap / delta : 0.0);
    }
    out.stats = attribution::populationStats(out.vectors);
    std::vector<double> meanAbs;
    for (const auto& c : out.stats.channels) meanAbs.push_back(c.meanAbs);
    out.populationRanking = attribution::topChannels(meanAbs, meanAbs.size());

    const std::vector<int> sensorIds = attribution::sensorIdsFor(sampleShape[0]);
    std::vector<int> topSensors;
    for (std::size_t i = 0; i < std::min<std::size_t>(5, out.populationRanking.size()); ++i) {
        topSensors.push_back(sensorIds[out.populationRanking[i]]);
    }
    std::sort(relGaps.begin(), relGaps.end());

    Report& r = out.report;
    r.command = "attribute";
    r.details["slice"] = toString(slice);
    r.details["baseline"] = baselines::toString(kind);
    r.details["ig_steps"] = options.steps;
    r.details["ig_output"] = net::toString(options.output);
    r.details["riemann_rule"] = "midpoint";
    r.details["evaluated_samples"] = out.evaluated;
    r.details["correctly_classified"] = std::count_if(ids.begin(), ids.end(), [&, k = std::size_t{0}](std::size_t i) mutable {
        return pred[k++] == data.samples[i].label;
    });
    r.details["attributed_samples"] = rows.size();
    r.details["top_sensors_by_mean_abs"] = topSensors;
    r.details["relative_completeness_gap"] = {{"median", relGaps[relGaps.size() / 2]}, {"max", relGaps.back()}};
    r.hashes["checkpoint"] = checkpointHash(ck);
    r.hashes["dataset"] = data.datasetHash;
    io::Sha256 mapsHash;
    for (const auto& m : out.maps) mapsHash.update(m.scores.values());
    r.hashes["maps"] = mapsHash.hex();
    r.wallSeconds = secondsSince(start);
    return out;
}

void exportCampaign(const std::filesystem::path& dir, const AttributionCampaign& c, bool maps)
{
    std::filesystem::create_directories(dir);
    const std::vector<int> sensorIds =
        c.maps.empty() ? std::vector<int>{} : c.maps.front().sensorIds;
    if (maps) {
        for (std::size_t i = 0; i < c.maps.size(); ++i) {
            const std::string stem = "sample_" + std::to_string(c.sampleIds[i]);
            attribution::writeMapCsv(dir / "maps" / (stem + ".csv"), c.maps[i]);
            io::writeTextFile(dir / "maps" / (stem + ".json"), attribution::mapSidecar(c.maps[i]).dump(2));
        }
    }
    attribution::writeStatsCsv(dir / "stats.csv", c.stats, sensorIds);
    attribution::writeRawCsv(dir / "raw.csv", c.stats, sensorIds);
    std::ofstream top(dir / "top_channels.csv", std::ios::trunc);
    top << "sample_id,first,second,third\n";
    for (std::size_t i = 0; i < c.topChannels.size(); ++i) {
        top << c.sampleIds[i];
        for (std::size_t ch : c.topChannels[i]) top << ',' << sensorIds.at(ch);
        top << '\n';
    }
}

std::string checkpointHash(const net::Checkpoint& ck)
{
    return io::sha256Hex(net::serializeCheckpoint(ck));
}

// ------------------------------------------------------------------ reports

nlohmann::json Report::toJson() const
{
    nlohmann::json j{{"command", command}, {"config", config}, {"details", details}, {"wall_seconds", wallSeconds},
                     {"hashes", hashes}};
    j["metrics"] = metrics ? harness::toJson(*metrics) : nlohmann::json(nullptr);
    return j;
}

std::string Report::toText() const
{
    std::ostringstream ss;
    ss << "command: " << command << '\n';
    for (const char* key : {"architecture", "slice", "ablation", "reduction", "baseline"}) {
        if (details.contains(key)) ss << key << ": " << details.at(key).get<std::string>() << '\n';
    }
    if (metrics) {
        ss << "samples: " << metrics->count << '\n';
        ss << "balanced accuracy: " << fmtPct(metrics->balancedAccuracy) << '\n';
        ss << "per-class recall:";
        for (std::size_t c = 0; c < metrics->recall.size(); ++c) {
            ss << "  " << c << '=' << (metrics->recall[c] ? fmtPct(*metrics->recall[c]) : "n/a");
        }
        ss << "\nconfusion (rows true, columns predicted):\n";
        for (const auto& row : metrics->confusion) {
            for (std::size_t v : row) {
                std::string cell = std::to_string(v);
                ss << std::string(cell.size() < 6 ? 6 - cell.size() : 1, ' ') << cell;
            }
            ss << '\n';
        }
    }
    if (details.contains("attributed_samples")) {
        ss << "attributed samples: " << details.at("attributed_samples") << " of " << details.at("evaluated_samples")
           << '\n';
        ss << "top sensors by mean |c|: " << details.at("top_sensors_by_mean_abs").dump() << '\n';
    }
    if (details.contains("best_epoch")) {
        ss << "best epoch: " << details.at("best_epoch") << " of " << details.at("epochs_run") << '\n';
    }
    for (const auto& [name, value] : hashes) ss << "sha256 " << name << ": " << value << '\n';
    ss.setf(std::ios::fixed);
    ss.precision(1);
    ss << "wall clock: " << wallSeconds << " s\n";
    return ss.str();
}

void writeReport(const std::filesystem::path& dir, const std::string& stem, const Report& report)
{
    io::writeTextFile(dir / (stem + ".json"), report.toJson().dump(2) + "\n");
    io::writeTextFile(dir / (stem + ".txt"), report.toText());
}

}  // namespace igshm::harness
