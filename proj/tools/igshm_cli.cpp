#include "igshm/dataset_io.hpp"
#include "igshm/error.hpp"
#include "igshm/harness.hpp"
#include "igshm/io/binary.hpp"
#include "igshm/netcore/checkpoint.hpp"
#include "igshm/spectra.hpp"
#include "igshm/surrogate.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace igshm;
using harness::ExperimentConfig;
using nlohmann::json;

namespace {

enum ExitCode : int {
    kOk = 0,
    kOtherError = 1,
    kConfigError = 2,
    kDataError = 3,
    kNumericError = 4,
};

json readJsonFile(const fs::path& path)
{
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open config file " + path.string());
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
    }
}

// Everything a subcommand may override. Unset optionals leave the file value alone.
struct Overrides {
    std::string configFile;
    std::optional<std::string> datasetDir;
    std::optional<std::string> outputDir;
    std::optional<double> aoa;
    std::optional<int> split;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> architecture;
    std::optional<std::size_t> widthDivisor;
    std::optional<int> epochs;
    std::optional<std::size_t> batchSize;
    std::optional<double> learningRate;
    std::optional<std::string> baseline;
    std::optional<std::size_t> igSteps;
    std::optional<std::string> igOutput;
    std::optional<std::size_t> threads;
    std::optional<std::string> zscore;
};

void addDataOptions(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("-c,--config", o.configFile, "experiment config (JSON)")->check(CLI::ExistingFile);
    cmd->add_option("--dataset", o.datasetDir, "dataset root directory");
    cmd->add_option("--aoa", o.aoa, "angle-of-attack subset in degrees");
    cmd->add_option("--split", o.split, "split index 1..3");
    cmd->add_option("--seed", o.seed, "seed for splitting, initialization and shuffling");
    cmd->add_option("--zscore", o.zscore, "window normalization: joint or per-channel");
}

void addTrainingOptions(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("--width-divisor", o.widthDivisor, "divide CNN filter counts by this factor");
    cmd->add_option("--epochs", o.epochs, "maximum epochs");
    cmd->add_option("--batch-size", o.batchSize, "mini-batch size");
    cmd->add_option("--lr", o.learningRate, "initial learning rate");
}

void addOutputOption(CLI::App* cmd, Overrides& o)
{
    cmd->add_option("-o,--out", o.outputDir, "output directory");
}

// defaults < config file < checkpoint metadata < command line
ExperimentConfig resolveConfig(const Overrides& o, const net::Checkpoint* ck = nullptr)
{
    json j = o.configFile.empty() ? json::object() : readJsonFile(o.configFile);
    if (ck) {
        const json& m = ck->metadata;
        if (m.contains("aoa_deg")) j["aoa_deg"] = m["aoa_deg"];
        if (m.contains("split_index")) j["split_index"] = m["split_index"];
        if (m.contains("zscore")) j["zscore"] = m["zscore"];
        j["seed"] = ck->seed;
    }
    if (o.datasetDir) j["dataset_dir"] = *o.datasetDir;
    if (o.outputDir) j["output_dir"] = *o.outputDir;
    if (o.aoa) j["aoa_deg"] = *o.aoa;
    if (o.split) j["split_index"] = *o.split;
    if (o.seed) j["seed"] = *o.seed;
    if (o.architecture) j["architecture"] = *o.architecture;
    if (o.widthDivisor) j["width_divisor"] = *o.widthDivisor;
    if (o.baseline) j["baseline"] = *o.baseline;
    if (o.igSteps) j["ig_steps"] = *o.igSteps;
    if (o.igOutput) j["ig_output"] = *o.igOutput;
    if (o.threads) j["threads"] = *o.threads;
    if (o.zscore) j["zscore"] = *o.zscore;
    json& t = j["training"];
    if (!t.is_object()) t = json::object();
    if (o.epochs) t["max_epochs"] = *o.epochs;
    if (o.batchSize) t["batch_size"] = *o.batchSize;
    if (o.learningRate) t["learning_rate"] = *o.learningRate;
    return harness::experimentConfigFromJson(j);
}

harness::PreparedData loadChecked(const ExperimentConfig& config, const net::Checkpoint* ck = nullptr)
{
    std::cerr << "loading " << config.datasetDir.string() << " at AoA " << config.aoaDeg << " deg\n";
    harness::PreparedData data = harness::loadData(config);
    if (ck && ck->metadata.contains("dataset_sha256") && ck->metadata["dataset_sha256"] != data.datasetHash) {
        std::cerr << "warning: dataset differs from the one the checkpoint was trained on\n";
    }
    return data;
}

fs::path trainDir(const ExperimentConfig& c, const std::string& arch, const std::string& tag)
{
    std::ostringstream name;
    name << tag << '_' << arch << "_aoa" << c.aoaDeg << "_split" << c.splitIndex << "_seed" << c.seed;
    return c.outputDir / name.str();
}

void printSummary(const harness::Report& r)
{
    std::cout << r.toText();
}

// ------------------------------------------------------------------ commands

int cmdGenerate(const Overrides& o, const std::string& profile, const std::optional<double>& duration,
                bool dumpOnly)
{
    json file = o.configFile.empty() ? json::object() : readJsonFile(o.configFile);
    json g = file.contains("generator") ? file["generator"] : json::object();
    if (!profile.empty()) g["profile"] = profile;
    if (duration) g["duration_s"] = *duration;
    const surrogate::GeneratorConfig config = surrogate::generatorConfigFromJson(g);
    if (dumpOnly) {
        std::cout << surrogate::toJson(config).dump(2) << '\n';
        return kOk;
    }
    const fs::path out = o.outputDir ? fs::path(*o.outputDir)
                                     : fs::path(file.value("dataset_dir", std::string("data/surrogate")));
    const std::uint64_t seed = o.seed.value_or(file.value("seed", std::uint64_t{0}));
    const auto runs = surrogate::generateCampaign(config, seed, o.aoa);
    fs::create_directories(out);
    for (const auto& run : runs) data::writeRun(out / data::runDirName(run.meta), run);
    json manifest{{"generator", surrogate::toJson(config)}, {"seed", seed}, {"runs", runs.size()}};
    io::writeTextFile(out / "generator.json", manifest.dump(2) + "\n");
    std::cout << "wrote " << runs.size() << " runs to " << out.string() << '\n';
    return kOk;
}

int cmdIngest(const std::vector<std::string>& inputs, const Overrides& o)
{
    const fs::path out = o.outputDir ? fs::path(*o.outputDir) : fs::path("data/ingested");
    fs::create_directories(out);
    for (const auto& in : inputs) {
        const data::RawRun run = surrogate::ingestExternalRun(in);
        const fs::path dir = out / data::runDirName(run.meta);
        data::writeRun(dir, run);
        std::cout << in << " -> " << dir.string() << " (" << run.channels() << " channels, " << run.steps()
                  << " steps)\n";
    }
    return kOk;
}

int cmdTrain(const Overrides& o)
{
    const ExperimentConfig config = resolveConfig(o);
    const auto data = loadChecked(config);
    std::cerr << "training " << config.architecture << " on " << data.split.train.size() << " samples\n";
    const harness::TrainOutcome t = harness::trainClassifier(config, data);
    const fs::path dir = trainDir(config, config.architecture, "train");
    fs::create_directories(dir);
    net::saveCheckpoint(t.checkpoint, dir / "checkpoint.bin");
    harness::writeReport(dir, "train", t.report);
    printSummary(t.report);
    std::cout << "artifacts: " << dir.string() << '\n';
    return kOk;
}

int cmdRetrain(const Overrides& o)
{
    ExperimentConfig config = resolveConfig(o);
    const auto data = loadChecked(config);
    const harness::TrainOutcome t = harness::retrainOnBaseline(config, config.baseline, data);
    const fs::path dir = trainDir(config, t.checkpoint.architecture,
                                  "retrain_" + std::string(baselines::toString(config.baseline)));
    fs::create_directories(dir);
    net::saveCheckpoint(t.checkpoint, dir / "checkpoint.bin");
    harness::writeReport(dir, "retrain", t.report);
    printSummary(t.report);
    std::cout << "artifacts: " << dir.string() << '\n';
    return kOk;
}

fs::path outputNextTo(const Overrides& o, const fs::path& checkpoint)
{
    return o.outputDir ? fs::path(*o.outputDir) : checkpoint.parent_path();
}

int cmdEval(const Overrides& o, const fs::path& ckPath, const std::string& sliceName)
{
    const net::Checkpoint ck = net::loadCheckpoint(ckPath);
    const ExperimentConfig config = resolveConfig(o, &ck);
    const auto data = loadChecked(config, &ck);
    const harness::Slice slice = harness::sliceFromString(sliceName);
    harness::Report r = harness::evaluate(ck, data, slice);
    r.config = harness::toJson(config);
    harness::writeReport(outputNextTo(o, ckPath), "eval_" + std::string(harness::toString(slice)), r);
    printSummary(r);
    return kOk;
}

int cmdAblate(const Overrides& o, const fs::path& ckPath, const std::string& sliceName,
              const std::vector<std::string>& kindNames)
{
    const net::Checkpoint ck = net::loadCheckpoint(ckPath);
    const ExperimentConfig config = resolveConfig(o, &ck);
    const auto data = loadChecked(config, &ck);
    std::vector<baselines::BaselineKind> kinds;
    for (const auto& k : kindNames) kinds.push_back(baselines::baselineFromString(k));
    const harness::Slice slice = harness::sliceFromString(sliceName);
    auto reports = harness::ablateOnBaselines(ck, data, slice, kinds);
    const fs::path dir = outputNextTo(o, ckPath);
    for (std::size_t i = 0; i < reports.size(); ++i) {
        reports[i].config = harness::toJson(config);
        const std::string kind(baselines::toString(kinds[i]));
        harness::writeReport(dir, "ablate_" + kind + "_" + std::string(harness::toString(slice)), reports[i]);
        std::cout << kind << ": balanced accuracy " << reports[i].metrics->balancedAccuracy << '\n';
    }
    return kOk;
}

int cmdAttribute(const Overrides& o, const fs::path& ckPath, const std::string& sliceName,
                 std::optional<std::size_t> maxSamples, bool noMaps)
{
    const net::Checkpoint ck = net::loadCheckpoint(ckPath);
    const ExperimentConfig config = resolveConfig(o, &ck);
    const auto data = loadChecked(config, &ck);
    attribution::IgOptions ig;
    ig.steps = config.igSteps;
    ig.output = config.igOutput;
    ig.chunkSize = config.igChunk;
    const harness::Slice slice = harness::sliceFromString(sliceName);
    std::cerr << "attributing with " << baselines::toString(config.baseline) << ", L=" << ig.steps << '\n';
    harness::AttributionCampaign c =
        harness::attributeCampaign(ck, data, slice, config.baseline, ig, config.threads, maxSamples);
    c.report.config = harness::toJson(config);
    const fs::path dir = outputNextTo(o, ckPath) /
                         ("attr_" + std::string(baselines::toString(config.baseline)) + "_" +
                          std::string(harness::toString(slice)));
    harness::exportCampaign(dir, c, !noMaps);
    harness::writeReport(dir, "attribute", c.report);
    printSummary(c.report);
    std::cout << "artifacts: " << dir.string() << '\n';
    return kOk;
}

struct SpectraArgs {
    std::string run;
    int sensor = 15;
    std::string preset = "coarse-time";
    std::vector<double> candidates;
    double strouhal = 0.2;
    double depth = spectra::kDefaultChordDepth;
    double thresholdDb = 6.0;
    int minFrames = 3;
    std::string spectrogramCsv;
};

int cmdSpectra(const SpectraArgs& a, const Overrides& o)
{
    const data::RawRun run = surrogate::ingestExternalRun(a.run);
    std::vector<double> candidates = a.candidates;
    if (candidates.empty()) {
        if (!(run.meta.windSpeed > 0.0)) {
            throw ConfigError("run has no wind speed in its metadata; pass --candidates explicitly");
        }
        candidates.push_back(spectra::strouhalFrequency(a.strouhal, run.meta.windSpeed, a.depth));
    }
    spectra::StftSpec spec = spectra::StftSpec::preset(a.preset);
    spec.sampleRateHz = run.meta.sampleRateHz;
    spectra::DetectionConfig detection;
    detection.thresholdDb = a.thresholdDb;
    detection.minConsecutiveFrames = a.minFrames;
    const spectra::SheddingReport report = spectra::sheddingScan(run, a.sensor, candidates, spec, detection);

    json j = spectra::toJson(report);
    j["run"] = data::toJson(run.meta);
    j["preset"] = a.preset;
    const std::string text = j.dump(2) + "\n";
    if (o.outputDir) {
        io::writeTextFile(fs::path(*o.outputDir) / "spectra.json", text);
    }
    std::cout << text;
    if (!a.spectrogramCsv.empty()) {
        const std::size_t channel = *SensorLayout::standard().channelOf(a.sensor);
        const auto row = run.pressures.values().subspan(channel * run.steps(), run.steps());
        spectra::writeSpectrogramCsv(a.spectrogramCsv, spectra::stft(row, spec));
    }
    return kOk;
}

// Collects every report JSON below a directory into one table.
int cmdReport(const std::vector<std::string>& paths)
{
    std::vector<fs::path> files;
    for (const auto& p : paths) {
        if (fs::is_directory(p)) {
            for (const auto& e : fs::recursive_directory_iterator(p)) {
                if (e.path().extension() == ".json" && e.path().parent_path().filename() != "maps") {
                    files.push_back(e.path());
                }
            }
        } else {
            files.emplace_back(p);
        }
    }
    std::sort(files.begin(), files.end());
    std::size_t shown = 0;
    for (const auto& f : files) {
        json j;
        try {
            std::ifstream in(f);
            j = json::parse(in);
        } catch (const json::exception&) {
            continue;
        }
        if (!j.is_object() || !j.contains("command") || !j.contains("details")) continue;
        ++shown;
        std::cout << f.string() << "\n  command " << j["command"].get<std::string>();
        const json& d = j["details"];
        for (const char* key : {"architecture", "slice", "ablation", "reduction", "baseline"}) {
            if (d.contains(key)) std::cout << "  " << key << ' ' << d[key].get<std::string>();
        }
        if (j.contains("metrics") && j["metrics"].is_object()) {
            std::cout << "  balanced_accuracy " << j["metrics"]["balanced_accuracy"].get<double>();
        }
        if (d.contains("top_sensors_by_mean_abs")) std::cout << "  top_sensors " << d["top_sensors_by_mean_abs"].dump();
        std::cout << '\n';
    }
    if (shown == 0) throw DataError("no reports found");
    return kOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"Integrated-gradients damage classification toolkit"};
    app.require_subcommand(1);
    Overrides o;

    auto* generate = app.add_subcommand("generate", "simulate a surrogate measurement campaign");
    std::string profile;
    std::optional<double> duration;
    bool dumpConfig = false;
    generate->add_option("-c,--config", o.configFile, "config file; its \"generator\" object is used")
        ->check(CLI::ExistingFile);
    generate->add_option("--profile", profile, "static-dominant or dynamics-dominant");
    generate->add_option("--aoa", o.aoa, "only simulate this angle of attack");
    generate->add_option("--seed", o.seed, "campaign seed");
    generate->add_option("--duration", duration, "seconds per run");
    generate->add_flag("--dump-config", dumpConfig, "print the resolved generator config and exit");
    addOutputOption(generate, o);

    auto* ingest = app.add_subcommand("ingest", "convert external runs (directory or CSV + meta.json)");
    std::vector<std::string> inputs;
    ingest->add_option("inputs", inputs, "run directories or CSV files")->required();
    addOutputOption(ingest, o);

    auto* train = app.add_subcommand("train", "train a classifier on raw windows");
    addDataOptions(train, o);
    addTrainingOptions(train, o);
    train->add_option("--arch", o.architecture, "fcn-cnn or mean-mlp");
    train->add_option("--output-dir", o.outputDir, "parent directory for the run folder");

    auto* retrain = app.add_subcommand("retrain", "train on baseline-reduced inputs (tvb: CNN, mvb: MLP)");
    addDataOptions(retrain, o);
    addTrainingOptions(retrain, o);
    retrain->add_option("--baseline", o.baseline, "tvb or mvb");
    retrain->add_option("--output-dir", o.outputDir, "parent directory for the run folder");

    std::string ckPath;
    std::string slice = "test";
    auto* eval = app.add_subcommand("eval", "evaluate a checkpoint on a slice");
    eval->add_option("checkpoint", ckPath, "checkpoint file")->required()->check(CLI::ExistingFile);
    eval->add_option("--slice", slice, "train, validation or test");
    addDataOptions(eval, o);
    addOutputOption(eval, o);

    auto* ablate = app.add_subcommand("ablate", "evaluate a checkpoint on baseline-replaced inputs");
    std::vector<std::string> kinds{"apb", "tvb", "mvb"};
    ablate->add_option("checkpoint", ckPath, "checkpoint file")->required()->check(CLI::ExistingFile);
    ablate->add_option("--slice", slice, "train, validation or test");
    ablate->add_option("--kinds", kinds, "baselines to evaluate")->delimiter(',');
    addDataOptions(ablate, o);
    addOutputOption(ablate, o);

    auto* attribute = app.add_subcommand("attribute", "integrated-gradients maps for correctly classified samples");
    std::string attrSlice = "validation";
    std::optional<std::size_t> maxSamples;
    bool noMaps = false;
    attribute->add_option("checkpoint", ckPath, "checkpoint file")->required()->check(CLI::ExistingFile);
    attribute->add_option("--slice", attrSlice, "train, validation or test");
    attribute->add_option("--baseline", o.baseline, "apb, tvb or mvb");
    attribute->add_option("--steps", o.igSteps, "integration steps");
    attribute->add_option("--target-output", o.igOutput, "logit or probability");
    attribute->add_option("--threads", o.threads, "worker threads");
    attribute->add_option("--max-samples", maxSamples, "stop after this many attributed samples");
    attribute->add_flag("--no-maps", noMaps, "skip per-sample map files");
    addDataOptions(attribute, o);
    addOutputOption(attribute, o);

    auto* spectraCmd = app.add_subcommand("spectra", "STFT band check for vortex shedding at one sensor");
    SpectraArgs sa;
    spectraCmd->add_option("run", sa.run, "run directory or CSV")->required();
    spectraCmd->add_option("--sensor", sa.sensor, "sensor id");
    spectraCmd->add_option("--preset", sa.preset, "coarse-time or fine-time");
    spectraCmd->add_option("--candidates", sa.candidates, "frequencies in Hz (default: Strouhal estimate)")
        ->delimiter(',');
    spectraCmd->add_option("--strouhal", sa.strouhal, "Strouhal number for the default candidate");
    spectraCmd->add_option("--depth", sa.depth, "characteristic depth in m");
    spectraCmd->add_option("--threshold-db", sa.thresholdDb, "band excess over the floor");
    spectraCmd->add_option("--min-frames", sa.minFrames, "consecutive frames required");
    spectraCmd->add_option("--spectrogram-csv", sa.spectrogramCsv, "also write the spectrogram here");
    addOutputOption(spectraCmd, o);

    auto* report = app.add_subcommand("report", "summarize report files");
    std::vector<std::string> reportPaths;
    report->add_option("paths", reportPaths, "report files or directories")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }

    try {
        if (*generate) return cmdGenerate(o, profile, duration, dumpConfig);
        if (*ingest) return cmdIngest(inputs, o);
        if (*train) return cmdTrain(o);
        if (*retrain) return cmdRetrain(o);
        if (*eval) return cmdEval(o, ckPath, slice);
        if (*ablate) return cmdAblate(o, ckPath, slice, kinds);
        if (*attribute) return cmdAttribute(o, ckPath, attrSlice, maxSamples, noMaps);
        if (*spectraCmd) return cmdSpectra(sa, o);
        if (*report) return cmdReport(reportPaths);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const DataError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const ShapeError& e) {
        std::cerr << "data error: " << e.what() << '\n';
        return kDataError;
    } catch (const NumericError& e) {
        std::cerr << "numeric error: " << e.what() << '\n';
        return kNumericError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kOtherError;
    }
    return kOtherError;
}
