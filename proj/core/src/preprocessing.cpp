#include "igshm/preprocessing.hpp"

#include "igshm/error.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <string>

namespace igshm::data {

nlohmann::json toJson(const RunMeta& meta)
{
    return {{"test_series", meta.testSeries}, {"damage_class", meta.damageClass}, {"run_index", meta.runIndex},
            {"aoa_deg", meta.aoaDeg},         {"sample_rate_hz", meta.sampleRateHz}, {"wind_speed", meta.windSpeed},
            {"excitation_hz", meta.excitationHz}};
}

RunMeta runMetaFromJson(const nlohmann::json& j)
{
    try {
        RunMeta m;
        m.testSeries = j.at("test_series").get<int>();
        m.damageClass = j.at("damage_class").get<int>();
        m.runIndex = j.at("run_index").get<int>();
        m.aoaDeg = j.at("aoa_deg").get<double>();
        m.sampleRateHz = j.at("sample_rate_hz").get<double>();
        m.windSpeed = j.value("wind_speed", 0.0);
        m.excitationHz = j.value("excitation_hz", 0.0);
        if (m.testSeries < 1 || m.testSeries > 8) throw DataError("test_series must lie in [1, 8]");
        if (m.damageClass < 0 || m.damageClass > 5) throw DataError("damage_class must lie in [0, 5]");
        if (m.runIndex < 1 || m.runIndex > 3) throw DataError("run_index must lie in [1, 3]");
        if (!(m.sampleRateHz > 0.0)) throw DataError("sample_rate_hz must be positive");
        return m;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("missing or malformed run metadata: ") + e.what());
    }
}

RawRun trimRun(const RawRun& run, double headSeconds, double tailSeconds)
{
    const auto head = static_cast<std::size_t>(std::llround(headSeconds * run.meta.sampleRateHz));
    const auto tail = static_cast<std::size_t>(std::llround(tailSeconds * run.meta.sampleRateHz));
    const std::size_t steps = run.steps();
    if (steps <= head + tail) {
        throw DataError("run of " + std::to_string(run.durationSeconds()) + " s is too short to trim " +
                        std::to_string(headSeconds) + " s + " + std::to_string(tailSeconds) + " s");
    }
    const std::size_t kept = steps - head - tail;
    RawRun out;
    out.meta = run.meta;
    out.pressures = net::Tensor({run.channels(), kept});
    for (std::size_t c = 0; c < run.channels(); ++c) {
        const double* src = run.pressures.data() + c * steps + head;
        std::copy(src, src + kept, out.pressures.data() + c * kept);
    }
    return out;
}

std::size_t windowStride(std::size_t steps, std::size_t windowSteps, std::size_t windowCount)
{
    if (windowCount == 0) throw ConfigError("window count must be positive");
    if (windowSteps == 0) throw ConfigError("window length must be positive");
    if (steps < windowSteps) {
        throw DataError("run of " + std::to_string(steps) + " steps is shorter than one window of " +
                        std::to_string(windowSteps));
    }
    return windowCount == 1 ? 0 : (steps - windowSteps) / (windowCount - 1);
}

Dataset windowRun(const RawRun& run, std::size_t windowSteps, std::size_t windowCount)
{
    const std::size_t steps = run.steps();
    const std::size_t stride = windowStride(steps, windowSteps, windowCount);
    const std::size_t channels = run.channels();
    Dataset out;
    out.reserve(windowCount);
    for (std::size_t w = 0; w < windowCount; ++w) {
        const std::size_t start = w * stride;
        Sample s;
        s.values = net::Tensor({channels, windowSteps});
        for (std::size_t c = 0; c < channels; ++c) {
            const double* src = run.pressures.data() + c * steps + start;
            std::copy(src, src + windowSteps, s.values.data() + c * windowSteps);
        }
        s.label = static_cast<std::size_t>(run.meta.damageClass);
        s.provenance = {run.meta.testSeries, run.meta.runIndex, static_cast<int>(w)};
        out.push_back(std::move(s));
    }
    return out;
}

std::string_view toString(ZScoreScope scope)
{
    return scope == ZScoreScope::Joint ? "joint" : "per-channel";
}

ZScoreScope zScoreScopeFromString(std::string_view name)
{
    if (name == "joint") return ZScoreScope::Joint;
    if (name == "per-channel") return ZScoreScope::PerChannel;
    throw ConfigError("unknown z-score scope '" + std::string(name) + "' (expected joint or per-channel)");
}

namespace {

void standardize(std::span<const double> in, std::span<double> out)
{
    const double n = static_cast<double>(in.size());
    const double mean = std::accumulate(in.begin(), in.end(), 0.0) / n;
    double sq = 0.0;
    for (double v : in) sq += (v - mean) * (v - mean);
    const double sd = std::sqrt(sq / n);
    for (std::size_t i = 0; i < in.size(); ++i) out[i] = sd > 0.0 ? (in[i] - mean) / sd : 0.0;
}

}  // namespace

net::Tensor zScore(const net::Tensor& values, ZScoreScope scope)
{
    net::Tensor out(values.shape());
    if (values.empty()) return out;
    if (scope == ZScoreScope::Joint || values.rank() < 2) {
        standardize(values.values(), out.values());
    } else {
        const std::size_t steps = values.size() / values.dim(0);
        for (std::size_t c = 0; c < values.dim(0); ++c) {
            standardize(values.values().subspan(c * steps, steps), out.values().subspan(c * steps, steps));
        }
    }
    return out;
}

Sample zScoreSample(Sample sample, ZScoreScope scope)
{
    sample.values = zScore(sample.values, scope);
    return sample;
}

Dataset prepareRun(const RawRun& run, const PreprocessOptions& options)
{
    Dataset windows = windowRun(trimRun(run, options.headSeconds, options.tailSeconds), options.windowSteps,
                                options.windowCount);
    for (Sample& s : windows) s.values = zScore(s.values, options.scope);
    return windows;
}

std::vector<double> channelMeans(const net::Tensor& values)
{
    if (values.rank() != 2) throw ShapeError("channel means need a [C, T] matrix, got " + net::shapeString(values.shape()));
    const std::size_t channels = values.dim(0);
    const std::size_t steps = values.dim(1);
    std::vector<double> means(channels);
    for (std::size_t c = 0; c < channels; ++c) {
        const double* p = values.data() + c * steps;
        means[c] = std::accumulate(p, p + steps, 0.0) / static_cast<double>(steps);
    }
    return means;
}

MeanVectorScaler MeanVectorScaler::fit(std::span<const std::vector<double>> vectors)
{
    if (vectors.empty()) throw DataError("cannot fit mean-vector statistics on an empty set");
    const std::size_t dim = vectors.front().size();
    MeanVectorScaler s;
    s.mean.assign(dim, 0.0);
    s.stddev.assign(dim, 0.0);
    for (const auto& v : vectors) {
        if (v.size() != dim) throw ShapeError("mean vectors differ in length");
        for (std::size_t i = 0; i < dim; ++i) s.mean[i] += v[i];
    }
    const double n = static_cast<double>(vectors.size());
    for (double& m : s.mean) m /= n;
    for (const auto& v : vectors) {
        for (std::size_t i = 0; i < dim; ++i) s.stddev[i] += (v[i] - s.mean[i]) * (v[i] - s.mean[i]);
    }
    for (double& sd : s.stddev) sd = std::sqrt(sd / n);
    return s;
}

std::vector<double> MeanVectorScaler::transform(std::span<const double> vector) const
{
    if (!fitted()) throw DataError("mean-vector statistics missing; fit them on the training set first");
    if (vector.size() != mean.size()) throw ShapeError("mean vector length does not match the fitted statistics");
    std::vector<double> out(vector.size());
    for (std::size_t i = 0; i < vector.size(); ++i) {
        out[i] = stddev[i] > 0.0 ? (vector[i] - mean[i]) / stddev[i] : 0.0;
    }
    return out;
}

nlohmann::json MeanVectorScaler::toJson() const
{
    return {{"mean", mean}, {"stddev", stddev}};
}

MeanVectorScaler MeanVectorScaler::fromJson(const nlohmann::json& j)
{
    try {
        MeanVectorScaler s;
        s.mean = j.at("mean").get<std::vector<double>>();
        s.stddev = j.at("stddev").get<std::vector<double>>();
        if (s.mean.size() != s.stddev.size()) throw DataError("mean-vector statistics are inconsistent");
        return s;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed mean-vector statistics: ") + e.what());
    }
}

std::vector<double> meanVector(const Sample& sample, const MeanVectorScaler& scaler)
{
    return scaler.transform(channelMeans(sample.values));
}

int heldOutRun(int splitIndex)
{
    switch (splitIndex) {
    case 1: return 3;
    case 2: return 1;
    case 3: return 2;
    default: throw ConfigError("split index must be 1, 2 or 3, got " + std::to_string(splitIndex));
    }
}

SplitAssignment assignSplits(const Dataset& dataset, int splitIndex, std::uint64_t seed, double validationFraction)
{
    const int testRun = heldOutRun(splitIndex);
    if (!(validationFraction >= 0.0 && validationFraction < 1.0)) {
        throw ConfigError("validation fraction must lie in [0, 1)");
    }
    if (dataset.empty()) throw DataError("cannot split an empty dataset");

    // (damage class, test series) -> run index -> sample ids
    std::map<std::pair<std::size_t, int>, std::map<int, std::vector<std::size_t>>> groups;
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        const Sample& s = dataset[i];
        groups[{s.label, s.provenance.testSeries}][s.provenance.runIndex].push_back(i);
    }

    SplitAssignment out;
    out.splitIndex = splitIndex;
    // class -> list of (test series, training ids)
    std::map<std::size_t, std::vector<std::pair<int, std::vector<std::size_t>>>> pools;
    for (auto& [key, runs] : groups) {
        const auto& [label, series] = key;
        for (int r = 1; r <= 3; ++r) {
            if (!runs.contains(r)) {
                throw DataError("test series " + std::to_string(series) + ", class " + std::to_string(label) +
                                " is missing run " + std::to_string(r));
            }
        }
        if (runs.size() != 3) {
            throw DataError("test series " + std::to_string(series) + ", class " + std::to_string(label) +
                            " has runs outside 1..3");
        }
        std::vector<std::size_t> trainIds;
        for (auto& [run, ids] : runs) {
            if (run == testRun) {
                out.test.insert(out.test.end(), ids.begin(), ids.end());
            } else {
                trainIds.insert(trainIds.end(), ids.begin(), ids.end());
            }
        }
        pools[label].emplace_back(series, std::move(trainIds));
    }

    for (auto& [label, conditions] : pools) {
        std::size_t classTotal = 0;
        for (const auto& c : conditions) classTotal += c.second.size();
        const auto target = static_cast<std::size_t>(std::llround(static_cast<double>(classTotal) * validationFraction));

        // Largest-remainder allocation of the class quota over its boundary conditions.
        std::vector<std::size_t> quota(conditions.size());
        std::vector<std::pair<double, std::size_t>> remainders;
        std::size_t assigned = 0;
        for (std::size_t b = 0; b < conditions.size(); ++b) {
            const double exact = static_cast<double>(target) * static_cast<double>(conditions[b].second.size()) /
                                 static_cast<double>(classTotal);
            quota[b] = static_cast<std::size_t>(std::floor(exact));
            assigned += quota[b];
            remainders.emplace_back(exact - std::floor(exact), b);
        }
        std::stable_sort(remainders.begin(), remainders.end(),
                         [](const auto& a, const auto& b) { return a.first > b.first; });
        for (std::size_t i = 0; assigned < target && i < remainders.size(); ++i, ++assigned) {
            ++quota[remainders[i].second];
        }

        for (std::size_t b = 0; b < conditions.size(); ++b) {
            auto ids = conditions[b].second;
            std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                              static_cast<std::uint32_t>(splitIndex), static_cast<std::uint32_t>(label),
                              static_cast<std::uint32_t>(conditions[b].first)};
            std::mt19937_64 rng(seq);
            std::shuffle(ids.begin(), ids.end(), rng);
            out.validation.insert(out.validation.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(quota[b]));
            out.train.insert(out.train.end(), ids.begin() + static_cast<std::ptrdiff_t>(quota[b]), ids.end());
        }
    }
    std::sort(out.train.begin(), out.train.end());
    std::sort(out.validation.begin(), out.validation.end());
    std::sort(out.test.begin(), out.test.end());
    return out;
}

}  // namespace igshm::data
