#include "igshm/attribution.hpp"

#include "igshm/error.hpp"
#include "igshm/sensor_layout.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>

namespace igshm::attribution {
namespace {

std::string fmt(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

double quantile(const std::vector<double>& sorted, double q)
{
    const double pos = q * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
    return sorted[lo] + (pos - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

}  // namespace

std::vector<int> sensorIdsFor(std::size_t channels)
{
    const SensorLayout& layout = SensorLayout::standard();
    if (channels == layout.channelCount()) {
        return std::vector<int>(layout.workingSensorIds().begin(), layout.workingSensorIds().end());
    }
    std::vector<int> ids(channels);
    std::iota(ids.begin(), ids.end(), 0);
    return ids;
}

AttributionMap integratedGradients(const net::Model& model, const net::Tensor& sample, const net::Tensor& baseline,
                                   const IgOptions& options)
{
    if (options.steps < kMinSteps || options.steps > kMaxSteps) {
        throw ConfigError("IG step count " + std::to_string(options.steps) + " outside [" + std::to_string(kMinSteps) +
                          ", " + std::to_string(kMaxSteps) + "]");
    }
    if (options.chunkSize == 0) throw ConfigError("IG chunk size must be positive");
    if (sample.shape() != model.inputShape() || baseline.shape() != model.inputShape()) {
        throw ShapeError("IG sample/baseline must match the model input " + net::shapeString(model.inputShape()));
    }
    if (options.output == net::OutputKind::Probability && !model.endsWithSoftmax()) {
        throw ConfigError("probability attribution needs a softmax-terminated model");
    }

    const std::size_t n = sample.size();
    net::Shape pairShape{2};
    pairShape.insert(pairShape.end(), sample.shape().begin(), sample.shape().end());
    net::Tensor pair(pairShape);
    std::copy(sample.storage().begin(), sample.storage().end(), pair.data());
    std::copy(baseline.storage().begin(), baseline.storage().end(), pair.data() + n);
    const net::ForwardTrace endpoints = model.trace(pair, net::Mode::Infer);

    std::size_t target = 0;
    if (options.targetClass) {
        target = *options.targetClass;
        if (target >= model.outputSize()) throw ConfigError("IG target class out of range");
    } else {
        const double* p = endpoints.output.data();
        target = static_cast<std::size_t>(std::max_element(p, p + model.outputSize()) - p);
    }
    const net::Tensor& scores = options.output == net::OutputKind::Logit ? endpoints.logits : endpoints.output;

    std::vector<double> diff(n);
    for (std::size_t i = 0; i < n; ++i) diff[i] = sample[i] - baseline[i];

    const auto steps = static_cast<std::size_t>(options.steps);
    std::vector<double> gradSum(n, 0.0);
    for (std::size_t begin = 0; begin < steps; begin += options.chunkSize) {
        const std::size_t count = std::min(options.chunkSize, steps - begin);
        net::Shape batchShape{count};
        batchShape.insert(batchShape.end(), sample.shape().begin(), sample.shape().end());
        net::Tensor batch(batchShape);
        for (std::size_t j = 0; j < count; ++j) {
            const double gamma = (static_cast<double>(begin + j) + 0.5) / static_cast<double>(steps);
            double* dst = batch.data() + j * n;
            for (std::size_t i = 0; i < n; ++i) dst[i] = baseline[i] + gamma * diff[i];
        }
        const std::vector<std::size_t> targets(count, target);
        const net::Tensor grads = model.inputGradients(batch, targets, options.output);
        for (std::size_t j = 0; j < count; ++j) {
            const double* g = grads.data() + j * n;
            for (std::size_t i = 0; i < n; ++i) gradSum[i] += g[i];
        }
    }

    AttributionMap map;
    map.scores = net::Tensor(sample.shape());
    for (std::size_t i = 0; i < n; ++i) map.scores[i] = diff[i] * gradSum[i] / static_cast<double>(steps);
    if (!map.scores.allFinite()) throw NumericError("non-finite attribution scores");
    map.steps = options.steps;
    map.targetClass = target;
    map.output = options.output;
    map.outputAtInput = scores.at(0, target);
    map.outputAtBaseline = scores.at(1, target);
    map.attributionSum = std::accumulate(map.scores.storage().begin(), map.scores.storage().end(), 0.0);
    map.completenessGap = std::abs(map.attributionSum - (map.outputAtInput - map.outputAtBaseline));
    map.sensorIds = sensorIdsFor(sample.rank() == 2 ? sample.dim(0) : 1);
    return map;
}

AttributionMap integratedGradients(const net::Model& model, const net::Tensor& sample, baselines::BaselineKind kind,
                                   const IgOptions& options)
{
    AttributionMap map = integratedGradients(model, sample, baselines::makeBaseline(sample, kind), options);
    map.baselineKind = kind;
    return map;
}

ChannelAttributionVector channelSum(const AttributionMap& map, std::size_t sampleId)
{
    const net::Tensor& s = map.scores;
    if (s.rank() != 2) throw ShapeError("channel sums need a [C, T] attribution map");
    ChannelAttributionVector out;
    out.sampleId = sampleId;
    out.values.assign(s.dim(0), 0.0);
    for (std::size_t c = 0; c < s.dim(0); ++c) {
        for (std::size_t t = 0; t < s.dim(1); ++t) out.values[c] += s.at(c, t);
    }
    return out;
}

AttributionStats populationStats(std::span<const ChannelAttributionVector> vectors)
{
    if (vectors.empty()) throw DataError("attribution statistics need at least one vector");
    const std::size_t channels = vectors.front().values.size();
    AttributionStats stats;
    stats.raw.assign(vectors.begin(), vectors.end());
    stats.channels.resize(channels);
    std::vector<double> column(vectors.size());
    for (std::size_t c = 0; c < channels; ++c) {
        double sum = 0.0;
        double sumAbs = 0.0;
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            if (vectors[i].values.size() != channels) throw ShapeError("attribution vectors differ in length");
            column[i] = vectors[i].values[c];
            sum += column[i];
            sumAbs += std::abs(column[i]);
        }
        std::vector<double> sorted = column;
        std::sort(sorted.begin(), sorted.end());
        ChannelStats& cs = stats.channels[c];
        const double count = static_cast<double>(vectors.size());
        cs.mean = sum / count;
        cs.meanAbs = sumAbs / count;
        cs.median = quantile(sorted, 0.5);
        cs.q1 = quantile(sorted, 0.25);
        cs.q3 = quantile(sorted, 0.75);
        cs.min = sorted.front();
        cs.max = sorted.back();
    }
    return stats;
}

std::vector<std::size_t> topChannels(std::span<const double> values, std::size_t k)
{
    if (k > values.size()) {
        throw ConfigError("cannot rank " + std::to_string(k) + " of " + std::to_string(values.size()) + " channels");
    }
    std::vector<std::size_t> order(values.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return std::abs(values[a]) > std::abs(values[b]); });
    order.resize(k);
    return order;
}

std::vector<ConvergenceRow> convergenceStudy(const net::Model& model, const net::Tensor& sample,
                                             baselines::BaselineKind kind, std::span<const int> stepsList,
                                             IgOptions options)
{
    if (stepsList.empty()) throw ConfigError("convergence study needs at least one step count");
    const int reference = *std::max_element(stepsList.begin(), stepsList.end());
    const net::Tensor baseline = baselines::makeBaseline(sample, kind);

    // Fix the target so every row attributes the same score.
    if (!options.targetClass) {
        const net::Tensor p = model.forward(sample.reshaped([&] {
            net::Shape s{1};
            s.insert(s.end(), sample.shape().begin(), sample.shape().end());
            return s;
        }()));
        options.targetClass = static_cast<std::size_t>(std::max_element(p.data(), p.data() + p.size()) - p.data());
    }
    options.steps = reference;
    const AttributionMap ref = integratedGradients(model, sample, baseline, options);

    std::vector<ConvergenceRow> rows;
    for (int steps : stepsList) {
        options.steps = steps;
        const AttributionMap m = steps == reference ? ref : integratedGradients(model, sample, baseline, options);
        double delta = 0.0;
        for (std::size_t i = 0; i < m.scores.size(); ++i) delta = std::max(delta, std::abs(m.scores[i] - ref.scores[i]));
        rows.push_back({steps, m.completenessGap, delta});
    }
    return rows;
}

void writeMapCsv(const std::filesystem::path& path, const AttributionMap& map)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    const std::size_t channels = map.scores.dim(0);
    const std::size_t steps = map.scores.dim(1);
    out << "channel,sensor_id";
    for (std::size_t t = 0; t < steps; ++t) out << ",t" << t;
    out << '\n';
    for (std::size_t c = 0; c < channels; ++c) {
        out << c << ',' << (c < map.sensorIds.size() ? map.sensorIds[c] : static_cast<int>(c));
        for (std::size_t t = 0; t < steps; ++t) out << ',' << fmt(map.scores.at(c, t));
        out << '\n';
    }
}

nlohmann::json mapSidecar(const AttributionMap& map)
{
    return {{"baseline", map.baselineKind ? std::string(baselines::toString(*map.baselineKind)) : "custom"},
            {"steps", map.steps},
            {"riemann_rule", "midpoint"},
            {"target_class", map.targetClass},
            {"target_output", std::string(net::toString(map.output))},
            {"output_at_input", map.outputAtInput},
            {"output_at_baseline", map.outputAtBaseline},
            {"attribution_sum", map.attributionSum},
            {"completeness_gap", map.completenessGap},
            {"shape", map.scores.shape()},
            {"sensor_ids", map.sensorIds}};
}

void writeStatsCsv(const std::filesystem::path& path, const AttributionStats& stats, std::span<const int> sensorIds)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "channel,sensor_id,mean,median,q1,q3,min,max,mean_abs\n";
    for (std::size_t c = 0; c < stats.channels.size(); ++c) {
        const ChannelStats& s = stats.channels[c];
        out << c << ',' << (c < sensorIds.size() ? sensorIds[c] : static_cast<int>(c)) << ',' << fmt(s.mean) << ','
            << fmt(s.median) << ',' << fmt(s.q1) << ',' << fmt(s.q3) << ',' << fmt(s.min) << ',' << fmt(s.max) << ','
            << fmt(s.meanAbs) << '\n';
    }
}

void writeRawCsv(const std::filesystem::path& path, const AttributionStats& stats, std::span<const int> sensorIds)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "sample_id";
    const std::size_t channels = stats.channels.size();
    for (std::size_t c = 0; c < channels; ++c) out << ",s" << (c < sensorIds.size() ? sensorIds[c] : static_cast<int>(c));
    out << '\n';
    for (const auto& v : stats.raw) {
        out << v.sampleId;
        for (double x : v.values) out << ',' << fmt(x);
        out << '\n';
    }
}

}  // namespace igshm::attribution
