#pragma once

#include "igshm/baselines.hpp"
#include "igshm/netcore/model.hpp"

#include <nlohmann/json.hpp>

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace igshm::attribution {

inline constexpr int kMinSteps = 1;
inline constexpr int kMaxSteps = 5000;
inline constexpr int kDefaultSteps = 200;

struct IgOptions {
    int steps = kDefaultSteps;
    /// Class whose score is attributed; the model's prediction on the input when empty.
    std::optional<std::size_t> targetClass;
    net::OutputKind output = net::OutputKind::Logit;
    /// Path points per forward/backward batch. Affects memory only.
    std::size_t chunkSize = 32;
};

/// Integrated-gradients scores of one sample against one baseline.
struct AttributionMap {
    net::Tensor scores;  ///< [C, T]
    std::optional<baselines::BaselineKind> baselineKind;
    int steps = 0;
    std::size_t targetClass = 0;
    net::OutputKind output = net::OutputKind::Logit;
    double outputAtInput = 0.0;
    double outputAtBaseline = 0.0;
    double attributionSum = 0.0;
    double completenessGap = 0.0;  ///< |sum(scores) - (F(x) - F(x'))|
    std::vector<int> sensorIds;    ///< physical sensor id of every channel row
};

/// Midpoint Riemann sum over the straight path baseline + g * (sample - baseline),
/// g_k = (k - 1/2) / steps.
AttributionMap integratedGradients(const net::Model& model, const net::Tensor& sample, const net::Tensor& baseline,
                                   const IgOptions& options = {});
AttributionMap integratedGradients(const net::Model& model, const net::Tensor& sample, baselines::BaselineKind kind,
                                   const IgOptions& options = {});

/// Per-channel sum of a map over time.
struct ChannelAttributionVector {
    std::vector<double> values;
    std::size_t sampleId = 0;
};

ChannelAttributionVector channelSum(const AttributionMap& map, std::size_t sampleId = 0);

struct ChannelStats {
    double mean = 0.0;
    double median = 0.0;
    double q1 = 0.0;
    double q3 = 0.0;
    double min = 0.0;
    double max = 0.0;
    double meanAbs = 0.0;
};

struct AttributionStats {
    std::vector<ChannelStats> channels;
    std::vector<ChannelAttributionVector> raw;
};

/// Quartiles use linear interpolation between order statistics.
AttributionStats populationStats(std::span<const ChannelAttributionVector> vectors);

/// Channel ids ordered by |value| descending, ties to the lower id.
std::vector<std::size_t> topChannels(std::span<const double> values, std::size_t k = 3);

struct ConvergenceRow {
    int steps = 0;
    double completenessGap = 0.0;
    double maxAbsDeltaVsReference = 0.0;
};

/// IG at every step count; the largest count serves as the reference map.
std::vector<ConvergenceRow> convergenceStudy(const net::Model& model, const net::Tensor& sample,
                                             baselines::BaselineKind kind, std::span<const int> stepsList,
                                             IgOptions options = {});

/// Physical sensor ids for a channel count: the standard layout for 37
/// channels, the identity otherwise.
std::vector<int> sensorIdsFor(std::size_t channels);

// Exports ---------------------------------------------------------------

/// Rows: channel, sensor_id, t0..t{T-1}.
void writeMapCsv(const std::filesystem::path& path, const AttributionMap& map);
nlohmann::json mapSidecar(const AttributionMap& map);
/// Rows: channel, sensor_id, mean, median, q1, q3, min, max, mean_abs.
void writeStatsCsv(const std::filesystem::path& path, const AttributionStats& stats, std::span<const int> sensorIds);
/// Rows: sample_id, then one column per sensor.
void writeRawCsv(const std::filesystem::path& path, const AttributionStats& stats, std::span<const int> sensorIds);

}  // namespace igshm::attribution
