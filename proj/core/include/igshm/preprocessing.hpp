#pragma once

#include "igshm/netcore/tensor.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace igshm::data {

inline constexpr double kSampleRateHz = 100.0;
inline constexpr std::size_t kWindowSteps = 150;
inline constexpr std::size_t kWindowsPerRun = 89;
inline constexpr double kTrimHeadSeconds = 40.0;
inline constexpr double kTrimTailSeconds = 10.0;

struct RunMeta {
    int testSeries = 1;     ///< 1..8
    int damageClass = 0;    ///< 0..5
    int runIndex = 1;       ///< 1..3
    double aoaDeg = 0.0;
    double sampleRateHz = kSampleRateHz;
    double windSpeed = 0.0;     ///< m/s, 0 when unknown
    double excitationHz = 0.0;  ///< heave excitation frequency, 0 when unknown

    friend bool operator==(const RunMeta&, const RunMeta&) = default;
};

nlohmann::json toJson(const RunMeta& meta);
RunMeta runMetaFromJson(const nlohmann::json& j);

/// One recording: pressures is [channels, steps] in pressure-coefficient units.
struct RawRun {
    RunMeta meta;
    net::Tensor pressures;

    std::size_t channels() const { return pressures.rank() == 2 ? pressures.dim(0) : 0; }
    std::size_t steps() const { return pressures.rank() == 2 ? pressures.dim(1) : 0; }
    double durationSeconds() const { return static_cast<double>(steps()) / meta.sampleRateHz; }

    friend bool operator==(const RawRun&, const RawRun&) = default;
};

struct Provenance {
    int testSeries = 0;
    int runIndex = 0;
    int windowIndex = 0;

    friend bool operator==(const Provenance&, const Provenance&) = default;
};

/// One window of a run: values is [channels, steps].
struct Sample {
    net::Tensor values;
    std::size_t label = 0;
    Provenance provenance;
};

using Dataset = std::vector<Sample>;

/// Drops `headSeconds` from the start and `tailSeconds` from the end.
RawRun trimRun(const RawRun& run, double headSeconds = kTrimHeadSeconds, double tailSeconds = kTrimTailSeconds);

/// Stride between window starts: floor((steps - window) / (count - 1)), 0 for a single window.
std::size_t windowStride(std::size_t steps, std::size_t windowSteps, std::size_t windowCount);

/// Cuts `windowCount` equally spaced windows, ordered by start time; the tail
/// remainder is discarded. Samples are not normalized.
Dataset windowRun(const RawRun& run, std::size_t windowSteps = kWindowSteps, std::size_t windowCount = kWindowsPerRun);

enum class ZScoreScope {
    Joint,       ///< one mean/std over all channels and steps
    PerChannel,  ///< mean/std per channel
};

std::string_view toString(ZScoreScope scope);
ZScoreScope zScoreScopeFromString(std::string_view name);

/// Zero-variance groups normalize to zeros.
net::Tensor zScore(const net::Tensor& values, ZScoreScope scope = ZScoreScope::Joint);
Sample zScoreSample(Sample sample, ZScoreScope scope = ZScoreScope::Joint);

struct PreprocessOptions {
    double headSeconds = kTrimHeadSeconds;
    double tailSeconds = kTrimTailSeconds;
    std::size_t windowSteps = kWindowSteps;
    std::size_t windowCount = kWindowsPerRun;
    ZScoreScope scope = ZScoreScope::Joint;
};

/// trim -> window -> z-score.
Dataset prepareRun(const RawRun& run, const PreprocessOptions& options = {});

/// Temporal mean of every channel of a [C, T] matrix.
std::vector<double> channelMeans(const net::Tensor& values);

/// Per-feature standardization fitted on training mean vectors.
struct MeanVectorScaler {
    std::vector<double> mean;
    std::vector<double> stddev;

    static MeanVectorScaler fit(std::span<const std::vector<double>> vectors);
    std::vector<double> transform(std::span<const double> vector) const;
    bool fitted() const noexcept { return !mean.empty(); }

    nlohmann::json toJson() const;
    static MeanVectorScaler fromJson(const nlohmann::json& j);
};

/// Channel means of the sample, standardized by `scaler`.
std::vector<double> meanVector(const Sample& sample, const MeanVectorScaler& scaler);

struct SplitAssignment {
    int splitIndex = 1;
    std::vector<std::size_t> train;
    std::vector<std::size_t> validation;
    std::vector<std::size_t> test;
};

/// Run held out for testing: split 1 -> run 3, split 2 -> run 1, split 3 -> run 2.
int heldOutRun(int splitIndex);

/// For every boundary condition (test series, damage class) the held-out run
/// goes to test and the other two to training. `validationFraction` of the
/// training samples of each class moves to validation, spread evenly over the
/// class's boundary conditions and drawn with a seeded shuffle.
SplitAssignment assignSplits(const Dataset& dataset, int splitIndex, std::uint64_t seed,
                             double validationFraction = 0.25);

}  // namespace igshm::data
