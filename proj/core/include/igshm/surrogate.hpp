#pragma once

#include "igshm/preprocessing.hpp"
#include "igshm/sensor_layout.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

/// Synthetic pressure campaigns from a linear heave/twist section model.
///
/// Heave y and twist phi follow
///   M y''   + D_y y'     + k_y K_y (y - dy)       = F(t)
///   J phi'' + D_phi phi' + k_phi K_phi (phi - dphi) = e F(t)
/// with F(t) = F0 sin(2 pi f_h (t - t_on)) after the excitation onset. The
/// damage class sets the stiffness scalings k and the static offsets dy, dphi.
/// Every sensor reads
///   cp_s(t) = base_s(aoa) + sens_s * (alpha_eff(t) - aoa) + noise
///   alpha_eff = aoa + phi + atan(y' / V) + gust
/// All magnitudes are free modelling choices, not measurements.
namespace igshm::surrogate {

inline constexpr int kDamageClasses = 6;
inline constexpr int kAddedMassClass = 1;
inline constexpr int kTestSeries = 8;
inline constexpr int kRunsPerCondition = 3;

/// Crack classes in order of severity (the added-mass class is not part of it).
inline constexpr std::array<int, 5> kSeverityChain{0, 2, 3, 4, 5};

struct SectionModelParams {
    double mass = 2.0;              ///< kg
    double heaveStiffness = 808.0;  ///< N/m
    double heaveDamping = 2.4;      ///< N s/m
    double inertia = 0.01;          ///< kg m^2
    double twistStiffness = 25.3;   ///< N m/rad
    double twistDamping = 0.03;     ///< N m s/rad
    double eccentricity = 0.005;    ///< m, lever arm of the excitation about the twist axis
    double windSpeed = 12.0;        ///< m/s
    double aoaDeg = 0.0;
    double excitationHz = 1.9;
    double excitationAmplitude = 5.3;  ///< N
    double excitationOnset = 15.0;     ///< s

    void validate() const;
};

struct DamageState {
    double heaveScale = 1.0;  ///< stiffness factor in (0, 1]
    double twistScale = 1.0;
    double twistOffsetDeg = 0.0;
    double heaveOffset = 0.0;  ///< m
    bool addedMass = false;
    double addedMassRatio = 0.0;  ///< relative mass increase when addedMass
};

/// One DamageState per class 0..5.
struct DamageModel {
    std::array<DamageState, kDamageClasses> classes{};

    const DamageState& at(int damageClass) const;
    /// Scalings non-increasing and offsets non-decreasing in magnitude along
    /// the severity chain; the undamaged state is neutral.
    void validate() const;
};

struct PressureFieldModel {
    std::vector<int> sensorIds;              ///< working sensors, channel order
    std::vector<double> baseProfile0;        ///< cp at 0 deg
    std::vector<double> baseProfile8;        ///< cp at 8 deg
    std::vector<double> sensitivityPerDeg;   ///< dcp/dalpha per sensor
    double noiseStd = 0.02;

    /// Base profile for an AoA (linear in AoA through the two anchors).
    std::vector<double> baseProfile(double aoaDeg) const;
    void validate() const;
};

/// Per-run random variation, all standard deviations.
struct JitterConfig {
    double stiffnessRel = 0.01;
    double dampingRel = 0.05;
    double excitationRel = 0.08;
    double aoaDeg = 0.03;
    // Per-sensor static offset, drawn once per run. Larger values act as a
    // run fingerprint that classifiers memorize instead of the damage signal.
    double baseOffset = 0.003;
};

struct TurbulenceConfig {
    double stdDeg = 0.0;  ///< stationary std of the gust angle
    double timeConstant = 0.5;
};

struct TestSeriesSpec {
    int id = 1;
    double aoaDeg = 0.0;
    double excitationHz = 1.0;
    double windSpeed = 12.0;
};

struct GeneratorConfig {
    std::string profile = "static-dominant";
    SectionModelParams section;
    DamageModel damage;
    PressureFieldModel pressure;
    JitterConfig jitter;
    TurbulenceConfig turbulence;
    std::vector<TestSeriesSpec> testSeries;
    int runsPerCondition = kRunsPerCondition;
    double durationSeconds = 150.0;
    double sampleRateHz = data::kSampleRateHz;
    int substeps = 10;
    /// Initial displacement from equilibrium (heave m, twist deg).
    double initialHeave = 0.0;
    double initialTwistDeg = 0.0;

    void validate() const;
};

/// Class separability carried by the static pressure pattern.
GeneratorConfig staticDominantConfig();
/// Class separability carried by the oscillation amplitudes.
GeneratorConfig dynamicsDominantConfig();
GeneratorConfig configForProfile(const std::string& profile);

/// The eight boundary conditions: TS1-4 at 0 deg, TS5-8 at 8 deg, frequency
/// pairs (1.0, 1.0, 1.9, 1.9) Hz and speeds (12, 24, 12, 24) m/s.
std::vector<TestSeriesSpec> standardTestSeries();

nlohmann::json toJson(const GeneratorConfig& config);
GeneratorConfig generatorConfigFromJson(const nlohmann::json& j);
GeneratorConfig loadGeneratorConfig(const std::filesystem::path& path);

struct SimulationTrace {
    std::vector<double> heave;  ///< m, per output step
    std::vector<double> twist;  ///< rad
    std::vector<double> alphaEffDeg;
};

/// Integrates one run. `seed` drives jitter, gusts and sensor noise.
/// Throws NumericError when the integration is unstable.
data::RawRun simulateRun(const GeneratorConfig& config, const TestSeriesSpec& series, int damageClass, int runIndex,
                         std::uint64_t seed, SimulationTrace* trace = nullptr);

/// Seed of one run of a campaign.
std::uint64_t runSeed(std::uint64_t campaignSeed, int testSeries, int damageClass, int runIndex);

/// Every test series (optionally only one AoA) x 6 classes x runsPerCondition.
std::vector<data::RawRun> generateCampaign(const GeneratorConfig& config, std::uint64_t seed,
                                           std::optional<double> aoaDeg = std::nullopt);

/// Reads a run directory or a CSV file. A CSV needs a metadata sidecar named
/// "<stem>.meta.json" or "meta.json" beside it.
data::RawRun ingestExternalRun(const std::filesystem::path& path, const SensorLayout& layout = SensorLayout::standard());

}  // namespace igshm::surrogate
