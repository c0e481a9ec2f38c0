#include "igshm/surrogate.hpp"

#include "igshm/dataset_io.hpp"
#include "igshm/error.hpp"
#include "igshm/io/binary.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace igshm::surrogate {
namespace {

constexpr double kDegToRad = std::numbers::pi / 180.0;
constexpr double kRadToDeg = 180.0 / std::numbers::pi;

std::uint64_t splitmix(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

void requirePositive(double v, const char* what)
{
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be positive and finite");
}

void requireNonNegative(double v, const char* what)
{
    if (!(v >= 0.0) || !std::isfinite(v)) throw ConfigError(std::string(what) + " must be non-negative and finite");
}

PressureFieldModel defaultPressureField(double peakSensitivity, double floor)
{
    const SensorLayout& layout = SensorLayout::standard();
    PressureFieldModel p;
    for (int id : layout.workingSensorIds()) {
        const double x = layout.chordPosition(id);
        const bool suction = layout.surface(id) == Surface::Suction;
        const double aft = std::pow(1.0 - x, 0.7);
        // stagnation peak right at the nose
        const double stagnation = std::exp(-x / 0.02);
        const double cp0 = (suction ? -0.6 : -0.3) * aft + 0.05 + stagnation;
        const double cp8 = suction ? cp0 - 1.2 * std::exp(-x / 0.08) - 0.3 * (1.0 - x)
                                   : cp0 + 0.6 * std::pow(1.0 - x, 1.5);
        const double d = static_cast<double>(id - 15);
        const double shape = floor + (1.0 - floor) * std::exp(-d * d / (2.0 * 1.2 * 1.2));
        p.sensorIds.push_back(id);
        p.baseProfile0.push_back(cp0);
        p.baseProfile8.push_back(cp8);
        p.sensitivityPerDeg.push_back((suction ? -1.0 : 1.0) * peakSensitivity * shape);
    }
    return p;
}

// y, y', phi, phi'
using State = std::array<double, 4>;

struct Dynamics {
    double mass, ky, dy, inertia, kphi, dphi, ecc;
    double heaveEq, twistEq;
    double amp, omega, onset;

    double force(double t) const { return t >= onset ? amp * std::sin(omega * (t - onset)) : 0.0; }

    State derivative(const State& s, double t) const
    {
        const double f = force(t);
        return {s[1], (f - dy * s[1] - ky * (s[0] - heaveEq)) / mass, s[3],
                (ecc * f - dphi * s[3] - kphi * (s[2] - twistEq)) / inertia};
    }
};

State rk4(const Dynamics& dyn, const State& s, double t, double h)
{
    auto axpy = [](const State& a, const State& b, double k) {
        return State{a[0] + k * b[0], a[1] + k * b[1], a[2] + k * b[2], a[3] + k * b[3]};
    };
    const State k1 = dyn.derivative(s, t);
    const State k2 = dyn.derivative(axpy(s, k1, h / 2), t + h / 2);
    const State k3 = dyn.derivative(axpy(s, k2, h / 2), t + h / 2);
    const State k4 = dyn.derivative(axpy(s, k3, h), t + h);
    State out;
    for (int i = 0; i < 4; ++i) out[i] = s[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    return out;
}

nlohmann::json sectionToJson(const SectionModelParams& s)
{
    return {{"mass_kg", s.mass},
            {"heave_stiffness_n_per_m", s.heaveStiffness},
            {"heave_damping_ns_per_m", s.heaveDamping},
            {"twist_inertia_kgm2", s.inertia},
            {"twist_stiffness_nm_per_rad", s.twistStiffness},
            {"twist_damping_nms_per_rad", s.twistDamping},
            {"eccentricity_m", s.eccentricity},
            {"excitation_amplitude_n", s.excitationAmplitude},
            {"excitation_onset_s", s.excitationOnset}};
}

template <typename T>
void readOpt(const nlohmann::json& j, const char* key, T& out)
{
    if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

void SectionModelParams::validate() const
{
    requirePositive(mass, "mass");
    requirePositive(heaveStiffness, "heave stiffness");
    requirePositive(heaveDamping, "heave damping");
    requirePositive(inertia, "twist inertia");
    requirePositive(twistStiffness, "twist stiffness");
    requirePositive(twistDamping, "twist damping");
    requirePositive(windSpeed, "wind speed");
    requireNonNegative(excitationHz, "excitation frequency");
    requireNonNegative(excitationAmplitude, "excitation amplitude");
    requireNonNegative(excitationOnset, "excitation onset");
    if (!std::isfinite(eccentricity) || !std::isfinite(aoaDeg)) throw ConfigError("non-finite section parameter");
}

const DamageState& DamageModel::at(int damageClass) const
{
    if (damageClass < 0 || damageClass >= kDamageClasses) {
        throw ConfigError("damage class " + std::to_string(damageClass) + " outside [0, 5]");
    }
    return classes[static_cast<std::size_t>(damageClass)];
}

void DamageModel::validate() const
{
    for (int d = 0; d < kDamageClasses; ++d) {
        const DamageState& s = at(d);
        if (!(s.heaveScale > 0.0 && s.heaveScale <= 1.0) || !(s.twistScale > 0.0 && s.twistScale <= 1.0)) {
            throw ConfigError("stiffness scalings of class " + std::to_string(d) + " must lie in (0, 1]");
        }
        requireNonNegative(s.addedMassRatio, "added mass ratio");
    }
    const DamageState& healthy = at(0);
    if (healthy.heaveScale != 1.0 || healthy.twistScale != 1.0 || healthy.twistOffsetDeg != 0.0 ||
        healthy.heaveOffset != 0.0 || healthy.addedMass) {
        throw ConfigError("the undamaged class must have unit scalings and zero offsets");
    }
    for (std::size_t i = 1; i < kSeverityChain.size(); ++i) {
        const DamageState& a = at(kSeverityChain[i - 1]);
        const DamageState& b = at(kSeverityChain[i]);
        if (b.heaveScale > a.heaveScale || b.twistScale > a.twistScale ||
            std::abs(b.twistOffsetDeg) < std::abs(a.twistOffsetDeg) || std::abs(b.heaveOffset) < std::abs(a.heaveOffset)) {
            throw ConfigError("damage class " + std::to_string(kSeverityChain[i]) +
                              " is less severe than class " + std::to_string(kSeverityChain[i - 1]));
        }
        if (b.addedMass) throw ConfigError("crack classes cannot carry added mass");
    }
}

std::vector<double> PressureFieldModel::baseProfile(double aoaDeg) const
{
    std::vector<double> out(baseProfile0.size());
    const double w = aoaDeg / 8.0;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = baseProfile0[i] + w * (baseProfile8[i] - baseProfile0[i]);
    return out;
}

void PressureFieldModel::validate() const
{
    const SensorLayout& layout = SensorLayout::standard();
    const auto expected = layout.workingSensorIds();
    if (!std::equal(sensorIds.begin(), sensorIds.end(), expected.begin(), expected.end())) {
        throw ConfigError("pressure model sensor ids must list the working sensors in channel order");
    }
    const std::size_t n = sensorIds.size();
    if (baseProfile0.size() != n || baseProfile8.size() != n || sensitivityPerDeg.size() != n) {
        throw ConfigError("pressure model profiles need one value per working sensor (" + std::to_string(n) + ")");
    }
    requireNonNegative(noiseStd, "noise std");
}

void GeneratorConfig::validate() const
{
    section.validate();
    damage.validate();
    pressure.validate();
    requireNonNegative(jitter.stiffnessRel, "stiffness jitter");
    requireNonNegative(jitter.dampingRel, "damping jitter");
    requireNonNegative(jitter.excitationRel, "excitation jitter");
    requireNonNegative(jitter.aoaDeg, "AoA jitter");
    requireNonNegative(jitter.baseOffset, "base offset jitter");
    requireNonNegative(turbulence.stdDeg, "turbulence std");
    requirePositive(turbulence.timeConstant, "turbulence time constant");
    if (testSeries.empty()) throw ConfigError("generator needs at least one test series");
    for (const auto& ts : testSeries) {
        if (ts.id < 1 || ts.id > kTestSeries) throw ConfigError("test series id must lie in [1, 8]");
        requirePositive(ts.windSpeed, "wind speed");
        requireNonNegative(ts.excitationHz, "excitation frequency");
    }
    if (runsPerCondition < 1 || runsPerCondition > kRunsPerCondition) throw ConfigError("runs per condition must lie in [1, 3]");
    requirePositive(sampleRateHz, "sample rate");
    if (durationSeconds < 50.0) throw ConfigError("run duration must be at least 50 s");
    if (substeps < 1) throw ConfigError("substeps must be positive");
}

std::vector<TestSeriesSpec> standardTestSeries()
{
    std::vector<TestSeriesSpec> out;
    const double freqs[4] = {1.0, 1.0, 1.9, 1.9};
    const double speeds[4] = {12.0, 24.0, 12.0, 24.0};
    for (int a = 0; a < 2; ++a) {
        for (int i = 0; i < 4; ++i) out.push_back({a * 4 + i + 1, a * 8.0, freqs[i], speeds[i]});
    }
    return out;
}

GeneratorConfig staticDominantConfig()
{
    GeneratorConfig c;
    c.profile = "static-dominant";
    c.pressure = defaultPressureField(0.15, 0.03);
    c.pressure.noiseStd = 0.02;
    // d: heave scale, twist scale, twist offset (deg), heave offset (m), added mass, ratio
    c.damage.classes = {{
        {1.00, 1.00, 0.0, 0.0, false, 0.0},
        {1.00, 1.00, -0.6, -0.004, true, 0.10},
        {0.98, 0.97, 0.5, -0.001, false, 0.0},
        {0.96, 0.94, 1.0, -0.002, false, 0.0},
        {0.94, 0.91, 1.5, -0.003, false, 0.0},
        {0.92, 0.88, 2.0, -0.004, false, 0.0},
    }};
    c.turbulence.stdDeg = 0.05;
    c.testSeries = standardTestSeries();
    return c;
}

GeneratorConfig dynamicsDominantConfig()
{
    GeneratorConfig c;
    c.profile = "dynamics-dominant";
    c.pressure = defaultPressureField(0.15, 0.03);
    c.pressure.noiseStd = 0.02;
    c.damage.classes = {{
        {1.00, 1.00, 0.0, 0.0, false, 0.0},
        {1.00, 1.00, -0.01, -0.0005, true, 0.96},
        {0.85, 0.85, 0.01, -0.0005, false, 0.0},
        {0.72, 0.72, 0.02, -0.0010, false, 0.0},
        {0.61, 0.61, 0.03, -0.0015, false, 0.0},
        {0.52, 0.52, 0.04, -0.0020, false, 0.0},
    }};
    c.jitter.aoaDeg = 0.3;
    c.jitter.baseOffset = 0.04;
    c.turbulence.stdDeg = 0.05;
    c.testSeries = standardTestSeries();
    return c;
}

GeneratorConfig configForProfile(const std::string& profile)
{
    if (profile == "static-dominant") return staticDominantConfig();
    if (profile == "dynamics-dominant") return dynamicsDominantConfig();
    throw ConfigError("unknown generator profile '" + profile + "' (expected static-dominant or dynamics-dominant)");
}

nlohmann::json toJson(const GeneratorConfig& c)
{
    nlohmann::json damage = nlohmann::json::array();
    for (int d = 0; d < kDamageClasses; ++d) {
        const DamageState& s = c.damage.at(d);
        damage.push_back({{"class", d},
                          {"heave_stiffness_scale", s.heaveScale},
                          {"twist_stiffness_scale", s.twistScale},
                          {"twist_offset_deg", s.twistOffsetDeg},
                          {"heave_offset_m", s.heaveOffset},
                          {"added_mass", s.addedMass},
                          {"added_mass_ratio", s.addedMassRatio}});
    }
    nlohmann::json series = nlohmann::json::array();
    for (const auto& ts : c.testSeries) {
        series.push_back({{"id", ts.id}, {"aoa_deg", ts.aoaDeg}, {"excitation_hz", ts.excitationHz},
                          {"wind_speed_m_per_s", ts.windSpeed}});
    }
    return {{"profile", c.profile},
            {"section", sectionToJson(c.section)},
            {"damage", damage},
            {"pressure",
             {{"sensor_ids", c.pressure.sensorIds},
              {"base_profile_0deg", c.pressure.baseProfile0},
              {"base_profile_8deg", c.pressure.baseProfile8},
              {"sensitivity_per_deg", c.pressure.sensitivityPerDeg},
              {"noise_std", c.pressure.noiseStd}}},
            {"jitter",
             {{"stiffness_rel", c.jitter.stiffnessRel},
              {"damping_rel", c.jitter.dampingRel},
              {"excitation_rel", c.jitter.excitationRel},
              {"aoa_deg", c.jitter.aoaDeg},
              {"base_offset", c.jitter.baseOffset}}},
            {"turbulence", {{"std_deg", c.turbulence.stdDeg}, {"time_constant_s", c.turbulence.timeConstant}}},
            {"test_series", series},
            {"runs_per_condition", c.runsPerCondition},
            {"duration_s", c.durationSeconds},
            {"sample_rate_hz", c.sampleRateHz},
            {"substeps", c.substeps},
            {"initial_heave_m", c.initialHeave},
            {"initial_twist_deg", c.initialTwistDeg}};
}

GeneratorConfig generatorConfigFromJson(const nlohmann::json& j)
{
    try {
        GeneratorConfig c = configForProfile(j.value("profile", std::string("static-dominant")));
        if (j.contains("section")) {
            const auto& s = j.at("section");
            readOpt(s, "mass_kg", c.section.mass);
            readOpt(s, "heave_stiffness_n_per_m", c.section.heaveStiffness);
            readOpt(s, "heave_damping_ns_per_m", c.section.heaveDamping);
            readOpt(s, "twist_inertia_kgm2", c.section.inertia);
            readOpt(s, "twist_stiffness_nm_per_rad", c.section.twistStiffness);
            readOpt(s, "twist_damping_nms_per_rad", c.section.twistDamping);
            readOpt(s, "eccentricity_m", c.section.eccentricity);
            readOpt(s, "excitation_amplitude_n", c.section.excitationAmplitude);
            readOpt(s, "excitation_onset_s", c.section.excitationOnset);
        }
        if (j.contains("damage")) {
            for (const auto& e : j.at("damage")) {
                const int d = e.at("class").get<int>();
                DamageState& s = c.damage.classes.at(static_cast<std::size_t>(d));
                readOpt(e, "heave_stiffness_scale", s.heaveScale);
                readOpt(e, "twist_stiffness_scale", s.twistScale);
                readOpt(e, "twist_offset_deg", s.twistOffsetDeg);
                readOpt(e, "heave_offset_m", s.heaveOffset);
                readOpt(e, "added_mass", s.addedMass);
                readOpt(e, "added_mass_ratio", s.addedMassRatio);
            }
        }
        if (j.contains("pressure")) {
            const auto& p = j.at("pressure");
            readOpt(p, "sensor_ids", c.pressure.sensorIds);
            readOpt(p, "base_profile_0deg", c.pressure.baseProfile0);
            readOpt(p, "base_profile_8deg", c.pressure.baseProfile8);
            readOpt(p, "sensitivity_per_deg", c.pressure.sensitivityPerDeg);
            readOpt(p, "noise_std", c.pressure.noiseStd);
        }
        if (j.contains("jitter")) {
            const auto& s = j.at("jitter");
            readOpt(s, "stiffness_rel", c.jitter.stiffnessRel);
            readOpt(s, "damping_rel", c.jitter.dampingRel);
            readOpt(s, "excitation_rel", c.jitter.excitationRel);
            readOpt(s, "aoa_deg", c.jitter.aoaDeg);
            readOpt(s, "base_offset", c.jitter.baseOffset);
        }
        if (j.contains("turbulence")) {
            readOpt(j.at("turbulence"), "std_deg", c.turbulence.stdDeg);
            readOpt(j.at("turbulence"), "time_constant_s", c.turbulence.timeConstant);
        }
        if (j.contains("test_series")) {
            c.testSeries.clear();
            for (const auto& e : j.at("test_series")) {
                c.testSeries.push_back({e.at("id").get<int>(), e.at("aoa_deg").get<double>(),
                                        e.at("excitation_hz").get<double>(), e.at("wind_speed_m_per_s").get<double>()});
            }
        }
        readOpt(j, "runs_per_condition", c.runsPerCondition);
        readOpt(j, "duration_s", c.durationSeconds);
        readOpt(j, "sample_rate_hz", c.sampleRateHz);
        readOpt(j, "substeps", c.substeps);
        readOpt(j, "initial_heave_m", c.initialHeave);
        readOpt(j, "initial_twist_deg", c.initialTwistDeg);
        c.validate();
        return c;
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed generator config: ") + e.what());
    }
}

GeneratorConfig loadGeneratorConfig(const std::filesystem::path& path)
{
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::readTextFile(path));
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError("cannot parse " + path.string() + ": " + e.what());
    }
    return generatorConfigFromJson(j);
}

std::uint64_t runSeed(std::uint64_t campaignSeed, int testSeries, int damageClass, int runIndex)
{
    std::uint64_t h = splitmix(campaignSeed);
    h = splitmix(h ^ static_cast<std::uint64_t>(testSeries));
    h = splitmix(h ^ static_cast<std::uint64_t>(damageClass));
    return splitmix(h ^ static_cast<std::uint64_t>(runIndex));
}

data::RawRun simulateRun(const GeneratorConfig& config, const TestSeriesSpec& series, int damageClass, int runIndex,
                         std::uint64_t seed, SimulationTrace* trace)
{
    config.validate();
    const DamageState& dmg = config.damage.at(damageClass);
    const SectionModelParams& sec = config.section;
    const PressureFieldModel& field = config.pressure;

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    auto jitter = [&](double rel) { return 1.0 + rel * normal(rng); };

    const double stiffY = jitter(config.jitter.stiffnessRel);
    const double stiffPhi = jitter(config.jitter.stiffnessRel);
    const double dampY = jitter(config.jitter.dampingRel);
    const double dampPhi = jitter(config.jitter.dampingRel);
    const double excite = jitter(config.jitter.excitationRel);
    const double aoaOffset = config.jitter.aoaDeg * normal(rng);

    Dynamics dyn{};
    dyn.mass = sec.mass * (dmg.addedMass ? 1.0 + dmg.addedMassRatio : 1.0);
    dyn.ky = sec.heaveStiffness * dmg.heaveScale * std::max(stiffY, 0.1);
    dyn.dy = sec.heaveDamping * std::max(dampY, 0.1);
    dyn.inertia = sec.inertia;
    dyn.kphi = sec.twistStiffness * dmg.twistScale * std::max(stiffPhi, 0.1);
    dyn.dphi = sec.twistDamping * std::max(dampPhi, 0.1);
    dyn.ecc = sec.eccentricity;
    dyn.heaveEq = dmg.heaveOffset;
    dyn.twistEq = dmg.twistOffsetDeg * kDegToRad;
    dyn.amp = sec.excitationAmplitude * std::max(excite, 0.0);
    dyn.omega = 2.0 * std::numbers::pi * series.excitationHz;
    dyn.onset = sec.excitationOnset;

    const double h = 1.0 / (config.sampleRateHz * config.substeps);
    const double omegaMax = std::max(std::sqrt(dyn.ky / dyn.mass), std::sqrt(dyn.kphi / dyn.inertia));
    const double dampMax = std::max(dyn.dy / dyn.mass, dyn.dphi / dyn.inertia);
    if (omegaMax * h > 2.5 || dampMax * h > 2.5) {
        throw NumericError("unstable integration: step " + std::to_string(h) + " s too coarse for natural frequency " +
                           std::to_string(omegaMax / (2.0 * std::numbers::pi)) + " Hz; raise substeps");
    }

    const std::size_t channels = field.sensorIds.size();
    const auto steps = static_cast<std::size_t>(std::llround(config.durationSeconds * config.sampleRateHz));
    const std::vector<double> base = field.baseProfile(series.aoaDeg);
    std::vector<double> offsets(channels);
    for (double& o : offsets) o = config.jitter.baseOffset * normal(rng);

    // Gust angle: Ornstein-Uhlenbeck, exact discretization at the output rate.
    const double dt = 1.0 / config.sampleRateHz;
    const double decay = std::exp(-dt / config.turbulence.timeConstant);
    const double kick = config.turbulence.stdDeg * std::sqrt(1.0 - decay * decay);
    double gust = config.turbulence.stdDeg * normal(rng);

    State s{dmg.heaveOffset + config.initialHeave, 0.0, dyn.twistEq + config.initialTwistDeg * kDegToRad, 0.0};
    data::RawRun run;
    run.meta = {series.id, damageClass, runIndex, series.aoaDeg, config.sampleRateHz, series.windSpeed,
                series.excitationHz};
    run.pressures = net::Tensor({channels, steps});
    if (trace) {
        trace->heave.resize(steps);
        trace->twist.resize(steps);
        trace->alphaEffDeg.resize(steps);
    }

    const double noiseStd = field.noiseStd;
    for (std::size_t n = 0; n < steps; ++n) {
        const double t = static_cast<double>(n) * dt;
        if (!std::isfinite(s[0]) || !std::isfinite(s[2]) || std::abs(s[0]) > 1e3 || std::abs(s[2]) > 1e3) {
            throw NumericError("unstable integration: state diverged at t = " + std::to_string(t) + " s");
        }
        const double alphaDev = aoaOffset + s[2] * kRadToDeg + std::atan(s[1] / series.windSpeed) * kRadToDeg + gust;
        for (std::size_t c = 0; c < channels; ++c) {
            double v = base[c] + offsets[c] + field.sensitivityPerDeg[c] * alphaDev;
            if (noiseStd > 0.0) v += noiseStd * normal(rng);
            run.pressures.at(c, n) = v;
        }
        if (trace) {
            trace->heave[n] = s[0];
            trace->twist[n] = s[2];
            trace->alphaEffDeg[n] = series.aoaDeg + alphaDev;
        }
        for (int k = 0; k < config.substeps; ++k) s = rk4(dyn, s, t + k * h, h);
        if (config.turbulence.stdDeg > 0.0) gust = decay * gust + kick * normal(rng);
    }
    return run;
}

std::vector<data::RawRun> generateCampaign(const GeneratorConfig& config, std::uint64_t seed,
                                           std::optional<double> aoaDeg)
{
    config.validate();
    std::vector<data::RawRun> runs;
    for (const auto& ts : config.testSeries) {
        if (aoaDeg && ts.aoaDeg != *aoaDeg) continue;
        for (int d = 0; d < kDamageClasses; ++d) {
            for (int r = 1; r <= config.runsPerCondition; ++r) {
                runs.push_back(simulateRun(config, ts, d, r, runSeed(seed, ts.id, d, r)));
            }
        }
    }
    if (runs.empty()) throw ConfigError("no test series matches the requested AoA");
    return runs;
}

data::RawRun ingestExternalRun(const std::filesystem::path& path, const SensorLayout& layout)
{
    namespace fs = std::filesystem;
    if (fs::is_directory(path)) return data::readRun(path, layout);
    if (!fs::exists(path)) throw DataError("no such run: " + path.string());
    if (path.extension() != ".csv") throw DataError("unsupported run format '" + path.extension().string() + "'");

    fs::path sidecar = path.parent_path() / (path.stem().string() + ".meta.json");
    if (!fs::exists(sidecar)) sidecar = path.parent_path() / data::kMetaFile;
    if (!fs::exists(sidecar)) throw DataError("missing metadata sidecar for " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(io::readTextFile(sidecar));
    } catch (const nlohmann::json::exception& e) {
        throw DataError("malformed metadata " + sidecar.string() + ": " + e.what());
    }
    return data::readCsvRun(path, data::runMetaFromJson(j.contains("meta") ? j.at("meta") : j), layout);
}

}  // namespace igshm::surrogate
