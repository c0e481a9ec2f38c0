#include "igshm/dataset_io.hpp"
#include "igshm/error.hpp"
#include "igshm/io/binary.hpp"
#include "igshm/spectra.hpp"
#include "igshm/surrogate.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>

using namespace igshm;
using namespace igshm::surrogate;
namespace fs = std::filesystem;

namespace {

GeneratorConfig quiet(GeneratorConfig c)
{
    c.pressure.noiseStd = 0.0;
    c.jitter = {0, 0, 0, 0, 0};
    c.turbulence.stdDeg = 0.0;
    return c;
}

TestSeriesSpec series(const GeneratorConfig& c, int id)
{
    return c.testSeries.at(static_cast<std::size_t>(id - 1));
}

double heaveAmplitude(const SimulationTrace& t, double fs)
{
    const auto begin = static_cast<std::size_t>(40 * fs);
    double mean = 0;
    for (std::size_t i = begin; i < t.heave.size(); ++i) mean += t.heave[i];
    mean /= static_cast<double>(t.heave.size() - begin);
    double sq = 0;
    for (std::size_t i = begin; i < t.heave.size(); ++i) sq += (t.heave[i] - mean) * (t.heave[i] - mean);
    return std::sqrt(sq / static_cast<double>(t.heave.size() - begin));
}

double trimmedChannelMean(const data::RawRun& run, std::size_t channel)
{
    const data::RawRun t = data::trimRun(run);
    double m = 0;
    for (std::size_t i = 0; i < t.steps(); ++i) m += t.pressures.at(channel, i);
    return m / static_cast<double>(t.steps());
}

}  // namespace

TEST(Generator, EquilibriumWithoutExcitationIsBaseProfile)
{
    GeneratorConfig c = quiet(staticDominantConfig());
    c.section.excitationAmplitude = 0.0;
    c.durationSeconds = 60;
    const auto ts = series(c, 5);
    const data::RawRun run = simulateRun(c, ts, 0, 1, 7);
    const auto base = c.pressure.baseProfile(ts.aoaDeg);
    ASSERT_EQ(run.channels(), 37u);
    for (std::size_t ch = 0; ch < run.channels(); ++ch) {
        for (std::size_t i = 0; i < run.steps(); i += 97) EXPECT_EQ(run.pressures.at(ch, i), base[ch]);
    }
}

TEST(Generator, DampedSystemDecaysToDamagedEquilibrium)
{
    GeneratorConfig c = quiet(staticDominantConfig());
    c.section.excitationAmplitude = 0.0;
    c.initialHeave = 0.02;
    c.initialTwistDeg = 0.5;
    c.durationSeconds = 150;
    SimulationTrace t;
    simulateRun(c, series(c, 1), 4, 1, 1, &t);
    const DamageState& d = c.damage.at(4);
    EXPECT_GT(std::abs(t.heave.front() - d.heaveOffset), 0.019);
    EXPECT_LT(std::abs(t.heave.back() - d.heaveOffset), 1e-6);
    EXPECT_LT(std::abs(t.twist.back() - d.twistOffsetDeg * std::numbers::pi / 180.0), 1e-8);
}

TEST(Generator, SeverityIsMonotone)
{
    for (const GeneratorConfig& profile : {staticDominantConfig(), dynamicsDominantConfig()}) {
        const GeneratorConfig c = profile;
        const std::size_t le = 15;  // sensor 15 is channel 15
        for (int id : {1, 4, 7}) {
            const auto ts = series(c, id);
            const auto base = c.pressure.baseProfile(ts.aoaDeg);
            double prevAmp = -1, prevShift = -1;
            for (int d : kSeverityChain) {
                SimulationTrace t;
                const data::RawRun run = simulateRun(c, ts, d, 1, 99, &t);
                const double amp = heaveAmplitude(t, c.sampleRateHz);
                const double shift = std::abs(trimmedChannelMean(run, le) - base[le]);
                EXPECT_GT(amp, prevAmp) << c.profile << " TS" << id << " class " << d;
                if (c.profile == "static-dominant") EXPECT_GT(shift, prevShift) << "TS" << id << " class " << d;
                prevAmp = amp;
                prevShift = shift;
            }
        }
    }
}

TEST(Generator, StaticShiftIsMonotoneWithoutNoise)
{
    // The dynamics-dominant offsets are tiny; compare them without noise or jitter.
    const GeneratorConfig c = quiet(dynamicsDominantConfig());
    const auto ts = series(c, 3);
    const auto base = c.pressure.baseProfile(ts.aoaDeg);
    double prev = -1;
    for (int d : kSeverityChain) {
        const double shift = std::abs(trimmedChannelMean(simulateRun(c, ts, d, 1, 5), 15) - base[15]);
        EXPECT_GT(shift, prev) << d;
        prev = shift;
    }
}

TEST(Generator, AddedMassDiffersFromEveryCrackClass)
{
    const GeneratorConfig c = quiet(staticDominantConfig());
    const auto ts = series(c, 3);
    const double added = trimmedChannelMean(simulateRun(c, ts, kAddedMassClass, 1, 5), 15);
    for (int d : kSeverityChain) {
        EXPECT_GT(std::abs(trimmedChannelMean(simulateRun(c, ts, d, 1, 5), 15) - added), 0.02) << d;
    }
}

TEST(Generator, SpectralPeakAtExcitationFrequency)
{
    const GeneratorConfig c = staticDominantConfig();
    for (int id : {1, 3, 6, 8}) {
        const auto ts = series(c, id);
        const data::RawRun run = data::trimRun(simulateRun(c, ts, 2, 1, 3));
        const spectra::Spectrogram sg =
            spectra::stft(std::span<const double>(run.pressures.data() + 15 * run.steps(), run.steps()));
        std::vector<double> mean(sg.bins(), 0.0);
        for (std::size_t f = 0; f < sg.frames(); ++f) {
            for (std::size_t k = 0; k < sg.bins(); ++k) mean[k] += sg.at(f, k);
        }
        std::size_t best = 1;
        for (std::size_t k = 1; k < sg.bins(); ++k) {
            if (sg.frequencies[k] > 0.5 && mean[k] > mean[best]) best = k;
        }
        EXPECT_NEAR(sg.frequencies[best], ts.excitationHz, sg.spec.resolutionHz()) << "TS" << id;
    }
}

TEST(Generator, CampaignCountsAndDeterminism)
{
    GeneratorConfig c = staticDominantConfig();
    c.durationSeconds = 50;
    const auto full = generateCampaign(c, 11);
    ASSERT_EQ(full.size(), 144u);
    const auto zero = generateCampaign(c, 11, 0.0);
    ASSERT_EQ(zero.size(), 72u);
    for (const auto& r : zero) {
        EXPECT_EQ(r.meta.aoaDeg, 0.0);
        EXPECT_GE(r.meta.testSeries, 1);
        EXPECT_LE(r.meta.testSeries, 4);
        EXPECT_GT(r.meta.windSpeed, 0.0);
        EXPECT_GT(r.meta.excitationHz, 0.0);
    }
    const auto again = generateCampaign(c, 11, 0.0);
    EXPECT_TRUE(zero == again);
    EXPECT_FALSE(zero == generateCampaign(c, 12, 0.0));
    EXPECT_THROW(generateCampaign(c, 11, 4.0), ConfigError);
}

TEST(Generator, StandardGridMatchesBoundaryConditions)
{
    const auto g = standardTestSeries();
    ASSERT_EQ(g.size(), 8u);
    const double f[8] = {1.0, 1.0, 1.9, 1.9, 1.0, 1.0, 1.9, 1.9};
    const double v[8] = {12, 24, 12, 24, 12, 24, 12, 24};
    for (std::size_t i = 0; i < 8; ++i) {
        EXPECT_EQ(g[i].id, static_cast<int>(i) + 1);
        EXPECT_EQ(g[i].aoaDeg, i < 4 ? 0.0 : 8.0);
        EXPECT_EQ(g[i].excitationHz, f[i]);
        EXPECT_EQ(g[i].windSpeed, v[i]);
    }
}

TEST(Generator, ConfigJsonRoundTrip)
{
    for (const auto& c : {staticDominantConfig(), dynamicsDominantConfig()}) {
        const auto j = toJson(c);
        EXPECT_EQ(toJson(generatorConfigFromJson(j)), j);
    }
    nlohmann::json partial{{"profile", "dynamics-dominant"}, {"pressure", {{"noise_std", 0.5}}}};
    const GeneratorConfig p = generatorConfigFromJson(partial);
    EXPECT_EQ(p.pressure.noiseStd, 0.5);
    EXPECT_EQ(p.damage.at(5).heaveScale, dynamicsDominantConfig().damage.at(5).heaveScale);
}

TEST(Generator, InvalidConfigsAreRejected)
{
    GeneratorConfig c = staticDominantConfig();
    c.section.mass = -1;
    EXPECT_THROW(c.validate(), ConfigError);
    c = staticDominantConfig();
    c.durationSeconds = 40;
    EXPECT_THROW(c.validate(), ConfigError);
    c = staticDominantConfig();
    std::swap(c.damage.classes[2], c.damage.classes[5]);
    EXPECT_THROW(c.validate(), ConfigError);
    c = staticDominantConfig();
    c.pressure.sensitivityPerDeg.pop_back();
    EXPECT_THROW(c.validate(), ConfigError);
    EXPECT_THROW(configForProfile("nope"), ConfigError);
    EXPECT_THROW(generatorConfigFromJson(nlohmann::json{{"section", {{"mass_kg", "heavy"}}}}), ConfigError);
}

TEST(Generator, UnstableIntegrationIsReported)
{
    GeneratorConfig c = staticDominantConfig();
    c.section.twistStiffness = 1e6;
    c.substeps = 1;
    EXPECT_THROW(simulateRun(c, series(c, 1), 0, 1, 0), NumericError);
}

TEST(Ingest, RoundTripThroughCsvAndDirectory)
{
    GeneratorConfig c = staticDominantConfig();
    c.durationSeconds = 55;
    const data::RawRun run = simulateRun(c, series(c, 2), 3, 2, 21);
    const fs::path dir = fs::temp_directory_path() / "igshm_test_ingest";
    fs::remove_all(dir);
    data::writeCsvRun(dir / "run.csv", run);
    io::writeTextFile(dir / "run.meta.json", data::toJson(run.meta).dump());
    EXPECT_EQ(ingestExternalRun(dir / "run.csv"), run);
    data::writeRun(dir / "bin", run);
    EXPECT_EQ(ingestExternalRun(dir / "bin"), run);
    EXPECT_THROW(ingestExternalRun(dir / "absent.csv"), DataError);
    data::writeCsvRun(dir / "lonely" / "x.csv", run);
    EXPECT_THROW(ingestExternalRun(dir / "lonely" / "x.csv"), DataError);
}

TEST(Ingest, MissingChannelNamesSensor)
{
    const fs::path dir = fs::temp_directory_path() / "igshm_test_ingest36";
    fs::remove_all(dir);
    fs::create_directories(dir);
    {
        std::ofstream out(dir / "run.csv");
        bool first = true;
        for (int id : SensorLayout::standard().workingSensorIds()) {
            if (id == 33) continue;
            out << (first ? "" : ",") << "s" << id;
            first = false;
        }
        out << "\n";
        for (int i = 0; i < 36; ++i) out << (i ? "," : "") << 0.1;
        out << "\n";
    }
    io::writeTextFile(dir / "meta.json", data::toJson(data::RunMeta{}).dump());
    try {
        ingestExternalRun(dir / "run.csv");
        FAIL();
    } catch (const DataError& e) {
        EXPECT_NE(std::string(e.what()).find("sensor 33"), std::string::npos) << e.what();
    }
}
