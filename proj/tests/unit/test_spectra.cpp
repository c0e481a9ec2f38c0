#include "igshm/error.hpp"
#include "igshm/spectra.hpp"
#include "igshm/surrogate.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

using namespace igshm;
using namespace igshm::spectra;

namespace {

std::vector<double> tone(double hz, double amp, std::size_t n, double fs = 100.0)
{
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = amp * std::sin(2 * std::numbers::pi * hz * static_cast<double>(i) / fs);
    return x;
}

std::vector<double> noise(std::size_t n, std::uint64_t seed, double sd = 1.0)
{
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> d(0.0, sd);
    std::vector<double> x(n);
    for (double& v : x) v = d(rng);
    return x;
}

std::vector<double> add(std::vector<double> a, const std::vector<double>& b)
{
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

double timeEnergy(const std::vector<double>& x)
{
    double e = 0;
    for (double v : x) e += v * v;
    return e;
}

}  // namespace

TEST(Strouhal, TabulatedSpeedsAreExact)
{
    EXPECT_EQ(strouhalFrequency(0.2, 12, 0.16), 15.0);
    EXPECT_EQ(strouhalFrequency(0.2, 24, 0.16), 30.0);
    EXPECT_EQ(strouhalFrequency(0.0, 12, 0.16), 0.0);
    EXPECT_THROW(strouhalFrequency(0.2, 0, 0.16), ConfigError);
    EXPECT_THROW(strouhalFrequency(0.2, 12, -1), ConfigError);
}

TEST(Stft, PresetsHaveTheDocumentedResolution)
{
    EXPECT_EQ(StftSpec::coarseTime().resolutionHz(), 0.5);
    EXPECT_EQ(StftSpec::coarseTime().hopSeconds, 1.0);
    EXPECT_EQ(StftSpec::fineTime().resolutionHz(), 1.0);
    EXPECT_EQ(StftSpec::fineTime().hopSeconds, 0.5);
    EXPECT_THROW(StftSpec::preset("x"), ConfigError);
}

TEST(Stft, PureToneHasOneDominantBin)
{
    for (const StftSpec& spec : {StftSpec::coarseTime(), StftSpec::fineTime()}) {
        const Spectrogram s = stft(tone(1.9, 1.0, 3000), spec);
        for (std::size_t f = 0; f < s.frames(); ++f) {
            std::size_t best = 0;
            for (std::size_t k = 1; k < s.bins(); ++k) {
                if (s.at(f, k) > s.at(f, best)) best = k;
            }
            EXPECT_NEAR(s.frequencies[best], 1.9, spec.resolutionHz());
        }
    }
}

TEST(Stft, ShortSignalIsRejected)
{
    EXPECT_THROW(stft(tone(1.0, 1.0, 150)), DataError);
}

TEST(Stft, BandRestriction)
{
    StftSpec spec;
    spec.minHz = 0.5;
    spec.maxHz = 10.0;
    const Spectrogram s = stft(tone(1.0, 1.0, 1000), spec);
    EXPECT_EQ(s.frequencies.front(), 0.5);
    EXPECT_EQ(s.frequencies.back(), 10.0);
    EXPECT_THROW(spectralEnergy(s), ConfigError);
}

TEST(Stft, ParsevalWithinTenPercent)
{
    for (const StftSpec& spec : {StftSpec::coarseTime(), StftSpec::fineTime()}) {
        const auto white = noise(20000, 1);
        EXPECT_NEAR(spectralEnergy(stft(white, spec)) / timeEnergy(white), 1.0, 0.1);
        const auto sine = tone(7.3, 2.0, 20000);
        EXPECT_NEAR(spectralEnergy(stft(sine, spec)) / timeEnergy(sine), 1.0, 0.1);
    }
}

TEST(Detection, WhiteNoiseStaysBelowThreshold)
{
    const std::vector<double> candidates{2.0, 5.0, 15.0, 30.0, 44.0};
    for (std::uint64_t seed = 0; seed < 40; ++seed) {
        for (const StftSpec& spec : {StftSpec::coarseTime(), StftSpec::fineTime()}) {
            const Spectrogram s = stft(noise(10000, seed), spec);
            for (double f : candidates) EXPECT_FALSE(detectBand(s, f).detected) << seed << " " << f;
        }
    }
}

TEST(Detection, TwoTonesAreBothDetected)
{
    const auto x = add(add(tone(1.9, 1.0, 10000), tone(15.0, 0.5, 10000)), noise(10000, 3, 0.3));
    const Spectrogram s = stft(x);
    EXPECT_TRUE(detectBand(s, 1.9).detected);
    EXPECT_TRUE(detectBand(s, 15.0).detected);
    EXPECT_FALSE(detectBand(s, 30.0).detected);
}

TEST(Detection, MonotoneInToneAmplitude)
{
    const auto n = noise(10000, 4);
    double prev = -1e9;
    int prevFrames = -1;
    for (double amp : {0.0, 0.02, 0.05, 0.1, 0.2, 0.5, 1.0}) {
        const BandReport r = detectBand(stft(add(n, tone(15.0, amp, 10000))), 15.0);
        EXPECT_GT(r.meanExcessDb, prev);
        EXPECT_GE(r.framesAboveThreshold, prevFrames);
        prev = r.meanExcessDb;
        prevFrames = r.framesAboveThreshold;
    }
}

TEST(Detection, AboveNyquistIsAnError)
{
    const Spectrogram s = stft(noise(1000, 5));
    EXPECT_THROW(detectBand(s, 60.0), ConfigError);
}

TEST(SheddingScan, SurrogateRunsShowExcitationButNoShedding)
{
    const auto config = surrogate::staticDominantConfig();
    for (const auto& ts : config.testSeries) {
        for (int d : {0, 1, 5}) {
            const data::RawRun run = data::trimRun(surrogate::simulateRun(config, ts, d, 1, 40 + d));
            const std::vector<double> candidates{strouhalFrequency(0.2, 12), strouhalFrequency(0.2, 24)};
            for (const StftSpec& spec : {StftSpec::coarseTime(), StftSpec::fineTime()}) {
                const SheddingReport r = sheddingScan(run, 15, candidates, spec);
                EXPECT_FALSE(r.candidates[0].detected) << "TS" << ts.id << " d" << d;
                EXPECT_FALSE(r.candidates[1].detected) << "TS" << ts.id << " d" << d;
                ASSERT_TRUE(r.excitation.has_value());
                EXPECT_TRUE(r.excitation->detected) << "TS" << ts.id << " d" << d << " " << r.excitation->meanExcessDb;
            }
        }
    }
}

TEST(SheddingScan, InjectedToneIsDetected)
{
    const auto config = surrogate::staticDominantConfig();
    data::RawRun run = data::trimRun(surrogate::simulateRun(config, config.testSeries[1], 3, 2, 8));
    const auto t = tone(15.0, 0.02, run.steps());
    const std::size_t ch = *SensorLayout::standard().channelOf(39);
    for (std::size_t i = 0; i < run.steps(); ++i) run.pressures.at(ch, i) += t[i];
    const std::vector<double> candidates{15.0, 30.0};
    const SheddingReport r = sheddingScan(run, 39, candidates);
    EXPECT_TRUE(r.candidates[0].detected);
    EXPECT_FALSE(r.candidates[1].detected);
    EXPECT_THROW(sheddingScan(run, 20, candidates), ConfigError);
    EXPECT_THROW(sheddingScan(run, 15, std::vector<double>{60.0}), ConfigError);
}
