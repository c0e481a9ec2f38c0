#pragma once

#include "igshm/preprocessing.hpp"
#include "igshm/sensor_layout.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace igshm::spectra {

inline constexpr double kDefaultStrouhal = 0.2;
inline constexpr double kDefaultChordDepth = 0.16;  ///< m

/// Vortex-shedding frequency St * V / D in Hz.
double strouhalFrequency(double strouhal, double windSpeed, double depth = kDefaultChordDepth);

struct StftSpec {
    double windowSeconds = 2.0;
    double hopSeconds = 1.0;
    double sampleRateHz = data::kSampleRateHz;
    double minHz = 0.0;
    double maxHz = 50.0;  ///< clipped to Nyquist
    bool detrend = true;  ///< remove each frame's mean before windowing

    double resolutionHz() const { return 1.0 / windowSeconds; }
    std::size_t windowSamples() const;
    std::size_t hopSamples() const;
    void validate() const;

    /// 1.0 s frame spacing, 0.5 Hz resolution.
    static StftSpec coarseTime();
    /// 0.5 s frame spacing, 1.0 Hz resolution.
    static StftSpec fineTime();
    static StftSpec preset(const std::string& name);
};

struct Spectrogram {
    std::vector<double> frameTimes;   ///< window centres, s
    std::vector<double> frequencies;  ///< Hz, bins inside [minHz, maxHz]
    std::vector<double> magnitude;    ///< frames x bins, row-major
    std::size_t firstBin = 0;
    StftSpec spec;
    double windowPowerSum = 0.0;  ///< sum of squared window weights

    std::size_t frames() const { return frameTimes.size(); }
    std::size_t bins() const { return frequencies.size(); }
    double at(std::size_t frame, std::size_t bin) const { return magnitude[frame * bins() + bin]; }
};

/// Periodic Hann-windowed STFT of one channel.
Spectrogram stft(std::span<const double> signal, const StftSpec& spec = {});

/// Energy estimate from a full-band spectrogram, comparable to sum(x^2) of a
/// zero-mean stationary signal.
double spectralEnergy(const Spectrogram& s);

struct DetectionConfig {
    double thresholdDb = 6.0;
    int minConsecutiveFrames = 3;
    double noiseHalfWidthHz = 3.0;  ///< at least 6 bins
    int guardBins = 2;              ///< bins on each side excluded from the floor
};

struct BandReport {
    double frequencyHz = 0.0;
    bool detected = false;
    double meanBandPower = 0.0;
    double meanNoisePower = 0.0;
    double meanExcessDb = 0.0;
    int longestRun = 0;        ///< consecutive frames above threshold
    int framesAboveThreshold = 0;
};

/// Persistent-band test: the mean power of the bins within one resolution step
/// of `frequencyHz` must exceed the noise floor by the threshold in at least
/// `minConsecutiveFrames` consecutive frames. The floor is the mean power of
/// the surrounding bins (outside the guard) over the whole record.
BandReport detectBand(const Spectrogram& s, double frequencyHz, const DetectionConfig& config = {});

struct SheddingReport {
    int sensorId = 0;
    std::vector<BandReport> candidates;
    std::optional<BandReport> excitation;  ///< at the run's heave frequency, when known
};

SheddingReport sheddingScan(const data::RawRun& run, int sensorId, std::span<const double> candidatesHz,
                            const StftSpec& spec = {}, const DetectionConfig& detection = {},
                            const SensorLayout& layout = SensorLayout::standard());

nlohmann::json toJson(const BandReport& band);
nlohmann::json toJson(const SheddingReport& report);
/// Rows: time_s, then one column per frequency.
void writeSpectrogramCsv(const std::filesystem::path& path, const Spectrogram& s);

}  // namespace igshm::spectra
