#include "igshm/spectra.hpp"

#include "igshm/error.hpp"

#include <unsupported/Eigen/FFT>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <complex>
#include <fstream>
#include <numbers>

namespace igshm::spectra {
namespace {

std::string fmt(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

double strouhalFrequency(double strouhal, double windSpeed, double depth)
{
    if (!(strouhal >= 0.0) || !(windSpeed > 0.0) || !(depth > 0.0)) {
        throw ConfigError("Strouhal estimate needs St >= 0, V > 0 and D > 0");
    }
    // V / D first: exact for the tabulated speeds.
    return strouhal * (windSpeed / depth);
}

std::size_t StftSpec::windowSamples() const
{
    return static_cast<std::size_t>(std::llround(windowSeconds * sampleRateHz));
}

std::size_t StftSpec::hopSamples() const
{
    return static_cast<std::size_t>(std::llround(hopSeconds * sampleRateHz));
}

void StftSpec::validate() const
{
    if (!(sampleRateHz > 0.0)) throw ConfigError("STFT sample rate must be positive");
    if (windowSamples() < 4) throw ConfigError("STFT window must span at least 4 samples");
    if (hopSamples() < 1) throw ConfigError("STFT hop must span at least one sample");
    if (!(minHz >= 0.0) || !(maxHz > minHz)) throw ConfigError("STFT band must satisfy 0 <= min < max");
}

StftSpec StftSpec::coarseTime()
{
    StftSpec s;
    s.windowSeconds = 2.0;
    s.hopSeconds = 1.0;
    return s;
}

StftSpec StftSpec::fineTime()
{
    StftSpec s;
    s.windowSeconds = 1.0;
    s.hopSeconds = 0.5;
    return s;
}

StftSpec StftSpec::preset(const std::string& name)
{
    if (name == "coarse-time") return coarseTime();
    if (name == "fine-time") return fineTime();
    throw ConfigError("unknown STFT preset '" + name + "' (expected coarse-time or fine-time)");
}

Spectrogram stft(std::span<const double> signal, const StftSpec& spec)
{
    spec.validate();
    const std::size_t n = spec.windowSamples();
    const std::size_t hop = spec.hopSamples();
    if (signal.size() < n) {
        throw DataError("signal of " + std::to_string(signal.size()) + " samples is shorter than one STFT window (" +
                        std::to_string(n) + ")");
    }
    for (std::size_t i = 0; i < signal.size(); ++i) {
        if (!std::isfinite(signal[i])) throw DataError("non-finite sample at index " + std::to_string(i));
    }

    std::vector<double> window(n);
    for (std::size_t i = 0; i < n; ++i) {
        window[i] = 0.5 - 0.5 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n));
    }

    Spectrogram out;
    out.spec = spec;
    for (double w : window) out.windowPowerSum += w * w;

    const double df = spec.sampleRateHz / static_cast<double>(n);
    const std::size_t nyquistBin = n / 2;
    const double maxHz = std::min(spec.maxHz, spec.sampleRateHz / 2.0);
    std::size_t first = nyquistBin + 1;
    std::size_t last = 0;
    for (std::size_t k = 0; k <= nyquistBin; ++k) {
        const double f = static_cast<double>(k) * df;
        if (f >= spec.minHz - 1e-9 && f <= maxHz + 1e-9) {
            first = std::min(first, k);
            last = k;
        }
    }
    if (first > last) throw ConfigError("STFT band contains no frequency bin");
    out.firstBin = first;
    for (std::size_t k = first; k <= last; ++k) out.frequencies.push_back(static_cast<double>(k) * df);

    Eigen::FFT<double> fft;
    std::vector<double> frame(n);
    std::vector<std::complex<double>> spectrum;
    const std::size_t frames = 1 + (signal.size() - n) / hop;
    out.magnitude.reserve(frames * out.frequencies.size());
    for (std::size_t f = 0; f < frames; ++f) {
        const double* src = signal.data() + f * hop;
        double mean = 0.0;
        if (spec.detrend) {
            for (std::size_t i = 0; i < n; ++i) mean += src[i];
            mean /= static_cast<double>(n);
        }
        for (std::size_t i = 0; i < n; ++i) frame[i] = (src[i] - mean) * window[i];
        fft.fwd(spectrum, frame);
        for (std::size_t k = first; k <= last; ++k) out.magnitude.push_back(std::abs(spectrum[k]));
        out.frameTimes.push_back((static_cast<double>(f * hop) + static_cast<double>(n) / 2.0) / spec.sampleRateHz);
    }
    return out;
}

double spectralEnergy(const Spectrogram& s)
{
    const std::size_t n = s.spec.windowSamples();
    if (s.firstBin != 0 || s.frequencies.size() != n / 2 + 1) {
        throw ConfigError("spectral energy needs a full-band spectrogram");
    }
    // One-sided Parseval per frame, then each frame stands for `hop` samples
    // of a signal whose windowed power is sum(w^2)/n of the raw power.
    double total = 0.0;
    for (std::size_t f = 0; f < s.frames(); ++f) {
        double frameEnergy = 0.0;
        for (std::size_t k = 0; k < s.bins(); ++k) {
            const double p = s.at(f, k) * s.at(f, k);
            const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
            frameEnergy += edge ? p : 2.0 * p;
        }
        total += frameEnergy / static_cast<double>(n);
    }
    return total * static_cast<double>(s.spec.hopSamples()) / s.windowPowerSum;
}

BandReport detectBand(const Spectrogram& s, double frequencyHz, const DetectionConfig& config)
{
    const double nyquist = s.spec.sampleRateHz / 2.0;
    if (!(frequencyHz > 0.0) || frequencyHz > nyquist) {
        throw ConfigError("candidate frequency " + fmt(frequencyHz) + " Hz outside (0, " + fmt(nyquist) + "] Hz");
    }
    const double df = s.spec.resolutionHz();
    const double halfWidth = std::max(config.noiseHalfWidthHz, 6.0 * df);
    const double guard = config.guardBins * df;

    std::vector<std::size_t> band;
    std::vector<std::size_t> noise;
    for (std::size_t k = 0; k < s.bins(); ++k) {
        const double f = s.frequencies[k];
        const double dist = std::abs(f - frequencyHz);
        if (dist <= df + 1e-9) band.push_back(k);
        else if (dist > guard + 1e-9 && dist <= halfWidth + 1e-9 && f > 0.0) noise.push_back(k);
    }
    if (band.empty() || noise.empty()) {
        throw ConfigError("spectrogram band does not cover " + fmt(frequencyHz) + " Hz and its surroundings");
    }

    BandReport r;
    r.frequencyHz = frequencyHz;
    // The floor is averaged over all frames: a per-frame floor from a handful
    // of correlated bins dips often enough to fake persistent bands in noise.
    double floor = 0.0;
    for (std::size_t f = 0; f < s.frames(); ++f) {
        for (std::size_t k : noise) floor += s.at(f, k) * s.at(f, k);
    }
    floor /= static_cast<double>(s.frames() * noise.size());
    r.meanNoisePower = floor;

    const double ratio = std::pow(10.0, config.thresholdDb / 10.0);
    int run = 0;
    double excessSum = 0.0;
    for (std::size_t f = 0; f < s.frames(); ++f) {
        double bp = 0.0;
        for (std::size_t k : band) bp += s.at(f, k) * s.at(f, k);
        bp /= static_cast<double>(band.size());
        r.meanBandPower += bp;
        excessSum += 10.0 * std::log10((bp + 1e-300) / (floor + 1e-300));
        if (bp >= ratio * floor && bp > 0.0) {
            ++r.framesAboveThreshold;
            r.longestRun = std::max(r.longestRun, ++run);
        } else {
            run = 0;
        }
    }
    const auto frames = static_cast<double>(s.frames());
    r.meanBandPower /= frames;
    r.meanExcessDb = excessSum / frames;
    r.detected = r.longestRun >= config.minConsecutiveFrames;
    return r;
}

SheddingReport sheddingScan(const data::RawRun& run, int sensorId, std::span<const double> candidatesHz,
                            const StftSpec& spec, const DetectionConfig& detection, const SensorLayout& layout)
{
    const auto channel = layout.channelOf(sensorId);
    if (!channel || *channel >= run.channels()) {
        throw ConfigError("sensor " + std::to_string(sensorId) + " is not present in the run");
    }
    StftSpec s = spec;
    s.sampleRateHz = run.meta.sampleRateHz;
    for (double f : candidatesHz) {
        if (!(f > 0.0) || f > s.sampleRateHz / 2.0) {
            throw ConfigError("candidate frequency " + fmt(f) + " Hz outside (0, Nyquist]");
        }
    }
    const std::size_t steps = run.steps();
    const double* row = run.pressures.data() + *channel * steps;
    const Spectrogram sg = stft(std::span<const double>(row, steps), s);

    SheddingReport report;
    report.sensorId = sensorId;
    for (double f : candidatesHz) report.candidates.push_back(detectBand(sg, f, detection));
    if (run.meta.excitationHz > 0.0) report.excitation = detectBand(sg, run.meta.excitationHz, detection);
    return report;
}

nlohmann::json toJson(const BandReport& b)
{
    return {{"frequency_hz", b.frequencyHz},
            {"detected", b.detected},
            {"mean_band_power", b.meanBandPower},
            {"mean_noise_power", b.meanNoisePower},
            {"mean_excess_db", b.meanExcessDb},
            {"longest_run_frames", b.longestRun},
            {"frames_above_threshold", b.framesAboveThreshold}};
}

nlohmann::json toJson(const SheddingReport& r)
{
    nlohmann::json j{{"sensor_id", r.sensorId}, {"candidates", nlohmann::json::array()}};
    for (const auto& b : r.candidates) j["candidates"].push_back(toJson(b));
    j["excitation"] = r.excitation ? toJson(*r.excitation) : nlohmann::json(nullptr);
    return j;
}

void writeSpectrogramCsv(const std::filesystem::path& path, const Spectrogram& s)
{
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw DataError("cannot write " + path.string());
    out << "time_s";
    for (double f : s.frequencies) out << ",f" << fmt(f);
    out << '\n';
    for (std::size_t f = 0; f < s.frames(); ++f) {
        out << fmt(s.frameTimes[f]);
        for (std::size_t k = 0; k < s.bins(); ++k) out << ',' << fmt(s.at(f, k));
        out << '\n';
    }
}

}  // namespace igshm::spectra
