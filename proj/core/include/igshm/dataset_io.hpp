#pragma once

#include "igshm/preprocessing.hpp"
#include "igshm/sensor_layout.hpp"

#include <filesystem>
#include <string>
#include <vector>

/// On-disk run layout (see docs/dataset_format.md):
///
///   <root>/ts<S>_d<D>_r<R>/meta.json      run metadata + channel list
///   <root>/ts<S>_d<D>_r<R>/pressure.f64   little-endian f64, channel-major
namespace igshm::data {

inline constexpr const char* kMetaFile = "meta.json";
inline constexpr const char* kPressureFile = "pressure.f64";

std::string runDirName(const RunMeta& meta);

void writeRun(const std::filesystem::path& dir, const RawRun& run, const SensorLayout& layout = SensorLayout::standard());

/// Reads a run directory. Channels of dead sensors are dropped; a missing
/// working sensor, a non-finite value or a size mismatch is a DataError.
RawRun readRun(const std::filesystem::path& dir, const SensorLayout& layout = SensorLayout::standard());

/// Run directories below `root`, sorted by name.
std::vector<std::filesystem::path> listRuns(const std::filesystem::path& root);

/// CSV with one column per sensor (header "s<id>" or "<id>", an optional
/// leading "time" column) and one row per time step.
void writeCsvRun(const std::filesystem::path& csv, const RawRun& run, const SensorLayout& layout = SensorLayout::standard());
RawRun readCsvRun(const std::filesystem::path& csv, const RunMeta& meta,
                  const SensorLayout& layout = SensorLayout::standard());

/// Loads every run under `root` whose AoA matches (all runs when aoaDeg is empty).
std::vector<RawRun> loadRuns(const std::filesystem::path& root, std::optional<double> aoaDeg = std::nullopt,
                             const SensorLayout& layout = SensorLayout::standard());

}  // namespace igshm::data
