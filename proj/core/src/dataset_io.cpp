#include "igshm/dataset_io.hpp"

#include "igshm/error.hpp"
#include "igshm/io/binary.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <sstream>

namespace igshm::data {
namespace fs = std::filesystem;

namespace {

// Selects the working-sensor rows out of a [stored, steps] block and validates values.
net::Tensor selectChannels(const std::vector<int>& storedIds, std::span<const double> values, std::size_t steps,
                           const SensorLayout& layout, const std::string& source)
{
    std::map<int, std::size_t> rowOf;
    for (std::size_t r = 0; r < storedIds.size(); ++r) {
        if (!rowOf.emplace(storedIds[r], r).second) {
            throw DataError(source + ": sensor " + std::to_string(storedIds[r]) + " appears twice");
        }
    }
    net::Tensor out({layout.channelCount(), steps});
    for (std::size_t c = 0; c < layout.channelCount(); ++c) {
        const int id = layout.sensorId(c);
        const auto it = rowOf.find(id);
        if (it == rowOf.end()) throw DataError(source + ": missing sensor " + std::to_string(id));
        const double* src = values.data() + it->second * steps;
        for (std::size_t t = 0; t < steps; ++t) {
            if (!std::isfinite(src[t])) {
                throw DataError(source + ": non-finite value at sensor " + std::to_string(id) + ", step " +
                                std::to_string(t));
            }
        }
        std::copy(src, src + steps, out.data() + c * steps);
    }
    return out;
}

std::string formatDouble(double v)
{
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

}  // namespace

std::string runDirName(const RunMeta& meta)
{
    return "ts" + std::to_string(meta.testSeries) + "_d" + std::to_string(meta.damageClass) + "_r" +
           std::to_string(meta.runIndex);
}

void writeRun(const fs::path& dir, const RawRun& run, const SensorLayout& layout)
{
    if (run.channels() != layout.channelCount()) {
        throw DataError("run has " + std::to_string(run.channels()) + " channels, layout expects " +
                        std::to_string(layout.channelCount()));
    }
    nlohmann::json meta = toJson(run.meta);
    meta["channels"] = run.channels();
    meta["steps"] = run.steps();
    meta["sensor_ids"] = std::vector<int>(layout.workingSensorIds().begin(), layout.workingSensorIds().end());
    meta["layout"] = "f64le-channel-major";
    meta["data_file"] = kPressureFile;
    fs::create_directories(dir);
    io::writeTextFile(dir / kMetaFile, meta.dump(2) + "\n");
    std::vector<std::uint8_t> bytes;
    io::appendF64(bytes, run.pressures.values());
    io::writeFile(dir / kPressureFile, bytes);
}

RawRun readRun(const fs::path& dir, const SensorLayout& layout)
{
    const fs::path metaPath = dir / kMetaFile;
    if (!fs::exists(metaPath)) throw DataError(dir.string() + ": missing " + kMetaFile);
    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(io::readTextFile(metaPath));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(metaPath.string() + ": " + e.what());
    }
    RawRun run;
    run.meta = runMetaFromJson(meta);
    std::vector<int> ids;
    std::size_t steps = 0;
    try {
        ids = meta.at("sensor_ids").get<std::vector<int>>();
        steps = meta.at("steps").get<std::size_t>();
        if (meta.value("layout", std::string("f64le-channel-major")) != "f64le-channel-major") {
            throw DataError(metaPath.string() + ": unsupported layout");
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(metaPath.string() + ": " + e.what());
    }
    const std::vector<std::uint8_t> bytes = io::readFile(dir / meta.value("data_file", std::string(kPressureFile)));
    if (bytes.size() != ids.size() * steps * sizeof(double)) {
        throw DataError(dir.string() + ": data file holds " + std::to_string(bytes.size()) + " bytes, expected " +
                        std::to_string(ids.size() * steps * sizeof(double)));
    }
    std::vector<double> values(ids.size() * steps);
    io::readF64(bytes, values);
    run.pressures = selectChannels(ids, values, steps, layout, dir.string());
    return run;
}

std::vector<fs::path> listRuns(const fs::path& root)
{
    if (!fs::is_directory(root)) throw DataError("dataset directory " + root.string() + " does not exist");
    std::vector<fs::path> out;
    for (const auto& entry : fs::directory_iterator(root)) {
        if (entry.is_directory() && fs::exists(entry.path() / kMetaFile)) out.push_back(entry.path());
    }
    std::sort(out.begin(), out.end());
    return out;
}

void writeCsvRun(const fs::path& csv, const RawRun& run, const SensorLayout& layout)
{
    if (csv.has_parent_path()) fs::create_directories(csv.parent_path());
    std::ofstream out(csv, std::ios::trunc);
    if (!out) throw DataError("cannot write " + csv.string());
    for (std::size_t c = 0; c < run.channels(); ++c) {
        out << (c ? "," : "") << 's' << layout.sensorId(c);
    }
    out << '\n';
    for (std::size_t t = 0; t < run.steps(); ++t) {
        for (std::size_t c = 0; c < run.channels(); ++c) {
            out << (c ? "," : "") << formatDouble(run.pressures.at(c, t));
        }
        out << '\n';
    }
}

RawRun readCsvRun(const fs::path& csv, const RunMeta& meta, const SensorLayout& layout)
{
    std::ifstream in(csv);
    if (!in) throw DataError("cannot open " + csv.string());
    std::string line;
    if (!std::getline(in, line)) throw DataError(csv.string() + ": empty file");

    std::vector<int> ids;
    bool hasTime = false;
    {
        std::stringstream ss(line);
        std::string cell;
        std::size_t col = 0;
        while (std::getline(ss, cell, ',')) {
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
            if (col == 0 && (cell == "time" || cell == "t")) {
                hasTime = true;
            } else {
                std::string digits = (!cell.empty() && (cell[0] == 's' || cell[0] == 'S')) ? cell.substr(1) : cell;
                int id = -1;
                const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), id);
                if (res.ec != std::errc() || res.ptr != digits.data() + digits.size()) {
                    throw DataError(csv.string() + ": cannot parse sensor id from header '" + cell + "'");
                }
                ids.push_back(id);
            }
            ++col;
        }
    }

    std::vector<std::vector<double>> columns(ids.size());
    std::size_t row = 0;
    while (std::getline(in, line)) {
        if (line.empty() || line == "\r") continue;
        ++row;
        std::size_t start = 0;
        std::size_t col = 0;
        const std::size_t expected = ids.size() + (hasTime ? 1 : 0);
        while (start <= line.size()) {
            std::size_t end = line.find(',', start);
            if (end == std::string::npos) end = line.size();
            if (col >= expected) throw DataError(csv.string() + ": too many values on line " + std::to_string(row + 1));
            std::string_view cell(line.data() + start, end - start);
            while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.remove_suffix(1);
            double v = 0.0;
            const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
            if (res.ec != std::errc() && cell != "nan" && cell != "NaN") {
                throw DataError(csv.string() + ": cannot parse '" + std::string(cell) + "' on line " +
                                std::to_string(row + 1));
            }
            if (res.ec != std::errc()) v = std::nan("");
            if (!hasTime || col > 0) columns[col - (hasTime ? 1 : 0)].push_back(v);
            ++col;
            start = end + 1;
        }
        if (col != expected) throw DataError(csv.string() + ": too few values on line " + std::to_string(row + 1));
    }
    if (row == 0) throw DataError(csv.string() + ": no data rows");

    std::vector<double> values;
    values.reserve(ids.size() * row);
    for (const auto& c : columns) values.insert(values.end(), c.begin(), c.end());
    RawRun run;
    run.meta = meta;
    run.pressures = selectChannels(ids, values, row, layout, csv.string());
    return run;
}

std::vector<RawRun> loadRuns(const fs::path& root, std::optional<double> aoaDeg, const SensorLayout& layout)
{
    std::vector<RawRun> runs;
    for (const fs::path& dir : listRuns(root)) {
        RawRun run = readRun(dir, layout);
        if (!aoaDeg || run.meta.aoaDeg == *aoaDeg) runs.push_back(std::move(run));
    }
    if (runs.empty()) throw DataError("no runs found under " + root.string());
    return runs;
}

}  // namespace igshm::data
