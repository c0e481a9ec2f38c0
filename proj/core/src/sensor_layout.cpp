#include "igshm/sensor_layout.hpp"

#include "igshm/error.hpp"

#include <algorithm>
#include <string>

namespace igshm {

const SensorLayout& SensorLayout::standard()
{
    static const SensorLayout layout(kTotalSensors, std::vector<int>(kDeadSensors.begin(), kDeadSensors.end()));
    return layout;
}

SensorLayout::SensorLayout(int totalSensors, std::vector<int> deadSensors) : total_(totalSensors), dead_(std::move(deadSensors))
{
    std::sort(dead_.begin(), dead_.end());
    for (int id = 0; id < total_; ++id) {
        if (!std::binary_search(dead_.begin(), dead_.end(), id)) working_.push_back(id);
    }
}

int SensorLayout::sensorId(std::size_t channel) const
{
    if (channel >= working_.size()) throw DataError("channel " + std::to_string(channel) + " out of range");
    return working_[channel];
}

std::optional<std::size_t> SensorLayout::channelOf(int sensorId) const
{
    const auto it = std::lower_bound(working_.begin(), working_.end(), sensorId);
    if (it == working_.end() || *it != sensorId) return std::nullopt;
    return static_cast<std::size_t>(it - working_.begin());
}

bool SensorLayout::isWorking(int sensorId) const
{
    return channelOf(sensorId).has_value();
}

Surface SensorLayout::surface(int sensorId) const
{
    return sensorId <= 15 ? Surface::Suction : Surface::Pressure;
}

double SensorLayout::chordPosition(int sensorId) const
{
    if (sensorId < 0 || sensorId >= total_) throw DataError("sensor id " + std::to_string(sensorId) + " out of range");
    if (sensorId <= 15) return 1.0 - static_cast<double>(sensorId) / 15.0;
    return static_cast<double>(sensorId - 15) / static_cast<double>(total_ - 16);
}

}  // namespace igshm
