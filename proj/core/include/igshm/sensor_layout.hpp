#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace igshm {

enum class Surface { Suction, Pressure };

/// Maps contiguous channel indices onto the physical barometer ids of the
/// instrumented section. Ids 0-15 run along the suction side from the trailing
/// edge to the leading edge (id 15); ids 16-39 return along the pressure side.
/// Three sensors are dead and carry no channel.
class SensorLayout {
public:
    static constexpr int kTotalSensors = 40;
    static constexpr std::array<int, 3> kDeadSensors{20, 29, 36};

    /// The 40-sensor layout with the dead sensors above.
    static const SensorLayout& standard();

    SensorLayout(int totalSensors, std::vector<int> deadSensors);

    std::size_t channelCount() const noexcept { return working_.size(); }
    int totalSensors() const noexcept { return total_; }
    int sensorId(std::size_t channel) const;
    std::optional<std::size_t> channelOf(int sensorId) const;
    bool isWorking(int sensorId) const;
    std::span<const int> workingSensorIds() const noexcept { return working_; }
    std::span<const int> deadSensorIds() const noexcept { return dead_; }

    /// Chordwise position x/c in [0, 1] (0 = leading edge).
    double chordPosition(int sensorId) const;
    Surface surface(int sensorId) const;

private:
    int total_;
    std::vector<int> dead_;
    std::vector<int> working_;
};

}  // namespace igshm
