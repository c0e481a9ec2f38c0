#pragma once

#include "igshm/netcore/model.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace igshm::net {

inline constexpr std::uint32_t kCheckpointVersion = 1;

/// A model plus the context needed to use it. See docs/checkpoint_format.md
/// for the byte layout.
struct Checkpoint {
    std::string architecture;
    std::uint64_t seed = 0;
    Model model;
    nlohmann::json metadata = nlohmann::json::object();
};

std::vector<std::uint8_t> serializeCheckpoint(const Checkpoint& checkpoint);
Checkpoint deserializeCheckpoint(std::span<const std::uint8_t> bytes);

void saveCheckpoint(const Checkpoint& checkpoint, const std::filesystem::path& path);
Checkpoint loadCheckpoint(const std::filesystem::path& path);

nlohmann::json layerSpecToJson(const LayerSpec& spec);
LayerSpec layerSpecFromJson(const nlohmann::json& j);

}  // namespace igshm::net
