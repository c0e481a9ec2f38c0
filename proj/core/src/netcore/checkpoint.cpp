#include "igshm/netcore/checkpoint.hpp"

#include "igshm/error.hpp"
#include "igshm/io/binary.hpp"

#include <cstring>
#include <fstream>
#include <iterator>

namespace igshm::net {
namespace {

constexpr char kMagic[8] = {'I', 'G', 'S', 'H', 'M', 'C', 'K', 'P'};
constexpr std::size_t kPreambleSize = 24;

std::vector<std::pair<std::string, const Tensor*>> namedTensors(const Model& model)
{
    std::vector<std::pair<std::string, const Tensor*>> out;
    for (std::size_t i = 0; i < model.layers().size(); ++i) {
        const std::string prefix = "layers." + std::to_string(i) + ".";
        std::visit(
            [&](const auto& layer) {
                using L = std::decay_t<decltype(layer)>;
                if constexpr (std::is_same_v<L, Conv1d> || std::is_same_v<L, Dense>) {
                    out.emplace_back(prefix + "weight", &layer.weight);
                    out.emplace_back(prefix + "bias", &layer.bias);
                } else if constexpr (std::is_same_v<L, BatchNorm>) {
                    out.emplace_back(prefix + "gamma", &layer.gamma);
                    out.emplace_back(prefix + "beta", &layer.beta);
                    out.emplace_back(prefix + "running_mean", &layer.runningMean);
                    out.emplace_back(prefix + "running_var", &layer.runningVar);
                }
            },
            model.layers()[i]);
    }
    return out;
}

std::vector<std::pair<std::string, Tensor*>> namedTensors(Model& model)
{
    std::vector<std::pair<std::string, Tensor*>> out;
    const auto constList = namedTensors(static_cast<const Model&>(model));
    out.reserve(constList.size());
    for (const auto& [name, ptr] : constList) out.emplace_back(name, const_cast<Tensor*>(ptr));
    return out;
}

}  // namespace

nlohmann::json layerSpecToJson(const LayerSpec& spec)
{
    nlohmann::json j;
    j["kind"] = std::string(toString(spec.kind));
    switch (spec.kind) {
    case LayerKind::Conv1d:
        j["filters"] = spec.filters;
        j["kernel_size"] = spec.kernelSize;
        j["padding"] = std::string(toString(spec.padding));
        break;
    case LayerKind::Dense: j["units"] = spec.units; break;
    case LayerKind::Dropout: j["rate"] = spec.rate; break;
    case LayerKind::BatchNorm:
        j["momentum"] = spec.momentum;
        j["epsilon"] = spec.epsilon;
        break;
    default: break;
    }
    return j;
}

LayerSpec layerSpecFromJson(const nlohmann::json& j)
{
    try {
        LayerSpec spec;
        spec.kind = layerKindFromString(j.at("kind").get<std::string>());
        switch (spec.kind) {
        case LayerKind::Conv1d:
            spec.filters = j.at("filters").get<std::size_t>();
            spec.kernelSize = j.at("kernel_size").get<std::size_t>();
            spec.padding = paddingFromString(j.value("padding", std::string("same")));
            break;
        case LayerKind::Dense: spec.units = j.at("units").get<std::size_t>(); break;
        case LayerKind::Dropout: spec.rate = j.at("rate").get<double>(); break;
        case LayerKind::BatchNorm:
            spec.momentum = j.at("momentum").get<double>();
            spec.epsilon = j.at("epsilon").get<double>();
            break;
        default: break;
        }
        spec.validate();
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed layer description: ") + e.what());
    }
}

std::vector<std::uint8_t> serializeCheckpoint(const Checkpoint& checkpoint)
{
    const Model& model = checkpoint.model;
    nlohmann::json header;
    header["format"] = "igshm-checkpoint";
    header["version"] = kCheckpointVersion;
    header["architecture"] = checkpoint.architecture;
    header["seed"] = checkpoint.seed;
    header["input_shape"] = model.inputShape();
    header["layers"] = nlohmann::json::array();
    for (const LayerSpec& spec : model.specs()) header["layers"].push_back(layerSpecToJson(spec));
    header["metadata"] = checkpoint.metadata;

    std::size_t offset = 0;
    header["tensors"] = nlohmann::json::array();
    const auto tensors = namedTensors(model);
    for (const auto& [name, tensor] : tensors) {
        header["tensors"].push_back({{"name", name}, {"shape", tensor->shape()}, {"offset", offset}});
        offset += tensor->size() * sizeof(double);
    }
    const std::string text = header.dump();

    std::vector<std::uint8_t> bytes;
    bytes.reserve(kPreambleSize + text.size() + offset);
    bytes.insert(bytes.end(), std::begin(kMagic), std::end(kMagic));
    io::appendU32(bytes, kCheckpointVersion);
    io::appendU32(bytes, 0);
    io::appendU64(bytes, text.size());
    bytes.insert(bytes.end(), text.begin(), text.end());
    for (const auto& [name, tensor] : tensors) io::appendF64(bytes, tensor->values());
    return bytes;
}

Checkpoint deserializeCheckpoint(std::span<const std::uint8_t> bytes)
{
    if (bytes.size() < kPreambleSize || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
        throw DataError("not an igshm checkpoint (bad magic)");
    }
    const std::uint32_t version = io::readU32(bytes.subspan(8, 4));
    if (version != kCheckpointVersion) {
        throw DataError("unsupported checkpoint version " + std::to_string(version));
    }
    const std::uint64_t headerSize = io::readU64(bytes.subspan(16, 8));
    if (bytes.size() < kPreambleSize + headerSize) throw DataError("truncated checkpoint header");

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(bytes.begin() + kPreambleSize,
                                       bytes.begin() + static_cast<std::ptrdiff_t>(kPreambleSize + headerSize));
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("checkpoint header is not valid JSON: ") + e.what());
    }

    Checkpoint out;
    try {
        out.architecture = header.at("architecture").get<std::string>();
        out.seed = header.at("seed").get<std::uint64_t>();
        out.metadata = header.value("metadata", nlohmann::json::object());
        std::vector<LayerSpec> specs;
        for (const auto& j : header.at("layers")) specs.push_back(layerSpecFromJson(j));
        out.model = Model(header.at("input_shape").get<Shape>(), std::move(specs));

        const auto payload = bytes.subspan(kPreambleSize + headerSize);
        auto tensors = namedTensors(out.model);
        const auto& listed = header.at("tensors");
        if (listed.size() != tensors.size()) throw DataError("checkpoint tensor list does not match its layers");
        for (std::size_t i = 0; i < tensors.size(); ++i) {
            const auto& entry = listed[i];
            auto& [name, tensor] = tensors[i];
            if (entry.at("name").get<std::string>() != name || entry.at("shape").get<Shape>() != tensor->shape()) {
                throw DataError("checkpoint tensor '" + entry.at("name").get<std::string>() + "' does not match " + name);
            }
            const std::size_t offset = entry.at("offset").get<std::size_t>();
            const std::size_t length = tensor->size() * sizeof(double);
            if (offset + length > payload.size()) throw DataError("truncated checkpoint payload at " + name);
            io::readF64(payload.subspan(offset, length), tensor->values());
            if (!tensor->allFinite()) throw DataError("checkpoint tensor " + name + " holds non-finite values");
        }
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("malformed checkpoint header: ") + e.what());
    }
    return out;
}

void saveCheckpoint(const Checkpoint& checkpoint, const std::filesystem::path& path)
{
    io::writeFile(path, serializeCheckpoint(checkpoint));
}

Checkpoint loadCheckpoint(const std::filesystem::path& path)
{
    const std::vector<std::uint8_t> bytes = io::readFile(path);
    return deserializeCheckpoint(bytes);
}

}  // namespace igshm::net
