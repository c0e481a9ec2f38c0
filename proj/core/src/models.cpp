#include "igshm/models.hpp"

#include "igshm/error.hpp"

#include <algorithm>

namespace igshm::models {

using net::LayerSpec;

CnnArch CnnArch::narrowed(std::size_t divisor) const
{
    if (divisor == 0) throw ConfigError("width divisor must be positive");
    CnnArch out = *this;
    for (auto& f : out.filters) f = std::max<std::size_t>(1, f / divisor);
    return out;
}

net::Model buildCnn(std::size_t inputChannels, std::size_t inputSteps, const CnnArch& arch)
{
    if (inputChannels < 1) throw ConfigError("fcn-cnn needs at least one input channel");
    const std::size_t longest = *std::max_element(arch.kernels.begin(), arch.kernels.end());
    if (inputSteps < longest) {
        throw ConfigError("fcn-cnn needs at least " + std::to_string(longest) + " time steps, got " +
                          std::to_string(inputSteps));
    }
    std::vector<LayerSpec> specs;
    for (std::size_t b = 0; b < arch.filters.size(); ++b) {
        specs.push_back(LayerSpec::conv1d(arch.filters[b], arch.kernels[b], net::Padding::Same));
        specs.push_back(LayerSpec::batchNorm());
        specs.push_back(LayerSpec::relu());
    }
    specs.push_back(LayerSpec::globalAvgPool());
    specs.push_back(LayerSpec::dense(arch.classes));
    specs.push_back(LayerSpec::softmax());
    return net::Model({inputChannels, inputSteps}, std::move(specs));
}

net::Model buildMlp(std::size_t inputDim, const MlpArch& arch)
{
    if (inputDim < 1) throw ConfigError("mean-mlp needs a positive input dimension");
    std::vector<LayerSpec> specs;
    specs.push_back(LayerSpec::dropout(arch.inputDropout));
    for (std::size_t h = 0; h < arch.hidden.size(); ++h) {
        specs.push_back(LayerSpec::dense(arch.hidden[h]));
        specs.push_back(LayerSpec::batchNorm());
        specs.push_back(LayerSpec::relu());
        if (h + 1 < arch.hidden.size()) specs.push_back(LayerSpec::dropout(arch.hiddenDropout));
    }
    specs.push_back(LayerSpec::dense(arch.classes));
    specs.push_back(LayerSpec::softmax());
    return net::Model({inputDim}, std::move(specs));
}

std::size_t cnnParameterCount(std::size_t inputChannels, const CnnArch& arch)
{
    std::size_t total = 0;
    std::size_t in = inputChannels;
    for (std::size_t b = 0; b < 3; ++b) {
        total += arch.filters[b] * in * arch.kernels[b] + arch.filters[b];  // conv weight + bias
        total += 2 * arch.filters[b];                                      // batchnorm gamma + beta
        in = arch.filters[b];
    }
    return total + in * arch.classes + arch.classes;
}

}  // namespace igshm::models
