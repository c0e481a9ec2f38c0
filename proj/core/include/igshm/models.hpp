#pragma once

#include "igshm/netcore/model.hpp"

#include <array>
#include <cstddef>
#include <string_view>

namespace igshm::models {

inline constexpr std::string_view kCnnName = "fcn-cnn";
inline constexpr std::string_view kMlpName = "mean-mlp";
inline constexpr std::size_t kNumClasses = 6;

/// Fully convolutional classifier: three conv-batchnorm-relu blocks, global
/// average pooling, dense head with softmax.
struct CnnArch {
    std::array<std::size_t, 3> filters{128, 256, 128};
    std::array<std::size_t, 3> kernels{8, 5, 3};
    std::size_t classes = kNumClasses;

    /// Filters divided by `divisor` (at least one each); kernels unchanged.
    CnnArch narrowed(std::size_t divisor) const;
};

/// Mean-vector classifier: dense 128/128/64 with batchnorm+relu, dropout 0.2
/// on the input and 0.4 after the first two hidden blocks, dense 6 + softmax.
struct MlpArch {
    std::array<std::size_t, 3> hidden{128, 128, 64};
    double inputDropout = 0.2;
    double hiddenDropout = 0.4;
    std::size_t classes = kNumClasses;
};

net::Model buildCnn(std::size_t inputChannels = 37, std::size_t inputSteps = 150, const CnnArch& arch = {});
net::Model buildMlp(std::size_t inputDim = 37, const MlpArch& arch = {});

/// Trainable parameter count of buildCnn(channels, steps, arch) from the layer formulas.
std::size_t cnnParameterCount(std::size_t inputChannels, const CnnArch& arch = {});

}  // namespace igshm::models
