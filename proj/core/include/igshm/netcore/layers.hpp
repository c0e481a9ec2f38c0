#pragma once

#include "igshm/netcore/tensor.hpp"

#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace igshm::net {

using Rng = std::mt19937_64;

enum class Mode { Train, Infer };

enum class LayerKind { Conv1d, BatchNorm, Relu, GlobalAvgPool, Dense, Dropout, Softmax };

enum class Padding { Same, Valid };

std::string_view toString(LayerKind kind);
LayerKind layerKindFromString(std::string_view name);
std::string_view toString(Padding padding);
Padding paddingFromString(std::string_view name);

/// Architecture-level description of one layer. Only the fields relevant to
/// `kind` are meaningful.
struct LayerSpec {
    LayerKind kind = LayerKind::Relu;
    std::size_t filters = 0;
    std::size_t kernelSize = 0;
    Padding padding = Padding::Same;
    std::size_t units = 0;
    double rate = 0.0;
    double momentum = 0.99;
    double epsilon = 1e-3;

    static LayerSpec conv1d(std::size_t filters, std::size_t kernelSize, Padding padding = Padding::Same);
    static LayerSpec batchNorm(double momentum = 0.99, double epsilon = 1e-3);
    static LayerSpec relu();
    static LayerSpec globalAvgPool();
    static LayerSpec dense(std::size_t units);
    static LayerSpec dropout(double rate);
    static LayerSpec softmax();

    /// Throws ConfigError when the kind-specific parameters are out of range.
    void validate() const;

    friend bool operator==(const LayerSpec&, const LayerSpec&) = default;
};

/// Values a layer keeps from forward for use in backward.
struct LayerCache {
    Mode mode = Mode::Infer;
    Tensor input;
    Tensor aux;
    std::vector<double> stats;
};

/// 1-D convolution over the time axis of [C, T] samples, stride 1.
/// Weights are stored as [filters, inChannels * kernel] with the kernel tap
/// as the fastest index.
struct Conv1d {
    LayerSpec spec;
    std::size_t inChannels = 0;
    Tensor weight;
    Tensor bias;

    Conv1d(const LayerSpec& spec, const Shape& inputShape);
    Shape outputShape(const Shape& inputShape) const;
    std::size_t padLeft() const;
    Tensor forward(const Tensor& x, Mode mode, LayerCache& cache, Rng& rng) const;
    Tensor backward(const Tensor& dy, const LayerCache& cache, std::span<Tensor> grads) const;
    void initialize(Rng& rng);
    std::vector<Tensor*> parameters() { return {&weight, &bias}; }
    std::vector<const Tensor*> parameters() const { return {&weight, &bias}; }
    std::vector<Tensor*> buffers() { return {}; }
    std::vector<const Tensor*> buffers() const { return {}; }
};

/// Per-channel normalization. Channels are the leading per-sample axis; a
/// trailing time axis, when present, is pooled together with the batch.
struct BatchNorm {
    LayerSpec spec;
    std::size_t channels = 0;
    std::size_t spatial = 1;
    Tensor gamma;
    Tensor beta;
    Tensor runningMean;
    Tensor runningVar;

    BatchNorm(const LayerSpec& spec, const Shape& inputShape);
    Shape outputShape(const Shape& inputShape) const { return inputShape; }
    Tensor forward(const Tensor& x, Mode mode, LayerCache& cache, Rng& rng) const;
    Tensor backward(const Tensor& dy, const LayerCache& cache, std::span<Tensor> grads) const;
    /// Folds the batch statistics recorded by a train-mode forward into the
    /// running estimates.
    void updateRunningStatistics(const LayerCache& cache);
    void initialize(Rng& rng);
    std::vector<Tensor*> parameters() { return {&gamma, &beta}; }
    std::vector<const Tensor*> parameters() const { return {&gamma, &beta}; }
    std::vector<Tensor*> buffers() { return {&runningMean, &runningVar}; }
    std::vector<const Tensor*> buffers() const { return {&runningMean, &runningVar}; }
};

struct Relu {
    LayerSpec spec;

    Relu(const LayerSpec& spec, const Shape&) : spec(spec) {}
    Shape outputShape(const Shape& inputShape) const { return inputShape; }
    Tensor forward(const Tensor& x, Mode mode, LayerCache& cache, Rng& rng) const;
    Tensor backward(const Tensor& dy, const LayerCache& cache, std::span<Tensor> grads) const;
    void initialize(Rng&) {}
    std::vector<Tensor*> parameters() { return {}; }
    std::vector<const Tensor*> parameters() const { return {}; }
    std::vector<Tensor*> buffers() { return {}; }
    std::vector<const Tensor*> buffers() const { return {}; }
};

/// [C, T] -> [C], mean over time.
struct GlobalAvgPool {
    LayerSpec spec;
    std::size_t steps = 0;

    GlobalAvgPool(const LayerSpec& spec, const Shape& inputShape);
    Shape outputShape(const Shape& inputShape) const { return {inputShape.at(0)}; }
    Tensor forward(const Tensor& x, Mode mode, LayerCache& cache, Rng& rng) const;
    Tensor backward(const Tensor& dy, const LayerCache& cache, std::span<Tensor> grads) const;
    void initialize(Rng&) {}
    std::vector<Tensor*> parameters() { return {}; }
    std::vector<const Tensor*> parameters() const { return {}; }
    std::vector<Tensor*> buffers() { return {}; }
    std::vector<const Tensor*> buffers() const { return {}; }
};

/// Fully connected layer over the flattened per-sample input; weight is [units, in].
struct Dense {
    LayerSpec spec;
    std::size_t inFeatures = 0;
    Tensor weight;
    Tensor bias;

    Dense(const LayerSpec& spec, const Shape& inputShape);
    Shape outputShape(const Shape&) const { return {spec.units}; }
    Tensor forward(const Tensor& x, Mode mode, LayerCache& cache, Rng& rng) const;
    Tensor backward(const Tensor& dy, const LayerCache& cache, std::span<Tensor> grads) const;
    void initialize(Rng& rng);
    std::vector<Tensor*> parameters() { return {&weight, &bias}; }
    std::vector<const Tensor*> parameters() const { return {&weight, &bias}; }
    std::vector<Tensor*> buffers() { return {}; }
    std::vector<const Tensor*> buffers() const { return {}; }
};

/// Inverted dropout: scaled by 1/(1-rate) in train mode, identity in infer mode.
struct Dropout {
    LayerSpec spec;

    Dropout(const LayerSpec& spec, const Shape&) : spec(spec) {}
    Shape outputShape(const Shape& inputShape) const { return inputShape; }
    Tensor forward(const Tensor& x, Mode mode, LayerCache& cache, Rng& rng) const;
    Tensor backward(const Tensor& dy, const LayerCache& cache, std::span<Tensor> grads) const;
    void initialize(Rng&) {}
    std::vector<Tensor*> parameters() { return {}; }
    std::vector<const Tensor*> parameters() const { return {}; }
    std::vector<Tensor*> buffers() { return {}; }
    std::vector<const Tensor*> buffers() const { return {}; }
};

struct Softmax {
    LayerSpec spec;

    Softmax(const LayerSpec& spec, const Shape& inputShape);
    Shape outputShape(const Shape& inputShape) const { return inputShape; }
    Tensor forward(const Tensor& x, Mode mode, LayerCache& cache, Rng& rng) const;
    Tensor backward(const Tensor& dy, const LayerCache& cache, std::span<Tensor> grads) const;
    void initialize(Rng&) {}
    std::vector<Tensor*> parameters() { return {}; }
    std::vector<const Tensor*> parameters() const { return {}; }
    std::vector<Tensor*> buffers() { return {}; }
    std::vector<const Tensor*> buffers() const { return {}; }
};

using Layer = std::variant<Conv1d, BatchNorm, Relu, GlobalAvgPool, Dense, Dropout, Softmax>;

Layer makeLayer(const LayerSpec& spec, const Shape& inputShape);

/// Row-wise softmax of a [N, K] tensor.
Tensor softmaxRows(const Tensor& logits);

}  // namespace igshm::net
