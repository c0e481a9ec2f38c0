#pragma once

#include "igshm/netcore/layers.hpp"
#include "igshm/netcore/tensor.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace igshm::net {

/// Which scalar of the network output a gradient is taken of.
enum class OutputKind {
    Logit,        ///< pre-softmax score of the target class
    Probability,  ///< post-softmax probability of the target class
};

std::string_view toString(OutputKind kind);
OutputKind outputKindFromString(std::string_view name);

/// Everything forward recorded for one batch.
struct ForwardTrace {
    Mode mode = Mode::Infer;
    std::vector<LayerCache> caches;
    Tensor logits;
    Tensor output;
};

struct GradientBundle {
    std::vector<Tensor> parameters;  ///< aligned with Model::parameters()
    Tensor input;                    ///< same shape as the forward input
};

/// Sequential stack of layers with a fixed per-sample input shape.
///
/// The stack is a value type: copies are deep and independent. Inference and
/// gradient queries are const and can be issued concurrently on a shared
/// instance; training mutates weights and batchnorm statistics.
class Model {
public:
    Model() = default;
    Model(Shape inputShape, std::vector<LayerSpec> specs);

    /// Re-initializes every weight from `seed`.
    void initialize(std::uint64_t seed);

    const Shape& inputShape() const noexcept { return inputShape_; }
    const std::vector<LayerSpec>& specs() const noexcept { return specs_; }
    const std::vector<Layer>& layers() const noexcept { return layers_; }
    std::vector<Layer>& layers() noexcept { return layers_; }
    std::size_t outputSize() const noexcept { return outputSize_; }
    bool endsWithSoftmax() const noexcept;

    /// Output of the final layer for a batch [N, inputShape...].
    Tensor forward(const Tensor& batch, Mode mode = Mode::Infer, Rng* rng = nullptr) const;
    /// Pre-softmax scores (the output itself when the stack has no softmax).
    Tensor logits(const Tensor& batch) const;
    ForwardTrace trace(const Tensor& batch, Mode mode, Rng* rng = nullptr) const;

    /// Backpropagates `seed`, a gradient with respect to the logits or the
    /// output, through the recorded trace.
    GradientBundle backward(const ForwardTrace& trace, const Tensor& seed, OutputKind seedAt,
                            bool parameterGradients) const;

    /// d(score of `targetClass`)/d(input) and parameter gradients for a single
    /// sample, evaluated in infer mode.
    GradientBundle gradient(const Tensor& sample, std::size_t targetClass, OutputKind kind) const;

    /// Per-sample input gradients of each sample's own target score, infer mode.
    Tensor inputGradients(const Tensor& batch, std::span<const std::size_t> targets, OutputKind kind) const;

    /// Applies the batch statistics of a train-mode trace to every batchnorm layer.
    void updateRunningStatistics(const ForwardTrace& trace);

    std::vector<Tensor*> parameters();
    std::vector<const Tensor*> parameters() const;
    std::vector<Tensor*> buffers();
    std::vector<const Tensor*> buffers() const;
    std::size_t parameterCount() const;

private:
    std::size_t logitLayerCount() const noexcept;
    void checkInput(const Tensor& batch) const;

    Shape inputShape_;
    std::vector<LayerSpec> specs_;
    std::vector<Layer> layers_;
    std::size_t outputSize_ = 0;
};

}  // namespace igshm::net
