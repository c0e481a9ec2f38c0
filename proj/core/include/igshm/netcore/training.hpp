#pragma once

#include "igshm/netcore/model.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace igshm::net {

struct AdamWConfig {
    double learningRate = 1e-3;
    double weightDecay = 1e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
};

/// Adam with decoupled weight decay. Moment estimates are created lazily on
/// the first step and must stay aligned with the parameter list.
class AdamW {
public:
    explicit AdamW(AdamWConfig config = {});

    void step(std::span<Tensor* const> parameters, std::span<const Tensor> gradients);

    double learningRate() const noexcept { return config_.learningRate; }
    void setLearningRate(double lr) noexcept { config_.learningRate = lr; }
    const AdamWConfig& config() const noexcept { return config_; }
    std::uint64_t stepCount() const noexcept { return t_; }

private:
    AdamWConfig config_;
    std::uint64_t t_ = 0;
    std::vector<Tensor> m_;
    std::vector<Tensor> v_;
};

/// (1 - smoothing) * onehot + smoothing / classes.
std::vector<double> smoothedTarget(std::size_t label, std::size_t classes, double smoothing);

struct LossAndGradient {
    double loss = 0.0;     ///< mean over the batch
    Tensor logitGradient;  ///< d(mean loss)/d(logits), [N, K]
};

/// Label-smoothed categorical cross-entropy evaluated from logits [N, K].
LossAndGradient smoothedCrossEntropy(const Tensor& logits, std::span<const std::size_t> labels, double smoothing);

/// One optimizer update on a batch; returns the mean batch loss before the update.
double trainStep(Model& model, const Tensor& batch, std::span<const std::size_t> labels, AdamW& optimizer, Rng& rng,
                 double labelSmoothing);

}  // namespace igshm::net
