#include "igshm/netcore/training.hpp"

#include "igshm/error.hpp"

#include <algorithm>
#include <cmath>

namespace igshm::net {

AdamW::AdamW(AdamWConfig config) : config_(config)
{
    if (!(config_.learningRate >= 0.0)) throw ConfigError("learning rate must be non-negative");
    if (!(config_.weightDecay >= 0.0)) throw ConfigError("weight decay must be non-negative");
}

void AdamW::step(std::span<Tensor* const> parameters, std::span<const Tensor> gradients)
{
    if (parameters.size() != gradients.size()) throw ShapeError("parameter and gradient lists differ in length");
    if (m_.empty()) {
        for (const Tensor* p : parameters) {
            m_.emplace_back(p->shape());
            v_.emplace_back(p->shape());
        }
    }
    if (m_.size() != parameters.size()) throw ShapeError("optimizer state does not match the parameter list");

    ++t_;
    const double lr = config_.learningRate;
    const double b1 = config_.beta1;
    const double b2 = config_.beta2;
    const double c1 = 1.0 - std::pow(b1, static_cast<double>(t_));
    const double c2 = 1.0 - std::pow(b2, static_cast<double>(t_));
    for (std::size_t i = 0; i < parameters.size(); ++i) {
        Tensor& w = *parameters[i];
        const Tensor& g = gradients[i];
        if (g.size() != w.size()) throw ShapeError("gradient shape does not match its parameter");
        Tensor& m = m_[i];
        Tensor& v = v_[i];
        for (std::size_t j = 0; j < w.size(); ++j) {
            m[j] = b1 * m[j] + (1.0 - b1) * g[j];
            v[j] = b2 * v[j] + (1.0 - b2) * g[j] * g[j];
            w[j] -= lr * config_.weightDecay * w[j];
            w[j] -= lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + config_.epsilon);
        }
    }
}

std::vector<double> smoothedTarget(std::size_t label, std::size_t classes, double smoothing)
{
    if (label >= classes) throw DataError("label " + std::to_string(label) + " outside [0, " + std::to_string(classes) + ")");
    std::vector<double> y(classes, smoothing / static_cast<double>(classes));
    y[label] += 1.0 - smoothing;
    return y;
}

LossAndGradient smoothedCrossEntropy(const Tensor& logits, std::span<const std::size_t> labels, double smoothing)
{
    if (logits.rank() != 2 || logits.dim(0) != labels.size()) throw ShapeError("logits must be [N, K] with N labels");
    const std::size_t n = logits.dim(0);
    const std::size_t k = logits.dim(1);
    const Tensor p = softmaxRows(logits);
    LossAndGradient out;
    out.logitGradient = Tensor({n, k});
    double total = 0.0;
    for (std::size_t r = 0; r < n; ++r) {
        const std::vector<double> y = smoothedTarget(labels[r], k, smoothing);
        const double* z = logits.data() + r * k;
        const double peak = *std::max_element(z, z + k);
        double sum = 0.0;
        for (std::size_t j = 0; j < k; ++j) sum += std::exp(z[j] - peak);
        const double logNorm = peak + std::log(sum);
        for (std::size_t j = 0; j < k; ++j) {
            total -= y[j] * (z[j] - logNorm);
            out.logitGradient.at(r, j) = (p.at(r, j) - y[j]) / static_cast<double>(n);
        }
    }
    out.loss = total / static_cast<double>(n);
    if (!std::isfinite(out.loss)) throw NumericError("non-finite training loss");
    return out;
}

double trainStep(Model& model, const Tensor& batch, std::span<const std::size_t> labels, AdamW& optimizer, Rng& rng,
                 double labelSmoothing)
{
    if (labels.empty()) throw DataError("training batch is empty");
    const ForwardTrace trace = model.trace(batch, Mode::Train, &rng);
    const LossAndGradient lg = smoothedCrossEntropy(trace.logits, labels, labelSmoothing);
    const GradientBundle grads = model.backward(trace, lg.logitGradient, OutputKind::Logit, true);
    model.updateRunningStatistics(trace);
    const auto params = model.parameters();
    optimizer.step(params, grads.parameters);
    return lg.loss;
}

}  // namespace igshm::net
