#include "igshm/netcore/layers.hpp"

#include "igshm/error.hpp"

#include <Eigen/Core>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <optional>

namespace igshm::net {
namespace {

using RowMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MatrixMap = Eigen::Map<RowMatrix>;
using ConstMatrixMap = Eigen::Map<const RowMatrix>;
using VectorMap = Eigen::Map<Eigen::VectorXd>;
using ConstVectorMap = Eigen::Map<const Eigen::VectorXd>;

// cols[(c*K + k), t] = x[c, t + k - padLeft], zero outside [0, T).
void im2col(const double* x, std::size_t channels, std::size_t steps, std::size_t kernel, std::size_t padLeft,
            std::size_t outSteps, double* cols)
{
    for (std::size_t c = 0; c < channels; ++c) {
        const double* xc = x + c * steps;
        for (std::size_t k = 0; k < kernel; ++k) {
            double* row = cols + (c * kernel + k) * outSteps;
            const auto shift = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(padLeft);
            for (std::size_t t = 0; t < outSteps; ++t) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + shift;
                row[t] = (src >= 0 && src < static_cast<std::ptrdiff_t>(steps)) ? xc[src] : 0.0;
            }
        }
    }
}

void col2imAccumulate(const double* cols, std::size_t channels, std::size_t steps, std::size_t kernel,
                      std::size_t padLeft, std::size_t outSteps, double* dx)
{
    for (std::size_t c = 0; c < channels; ++c) {
        double* dxc = dx + c * steps;
        for (std::size_t k = 0; k < kernel; ++k) {
            const double* row = cols + (c * kernel + k) * outSteps;
            const auto shift = static_cast<std::ptrdiff_t>(k) - static_cast<std::ptrdiff_t>(padLeft);
            for (std::size_t t = 0; t < outSteps; ++t) {
                const std::ptrdiff_t src = static_cast<std::ptrdiff_t>(t) + shift;
                if (src >= 0 && src < static_cast<std::ptrdiff_t>(steps)) dxc[src] += row[t];
            }
        }
    }
}

void fanInUniform(Tensor& weight, std::size_t fanIn, Rng& rng)
{
    const double limit = std::sqrt(6.0 / static_cast<double>(fanIn));
    std::uniform_real_distribution<double> dist(-limit, limit);
    for (double& w : weight.storage()) w = dist(rng);
}

}  // namespace

std::string_view toString(LayerKind kind)
{
    switch (kind) {
    case LayerKind::Conv1d: return "conv1d";
    case LayerKind::BatchNorm: return "batchnorm";
    case LayerKind::Relu: return "relu";
    case LayerKind::GlobalAvgPool: return "global-avg-pool";
    case LayerKind::Dense: return "dense";
    case LayerKind::Dropout: return "dropout";
    case LayerKind::Softmax: return "softmax";
    }
    return "unknown";
}

LayerKind layerKindFromString(std::string_view name)
{
    for (auto kind : {LayerKind::Conv1d, LayerKind::BatchNorm, LayerKind::Relu, LayerKind::GlobalAvgPool,
                      LayerKind::Dense, LayerKind::Dropout, LayerKind::Softmax}) {
        if (toString(kind) == name) return kind;
    }
    throw ConfigError("unknown layer kind '" + std::string(name) + "'");
}

std::string_view toString(Padding padding)
{
    return padding == Padding::Same ? "same" : "valid";
}

Padding paddingFromString(std::string_view name)
{
    if (name == "same") return Padding::Same;
    if (name == "valid") return Padding::Valid;
    throw ConfigError("unknown padding mode '" + std::string(name) + "'");
}

LayerSpec LayerSpec::conv1d(std::size_t filters, std::size_t kernelSize, Padding padding)
{
    LayerSpec s;
    s.kind = LayerKind::Conv1d;
    s.filters = filters;
    s.kernelSize = kernelSize;
    s.padding = padding;
    return s;
}

LayerSpec LayerSpec::batchNorm(double momentum, double epsilon)
{
    LayerSpec s;
    s.kind = LayerKind::BatchNorm;
    s.momentum = momentum;
    s.epsilon = epsilon;
    return s;
}

LayerSpec LayerSpec::relu()
{
    LayerSpec s;
    s.kind = LayerKind::Relu;
    return s;
}

LayerSpec LayerSpec::globalAvgPool()
{
    LayerSpec s;
    s.kind = LayerKind::GlobalAvgPool;
    return s;
}

LayerSpec LayerSpec::dense(std::size_t units)
{
    LayerSpec s;
    s.kind = LayerKind::Dense;
    s.units = units;
    return s;
}

LayerSpec LayerSpec::dropout(double rate)
{
    LayerSpec s;
    s.kind = LayerKind::Dropout;
    s.rate = rate;
    return s;
}

LayerSpec LayerSpec::softmax()
{
    LayerSpec s;
    s.kind = LayerKind::Softmax;
    return s;
}

void LayerSpec::validate() const
{
    switch (kind) {
    case LayerKind::Conv1d:
        if (filters < 1) throw ConfigError("conv1d needs at least one filter");
        if (kernelSize < 1) throw ConfigError("conv1d kernel size must be >= 1");
        break;
    case LayerKind::Dense:
        if (units < 1) throw ConfigError("dense layer needs at least one unit");
        break;
    case LayerKind::Dropout:
        if (!(rate >= 0.0 && rate < 1.0)) throw ConfigError("dropout rate must lie in [0, 1)");
        break;
    case LayerKind::BatchNorm:
        if (!(momentum >= 0.0 && momentum < 1.0)) throw ConfigError("batchnorm momentum must lie in [0, 1)");
        if (!(epsilon > 0.0)) throw ConfigError("batchnorm epsilon must be positive");
        break;
    default:
        break;
    }
}

// ---------------------------------------------------------------- Conv1d

Conv1d::Conv1d(const LayerSpec& s, const Shape& inputShape) : spec(s)
{
    if (inputShape.size() != 2) throw ShapeError("conv1d expects [C, T] inputs, got " + shapeString(inputShape));
    inChannels = inputShape[0];
    if (spec.padding == Padding::Valid && inputShape[1] < spec.kernelSize) {
        throw ShapeError("conv1d kernel longer than the sequence");
    }
    weight = Tensor({spec.filters, inChannels * spec.kernelSize});
    bias = Tensor({spec.filters});
}

std::size_t Conv1d::padLeft() const
{
    return spec.padding == Padding::Same ? (spec.kernelSize - 1) / 2 : 0;
}

Shape Conv1d::outputShape(const Shape& inputShape) const
{
    const std::size_t steps = inputShape.at(1);
    return {spec.filters, spec.padding == Padding::Same ? steps : steps - spec.kernelSize + 1};
}

Tensor Conv1d::forward(const Tensor& x, Mode, LayerCache& cache, Rng&) const
{
    if (x.rank() != 3 || x.dim(1) != inChannels) {
        throw ShapeError("conv1d expects [N, " + std::to_string(inChannels) + ", T], got " + shapeString(x.shape()));
    }
    const std::size_t batch = x.dim(0);
    const std::size_t steps = x.dim(2);
    const std::size_t kernel = spec.kernelSize;
    const std::size_t outSteps = outputShape({inChannels, steps})[1];
    const std::size_t rows = inChannels * kernel;

    Tensor y({batch, spec.filters, outSteps});
    Buffer cols(rows * outSteps);
    ConstMatrixMap w(weight.data(), static_cast<Eigen::Index>(spec.filters), static_cast<Eigen::Index>(rows));
    ConstVectorMap b(bias.data(), static_cast<Eigen::Index>(spec.filters));
    for (std::size_t n = 0; n < batch; ++n) {
        im2col(x.data() + n * inChannels * steps, inChannels, steps, kernel, padLeft(), outSteps, cols.data());
        ConstMatrixMap colMap(cols.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(outSteps));
        MatrixMap out(y.data() + n * spec.filters * outSteps, static_cast<Eigen::Index>(spec.filters),
                      static_cast<Eigen::Index>(outSteps));
        out.noalias() = w * colMap;
        out.colwise() += b;
    }
    cache.input = x;
    return y;
}

Tensor Conv1d::backward(const Tensor& dy, const LayerCache& cache, std::span<Tensor> grads) const
{
    const Tensor& x = cache.input;
    const std::size_t batch = x.dim(0);
    const std::size_t steps = x.dim(2);
    const std::size_t kernel = spec.kernelSize;
    const std::size_t outSteps = dy.dim(2);
    const std::size_t rows = inChannels * kernel;
    const auto F = static_cast<Eigen::Index>(spec.filters);
    const auto R = static_cast<Eigen::Index>(rows);
    const auto To = static_cast<Eigen::Index>(outSteps);

    Tensor dx({batch, inChannels, steps});
    Buffer cols(rows * outSteps);
    ConstMatrixMap w(weight.data(), F, R);
    const bool wantParams = !grads.empty();
    std::optional<MatrixMap> dw;
    std::optional<VectorMap> db;
    if (wantParams) {
        grads[0] = Tensor(weight.shape());
        grads[1] = Tensor(bias.shape());
        dw.emplace(grads[0].data(), F, R);
        db.emplace(grads[1].data(), F);
    }
    for (std::size_t n = 0; n < batch; ++n) {
        ConstMatrixMap g(dy.data() + n * spec.filters * outSteps, F, To);
        RowMatrix dcols = w.transpose() * g;
        col2imAccumulate(dcols.data(), inChannels, steps, kernel, padLeft(), outSteps, dx.data() + n * inChannels * steps);
        if (wantParams) {
            im2col(x.data() + n * inChannels * steps, inChannels, steps, kernel, padLeft(), outSteps, cols.data());
            ConstMatrixMap colMap(cols.data(), R, To);
            dw->noalias() += g * colMap.transpose();
            *db += g.rowwise().sum();
        }
    }
    return dx;
}

void Conv1d::initialize(Rng& rng)
{
    fanInUniform(weight, inChannels * spec.kernelSize, rng);
    bias.fill(0.0);
}

// ------------------------------------------------------------- BatchNorm

BatchNorm::BatchNorm(const LayerSpec& s, const Shape& inputShape) : spec(s)
{
    if (inputShape.empty() || inputShape.size() > 2) {
        throw ShapeError("batchnorm expects [C] or [C, T] inputs, got " + shapeString(inputShape));
    }
    channels = inputShape[0];
    spatial = inputShape.size() == 2 ? inputShape[1] : 1;
    gamma = Tensor({channels}, 1.0);
    beta = Tensor({channels}, 0.0);
    runningMean = Tensor({channels}, 0.0);
    runningVar = Tensor({channels}, 1.0);
}

// cache.aux holds xhat; cache.stats holds [mean(C), invStd(C)] of the statistics used.
Tensor BatchNorm::forward(const Tensor& x, Mode mode, LayerCache& cache, Rng&) const
{
    if (x.rank() < 2 || x.dim(1) != channels || x.size() != x.dim(0) * channels * spatial) {
        throw ShapeError("batchnorm input " + shapeString(x.shape()) + " does not match " + std::to_string(channels) +
                         " channels");
    }
    const std::size_t batch = x.dim(0);
    std::vector<double> mean(channels);
    std::vector<double> var(channels);
    if (mode == Mode::Train) {
        const double count = static_cast<double>(batch * spatial);
        for (std::size_t c = 0; c < channels; ++c) {
            double sum = 0.0;
            for (std::size_t n = 0; n < batch; ++n) {
                const double* p = x.data() + (n * channels + c) * spatial;
                for (std::size_t s = 0; s < spatial; ++s) sum += p[s];
            }
            const double mu = sum / count;
            double sq = 0.0;
            for (std::size_t n = 0; n < batch; ++n) {
                const double* p = x.data() + (n * channels + c) * spatial;
                for (std::size_t s = 0; s < spatial; ++s) sq += (p[s] - mu) * (p[s] - mu);
            }
            mean[c] = mu;
            var[c] = sq / count;
        }
    } else {
        mean.assign(runningMean.storage().begin(), runningMean.storage().end());
        var.assign(runningVar.storage().begin(), runningVar.storage().end());
    }

    cache.stats.assign(3 * channels, 0.0);
    Tensor xhat(x.shape());
    Tensor y(x.shape());
    for (std::size_t c = 0; c < channels; ++c) {
        const double inv = 1.0 / std::sqrt(var[c] + spec.epsilon);
        cache.stats[c] = mean[c];
        cache.stats[channels + c] = inv;
        cache.stats[2 * channels + c] = var[c];
        for (std::size_t n = 0; n < batch; ++n) {
            const std::size_t base = (n * channels + c) * spatial;
            for (std::size_t s = 0; s < spatial; ++s) {
                const double h = (x[base + s] - mean[c]) * inv;
                xhat[base + s] = h;
                y[base + s] = gamma[c] * h + beta[c];
            }
        }
    }
    cache.aux = std::move(xhat);
    cache.mode = mode;
    return y;
}

Tensor BatchNorm::backward(const Tensor& dy, const LayerCache& cache, std::span<Tensor> grads) const
{
    const Tensor& xhat = cache.aux;
    const std::size_t batch = dy.dim(0);
    const bool trainMode = cache.mode == Mode::Train;
    const bool wantParams = !grads.empty();
    if (wantParams) {
        grads[0] = Tensor(gamma.shape());
        grads[1] = Tensor(beta.shape());
    }
    const double count = static_cast<double>(batch * spatial);
    Tensor dx(dy.shape());
    for (std::size_t c = 0; c < channels; ++c) {
        const double inv = cache.stats[channels + c];
        double sumDy = 0.0;
        double sumDyXhat = 0.0;
        for (std::size_t n = 0; n < batch; ++n) {
            const std::size_t base = (n * channels + c) * spatial;
            for (std::size_t s = 0; s < spatial; ++s) {
                sumDy += dy[base + s];
                sumDyXhat += dy[base + s] * xhat[base + s];
            }
        }
        if (wantParams) {
            grads[0][c] = sumDyXhat;
            grads[1][c] = sumDy;
        }
        const double g = gamma[c];
        for (std::size_t n = 0; n < batch; ++n) {
            const std::size_t base = (n * channels + c) * spatial;
            for (std::size_t s = 0; s < spatial; ++s) {
                if (trainMode) {
                    dx[base + s] = g * inv * (dy[base + s] - sumDy / count - xhat[base + s] * sumDyXhat / count);
                } else {
                    dx[base + s] = g * inv * dy[base + s];
                }
            }
        }
    }
    return dx;
}

void BatchNorm::updateRunningStatistics(const LayerCache& cache)
{
    const double m = spec.momentum;
    const double count = static_cast<double>(cache.aux.dim(0) * spatial);
    const double unbias = count > 1.0 ? count / (count - 1.0) : 1.0;
    for (std::size_t c = 0; c < channels; ++c) {
        runningMean[c] = m * runningMean[c] + (1.0 - m) * cache.stats[c];
        runningVar[c] = m * runningVar[c] + (1.0 - m) * cache.stats[2 * channels + c] * unbias;
    }
}

void BatchNorm::initialize(Rng&)
{
    gamma.fill(1.0);
    beta.fill(0.0);
    runningMean.fill(0.0);
    runningVar.fill(1.0);
}

// ------------------------------------------------------------------ Relu

Tensor Relu::forward(const Tensor& x, Mode, LayerCache& cache, Rng&) const
{
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] > 0.0 ? x[i] : 0.0;
    cache.input = x;
    return y;
}

Tensor Relu::backward(const Tensor& dy, const LayerCache& cache, std::span<Tensor>) const
{
    Tensor dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = cache.input[i] > 0.0 ? dy[i] : 0.0;
    return dx;
}

// --------------------------------------------------------- GlobalAvgPool

GlobalAvgPool::GlobalAvgPool(const LayerSpec& s, const Shape& inputShape) : spec(s)
{
    if (inputShape.size() != 2) throw ShapeError("global-avg-pool expects [C, T] inputs, got " + shapeString(inputShape));
    steps = inputShape[1];
}

Tensor GlobalAvgPool::forward(const Tensor& x, Mode, LayerCache&, Rng&) const
{
    if (x.rank() != 3 || x.dim(2) != steps) {
        throw ShapeError("global-avg-pool expects [N, C, " + std::to_string(steps) + "], got " + shapeString(x.shape()));
    }
    const std::size_t rows = x.dim(0) * x.dim(1);
    Tensor y({x.dim(0), x.dim(1)});
    ConstMatrixMap in(x.data(), static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(steps));
    VectorMap out(y.data(), static_cast<Eigen::Index>(rows));
    out = in.rowwise().sum() / static_cast<double>(steps);
    return y;
}

Tensor GlobalAvgPool::backward(const Tensor& dy, const LayerCache&, std::span<Tensor>) const
{
    Tensor dx({dy.dim(0), dy.dim(1), steps});
    const double share = 1.0 / static_cast<double>(steps);
    for (std::size_t r = 0; r < dy.size(); ++r) {
        std::fill_n(dx.data() + r * steps, steps, dy[r] * share);
    }
    return dx;
}

// ----------------------------------------------------------------- Dense

Dense::Dense(const LayerSpec& s, const Shape& inputShape) : spec(s)
{
    inFeatures = shapeSize(inputShape);
    if (inFeatures == 0) throw ShapeError("dense layer needs a non-empty input");
    weight = Tensor({spec.units, inFeatures});
    bias = Tensor({spec.units});
}

Tensor Dense::forward(const Tensor& x, Mode, LayerCache& cache, Rng&) const
{
    if (x.rank() < 2 || x.size() != x.dim(0) * inFeatures) {
        throw ShapeError("dense layer expects " + std::to_string(inFeatures) + " features per sample, got " +
                         shapeString(x.shape()));
    }
    const auto N = static_cast<Eigen::Index>(x.dim(0));
    Tensor y({x.dim(0), spec.units});
    ConstMatrixMap in(x.data(), N, static_cast<Eigen::Index>(inFeatures));
    ConstMatrixMap w(weight.data(), static_cast<Eigen::Index>(spec.units), static_cast<Eigen::Index>(inFeatures));
    MatrixMap out(y.data(), N, static_cast<Eigen::Index>(spec.units));
    out.noalias() = in * w.transpose();
    out.rowwise() += ConstVectorMap(bias.data(), static_cast<Eigen::Index>(spec.units)).transpose();
    cache.input = x;
    return y;
}

Tensor Dense::backward(const Tensor& dy, const LayerCache& cache, std::span<Tensor> grads) const
{
    const Tensor& x = cache.input;
    const auto N = static_cast<Eigen::Index>(x.dim(0));
    const auto U = static_cast<Eigen::Index>(spec.units);
    const auto D = static_cast<Eigen::Index>(inFeatures);
    ConstMatrixMap g(dy.data(), N, U);
    ConstMatrixMap w(weight.data(), U, D);
    Tensor dx(x.shape());
    MatrixMap dxMap(dx.data(), N, D);
    dxMap.noalias() = g * w;
    if (!grads.empty()) {
        grads[0] = Tensor(weight.shape());
        grads[1] = Tensor(bias.shape());
        ConstMatrixMap in(x.data(), N, D);
        MatrixMap(grads[0].data(), U, D).noalias() = g.transpose() * in;
        VectorMap(grads[1].data(), U) = g.colwise().sum().transpose();
    }
    return dx;
}

void Dense::initialize(Rng& rng)
{
    fanInUniform(weight, inFeatures, rng);
    bias.fill(0.0);
}

// --------------------------------------------------------------- Dropout

Tensor Dropout::forward(const Tensor& x, Mode mode, LayerCache& cache, Rng& rng) const
{
    if (mode == Mode::Infer || spec.rate == 0.0) {
        cache.aux = Tensor();
        return x;
    }
    const double keep = 1.0 - spec.rate;
    Tensor mask(x.shape());
    std::uniform_real_distribution<double> dist(0.0, 1.0);
    for (double& m : mask.storage()) m = dist(rng) < keep ? 1.0 / keep : 0.0;
    Tensor y(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) y[i] = x[i] * mask[i];
    cache.aux = std::move(mask);
    return y;
}

Tensor Dropout::backward(const Tensor& dy, const LayerCache& cache, std::span<Tensor>) const
{
    if (cache.aux.empty()) return dy;
    Tensor dx(dy.shape());
    for (std::size_t i = 0; i < dy.size(); ++i) dx[i] = dy[i] * cache.aux[i];
    return dx;
}

// --------------------------------------------------------------- Softmax

Softmax::Softmax(const LayerSpec& s, const Shape& inputShape) : spec(s)
{
    if (inputShape.size() != 1) throw ShapeError("softmax expects flat inputs, got " + shapeString(inputShape));
}

Tensor softmaxRows(const Tensor& logits)
{
    const std::size_t rows = logits.dim(0);
    const std::size_t cols = logits.size() / std::max<std::size_t>(rows, 1);
    Tensor p(logits.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        const double* z = logits.data() + r * cols;
        double* out = p.data() + r * cols;
        const double peak = *std::max_element(z, z + cols);
        double total = 0.0;
        for (std::size_t k = 0; k < cols; ++k) {
            out[k] = std::exp(z[k] - peak);
            total += out[k];
        }
        for (std::size_t k = 0; k < cols; ++k) out[k] /= total;
    }
    return p;
}

Tensor Softmax::forward(const Tensor& x, Mode, LayerCache& cache, Rng&) const
{
    Tensor p = softmaxRows(x);
    cache.aux = p;
    return p;
}

Tensor Softmax::backward(const Tensor& dy, const LayerCache& cache, std::span<Tensor>) const
{
    const Tensor& p = cache.aux;
    const std::size_t rows = p.dim(0);
    const std::size_t cols = p.dim(1);
    Tensor dx(dy.shape());
    for (std::size_t r = 0; r < rows; ++r) {
        double dot = 0.0;
        for (std::size_t k = 0; k < cols; ++k) dot += dy.at(r, k) * p.at(r, k);
        for (std::size_t k = 0; k < cols; ++k) dx.at(r, k) = p.at(r, k) * (dy.at(r, k) - dot);
    }
    return dx;
}

Layer makeLayer(const LayerSpec& spec, const Shape& inputShape)
{
    spec.validate();
    switch (spec.kind) {
    case LayerKind::Conv1d: return Conv1d(spec, inputShape);
    case LayerKind::BatchNorm: return BatchNorm(spec, inputShape);
    case LayerKind::Relu: return Relu(spec, inputShape);
    case LayerKind::GlobalAvgPool: return GlobalAvgPool(spec, inputShape);
    case LayerKind::Dense: return Dense(spec, inputShape);
    case LayerKind::Dropout: return Dropout(spec, inputShape);
    case LayerKind::Softmax: return Softmax(spec, inputShape);
    }
    throw ConfigError("unhandled layer kind");
}

}  // namespace igshm::net
