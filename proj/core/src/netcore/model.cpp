#include "igshm/netcore/model.hpp"

#include "igshm/error.hpp"

#include <algorithm>

namespace igshm::net {

std::string_view toString(OutputKind kind)
{
    return kind == OutputKind::Logit ? "logit" : "probability";
}

OutputKind outputKindFromString(std::string_view name)
{
    if (name == "logit") return OutputKind::Logit;
    if (name == "probability") return OutputKind::Probability;
    throw ConfigError("unknown output kind '" + std::string(name) + "' (expected logit or probability)");
}

Model::Model(Shape inputShape, std::vector<LayerSpec> specs) : inputShape_(std::move(inputShape)), specs_(std::move(specs))
{
    if (inputShape_.empty() || shapeSize(inputShape_) == 0) throw ShapeError("model input shape must be non-empty");
    if (specs_.empty()) throw ConfigError("model needs at least one layer");
    Shape shape = inputShape_;
    layers_.reserve(specs_.size());
    for (std::size_t i = 0; i < specs_.size(); ++i) {
        if (specs_[i].kind == LayerKind::Softmax && i + 1 != specs_.size()) {
            throw ConfigError("softmax is only supported as the final layer");
        }
        layers_.push_back(makeLayer(specs_[i], shape));
        shape = std::visit([&](const auto& layer) { return layer.outputShape(shape); }, layers_.back());
    }
    if (shape.size() != 1) throw ShapeError("model output must be a flat vector, got " + shapeString(shape));
    outputSize_ = shape[0];
}

void Model::initialize(std::uint64_t seed)
{
    Rng rng(seed);
    for (auto& layer : layers_) {
        std::visit([&](auto& l) { l.initialize(rng); }, layer);
    }
}

bool Model::endsWithSoftmax() const noexcept
{
    return !specs_.empty() && specs_.back().kind == LayerKind::Softmax;
}

std::size_t Model::logitLayerCount() const noexcept
{
    return endsWithSoftmax() ? layers_.size() - 1 : layers_.size();
}

void Model::checkInput(const Tensor& batch) const
{
    if (batch.rank() != inputShape_.size() + 1 ||
        !std::equal(inputShape_.begin(), inputShape_.end(), batch.shape().begin() + 1)) {
        throw ShapeError("model expects batches of " + shapeString(inputShape_) + ", got " + shapeString(batch.shape()));
    }
    if (batch.dim(0) == 0) throw ShapeError("empty batch");
}

ForwardTrace Model::trace(const Tensor& batch, Mode mode, Rng* rng) const
{
    checkInput(batch);
    Rng fallback(0);
    Rng& r = rng != nullptr ? *rng : fallback;
    if (mode == Mode::Train && rng == nullptr &&
        std::any_of(specs_.begin(), specs_.end(),
                    [](const LayerSpec& s) { return s.kind == LayerKind::Dropout && s.rate > 0.0; })) {
        throw ConfigError("train-mode forward through dropout needs a random generator");
    }

    ForwardTrace out;
    out.mode = mode;
    out.caches.resize(layers_.size());
    Tensor x = batch;
    const std::size_t logitCount = logitLayerCount();
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        x = std::visit([&](const auto& layer) { return layer.forward(x, mode, out.caches[i], r); }, layers_[i]);
        if (!x.allFinite()) {
            throw NumericError("non-finite activation after layer " + std::to_string(i) + " (" +
                               std::string(toString(specs_[i].kind)) + ")");
        }
        if (i + 1 == logitCount) out.logits = x;
    }
    out.output = std::move(x);
    return out;
}

Tensor Model::forward(const Tensor& batch, Mode mode, Rng* rng) const
{
    return trace(batch, mode, rng).output;
}

Tensor Model::logits(const Tensor& batch) const
{
    return trace(batch, Mode::Infer).logits;
}

GradientBundle Model::backward(const ForwardTrace& trace, const Tensor& seed, OutputKind seedAt,
                               bool parameterGradients) const
{
    if (seedAt == OutputKind::Probability && !endsWithSoftmax()) {
        throw ConfigError("probability gradients need a softmax-terminated model");
    }
    const std::size_t start = seedAt == OutputKind::Logit ? logitLayerCount() : layers_.size();
    GradientBundle bundle;
    const auto params = parameters();
    if (parameterGradients) {
        bundle.parameters.reserve(params.size());
        for (const Tensor* p : params) bundle.parameters.emplace_back(p->shape());
    }
    // Offsets of each layer's parameters inside the flat parameter list.
    std::vector<std::size_t> offsets(layers_.size() + 1, 0);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        offsets[i + 1] = offsets[i] + std::visit([](const auto& l) { return l.parameters().size(); }, layers_[i]);
    }

    Tensor g = seed;
    for (std::size_t i = start; i-- > 0;) {
        std::span<Tensor> grads;
        if (parameterGradients) {
            grads = std::span<Tensor>(bundle.parameters).subspan(offsets[i], offsets[i + 1] - offsets[i]);
        }
        g = std::visit([&](const auto& layer) { return layer.backward(g, trace.caches[i], grads); }, layers_[i]);
        if (!g.allFinite()) {
            throw NumericError("non-finite gradient at layer " + std::to_string(i) + " (" +
                               std::string(toString(specs_[i].kind)) + ")");
        }
    }
    bundle.input = std::move(g);
    return bundle;
}

GradientBundle Model::gradient(const Tensor& sample, std::size_t targetClass, OutputKind kind) const
{
    if (targetClass >= outputSize_) {
        throw ConfigError("target class " + std::to_string(targetClass) + " outside [0, " + std::to_string(outputSize_) + ")");
    }
    Shape batchShape{1};
    batchShape.insert(batchShape.end(), sample.shape().begin(), sample.shape().end());
    const ForwardTrace t = trace(sample.reshaped(batchShape), Mode::Infer);
    Tensor seed({1, outputSize_});
    seed[targetClass] = 1.0;
    GradientBundle bundle = backward(t, seed, kind, true);
    bundle.input = std::move(bundle.input).reshaped(sample.shape());
    return bundle;
}

Tensor Model::inputGradients(const Tensor& batch, std::span<const std::size_t> targets, OutputKind kind) const
{
    checkInput(batch);
    if (targets.size() != batch.dim(0)) throw ShapeError("one target class per sample required");
    const ForwardTrace t = trace(batch, Mode::Infer);
    Tensor seed({batch.dim(0), outputSize_});
    for (std::size_t n = 0; n < targets.size(); ++n) {
        if (targets[n] >= outputSize_) throw ConfigError("target class out of range");
        seed.at(n, targets[n]) = 1.0;
    }
    return backward(t, seed, kind, false).input;
}

void Model::updateRunningStatistics(const ForwardTrace& trace)
{
    if (trace.mode != Mode::Train) return;
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (auto* bn = std::get_if<BatchNorm>(&layers_[i])) bn->updateRunningStatistics(trace.caches[i]);
    }
}

std::vector<Tensor*> Model::parameters()
{
    std::vector<Tensor*> out;
    for (auto& layer : layers_) {
        auto ps = std::visit([](auto& l) { return l.parameters(); }, layer);
        out.insert(out.end(), ps.begin(), ps.end());
    }
    return out;
}

std::vector<const Tensor*> Model::parameters() const
{
    std::vector<const Tensor*> out;
    for (const auto& layer : layers_) {
        auto ps = std::visit([](const auto& l) { return l.parameters(); }, layer);
        out.insert(out.end(), ps.begin(), ps.end());
    }
    return out;
}

std::vector<Tensor*> Model::buffers()
{
    std::vector<Tensor*> out;
    for (auto& layer : layers_) {
        auto bs = std::visit([](auto& l) { return l.buffers(); }, layer);
        out.insert(out.end(), bs.begin(), bs.end());
    }
    return out;
}

std::vector<const Tensor*> Model::buffers() const
{
    std::vector<const Tensor*> out;
    for (const auto& layer : layers_) {
        auto bs = std::visit([](const auto& l) { return l.buffers(); }, layer);
        out.insert(out.end(), bs.begin(), bs.end());
    }
    return out;
}

std::size_t Model::parameterCount() const
{
    std::size_t total = 0;
    for (const Tensor* p : parameters()) total += p->size();
    return total;
}

}  // namespace igshm::net
