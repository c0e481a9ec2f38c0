#include "igshm/netcore/tensor.hpp"

#include "igshm/error.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

namespace igshm::net {

std::size_t shapeSize(const Shape& shape)
{
    return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shapeString(const Shape& shape)
{
    std::string out = "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i > 0) out += ", ";
        out += std::to_string(shape[i]);
    }
    return out + "]";
}

Tensor::Tensor(Shape shape, double fill) : shape_(std::move(shape)), data_(shapeSize(shape_), fill) {}

Tensor::Tensor(Shape shape, std::vector<double> values) : Tensor(std::move(shape), Buffer(values.begin(), values.end()))
{
}

Tensor::Tensor(Shape shape, Buffer values) : shape_(std::move(shape)), data_(std::move(values))
{
    if (shapeSize(shape_) != data_.size()) {
        throw ShapeError("tensor shape " + shapeString(shape_) + " does not match " +
                         std::to_string(data_.size()) + " values");
    }
}

Tensor Tensor::reshaped(Shape shape) const&
{
    return Tensor(std::move(shape), data_);
}

Tensor Tensor::reshaped(Shape shape) &&
{
    return Tensor(std::move(shape), std::move(data_));
}

void Tensor::fill(double value)
{
    std::fill(data_.begin(), data_.end(), value);
}

bool Tensor::allFinite() const noexcept
{
    return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Tensor Tensor::item(std::size_t index) const
{
    if (shape_.empty() || index >= shape_[0]) {
        throw ShapeError("item index " + std::to_string(index) + " out of range for " + shapeString(shape_));
    }
    Shape inner(shape_.begin() + 1, shape_.end());
    const std::size_t stride = shapeSize(inner);
    std::vector<double> values(data_.begin() + static_cast<std::ptrdiff_t>(index * stride),
                               data_.begin() + static_cast<std::ptrdiff_t>((index + 1) * stride));
    return Tensor(std::move(inner), std::move(values));
}

Tensor Tensor::stack(std::span<const Tensor> items)
{
    if (items.empty()) throw ShapeError("cannot stack an empty list of tensors");
    Shape shape{items.size()};
    shape.insert(shape.end(), items.front().shape().begin(), items.front().shape().end());
    Tensor out(shape);
    const std::size_t stride = items.front().size();
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (items[i].shape() != items.front().shape()) {
            throw ShapeError("cannot stack " + shapeString(items[i].shape()) + " with " +
                             shapeString(items.front().shape()));
        }
        std::copy(items[i].storage().begin(), items[i].storage().end(), out.data() + i * stride);
    }
    return out;
}

}  // namespace igshm::net
