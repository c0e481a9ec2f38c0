#pragma once

#include <cstddef>
#include <initializer_list>
#include <new>
#include <span>
#include <string>
#include <vector>

namespace igshm::net {

using Shape = std::vector<std::size_t>;

// Fixed 64-byte alignment. Vectorized reductions peel a different number of
// leading elements depending on the address, which would make sums depend on
// where the heap happened to put a buffer.
template <typename T>
struct AlignedAllocator {
    using value_type = T;
    static constexpr std::align_val_t kAlignment{64};

    AlignedAllocator() = default;
    template <typename U>
    AlignedAllocator(const AlignedAllocator<U>&) noexcept {}

    T* allocate(std::size_t n) { return static_cast<T*>(::operator new(n * sizeof(T), kAlignment)); }
    void deallocate(T* p, std::size_t) noexcept { ::operator delete(p, kAlignment); }

    template <typename U>
    bool operator==(const AlignedAllocator<U>&) const noexcept { return true; }
};

using Buffer = std::vector<double, AlignedAllocator<double>>;

std::size_t shapeSize(const Shape& shape);
std::string shapeString(const Shape& shape);

/// Dense row-major array of doubles. Batched activations use the leading
/// dimension as the batch index: [N, C, T] for sequences, [N, D] for vectors.
class Tensor {
public:
    Tensor() = default;
    explicit Tensor(Shape shape, double fill = 0.0);
    Tensor(Shape shape, std::vector<double> values);
    Tensor(Shape shape, Buffer values);

    const Shape& shape() const noexcept { return shape_; }
    std::size_t rank() const noexcept { return shape_.size(); }
    std::size_t dim(std::size_t axis) const { return shape_.at(axis); }
    std::size_t size() const noexcept { return data_.size(); }
    bool empty() const noexcept { return data_.empty(); }

    double* data() noexcept { return data_.data(); }
    const double* data() const noexcept { return data_.data(); }
    std::span<double> values() noexcept { return data_; }
    std::span<const double> values() const noexcept { return data_; }
    Buffer& storage() noexcept { return data_; }
    const Buffer& storage() const noexcept { return data_; }

    double& operator[](std::size_t i) noexcept { return data_[i]; }
    double operator[](std::size_t i) const noexcept { return data_[i]; }

    /// Element access for rank-2 tensors.
    double& at(std::size_t i, std::size_t j) { return data_[i * shape_[1] + j]; }
    double at(std::size_t i, std::size_t j) const { return data_[i * shape_[1] + j]; }

    /// Element access for rank-3 tensors.
    double& at(std::size_t i, std::size_t j, std::size_t k)
    {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const
    {
        return data_[(i * shape_[1] + j) * shape_[2] + k];
    }

    /// Same data, new shape with identical element count.
    Tensor reshaped(Shape shape) const&;
    Tensor reshaped(Shape shape) &&;

    void fill(double value);
    bool allFinite() const noexcept;

    /// Copy of item `index` along the leading axis, without the leading axis.
    Tensor item(std::size_t index) const;
    /// Stacks equally shaped tensors along a new leading axis.
    static Tensor stack(std::span<const Tensor> items);

    friend bool operator==(const Tensor&, const Tensor&) = default;

private:
    Shape shape_;
    Buffer data_;
};

}  // namespace igshm::net
