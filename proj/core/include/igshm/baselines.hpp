#pragma once

#include "igshm/netcore/tensor.hpp"
#include "igshm/preprocessing.hpp"

#include <array>
#include <string_view>

namespace igshm::baselines {

/// Reference inputs for attribution, each removing one property of a sample.
enum class BaselineKind {
    APB,  ///< ambient pressure: all zeros
    TVB,  ///< temporal variations only: per-channel mean removed
    MVB,  ///< mean values only: each channel held at its temporal mean
};

inline constexpr std::array<BaselineKind, 3> kAllBaselines{BaselineKind::APB, BaselineKind::TVB, BaselineKind::MVB};

/// "apb" / "tvb" / "mvb".
std::string_view toString(BaselineKind kind);
BaselineKind baselineFromString(std::string_view name);

/// Baseline of a normalized [C, T] sample.
net::Tensor makeBaseline(const net::Tensor& sample, BaselineKind kind);

/// Copy of `dataset` with every sample replaced by its baseline; labels and
/// provenance are kept.
data::Dataset reduceDataset(const data::Dataset& dataset, BaselineKind kind);

}  // namespace igshm::baselines
