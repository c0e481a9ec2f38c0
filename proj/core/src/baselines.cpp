#include "igshm/baselines.hpp"

#include "igshm/error.hpp"

#include <algorithm>
#include <cctype>
#include <string>

namespace igshm::baselines {

std::string_view toString(BaselineKind kind)
{
    switch (kind) {
    case BaselineKind::APB: return "apb";
    case BaselineKind::TVB: return "tvb";
    case BaselineKind::MVB: return "mvb";
    }
    return "unknown";
}

BaselineKind baselineFromString(std::string_view name)
{
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (BaselineKind kind : kAllBaselines) {
        if (toString(kind) == lower) return kind;
    }
    throw ConfigError("unknown baseline '" + std::string(name) + "' (expected apb, tvb or mvb)");
}

net::Tensor makeBaseline(const net::Tensor& sample, BaselineKind kind)
{
    if (kind == BaselineKind::APB) return net::Tensor(sample.shape(), 0.0);

    const std::vector<double> means = data::channelMeans(sample);
    const std::size_t steps = sample.dim(1);
    net::Tensor out(sample.shape());
    for (std::size_t c = 0; c < means.size(); ++c) {
        for (std::size_t t = 0; t < steps; ++t) {
            out.at(c, t) = kind == BaselineKind::MVB ? means[c] : sample.at(c, t) - means[c];
        }
    }
    return out;
}

data::Dataset reduceDataset(const data::Dataset& dataset, BaselineKind kind)
{
    if (dataset.empty()) throw DataError("cannot reduce an empty dataset");
    data::Dataset out;
    out.reserve(dataset.size());
    for (const data::Sample& s : dataset) {
        out.push_back({makeBaseline(s.values, kind), s.label, s.provenance});
    }
    return out;
}

}  // namespace igshm::baselines
