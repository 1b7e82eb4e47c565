#include "simmer/net.hpp"

#include "simmer/error.hpp"
#include "simmer/rng.hpp"

#include <cmath>
#include <string>

namespace simmer::net {

std::string_view to_string(Activation a) {
    switch (a) {
        case Activation::tanh: return "tanh";
        case Activation::relu: return "relu";
        case Activation::elu: return "elu";
        case Activation::linear: return "linear";
    }
    return "?";
}

std::string_view to_string(LossKind k) {
    switch (k) {
        case LossKind::sse: return "sse";
        case LossKind::mse: return "mse";
        case LossKind::categorical_cross_entropy: return "categorical_cross_entropy";
        case LossKind::binary_cross_entropy_from_logits: return "binary_cross_entropy_from_logits";
    }
    return "?";
}

Activation parse_activation(std::string_view name) {
    for (auto a : {Activation::tanh, Activation::relu, Activation::elu, Activation::linear}) {
        if (name == to_string(a)) return a;
    }
    throw InvalidArgument("unknown activation '" + std::string(name) + "'");
}

LossKind parse_loss(std::string_view name) {
    for (auto k : {LossKind::sse, LossKind::mse, LossKind::categorical_cross_entropy,
                   LossKind::binary_cross_entropy_from_logits}) {
        if (name == to_string(k)) return k;
    }
    throw InvalidArgument("unknown loss '" + std::string(name) + "'");
}

double activate(Activation a, double z) {
    switch (a) {
        case Activation::tanh: return std::tanh(z);
        case Activation::relu: return z > 0.0 ? z : 0.0;
        case Activation::elu: return z > 0.0 ? z : std::expm1(z);
        case Activation::linear: return z;
    }
    return z;
}

double activate_derivative(Activation a, double z) {
    switch (a) {
        case Activation::tanh: {
            const double t = std::tanh(z);
            return 1.0 - t * t;
        }
        case Activation::relu: return z > 0.0 ? 1.0 : 0.0;
        case Activation::elu: return z > 0.0 ? 1.0 : std::exp(z);
        case Activation::linear: return 1.0;
    }
    return 1.0;
}

Topology::Topology(std::vector<std::size_t> layer_sizes, std::vector<Activation> activations)
    : sizes_(std::move(layer_sizes)), acts_(std::move(activations)) {
    if (sizes_.size() < 2) throw InvalidArgument("topology needs at least 2 layers");
    if (acts_.size() != sizes_.size() - 1) {
        throw InvalidArgument("topology needs one activation per non-input layer (" +
                              std::to_string(sizes_.size() - 1) + " expected, " +
                              std::to_string(acts_.size()) + " given)");
    }
    for (auto s : sizes_) {
        if (s == 0) throw InvalidArgument("layer sizes must be positive");
    }
    offsets_.clear();
    offsets_.push_back(0);
    for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
        offsets_.push_back(offsets_.back() + (sizes_[l] + 1) * sizes_[l + 1]);
    }
}

LayerView layer_view(const Topology& topology, std::span<const double> params, std::size_t layer) {
    if (params.size() != topology.param_count()) {
        throw ShapeError("parameter vector has " + std::to_string(params.size()) +
                         " entries, topology needs " + std::to_string(topology.param_count()));
    }
    LayerView v;
    v.fan_in = topology.fan_in(layer);
    v.fan_out = topology.fan_out(layer);
    v.weights = params.subspan(topology.weight_offset(layer), v.fan_in * v.fan_out);
    v.biases = params.subspan(topology.bias_offset(layer), v.fan_out);
    return v;
}

namespace {

double glorot_std(std::size_t fan_in, std::size_t fan_out) {
    return std::sqrt(2.0 / static_cast<double>(fan_in + fan_out));
}

}  // namespace

ParamVector init_glorot_normal(const Topology& topology, std::uint64_t seed) {
    ParamVector p(topology.param_count(), 0.0);
    Rng rng(seed, StreamPurpose::init);
    for (std::size_t l = 0; l < topology.num_layers(); ++l) {
        const double sd = glorot_std(topology.fan_in(l), topology.fan_out(l));
        const std::size_t off = topology.weight_offset(l);
        const std::size_t n = topology.fan_in(l) * topology.fan_out(l);
        for (std::size_t j = 0; j < n; ++j) p[off + j] = rng.normal(0.0, sd);
    }
    return p;
}

ParamVector init_stratified_glorot(const Topology& topology, std::uint64_t seed) {
    ParamVector p(topology.param_count(), 0.0);
    Rng rng(seed, StreamPurpose::init);
    for (std::size_t l = 0; l < topology.num_layers(); ++l) {
        const std::size_t fan_in = topology.fan_in(l);
        const std::size_t fan_out = topology.fan_out(l);
        const double sd = glorot_std(fan_in, fan_out);
        const double width = 4.0 * sd / static_cast<double>(fan_in);
        const std::size_t off = topology.weight_offset(l);
        for (std::size_t o = 0; o < fan_out; ++o) {
            for (std::size_t i = 0; i < fan_in; ++i) {
                const double mid = -2.0 * sd + (static_cast<double>(i) + 0.5) * width;
                p[off + o * fan_in + i] = rng.normal(mid, 0.5 * sd);
            }
        }
    }
    return p;
}

}  // namespace simmer::net
