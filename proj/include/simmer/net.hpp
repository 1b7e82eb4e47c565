#pragma once

// Dense feedforward networks.
//
// Parameter layout (ParamVector), fixed and portable:
//   for each layer l = 1..L (in order):
//     W_l : fan_out x fan_in, row-major  (W_l[o][i] at offset + o*fan_in + i)
//     b_l : fan_out
// Samples are rows of every Matrix (batched evaluation).

#include <Eigen/Core>

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace simmer {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ParamVector = std::vector<double>;

}  // namespace simmer

namespace simmer::net {

enum class Activation { tanh, relu, elu, linear };
enum class LossKind { sse, mse, categorical_cross_entropy, binary_cross_entropy_from_logits };

std::string_view to_string(Activation a);
std::string_view to_string(LossKind k);
Activation parse_activation(std::string_view name);
LossKind parse_loss(std::string_view name);

double activate(Activation a, double z);
/// Derivative with respect to the pre-activation z. ELU uses alpha = 1.
double activate_derivative(Activation a, double z);

class Topology {
public:
    Topology() = default;
    /// Throws InvalidArgument unless there are >= 2 positive layer sizes and
    /// exactly one activation per non-input layer.
    Topology(std::vector<std::size_t> layer_sizes, std::vector<Activation> activations);

    const std::vector<std::size_t>& layer_sizes() const noexcept { return sizes_; }
    const std::vector<Activation>& activations() const noexcept { return acts_; }
    std::size_t num_layers() const noexcept { return acts_.size(); }  // weight layers
    std::size_t fan_in(std::size_t layer) const { return sizes_.at(layer); }
    std::size_t fan_out(std::size_t layer) const { return sizes_.at(layer + 1); }
    std::size_t input_size() const noexcept { return sizes_.front(); }
    std::size_t output_size() const noexcept { return sizes_.back(); }
    std::size_t param_count() const noexcept { return offsets_.back(); }

    /// Offset of W_l in the parameter vector; b_l follows at weight_offset + fan_in*fan_out.
    std::size_t weight_offset(std::size_t layer) const { return offsets_.at(layer); }
    std::size_t bias_offset(std::size_t layer) const {
        return offsets_.at(layer) + fan_in(layer) * fan_out(layer);
    }

    bool operator==(const Topology&) const = default;

private:
    std::vector<std::size_t> sizes_;
    std::vector<Activation> acts_;
    std::vector<std::size_t> offsets_{0};
};

/// Read-only view of one layer inside a parameter vector.
struct LayerView {
    std::size_t fan_in = 0;
    std::size_t fan_out = 0;
    std::span<const double> weights;  // fan_out * fan_in, row-major
    std::span<const double> biases;   // fan_out

    double w(std::size_t out, std::size_t in) const { return weights[out * fan_in + in]; }
};

LayerView layer_view(const Topology& topology, std::span<const double> params, std::size_t layer);

/// A full batch. The network output o is mapped to o' = scale * o + offset (per output
/// column) before it is compared with `targets`; empty scale/offset means identity.
/// Regression runs use this to undo min-max target scaling inside the loss.
struct Batch {
    Matrix inputs;
    Matrix targets;
    std::vector<double> output_scale;
    std::vector<double> output_offset;

    std::size_t size() const noexcept { return static_cast<std::size_t>(inputs.rows()); }
    bool has_output_map() const noexcept { return !output_scale.empty(); }
};

// --- initializers (pure functions of topology and seed) ---

/// Weights ~ N(0, 2/(fan_in+fan_out)), biases 0.
ParamVector init_glorot_normal(const Topology& topology, std::uint64_t seed);

/// Stratified Glorot: [-2s, 2s] (s the Glorot std) is cut into fan_in equal segments;
/// weight W[o][i] ~ N(midpoint_i, s/2). Biases 0.
ParamVector init_stratified_glorot(const Topology& topology, std::uint64_t seed);

// --- evaluation (OpenMP kernels; see net/reference.hpp for the serial versions) ---

Matrix forward(const Topology& topology, std::span<const double> params, const Matrix& inputs);

/// Loss of already-mapped outputs against targets. Throws ShapeError / NonFiniteError.
double loss(LossKind kind, const Matrix& outputs, const Matrix& targets);

/// Network loss on a batch, with the batch's output map applied.
double batch_loss(const Topology& topology, std::span<const double> params, const Batch& batch,
                  LossKind kind);

/// Exact reverse-mode gradient of batch_loss, written into `grad` (length N).
/// Returns the loss at `params`. Throws NonFiniteError if any intermediate is non-finite.
double loss_and_gradient(const Topology& topology, std::span<const double> params,
                         const Batch& batch, LossKind kind, std::span<double> grad);

ParamVector gradient(const Topology& topology, std::span<const double> params, const Batch& batch,
                     LossKind kind);

/// Applies a batch's output map to raw network outputs.
Matrix apply_output_map(const Batch& batch, Matrix outputs);

}  // namespace simmer::net
