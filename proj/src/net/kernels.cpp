// Parallel evaluation kernels. Rows are cut into fixed-size blocks; blocks run
// under OpenMP and their partial losses/gradients are reduced in block order, so
// results do not depend on the thread count.

#include "simmer/net.hpp"

#include "loss_detail.hpp"
#include "simmer/error.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <string>

namespace simmer::net {

namespace {

constexpr Eigen::Index kRowBlock = 128;

using ConstMatMap = Eigen::Map<const Matrix>;
using MatMap = Eigen::Map<Matrix>;
using ConstRowVecMap = Eigen::Map<const Eigen::RowVectorXd>;

Eigen::Index block_count(Eigen::Index rows) { return (rows + kRowBlock - 1) / kRowBlock; }

void check_params(const Topology& t, std::span<const double> params) {
    if (params.size() != t.param_count()) {
        throw ShapeError("parameter vector has " + std::to_string(params.size()) +
                         " entries, topology needs " + std::to_string(t.param_count()));
    }
}

void check_inputs(const Topology& t, const Matrix& inputs) {
    if (static_cast<std::size_t>(inputs.cols()) != t.input_size()) {
        throw ShapeError("inputs have " + std::to_string(inputs.cols()) + " columns, network expects " +
                         std::to_string(t.input_size()));
    }
}

void check_batch(const Topology& t, const Batch& b) {
    check_inputs(t, b.inputs);
    if (b.targets.rows() != b.inputs.rows() ||
        static_cast<std::size_t>(b.targets.cols()) != t.output_size()) {
        throw ShapeError("targets must be " + std::to_string(b.inputs.rows()) + "x" +
                         std::to_string(t.output_size()));
    }
    if (b.inputs.rows() == 0) throw InvalidArgument("empty batch");
    if (b.has_output_map() && (b.output_scale.size() != t.output_size() ||
                               b.output_offset.size() != t.output_size())) {
        throw ShapeError("output map size does not match the output layer");
    }
}

void activate_in_place(Activation a, Matrix& m) {
    switch (a) {
        case Activation::tanh: m = m.array().tanh(); break;
        case Activation::relu: m = m.array().max(0.0); break;
        case Activation::elu: m = m.unaryExpr([](double z) { return z > 0.0 ? z : std::expm1(z); }); break;
        case Activation::linear: break;
    }
}

// d act / dz evaluated from the pre-activation (z) and post-activation (a) values.
void multiply_derivative(Activation act, const Matrix& z, const Matrix& a, Matrix& delta) {
    switch (act) {
        case Activation::tanh: delta.array() *= 1.0 - a.array().square(); break;
        case Activation::relu: delta.array() *= (z.array() > 0.0).cast<double>(); break;
        case Activation::elu:
            delta.array() *= (z.array() > 0.0).select(1.0, a.array() + 1.0);
            break;
        case Activation::linear: break;
    }
}

template <class In>
void block_forward(const Topology& t, std::span<const double> params, const In& x,
                   std::vector<Matrix>& pre, std::vector<Matrix>& post) {
    const std::size_t L = t.num_layers();
    pre.resize(L + 1);
    post.resize(L + 1);
    post[0] = x;
    for (std::size_t l = 0; l < L; ++l) {
        const auto fi = static_cast<Eigen::Index>(t.fan_in(l));
        const auto fo = static_cast<Eigen::Index>(t.fan_out(l));
        ConstMatMap w(params.data() + t.weight_offset(l), fo, fi);
        ConstRowVecMap b(params.data() + t.bias_offset(l), fo);
        pre[l + 1].noalias() = post[l] * w.transpose();
        pre[l + 1].rowwise() += b;
        post[l + 1] = pre[l + 1];
        activate_in_place(t.activations()[l], post[l + 1]);
    }
}

void map_outputs(const Batch& b, Matrix& out) {
    if (!b.has_output_map()) return;
    for (Eigen::Index k = 0; k < out.cols(); ++k) {
        out.col(k) = out.col(k).array() * b.output_scale[k] + b.output_offset[k];
    }
}

bool all_finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

Matrix apply_output_map(const Batch& batch, Matrix outputs) {
    map_outputs(batch, outputs);
    return outputs;
}

Matrix forward(const Topology& topology, std::span<const double> params, const Matrix& inputs) {
    check_params(topology, params);
    check_inputs(topology, inputs);
    const Eigen::Index rows = inputs.rows();
    Matrix out(rows, static_cast<Eigen::Index>(topology.output_size()));
    const Eigen::Index nb = block_count(rows);
#pragma omp parallel
    {
        std::vector<Matrix> pre, post;
#pragma omp for schedule(static)
        for (Eigen::Index blk = 0; blk < nb; ++blk) {
            const Eigen::Index r0 = blk * kRowBlock;
            const Eigen::Index n = std::min(kRowBlock, rows - r0);
            block_forward(topology, params, inputs.middleRows(r0, n), pre, post);
            out.middleRows(r0, n) = post.back();
        }
    }
    return out;
}

double loss(LossKind kind, const Matrix& outputs, const Matrix& targets) {
    if (outputs.rows() != targets.rows() || outputs.cols() != targets.cols()) {
        throw ShapeError("loss: outputs are " + std::to_string(outputs.rows()) + "x" +
                         std::to_string(outputs.cols()) + ", targets are " +
                         std::to_string(targets.rows()) + "x" + std::to_string(targets.cols()));
    }
    if (outputs.rows() == 0) throw InvalidArgument("loss: empty batch");
    if (!outputs.allFinite() || !targets.allFinite()) throw NonFiniteError("loss: non-finite input");
    const double total = static_cast<double>(outputs.rows());
    double acc = 0.0;
    for (Eigen::Index r0 = 0; r0 < outputs.rows(); r0 += kRowBlock) {
        const Eigen::Index n = std::min(kRowBlock, outputs.rows() - r0);
        acc += detail::block_loss(kind, outputs.data() + r0 * outputs.cols(),
                                  targets.data() + r0 * targets.cols(), n, outputs.cols(), total,
                                  nullptr);
    }
    return acc;
}

double batch_loss(const Topology& topology, std::span<const double> params, const Batch& batch,
                  LossKind kind) {
    check_batch(topology, batch);
    Matrix out = forward(topology, params, batch.inputs);
    map_outputs(batch, out);
    return loss(kind, out, batch.targets);
}

double loss_and_gradient(const Topology& topology, std::span<const double> params,
                         const Batch& batch, LossKind kind, std::span<double> grad) {
    check_params(topology, params);
    check_batch(topology, batch);
    if (grad.size() != params.size()) throw ShapeError("gradient buffer has the wrong length");

    const std::size_t N = topology.param_count();
    const std::size_t L = topology.num_layers();
    const Eigen::Index rows = batch.inputs.rows();
    const Eigen::Index n_out = static_cast<Eigen::Index>(topology.output_size());
    const double total = static_cast<double>(rows);
    const Eigen::Index nb = block_count(rows);

    // block 0 writes straight into `grad`; the rest get scratch buffers
    std::vector<double> scratch(nb > 1 ? static_cast<std::size_t>(nb - 1) * N : 0);
    std::vector<double> partial_loss(static_cast<std::size_t>(nb), 0.0);
    auto block_grad = [&](Eigen::Index blk) -> double* {
        return blk == 0 ? grad.data() : scratch.data() + static_cast<std::size_t>(blk - 1) * N;
    };

#pragma omp parallel
    {
        std::vector<Matrix> pre, post;
        Matrix delta, mapped;
#pragma omp for schedule(static)
        for (Eigen::Index blk = 0; blk < nb; ++blk) {
            const Eigen::Index r0 = blk * kRowBlock;
            const Eigen::Index n = std::min(kRowBlock, rows - r0);
            block_forward(topology, params, batch.inputs.middleRows(r0, n), pre, post);

            mapped = post.back();
            map_outputs(batch, mapped);
            delta.resize(n, n_out);
            Matrix tgt = batch.targets.middleRows(r0, n);
            partial_loss[static_cast<std::size_t>(blk)] = detail::block_loss(
                kind, mapped.data(), tgt.data(), n, n_out, total, delta.data());
            if (batch.has_output_map()) {
                for (Eigen::Index k = 0; k < n_out; ++k) delta.col(k) *= batch.output_scale[k];
            }

            double* g = block_grad(blk);
            for (std::size_t l = L; l-- > 0;) {
                const auto fi = static_cast<Eigen::Index>(topology.fan_in(l));
                const auto fo = static_cast<Eigen::Index>(topology.fan_out(l));
                multiply_derivative(topology.activations()[l], pre[l + 1], post[l + 1], delta);
                MatMap gw(g + topology.weight_offset(l), fo, fi);
                gw.noalias() = delta.transpose() * post[l];
                Eigen::Map<Eigen::RowVectorXd> gb(g + topology.bias_offset(l), fo);
                gb = delta.colwise().sum();
                if (l > 0) {
                    ConstMatMap w(params.data() + topology.weight_offset(l), fo, fi);
                    Matrix next = delta * w;
                    delta.swap(next);
                }
            }
        }
    }

    double total_loss = partial_loss[0];
    for (Eigen::Index blk = 1; blk < nb; ++blk) {
        const double* g = block_grad(blk);
        for (std::size_t j = 0; j < N; ++j) grad[j] += g[j];
        total_loss += partial_loss[static_cast<std::size_t>(blk)];
    }
    if (!std::isfinite(total_loss)) throw NonFiniteError("non-finite loss during backpropagation");
    if (!all_finite(grad)) throw NonFiniteError("non-finite gradient during backpropagation");
    return total_loss;
}

ParamVector gradient(const Topology& topology, std::span<const double> params, const Batch& batch,
                     LossKind kind) {
    ParamVector g(params.size(), 0.0);
    loss_and_gradient(topology, params, batch, kind, g);
    return g;
}

}  // namespace simmer::net
