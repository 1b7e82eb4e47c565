#include "simmer/net_reference.hpp"

#include "loss_detail.hpp"
#include "simmer/error.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace simmer::net::reference {

namespace {

// Activations of every layer for one sample; pre[l] / post[l] for l = 0..L.
void sample_forward(const Topology& t, std::span<const double> params, const double* x,
                    std::vector<std::vector<double>>& pre, std::vector<std::vector<double>>& post) {
    const std::size_t L = t.num_layers();
    pre.assign(L + 1, {});
    post.assign(L + 1, {});
    post[0].assign(x, x + t.input_size());
    pre[0] = post[0];
    for (std::size_t l = 0; l < L; ++l) {
        const LayerView layer = layer_view(t, params, l);
        pre[l + 1].assign(layer.fan_out, 0.0);
        post[l + 1].assign(layer.fan_out, 0.0);
        for (std::size_t o = 0; o < layer.fan_out; ++o) {
            double z = layer.biases[o];
            for (std::size_t i = 0; i < layer.fan_in; ++i) z += layer.w(o, i) * post[l][i];
            pre[l + 1][o] = z;
            post[l + 1][o] = activate(t.activations()[l], z);
        }
    }
}

}  // namespace

Matrix forward(const Topology& topology, std::span<const double> params, const Matrix& inputs) {
    if (params.size() != topology.param_count()) throw ShapeError("parameter count mismatch");
    if (static_cast<std::size_t>(inputs.cols()) != topology.input_size()) {
        throw ShapeError("input width mismatch");
    }
    Matrix out(inputs.rows(), static_cast<Eigen::Index>(topology.output_size()));
    std::vector<std::vector<double>> pre, post;
    for (Eigen::Index r = 0; r < inputs.rows(); ++r) {
        const std::vector<double> row(inputs.row(r).data(), inputs.row(r).data() + inputs.cols());
        sample_forward(topology, params, row.data(), pre, post);
        for (std::size_t k = 0; k < topology.output_size(); ++k) out(r, k) = post.back()[k];
    }
    return out;
}

double loss_and_gradient(const Topology& topology, std::span<const double> params,
                         const Batch& batch, LossKind kind, std::span<double> grad) {
    if (params.size() != topology.param_count() || grad.size() != params.size()) {
        throw ShapeError("parameter count mismatch");
    }
    if (batch.inputs.rows() == 0) throw InvalidArgument("empty batch");
    const std::size_t L = topology.num_layers();
    const std::size_t K = topology.output_size();
    const double total = static_cast<double>(batch.inputs.rows());
    std::fill(grad.begin(), grad.end(), 0.0);

    std::vector<std::vector<double>> pre, post;
    std::vector<double> mapped(K), tgt(K), dout(K), delta, next;
    double acc = 0.0;
    for (Eigen::Index r = 0; r < batch.inputs.rows(); ++r) {
        std::vector<double> x(static_cast<std::size_t>(batch.inputs.cols()));
        for (std::size_t i = 0; i < x.size(); ++i) x[i] = batch.inputs(r, static_cast<Eigen::Index>(i));
        sample_forward(topology, params, x.data(), pre, post);
        for (std::size_t k = 0; k < K; ++k) {
            const double o = post.back()[k];
            mapped[k] = batch.has_output_map() ? o * batch.output_scale[k] + batch.output_offset[k] : o;
            tgt[k] = batch.targets(r, static_cast<Eigen::Index>(k));
        }
        acc += detail::block_loss(kind, mapped.data(), tgt.data(), 1, static_cast<Eigen::Index>(K),
                                  total, dout.data());

        delta.assign(K, 0.0);
        for (std::size_t k = 0; k < K; ++k) {
            delta[k] = batch.has_output_map() ? dout[k] * batch.output_scale[k] : dout[k];
        }
        for (std::size_t l = L; l-- > 0;) {
            const LayerView layer = layer_view(topology, params, l);
            for (std::size_t o = 0; o < layer.fan_out; ++o) {
                delta[o] *= activate_derivative(topology.activations()[l], pre[l + 1][o]);
            }
            const std::size_t woff = topology.weight_offset(l);
            const std::size_t boff = topology.bias_offset(l);
            for (std::size_t o = 0; o < layer.fan_out; ++o) {
                for (std::size_t i = 0; i < layer.fan_in; ++i) {
                    grad[woff + o * layer.fan_in + i] += delta[o] * post[l][i];
                }
                grad[boff + o] += delta[o];
            }
            if (l > 0) {
                next.assign(layer.fan_in, 0.0);
                for (std::size_t o = 0; o < layer.fan_out; ++o) {
                    for (std::size_t i = 0; i < layer.fan_in; ++i) next[i] += delta[o] * layer.w(o, i);
                }
                delta.swap(next);
            }
        }
    }
    if (!std::isfinite(acc)) throw NonFiniteError("non-finite loss");
    for (double g : grad) {
        if (!std::isfinite(g)) throw NonFiniteError("non-finite gradient");
    }
    return acc;
}

}  // namespace simmer::net::reference
