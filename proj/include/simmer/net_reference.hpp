#pragma once

// Serial reference implementations of the network kernels: one sample at a time,
// plain loops, no Eigen products. Kept for testing the parallel kernels and for
// the benchmark.

#include "simmer/net.hpp"

namespace simmer::net::reference {

Matrix forward(const Topology& topology, std::span<const double> params, const Matrix& inputs);

double loss_and_gradient(const Topology& topology, std::span<const double> params,
                         const Batch& batch, LossKind kind, std::span<double> grad);

}  // namespace simmer::net::reference
