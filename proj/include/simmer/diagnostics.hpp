#pragma once

#include "simmer/net.hpp"

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace simmer::diagnostics {

double sse(const Matrix& predictions, const Matrix& targets);
/// Mean over every entry.
double mse(const Matrix& predictions, const Matrix& targets);
/// 1 - SS_res / SS_tot, SS_tot about the target mean (all entries pooled).
/// Throws InvalidArgument for fewer than 2 entries or zero target variance.
double r_squared(const Matrix& predictions, const Matrix& targets);
double accuracy(std::span<const int> predicted, std::span<const int> truth);

/// Row-wise argmax of one-hot targets.
std::vector<int> labels_from_one_hot(const Matrix& targets);

struct HessianSpectrum {
    std::vector<double> eigenvalues;  // descending
    double raw_asymmetry = 0.0;       // max |H_ij - H_ji| before symmetrisation
    double spread_decades = 0.0;      // log10(max |lambda| / min |lambda|)
};

using GradientFn = std::function<void(std::span<const double> x, std::span<double> grad)>;

inline constexpr std::size_t kDefaultHessianCap = 200;

/// Hessian by central differences of exact gradients, column j with step
/// h_j = 1e-4 (1 + |x_j|), symmetrised. Throws InvalidArgument above `cap`
/// parameters and NonFiniteError on non-finite entries.
HessianSpectrum hessian_spectrum(const GradientFn& grad, std::span<const double> x,
                                 std::size_t cap = kDefaultHessianCap);

HessianSpectrum hessian_spectrum(const net::Topology& topology, std::span<const double> params,
                                 const net::Batch& batch, net::LossKind loss,
                                 std::size_t cap = kDefaultHessianCap);

}  // namespace simmer::diagnostics
