#pragma once

// Row-block loss kernels shared by the parallel and serial paths. Normalisation
// uses the full batch size so partial sums over row blocks add up to the loss.

#include "simmer/net.hpp"

#include <algorithm>
#include <cmath>

namespace simmer::net::detail {

inline double log_sum_exp(const double* z, Eigen::Index n) {
    double m = z[0];
    for (Eigen::Index k = 1; k < n; ++k) m = std::max(m, z[k]);
    double s = 0.0;
    for (Eigen::Index k = 0; k < n; ++k) s += std::exp(z[k] - m);
    return m + std::log(s);
}

// softplus(z) - z*t, written so it never overflows
inline double bce_logit(double z, double t) {
    return std::max(z, 0.0) - z * t + std::log1p(std::exp(-std::abs(z)));
}

inline double sigmoid(double z) {
    if (z >= 0.0) return 1.0 / (1.0 + std::exp(-z));
    const double e = std::exp(z);
    return e / (1.0 + e);
}

/// Partial loss over rows [row0, row0+rows) of `out`/`tgt` (already output-mapped).
/// When `dout` is non-null it receives dL/d(out) for those rows.
inline double block_loss(LossKind kind, const double* out, const double* tgt, Eigen::Index rows,
                         Eigen::Index cols, double total_rows, double* dout) {
    double acc = 0.0;
    switch (kind) {
        case LossKind::sse:
        case LossKind::mse: {
            const double norm = kind == LossKind::mse ? 1.0 / total_rows : 1.0;
            for (Eigen::Index j = 0; j < rows * cols; ++j) {
                const double r = out[j] - tgt[j];
                acc += r * r;
                if (dout) dout[j] = 2.0 * r * norm;
            }
            return acc * norm;
        }
        case LossKind::categorical_cross_entropy: {
            const double norm = 1.0 / total_rows;
            for (Eigen::Index i = 0; i < rows; ++i) {
                const double* z = out + i * cols;
                const double* t = tgt + i * cols;
                const double lse = log_sum_exp(z, cols);
                double tsum = 0.0;
                for (Eigen::Index k = 0; k < cols; ++k) {
                    acc -= t[k] * (z[k] - lse);
                    tsum += t[k];
                }
                if (dout) {
                    for (Eigen::Index k = 0; k < cols; ++k) {
                        dout[i * cols + k] = (std::exp(z[k] - lse) * tsum - t[k]) * norm;
                    }
                }
            }
            return acc * norm;
        }
        case LossKind::binary_cross_entropy_from_logits: {
            const double norm = 1.0 / (total_rows * static_cast<double>(cols));
            for (Eigen::Index j = 0; j < rows * cols; ++j) {
                acc += bce_logit(out[j], tgt[j]);
                if (dout) dout[j] = (sigmoid(out[j]) - tgt[j]) * norm;
            }
            return acc * norm;
        }
    }
    return acc;
}

}  // namespace simmer::net::detail
