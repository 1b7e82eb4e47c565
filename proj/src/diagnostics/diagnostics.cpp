#include "simmer/diagnostics.hpp"

#include "simmer/error.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace simmer::diagnostics {

namespace {

void same_shape(const Matrix& a, const Matrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) throw ShapeError("metric: shape mismatch");
    if (a.size() == 0) throw InvalidArgument("metric: empty input");
}

}  // namespace

double sse(const Matrix& p, const Matrix& t) {
    same_shape(p, t);
    return (p - t).squaredNorm();
}

double mse(const Matrix& p, const Matrix& t) { return sse(p, t) / static_cast<double>(p.size()); }

double r_squared(const Matrix& p, const Matrix& t) {
    same_shape(p, t);
    if (t.size() < 2) throw InvalidArgument("r_squared needs at least 2 targets");
    const double mean = t.mean();
    const double ss_tot = (t.array() - mean).square().sum();
    if (!(ss_tot > 0.0)) throw InvalidArgument("r_squared: targets have zero variance");
    return 1.0 - (p - t).squaredNorm() / ss_tot;
}

double accuracy(std::span<const int> predicted, std::span<const int> truth) {
    if (predicted.size() != truth.size()) throw ShapeError("accuracy: length mismatch");
    if (truth.empty()) throw InvalidArgument("accuracy: empty input");
    std::size_t hits = 0;
    for (std::size_t i = 0; i < truth.size(); ++i) hits += predicted[i] == truth[i] ? 1 : 0;
    return static_cast<double>(hits) / static_cast<double>(truth.size());
}

std::vector<int> labels_from_one_hot(const Matrix& targets) {
    std::vector<int> out(static_cast<std::size_t>(targets.rows()));
    for (Eigen::Index r = 0; r < targets.rows(); ++r) {
        if (targets.cols() == 1) {
            out[r] = targets(r, 0) > 0.5 ? 1 : 0;
            continue;
        }
        Eigen::Index k = 0;
        targets.row(r).maxCoeff(&k);
        out[r] = static_cast<int>(k);
    }
    return out;
}

HessianSpectrum hessian_spectrum(const GradientFn& grad, std::span<const double> x, std::size_t cap) {
    const std::size_t n = x.size();
    if (n == 0) throw InvalidArgument("hessian_spectrum: empty parameter vector");
    if (n > cap) {
        throw InvalidArgument("hessian_spectrum: " + std::to_string(n) + " parameters exceeds the cap of " +
                              std::to_string(cap));
    }
    Eigen::MatrixXd H(n, n);
    bool finite = true;
#pragma omp parallel for schedule(static) reduction(&& : finite)
    for (std::size_t j = 0; j < n; ++j) {
        std::vector<double> xp(x.begin(), x.end()), xm(x.begin(), x.end());
        std::vector<double> gp(n), gm(n);
        const double h = 1e-4 * (1.0 + std::abs(x[j]));
        xp[j] += h;
        xm[j] -= h;
        try {
            grad(xp, gp);
            grad(xm, gm);
        } catch (const Error&) {
            finite = false;
            continue;
        }
        // actual step after rounding
        const double width = xp[j] - xm[j];
        for (std::size_t i = 0; i < n; ++i) {
            const double v = (gp[i] - gm[i]) / width;
            finite = finite && std::isfinite(v);
            H(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = v;
        }
    }
    if (!finite) throw NonFiniteError("hessian_spectrum: non-finite Hessian entry");

    HessianSpectrum out;
    out.raw_asymmetry = (H - H.transpose()).cwiseAbs().maxCoeff();
    const Eigen::MatrixXd sym = 0.5 * (H + H.transpose());
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw NonFiniteError("hessian_spectrum: eigensolver failed");
    const Eigen::VectorXd ev = solver.eigenvalues();
    out.eigenvalues.assign(ev.data(), ev.data() + ev.size());
    std::sort(out.eigenvalues.begin(), out.eigenvalues.end(), std::greater<>());

    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (double e : out.eigenvalues) {
        lo = std::min(lo, std::abs(e));
        hi = std::max(hi, std::abs(e));
    }
    out.spread_decades = lo > 0.0 ? std::log10(hi / lo) : std::numeric_limits<double>::infinity();
    return out;
}

HessianSpectrum hessian_spectrum(const net::Topology& topology, std::span<const double> params,
                                 const net::Batch& batch, net::LossKind loss, std::size_t cap) {
    if (params.size() != topology.param_count()) throw ShapeError("hessian_spectrum: parameter count mismatch");
    GradientFn g = [&](std::span<const double> x, std::span<double> out) {
        net::loss_and_gradient(topology, x, batch, loss, out);
    };
    return hessian_spectrum(g, params, cap);
}

}  // namespace simmer::diagnostics
