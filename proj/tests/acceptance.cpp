// Acceptance gate. One PASS/FAIL line per criterion; exit status is the number
// of failures. `acceptance 2 7` runs only criteria 2 and 7.

#include "simmer/diagnostics.hpp"
#include "simmer/dynamics.hpp"
#include "simmer/error.hpp"
#include "simmer/experiment.hpp"
#include "simmer/net.hpp"
#include "simmer/optimize.hpp"
#include "simmer/rng.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>

using namespace simmer;
namespace fs = std::filesystem;

namespace {

// ---- tolerances ----
constexpr double kGradTol = 1e-6;
constexpr double kFdStep = 1e-5;
constexpr double kCanonicalTol = 0.05;
constexpr double kKsAlpha = 0.01;
constexpr double kEnergyTol = 1e-3;
constexpr int kSineWinsNeeded = 8;
constexpr double kVelocityTol = 1e-15;
constexpr double kQuadraticTol = 1e-6;
constexpr double kMinSpreadDecades = 4.0;
constexpr double kProportionSumTol = 1e-12;

struct Outcome {
    bool pass;
    std::string detail;
};

std::string fmt(const char* f, auto... args) {
    char buf[512];
    std::snprintf(buf, sizeof buf, f, args...);
    return buf;
}

fs::path source_dir() { return SIMMER_SOURCE_DIR; }

fs::path scratch(const std::string& name) {
    auto d = fs::temp_directory_path() / ("simmer_acceptance_" + name);
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// ---------------------------------------------------------------------------
// 1. backprop against central differences

Outcome gradient_exactness() {
    using net::Activation;
    using net::LossKind;
    const Activation hidden[] = {Activation::tanh, Activation::relu, Activation::elu};
    const LossKind losses[] = {LossKind::sse, LossKind::mse, LossKind::categorical_cross_entropy,
                               LossKind::binary_cross_entropy_from_logits};
    Rng rng(2024, StreamPurpose::test);
    double worst = 0.0;
    for (int trial = 0; trial < 100; ++trial) {
        const Activation act = hidden[rng.below(3)];
        const LossKind kind = losses[trial % 4];
        std::vector<std::size_t> sizes{1 + rng.below(4)};
        const auto depth = rng.below(3);  // up to two hidden layers of <= 16
        for (std::uint64_t d = 0; d < depth; ++d) sizes.push_back(1 + rng.below(16));
        sizes.push_back(1 + rng.below(3));
        std::vector<Activation> acts(sizes.size() - 1, act);
        acts.back() = Activation::linear;
        const net::Topology t(sizes, acts);

        ParamVector p(t.param_count());
        for (double& v : p) v = 0.5 * rng.normal();
        net::Batch b;
        const auto rows = static_cast<Eigen::Index>(1 + rng.below(16));
        const auto K = static_cast<Eigen::Index>(t.output_size());
        b.inputs.resize(rows, static_cast<Eigen::Index>(t.input_size()));
        for (Eigen::Index i = 0; i < b.inputs.size(); ++i) b.inputs.data()[i] = rng.normal();
        b.targets = Matrix::Zero(rows, K);
        for (Eigen::Index r = 0; r < rows; ++r) {
            if (kind == LossKind::categorical_cross_entropy) {
                b.targets(r, static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(K)))) = 1.0;
            } else {
                for (Eigen::Index k = 0; k < K; ++k) {
                    b.targets(r, k) = kind == LossKind::binary_cross_entropy_from_logits
                                          ? static_cast<double>(rng.below(2))
                                          : rng.normal();
                }
            }
        }

        const auto g = net::gradient(t, p, b, kind);
        for (std::size_t j = 0; j < p.size(); ++j) {
            auto q = p;
            q[j] = p[j] + kFdStep;
            const double up = net::batch_loss(t, q, b, kind);
            q[j] = p[j] - kFdStep;
            const double down = net::batch_loss(t, q, b, kind);
            const double fd = (up - down) / (2 * kFdStep);
            worst = std::max(worst, std::abs(g[j] - fd) / (1.0 + std::abs(fd)));
        }
    }
    return {worst < kGradTol, fmt("100 instances, max |g - g_fd| / (1 + |g_fd|) = %.3g (< %g)", worst, kGradTol)};
}

// ---------------------------------------------------------------------------
// 2. canonical sampling on the harmonic well

/// Asymptotic Kolmogorov survival function with the usual finite-n correction.
double ks_p_value(double D, std::size_t n) {
    const double sn = std::sqrt(static_cast<double>(n));
    const double lambda = (sn + 0.12 + 0.11 / sn) * D;
    if (lambda < 1e-3) return 1.0;
    double sum = 0.0;
    for (int k = 1; k <= 200; ++k) {
        const double term = std::exp(-2.0 * k * k * lambda * lambda);
        sum += (k % 2 ? 2.0 : -2.0) * term;
        if (term < 1e-16) break;
    }
    return std::clamp(sum, 0.0, 1.0);
}

double ks_statistic_normal(std::vector<double> xs, double variance) {
    std::sort(xs.begin(), xs.end());
    const double n = static_cast<double>(xs.size());
    const double sd = std::sqrt(variance);
    double D = 0.0;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const double F = 0.5 * std::erfc(-xs[i] / (sd * std::numbers::sqrt2));
        D = std::max({D, F - static_cast<double>(i) / n, static_cast<double>(i + 1) / n - F});
    }
    return D;
}

const dynamics::GradientFn kHarmonic = [](std::span<const double> x, std::span<double> g) { g[0] = x[0]; };

dynamics::PhaseState harmonic_start(double x0, double T, const dynamics::IntegratorConfig& cfg) {
    auto s = dynamics::initial_state(ParamVector{x0}, cfg, T, 1);
    return s;
}

Outcome canonical_sampling() {
    constexpr std::int64_t burn = 100000, steps = 2000000, thin = 2500;
    bool ok = true;
    std::string detail;
    for (double T : {0.1, 0.5, 1.0}) {
        dynamics::IntegratorConfig cfg;
        cfg.dt = 0.002;
        cfg.chain_length = 2;
        cfg.chain_mass = T;  // Q = T tau^2 with tau = 1
        auto s = harmonic_start(0.0, T, cfg);
        for (std::int64_t i = 0; i < burn; ++i) dynamics::nhc_step(s, kHarmonic, cfg, T);
        double x2 = 0.0, v2 = 0.0;
        std::vector<double> thinned;
        for (std::int64_t i = 0; i < steps; ++i) {
            dynamics::nhc_step(s, kHarmonic, cfg, T);
            x2 += s.x[0] * s.x[0];
            v2 += s.v[0] * s.v[0];
            if (i % thin == thin - 1) thinned.push_back(s.x[0]);
        }
        x2 /= steps;
        v2 /= steps;
        const double ex = std::abs(x2 - T) / T;
        const double ev = std::abs(v2 - T) / T;
        const double p = ks_p_value(ks_statistic_normal(thinned, T), thinned.size());
        const bool pass = ex < kCanonicalTol && ev < kCanonicalTol && p > kKsAlpha;
        ok = ok && pass;
        detail += fmt("T=%.1f: |<x2>-T|/T=%.4f |<v2>-T|/T=%.4f KS p=%.3f (n=%zu)%s", T, ex, ev, p, thinned.size(),
                      T < 1.0 ? "; " : "");
    }
    return {ok, detail};
}

// ---------------------------------------------------------------------------
// 3. extended energy at constant temperature

Outcome energy_stability() {
    const double T = 0.5;
    dynamics::IntegratorConfig cfg;
    cfg.dt = 0.001;
    cfg.chain_mass = T;
    auto s = harmonic_start(1.0, T, cfg);
    auto energy = [&] { return dynamics::extended_energy(s, 0.5 * s.x[0] * s.x[0], T); };
    const double e0 = energy();
    double worst = 0.0;
    for (int i = 0; i < 100000; ++i) {
        dynamics::nhc_step(s, kHarmonic, cfg, T);
        worst = std::max(worst, std::abs(energy() - e0) / std::abs(e0));
    }
    return {worst < kEnergyTol, fmt("E0=%.6f, max |E(t)-E0|/|E0| over 1e5 steps = %.3g (< %g)", e0, worst, kEnergyTol)};
}

// ---------------------------------------------------------------------------
// 4. noisy-sine retrofit versus the Adam endpoint

/// One-member ensemble around a parameter vector, to predict in original units.
ensemble::EnsembleBundle single(const cli::Experiment& ex, const ParamVector& p) {
    ensemble::EnsembleBundle b;
    b.topology = ex.topology;
    b.feature_scaler = ex.feature_scaler;
    b.target_scaler = ex.target_scaler;
    b.task = ex.task;
    b.members.push_back({0, 0.0, 0, p});
    return b;
}

Outcome sine_retrofit() {
    const auto base = cli::ExperimentConfig::load(source_dir() / "configs" / "sine_retrofit.json");
    Matrix dense(1001, 1), truth(1001, 1);
    for (Eigen::Index i = 0; i < 1001; ++i) {
        dense(i, 0) = -1.0 + 2.0 * static_cast<double>(i) / 1000.0;
        truth(i, 0) = std::sin(2.0 * std::numbers::pi * dense(i, 0));
    }
    int test_wins = 0, curve_wins = 0;
    std::string rows;
    for (std::uint64_t seed = 1; seed <= 10; ++seed) {
        auto cfg = base;
        cfg.seed = seed;
        const auto ex = cli::prepare(cfg);
        const auto report = cli::adam_phase(cfg, ex, 0);
        const auto out = cli::simmer_phase(cfg, ex, optimize::retrofit_init(report, cfg.adam->learning_rate,
                                                                             cfg.integrator()), 0);
        const double adam_test = cli::single_test_metric(ex, report.final_params);
        const double ens_test = cli::ensemble_test_metric(ex, out.bundle);
        const double adam_curve = diagnostics::mse(ensemble::regression_mean(single(ex, report.final_params), dense), truth);
        const double ens_curve = diagnostics::mse(ensemble::regression_mean(out.bundle, dense), truth);
        test_wins += ens_test < adam_test;
        curve_wins += ens_curve < adam_curve;
        rows += fmt("\n      seed %2llu: test MSE adam %.5f ens %.5f | vs sin(2pi x) adam %.5f ens %.5f",
                    static_cast<unsigned long long>(seed), adam_test, ens_test, adam_curve, ens_curve);
    }
    const bool ok = test_wins >= kSineWinsNeeded && curve_wins >= kSineWinsNeeded;
    return {ok, fmt("ensemble beats Adam on test MSE in %d/10, on the noiseless curve in %d/10 (need >= %d each)",
                    test_wins, curve_wins, kSineWinsNeeded) +
                    rows};
}

// ---------------------------------------------------------------------------
// 5. Iris ab initio, pooled over replicates

Outcome iris_ab_initio() {
    auto cfg = cli::ExperimentConfig::load(source_dir() / "configs" / "iris_ab_initio.json");
    cfg.replicates = 8;
    // last 10,000 of 25,000 iterations; every 8th, then a 20% subsample: 250 per replicate, 2000 pooled
    cfg.sampling->burn_in = 15000;
    cfg.sampling->stride = 8;
    cfg.sampling->fraction = 0.2;
    cfg.validate();
    const auto ex = cli::prepare(cfg);
    const double T = cfg.simmer->schedule.T_target;

    std::vector<ensemble::EnsembleBundle> bundles;
    for (std::uint32_t r = 0; r < cfg.replicates; ++r) {
        auto start = dynamics::initial_state(cli::initial_params(cfg, ex.topology, r), cfg.integrator(), T,
                                             cfg.replicate_seed(r), r);
        bundles.push_back(cli::simmer_phase(cfg, ex, std::move(start), r).bundle);
    }
    const auto pooled = ensemble::pool(std::move(bundles));
    const double ens_acc = cli::ensemble_test_metric(ex, pooled);
    const double adam_acc = cli::single_test_metric(ex, cli::adam_phase(cfg, ex, 0).final_params);

    const auto& s = ex.feature_scaler;
    const double px = 0.1 * (s.max[0] - s.min[0]), py = 0.1 * (s.max[1] - s.min[1]);
    const auto grid = ensemble::decision_grid(pooled, {s.min[0] - px, s.max[0] + px, s.min[1] - py, s.max[1] + py}, 100);
    double worst = 0.0;
    for (Eigen::Index r = 0; r < grid.proportions.rows(); ++r) {
        worst = std::max(worst, std::abs(grid.proportions.row(r).sum() - 1.0));
    }
    const bool ok = ens_acc >= adam_acc && grid.proportions.rows() == 10000 && worst <= kProportionSumTol;
    return {ok, fmt("%zu members from 8 replicates: ensemble accuracy %.4f vs Adam %.4f; "
                    "100x100 grid max |sum p - 1| = %.2g",
                    pooled.size(), ens_acc, adam_acc, worst)};
}

// ---------------------------------------------------------------------------
// 6. retrofit hand-off

Outcome retrofit_handoff() {
    const auto cfg = cli::ExperimentConfig::load(source_dir() / "configs" / "sine_retrofit.json");
    const auto ex = cli::prepare(cfg);
    const auto report = cli::adam_phase(cfg, ex, 0);
    const auto state = optimize::retrofit_init(report, cfg.adam->learning_rate, cfg.integrator());
    const bool bitwise = state.x.size() == report.final_params.size() &&
                         std::memcmp(state.x.data(), report.final_params.data(), state.x.size() * sizeof(double)) == 0;

    Rng rng(6, StreamPurpose::test);
    const double gamma = 0.002;
    std::vector<double> last(10000), prev(10000);
    for (std::size_t i = 0; i < last.size(); ++i) {
        prev[i] = rng.normal(0.0, 2.0);
        last[i] = prev[i] + gamma * rng.normal();
    }
    const auto v = optimize::velocity_estimate(last, prev, gamma);
    double worst = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        const long double exact = (static_cast<long double>(last[i]) - prev[i]) / gamma;
        worst = std::max(worst, static_cast<double>(std::fabs((v[i] - exact) / exact)));
    }
    bool chain_rest = true;
    for (std::size_t k = 0; k < state.chain.length(); ++k) chain_rest = chain_rest && state.chain.s[k] == 0 && state.chain.v[k] == 0;
    return {bitwise && chain_rest && worst <= kVelocityTol,
            fmt("x == Adam final bit-for-bit: %s; chain at rest: %s; velocity max rel err %.2g (<= %g)",
                bitwise ? "yes" : "no", chain_rest ? "yes" : "no", worst, kVelocityTol)};
}

// ---------------------------------------------------------------------------
// 7. Hessian spectrum

Outcome sloppy_spectrum() {
    const diagnostics::GradientFn quad = [](std::span<const double> x, std::span<double> g) {
        g[0] = x[0];
        g[1] = 100.0 * x[1];
    };
    const auto q = diagnostics::hessian_spectrum(quad, std::vector<double>{0.7, -0.3});
    const double qerr = std::max(std::abs(q.eigenvalues[0] - 100.0), std::abs(q.eigenvalues[1] - 1.0));

    // [1,10,1] tanh network (31 parameters) overfit by Adam on the noisy sine
    auto cfg = cli::ExperimentConfig::load(source_dir() / "configs" / "sine_retrofit.json");
    cfg.network.layers = {1, 10, 1};
    cfg.network.activations = {"tanh", "linear"};
    cfg.validate();
    const auto ex = cli::prepare(cfg);
    const auto report = cli::adam_phase(cfg, ex, 0);
    const auto spec = diagnostics::hessian_spectrum(ex.topology, report.final_params, ex.train, ex.loss);
    const double hi = spec.eigenvalues.front();
    double lo = INFINITY;
    for (double e : spec.eigenvalues) lo = std::min(lo, std::abs(e));
    const bool ok = qerr < kQuadraticTol && spec.spread_decades >= kMinSpreadDecades;
    return {ok, fmt("quadratic {1,100} max error %.2g (< %g); [1,10,1] sine net (%zu params): "
                    "|lambda| from %.3g to %.3g, spread %.2f decades (>= %g)",
                    qerr, kQuadraticTol, report.final_params.size(), lo, hi, spec.spread_decades, kMinSpreadDecades)};
}

// ---------------------------------------------------------------------------
// 8. determinism of run artifacts

Outcome determinism() {
    const auto dir = scratch("determinism");
    auto sine = cli::ExperimentConfig::load(source_dir() / "configs" / "sine_retrofit.json");
    sine.replicates = 2;
    auto iris = cli::ExperimentConfig::load(source_dir() / "configs" / "iris_ab_initio.json");
    iris.replicates = 2;
    iris.simmer->total_iterations = 1500;
    iris.sampling->burn_in = 500;
    iris.validate();

    std::vector<std::string> compared;
    bool same = true;
    for (const char* run : {"a", "b"}) {
        cli::run_retrofit(sine, {dir / "sine" / run, {}, {}, {}});
        cli::run_simmer(iris, {dir / "iris" / run, {}, {}, {}});
    }
    for (const char* kind : {"sine", "iris"}) {
        for (const char* f : {"trajectory_rep000.csv", "trajectory_rep001.csv", "metrics.json", "config.resolved.json",
                              "ensemble/bundle.bin", "ensemble/bundle.json"}) {
            const auto a = slurp(dir / kind / "a" / f), b = slurp(dir / kind / "b" / f);
            same = same && !a.empty() && a == b;
            compared.push_back(std::string(kind) + "/" + f);
        }
    }
    return {same, fmt("%zu artifacts from repeated retrofit and simmer runs are byte-identical: %s", compared.size(),
                      same ? "yes" : "no")};
}

}  // namespace

int main(int argc, char** argv) {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"gradient exactness", gradient_exactness},
        {"canonical sampling", canonical_sampling},
        {"extended-energy stability", energy_stability},
        {"noisy-sine retrofit", sine_retrofit},
        {"iris ab initio", iris_ab_initio},
        {"retrofit hand-off", retrofit_handoff},
        {"sloppy spectrum", sloppy_spectrum},
        {"determinism", determinism},
    };
    std::set<int> only;
    for (int i = 1; i < argc; ++i) only.insert(std::atoi(argv[i]));

    int failures = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        const int id = static_cast<int>(i) + 1;
        if (!only.empty() && !only.count(id)) continue;
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        failures += !o.pass;
        std::printf("%s  %d. %s (%.1fs): %s\n", o.pass ? "PASS" : "FAIL", id, criteria[i].first, secs, o.detail.c_str());
        std::fflush(stdout);
    }
    return failures;
}
