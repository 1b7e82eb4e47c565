#pragma once

// Full-batch Adam baseline and the hand-off from an optimizer endpoint to the
// thermostat (retrofitting).

#include "simmer/dynamics.hpp"
#include "simmer/net.hpp"

#include <cstdint>
#include <span>
#include <vector>

namespace simmer::optimize {

struct AdamState {
    std::vector<double> m;
    std::vector<double> v;
    std::int64_t t = 0;
    double alpha = 0.002;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;

    AdamState() = default;
    AdamState(std::size_t n, double learning_rate) : m(n, 0.0), v(n, 0.0), alpha(learning_rate) {}
};

/// Bias-corrected Adam update of `params` in place.
void adam_step(std::span<double> params, std::span<const double> gradient, AdamState& state);

struct TrainReport {
    std::vector<double> train_loss;  // one entry per epoch, evaluated after the update
    std::vector<double> test_loss;   // empty when no test batch was given
    ParamVector final_params;
    ParamVector previous_params;  // parameters one epoch before final_params
};

/// `epochs` full-batch Adam steps (epoch == iteration). Requires epochs >= 2.
/// Throws NonFiniteError carrying the epoch index if the loss diverges.
TrainReport train_adam(const net::Topology& topology, ParamVector params0, const net::Batch& train,
                       const net::Batch* test, net::LossKind loss, std::int64_t epochs, double alpha);

/// v_i = (x_last_i - x_prev_i) / gamma
std::vector<double> velocity_estimate(std::span<const double> x_last, std::span<const double> x_prev,
                                      double gamma);

/// Phase state at the optimizer endpoint: x = final params (bit-for-bit),
/// v from the last two snapshots, chain at rest.
dynamics::PhaseState retrofit_init(const TrainReport& report, double gamma,
                                   const dynamics::IntegratorConfig& config);

}  // namespace simmer::optimize
