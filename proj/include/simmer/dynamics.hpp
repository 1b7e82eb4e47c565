#pragma once

// Nosé-Hoover chain dynamics over a system of unit-dimensional particles
// (the network parameters), integrated with a symmetric three-stage Trotter
// splitting. Chain indices in comments are 1-based (s_1 couples to the
// particles); storage is 0-based.
//
// Phase-space split:
//   position-like  {x_i, s_2k, v_s(2k-1)}   advanced by half steps
//   velocity-like  {v_i, s_(2k-1), v_s(2k)} advanced by full steps
// A chain neighbour past the end has zero velocity.

#include "simmer/net.hpp"

#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace simmer::dynamics {

struct ThermostatChain {
    std::vector<double> s;     // positions
    std::vector<double> v;     // velocities
    std::vector<double> mass;  // Q_k > 0

    ThermostatChain() = default;
    /// Zero positions and velocities, all masses `q`.
    ThermostatChain(std::size_t length, double q);

    std::size_t length() const noexcept { return s.size(); }
};

struct PhaseState {
    ParamVector x;
    std::vector<double> v;
    std::vector<double> mass;
    ThermostatChain chain;
    std::int64_t step = 0;

    std::size_t size() const noexcept { return x.size(); }
    /// Throws ShapeError / InvalidArgument when the invariants do not hold.
    void validate() const;
};

/// Step-wise temperature ramp; `constant` schedules always return T_target.
struct TemperatureSchedule {
    double T_initial = 0.0;
    double T_target = 0.0;
    double delta_T = 1.0;
    std::int64_t hold_iterations = 1;
    bool constant = true;

    static TemperatureSchedule fixed(double T);
    static TemperatureSchedule ramp(double T_initial, double T_target, double delta_T,
                                    std::int64_t hold_iterations);
    void validate() const;
};

double schedule_at(const TemperatureSchedule& schedule, std::int64_t iteration);

struct IntegratorConfig {
    double dt = 0.002;           // equals the learning rate
    std::size_t chain_length = 2;
    double chain_mass = 1.0;     // Q_k
    double particle_mass = 1.0;  // m_i
    TemperatureSchedule schedule;

    void validate() const;
};

/// Writes dL/dx at `x` into `grad`.
using GradientFn = std::function<void(std::span<const double> x, std::span<double> grad)>;

/// a_i = -(1/m_i) dL/dx_i
std::vector<double> accel_real(std::span<const double> gradient, std::span<const double> masses);

/// a_s1 = (sum_i m_i v_i^2 - N T) / Q_1
double accel_chain_first(std::span<const double> v, std::span<const double> masses, double T_target,
                         double q1);

/// a_sk = (Q_(k-1) v_s(k-1)^2 - T) / Q_k for 2 <= k <= N_c (k is 1-based).
double accel_chain_k(const ThermostatChain& chain, std::size_t k, double T_target);

/// One integration step at temperature T_current. Exactly one call to grad_fn,
/// at the half-step positions. Throws NonFiniteError (carrying the step index)
/// if the new state is not finite.
void nhc_step(PhaseState& state, const GradientFn& grad_fn, const IntegratorConfig& config,
              double T_current);

/// (1/N) sum_i m_i v_i^2
double kinetic_temperature(const PhaseState& state);

/// Conserved quantity of the coupled system with N degrees of freedom:
/// sum p_i^2/2m_i + L + sum p_k^2/2Q_k + N T s_1 + T sum_{k>=2} s_k.
double extended_energy(const PhaseState& state, double loss_value, double T_target);

/// Fresh state: positions x0, velocities ~ N(0, sqrt(T/m)), chain at rest.
PhaseState initial_state(ParamVector x0, const IntegratorConfig& config, double T,
                         std::uint64_t velocity_seed, std::uint32_t replicate = 0);

}  // namespace simmer::dynamics
