#include "simmer/dynamics.hpp"

#include "simmer/error.hpp"
#include "simmer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace simmer::dynamics {

ThermostatChain::ThermostatChain(std::size_t length, double q)
    : s(length, 0.0), v(length, 0.0), mass(length, q) {}

void PhaseState::validate() const {
    if (v.size() != x.size() || mass.size() != x.size()) {
        throw ShapeError("phase state: x, v and mass must have equal length");
    }
    if (chain.length() == 0 || chain.v.size() != chain.length() ||
        chain.mass.size() != chain.length()) {
        throw ShapeError("phase state: chain arrays must be non-empty and of equal length");
    }
    if (std::any_of(mass.begin(), mass.end(), [](double m) { return !(m > 0.0); })) {
        throw InvalidArgument("phase state: particle masses must be positive");
    }
    if (std::any_of(chain.mass.begin(), chain.mass.end(), [](double q) { return !(q > 0.0); })) {
        throw InvalidArgument("phase state: thermostat masses must be positive");
    }
}

TemperatureSchedule TemperatureSchedule::fixed(double T) {
    TemperatureSchedule s;
    s.T_initial = T;
    s.T_target = T;
    s.constant = true;
    return s;
}

TemperatureSchedule TemperatureSchedule::ramp(double T_initial, double T_target, double delta_T,
                                              std::int64_t hold_iterations) {
    TemperatureSchedule s;
    s.T_initial = T_initial;
    s.T_target = T_target;
    s.delta_T = delta_T;
    s.hold_iterations = hold_iterations;
    s.constant = false;
    s.validate();
    return s;
}

void TemperatureSchedule::validate() const {
    if (!(T_initial >= 0.0) || !(T_target >= 0.0)) throw InvalidArgument("temperatures must be >= 0");
    if (constant) return;
    if (!(delta_T > 0.0)) throw InvalidArgument("schedule delta_T must be > 0");
    if (hold_iterations < 1) throw InvalidArgument("schedule hold_iterations must be >= 1");
    if (T_initial > T_target) throw InvalidArgument("ramp schedules must be non-decreasing");
}

double schedule_at(const TemperatureSchedule& schedule, std::int64_t iteration) {
    if (schedule.constant) return schedule.T_target;
    const auto steps = static_cast<double>(std::max<std::int64_t>(iteration, 0) / schedule.hold_iterations);
    return std::min(schedule.T_target, schedule.T_initial + schedule.delta_T * steps);
}

void IntegratorConfig::validate() const {
    if (!(dt > 0.0)) throw InvalidArgument("time step must be > 0");
    if (chain_length < 1) throw InvalidArgument("chain length must be >= 1");
    if (!(chain_mass > 0.0) || !(particle_mass > 0.0)) throw InvalidArgument("masses must be > 0");
    schedule.validate();
}

std::vector<double> accel_real(std::span<const double> gradient, std::span<const double> masses) {
    if (gradient.size() != masses.size()) throw ShapeError("accel_real: length mismatch");
    std::vector<double> a(gradient.size());
    for (std::size_t i = 0; i < a.size(); ++i) a[i] = -gradient[i] / masses[i];
    return a;
}

double accel_chain_first(std::span<const double> v, std::span<const double> masses, double T_target,
                         double q1) {
    double twice_ke = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) twice_ke += masses[i] * v[i] * v[i];
    return (twice_ke - static_cast<double>(v.size()) * T_target) / q1;
}

double accel_chain_k(const ThermostatChain& chain, std::size_t k, double T_target) {
    if (k < 2 || k > chain.length()) {
        throw InvalidArgument("accel_chain_k: k=" + std::to_string(k) + " outside [2, " +
                              std::to_string(chain.length()) + "]");
    }
    const std::size_t j = k - 1;
    return (chain.mass[j - 1] * chain.v[j - 1] * chain.v[j - 1] - T_target) / chain.mass[j];
}

namespace {

double chain_accel(const PhaseState& st, std::size_t j, double T) {
    if (j == 0) return accel_chain_first(st.v, st.mass, T, st.chain.mass[0]);
    return accel_chain_k(st.chain, j + 1, T);
}

double next_velocity(const ThermostatChain& c, std::size_t j) {
    return j + 1 < c.length() ? c.v[j + 1] : 0.0;
}

// v <- v e^{-h c} + h a e^{-h c / 2}
double damped_kick(double v, double a, double c, double h) {
    return v * std::exp(-h * c) + h * a * std::exp(-0.5 * h * c);
}

bool finite(std::span<const double> v) {
    return std::all_of(v.begin(), v.end(), [](double x) { return std::isfinite(x); });
}

}  // namespace

void nhc_step(PhaseState& st, const GradientFn& grad_fn, const IntegratorConfig& config,
              double T) {
    const double dt = config.dt;
    const double half = 0.5 * dt;
    const std::size_t n = st.size();
    ThermostatChain& c = st.chain;
    const std::size_t nc = c.length();

    // (1) position-like half step
    for (std::size_t i = 0; i < n; ++i) st.x[i] += half * st.v[i];
    for (std::size_t j = 1; j < nc; j += 2) c.s[j] += half * c.v[j];
    for (std::size_t j = 0; j < nc; j += 2) {
        c.v[j] = damped_kick(c.v[j], chain_accel(st, j, T), next_velocity(c, j), half);
    }

    // (2) velocity-like full step, force at the half-step positions
    std::vector<double> grad(n, 0.0);
    grad_fn(st.x, grad);
    const double friction = c.v[0];
    const double decay = std::exp(-dt * friction);
    const double kick_decay = std::exp(-half * friction);
    for (std::size_t i = 0; i < n; ++i) {
        const double a = -grad[i] / st.mass[i];
        st.v[i] = st.v[i] * decay + dt * a * kick_decay;
    }
    for (std::size_t j = 0; j < nc; j += 2) c.s[j] += dt * c.v[j];
    for (std::size_t j = 1; j < nc; j += 2) {
        c.v[j] = damped_kick(c.v[j], chain_accel(st, j, T), next_velocity(c, j), dt);
    }

    // (3) position-like completion
    for (std::size_t i = 0; i < n; ++i) st.x[i] += half * st.v[i];
    for (std::size_t j = 1; j < nc; j += 2) c.s[j] += half * c.v[j];
    for (std::size_t j = 0; j < nc; j += 2) {
        c.v[j] = damped_kick(c.v[j], chain_accel(st, j, T), next_velocity(c, j), half);
    }

    if (!finite(st.x) || !finite(st.v) || !finite(c.s) || !finite(c.v)) {
        throw NonFiniteError("non-finite phase state at step " + std::to_string(st.step), st.step);
    }
    ++st.step;
}

double kinetic_temperature(const PhaseState& st) {
    if (st.size() == 0) return 0.0;
    double acc = 0.0;
    for (std::size_t i = 0; i < st.size(); ++i) acc += st.mass[i] * st.v[i] * st.v[i];
    return acc / static_cast<double>(st.size());
}

double extended_energy(const PhaseState& st, double loss_value, double T_target) {
    double kinetic = 0.0;
    for (std::size_t i = 0; i < st.size(); ++i) kinetic += 0.5 * st.mass[i] * st.v[i] * st.v[i];
    const ThermostatChain& c = st.chain;
    double chain_kinetic = 0.0;
    double chain_potential = 0.0;
    for (std::size_t j = 0; j < c.length(); ++j) {
        chain_kinetic += 0.5 * c.mass[j] * c.v[j] * c.v[j];
        chain_potential += (j == 0 ? static_cast<double>(st.size()) : 1.0) * T_target * c.s[j];
    }
    return kinetic + loss_value + chain_kinetic + chain_potential;
}

PhaseState initial_state(ParamVector x0, const IntegratorConfig& config, double T,
                         std::uint64_t velocity_seed, std::uint32_t replicate) {
    config.validate();
    PhaseState st;
    const std::size_t n = x0.size();
    st.x = std::move(x0);
    st.mass.assign(n, config.particle_mass);
    st.v.assign(n, 0.0);
    if (T > 0.0) {
        Rng rng(velocity_seed, StreamPurpose::velocities, replicate);
        const double sd = std::sqrt(T / config.particle_mass);
        for (auto& vi : st.v) vi = rng.normal(0.0, sd);
    }
    st.chain = ThermostatChain(config.chain_length, config.chain_mass);
    return st;
}

}  // namespace simmer::dynamics
