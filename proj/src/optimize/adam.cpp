#include "simmer/optimize.hpp"

#include "simmer/error.hpp"

#include <cmath>
#include <string>

namespace simmer::optimize {

void adam_step(std::span<double> params, std::span<const double> gradient, AdamState& s) {
    if (gradient.size() != params.size() || s.m.size() != params.size() || s.v.size() != params.size()) {
        throw ShapeError("adam_step: length mismatch");
    }
    ++s.t;
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.t));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.t));
    for (std::size_t i = 0; i < params.size(); ++i) {
        const double g = gradient[i];
        s.m[i] = s.beta1 * s.m[i] + (1.0 - s.beta1) * g;
        s.v[i] = s.beta2 * s.v[i] + (1.0 - s.beta2) * g * g;
        const double m_hat = s.m[i] / c1;
        const double v_hat = s.v[i] / c2;
        params[i] -= s.alpha * m_hat / (std::sqrt(v_hat) + s.epsilon);
    }
}

TrainReport train_adam(const net::Topology& topology, ParamVector params0, const net::Batch& train,
                       const net::Batch* test, net::LossKind loss, std::int64_t epochs, double alpha) {
    if (epochs < 2) throw InvalidArgument("train_adam: epochs must be >= 2");
    if (!(alpha > 0.0)) throw InvalidArgument("train_adam: learning rate must be > 0");

    TrainReport report;
    report.train_loss.reserve(static_cast<std::size_t>(epochs));
    if (test) report.test_loss.reserve(static_cast<std::size_t>(epochs));

    ParamVector x = std::move(params0);
    ParamVector grad(x.size(), 0.0);
    AdamState state(x.size(), alpha);
    for (std::int64_t epoch = 0; epoch < epochs; ++epoch) {
        try {
            net::loss_and_gradient(topology, x, train, loss, grad);
        } catch (const NonFiniteError& e) {
            throw NonFiniteError(std::string("adam diverged at epoch ") + std::to_string(epoch) + ": " +
                                     e.what(),
                                 epoch);
        }
        if (epoch == epochs - 1) report.previous_params = x;
        adam_step(x, grad, state);

        const double tr = net::batch_loss(topology, x, train, loss);
        if (!std::isfinite(tr)) {
            throw NonFiniteError("adam diverged at epoch " + std::to_string(epoch), epoch);
        }
        report.train_loss.push_back(tr);
        if (test) report.test_loss.push_back(net::batch_loss(topology, x, *test, loss));
    }
    report.final_params = std::move(x);
    return report;
}

std::vector<double> velocity_estimate(std::span<const double> x_last, std::span<const double> x_prev,
                                      double gamma) {
    if (!(gamma > 0.0)) throw InvalidArgument("velocity_estimate: gamma must be > 0");
    if (x_last.size() != x_prev.size()) throw ShapeError("velocity_estimate: length mismatch");
    std::vector<double> v(x_last.size());
    for (std::size_t i = 0; i < v.size(); ++i) v[i] = (x_last[i] - x_prev[i]) / gamma;
    return v;
}

dynamics::PhaseState retrofit_init(const TrainReport& report, double gamma,
                                   const dynamics::IntegratorConfig& config) {
    if (report.final_params.empty() || report.previous_params.size() != report.final_params.size()) {
        throw InvalidArgument("retrofit_init: train report is missing its final snapshots");
    }
    config.validate();
    dynamics::PhaseState st;
    st.x = report.final_params;
    st.v = velocity_estimate(report.final_params, report.previous_params, gamma);
    st.mass.assign(st.x.size(), config.particle_mass);
    st.chain = dynamics::ThermostatChain(config.chain_length, config.chain_mass);
    return st;
}

}  // namespace simmer::optimize
