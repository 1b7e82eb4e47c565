#include "helpers.hpp"

#include "simmer/data.hpp"
#include "simmer/error.hpp"
#include "simmer/optimize.hpp"

#include <doctest.h>

#include <cmath>
#include <cstring>

using namespace simmer;
using namespace simmer::optimize;

TEST_CASE("adam with zero gradient is the identity") {
    std::vector<double> p{0.3, -1.2, 4.0};
    const auto p0 = p;
    AdamState st(3, 0.002);
    for (int t = 0; t < 50; ++t) adam_step(p, std::vector<double>(3, 0.0), st);
    CHECK(p == p0);
}

TEST_CASE("adam first step") {
    std::vector<double> p(4, 1.0);
    AdamState st(4, 0.002);
    adam_step(p, std::vector<double>(4, 1.0), st);
    // m_hat = 1, v_hat = 1 -> step alpha / (1 + eps)
    for (double x : p) CHECK(x == doctest::Approx(1.0 - 0.002 / (1.0 + 1e-8)).epsilon(1e-15));

    std::vector<double> a{0.0, 0.0}, b{0.0, 0.0};
    AdamState sa(2, 0.01), sb(2, 0.01);
    adam_step(a, std::vector<double>{0.7, -2.0}, sa);
    adam_step(b, std::vector<double>{-0.7, 2.0}, sb);
    CHECK(a[0] == -b[0]);
    CHECK(a[1] == -b[1]);
}

TEST_CASE("adam converges on (x - 3)^2") {
    std::vector<double> x{0.0};
    AdamState st(1, 0.002);
    for (int t = 0; t < 20000; ++t) adam_step(x, std::vector<double>{2.0 * (x[0] - 3.0)}, st);
    CHECK(std::abs(x[0] - 3.0) < 1e-3);
}

TEST_CASE("velocity estimate") {
    CHECK(velocity_estimate(std::vector<double>{1.5}, std::vector<double>{1.5}, 0.002)[0] == 0.0);
    CHECK(velocity_estimate(std::vector<double>{1.002}, std::vector<double>{1.0}, 0.002)[0] ==
          doctest::Approx(1.0).epsilon(1e-12));
    const auto v1 = velocity_estimate(std::vector<double>{0.4}, std::vector<double>{0.1}, 0.01);
    const auto v3 = velocity_estimate(std::vector<double>{1.2}, std::vector<double>{0.3}, 0.01);
    CHECK(v3[0] == doctest::Approx(3 * v1[0]).epsilon(1e-14));
    CHECK_THROWS_AS(velocity_estimate(std::vector<double>{1.0}, std::vector<double>{1.0, 2.0}, 0.1), ShapeError);
    CHECK_THROWS_AS(velocity_estimate(std::vector<double>{1.0}, std::vector<double>{1.0}, 0.0), InvalidArgument);
}

TEST_CASE("train_adam on the noisy sine") {
    const auto ds = data::gen_noisy_sine(101, 0.1, 1);
    const auto sp = data::split(ds, 65, 1);
    const auto sc = data::minmax_fit(ds, sp);
    net::Topology t({1, 20, 20, 1}, {net::Activation::tanh, net::Activation::tanh, net::Activation::linear});
    net::Batch train, test;
    train.inputs = data::minmax_apply(sc, data::select_rows(ds.features, sp.train));
    train.targets = data::select_rows(ds.targets, sp.train);
    test.inputs = data::minmax_apply(sc, data::select_rows(ds.features, sp.test));
    test.targets = data::select_rows(ds.targets, sp.test);
    const auto p0 = net::init_glorot_normal(t, 1);
    const auto r = train_adam(t, p0, train, &test, net::LossKind::mse, 2000, 0.002);
    CHECK(r.train_loss.size() == 2000);
    CHECK(r.test_loss.size() == 2000);
    CHECK(r.train_loss.back() < r.train_loss.front());
    // per-sample train error ends below per-sample test error
    CHECK(r.train_loss.back() < r.test_loss.back());
    CHECK(r.final_params != r.previous_params);

    const auto again = train_adam(t, p0, train, &test, net::LossKind::mse, 2000, 0.002);
    CHECK(again.final_params == r.final_params);
    CHECK(again.train_loss == r.train_loss);

    CHECK_THROWS_AS(train_adam(t, p0, train, nullptr, net::LossKind::mse, 1, 0.002), InvalidArgument);
}

TEST_CASE("train_adam with a constant loss returns the start") {
    net::Topology t({1, 1}, {net::Activation::linear});
    net::Batch b;
    b.inputs = Matrix::Zero(3, 1);
    b.targets = Matrix::Zero(3, 1);
    const ParamVector p0{0.7, 0.0};  // output is always 0 == target
    const auto r = train_adam(t, p0, b, nullptr, net::LossKind::sse, 5, 0.1);
    CHECK(r.final_params == p0);
    CHECK(r.test_loss.empty());
}

TEST_CASE("retrofit handoff") {
    TrainReport r;
    r.final_params = {0.1 + 0.2, -1.0 / 3.0, 7e-300};
    r.previous_params = {0.3, -0.3333, 7e-300};
    dynamics::IntegratorConfig cfg;
    cfg.chain_length = 3;
    const auto s = retrofit_init(r, 0.002, cfg);
    REQUIRE(s.x.size() == 3);
    for (std::size_t i = 0; i < 3; ++i) CHECK(std::memcmp(&s.x[i], &r.final_params[i], sizeof(double)) == 0);
    CHECK(s.v[2] == 0.0);
    CHECK(s.chain.length() == 3);
    for (std::size_t k = 0; k < 3; ++k) {
        CHECK(s.chain.s[k] == 0.0);
        CHECK(s.chain.v[k] == 0.0);
    }

    TrainReport still;
    still.final_params = {1.0, 2.0};
    still.previous_params = {1.0, 2.0};
    const auto z = retrofit_init(still, 0.002, cfg);
    CHECK(z.v == std::vector<double>{0.0, 0.0});
}

TEST_CASE("the first simmering gradient is taken after the half-step drift") {
    TrainReport r;
    r.final_params = {0.5};
    r.previous_params = {0.498};
    dynamics::IntegratorConfig cfg;
    cfg.dt = 0.002;
    auto s = retrofit_init(r, 0.002, cfg);
    double seen = 0.0;
    dynamics::nhc_step(
        s,
        [&](std::span<const double> x, std::span<double> g) {
            seen = x[0];
            g[0] = 0.0;
        },
        cfg, 0.0);
    CHECK(seen == doctest::Approx(0.5 + 0.001 * 1.0).epsilon(1e-12));
}
