// Parallel (OpenMP + Eigen) kernels against the serial per-sample reference.

#include "simmer/net.hpp"
#include "simmer/net_reference.hpp"
#include "simmer/rng.hpp"

#include <benchmark/benchmark.h>

using namespace simmer;

namespace {

struct Case {
    net::Topology topology;
    ParamVector params;
    net::Batch batch;
};

Case make_case(std::vector<std::size_t> sizes, Eigen::Index rows) {
    std::vector<net::Activation> acts(sizes.size() - 1, net::Activation::tanh);
    acts.back() = net::Activation::linear;
    Case c{net::Topology(sizes, acts), {}, {}};
    c.params = net::init_glorot_normal(c.topology, 1);
    Rng rng(1, StreamPurpose::test);
    c.batch.inputs.resize(rows, static_cast<Eigen::Index>(sizes.front()));
    for (Eigen::Index i = 0; i < c.batch.inputs.size(); ++i) c.batch.inputs.data()[i] = rng.uniform() * 2 - 1;
    c.batch.targets = Matrix::Zero(rows, static_cast<Eigen::Index>(sizes.back()));
    for (Eigen::Index r = 0; r < rows; ++r) c.batch.targets(r, r % c.batch.targets.cols()) = 1.0;
    return c;
}

// iris-sized network on the iris training set, and a wider batch
const Case& iris() {
    static const Case c = make_case({2, 100, 50, 50, 3}, 112);
    return c;
}
const Case& wide() {
    static const Case c = make_case({6, 64, 64, 1}, 4096);
    return c;
}

void BM_forward_parallel(benchmark::State& st, const Case& (*get)()) {
    const auto& c = get();
    for (auto _ : st) benchmark::DoNotOptimize(net::forward(c.topology, c.params, c.batch.inputs));
}
void BM_forward_reference(benchmark::State& st, const Case& (*get)()) {
    const auto& c = get();
    for (auto _ : st) benchmark::DoNotOptimize(net::reference::forward(c.topology, c.params, c.batch.inputs));
}
void BM_gradient_parallel(benchmark::State& st, const Case& (*get)()) {
    const auto& c = get();
    std::vector<double> g(c.topology.param_count());
    for (auto _ : st) {
        benchmark::DoNotOptimize(
            net::loss_and_gradient(c.topology, c.params, c.batch, net::LossKind::categorical_cross_entropy, g));
    }
}
void BM_gradient_reference(benchmark::State& st, const Case& (*get)()) {
    const auto& c = get();
    std::vector<double> g(c.topology.param_count());
    for (auto _ : st) {
        benchmark::DoNotOptimize(net::reference::loss_and_gradient(c.topology, c.params, c.batch,
                                                                   net::LossKind::categorical_cross_entropy, g));
    }
}

}  // namespace

BENCHMARK_CAPTURE(BM_forward_parallel, iris, iris);
BENCHMARK_CAPTURE(BM_forward_reference, iris, iris);
BENCHMARK_CAPTURE(BM_gradient_parallel, iris, iris);
BENCHMARK_CAPTURE(BM_gradient_reference, iris, iris);
BENCHMARK_CAPTURE(BM_forward_parallel, wide, wide);
BENCHMARK_CAPTURE(BM_forward_reference, wide, wide);
BENCHMARK_CAPTURE(BM_gradient_parallel, wide, wide);
BENCHMARK_CAPTURE(BM_gradient_reference, wide, wide);

BENCHMARK_MAIN();
