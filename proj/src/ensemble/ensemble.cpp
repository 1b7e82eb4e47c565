#include "simmer/ensemble.hpp"

#include "simmer/error.hpp"
#include "simmer/rng.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <unordered_map>

namespace simmer::ensemble {

namespace {

// members are processed in fixed-size chunks; partial results are combined in
// chunk order so the outcome does not depend on scheduling
constexpr std::size_t kMemberChunk = 16;

std::size_t chunk_count(std::size_t n) { return (n + kMemberChunk - 1) / kMemberChunk; }

void require_members(const EnsembleBundle& b) {
    if (b.members.empty()) throw InvalidArgument("ensemble bundle is empty");
}

void require_classifier(const EnsembleBundle& b) {
    require_members(b);
    if (b.task != data::TaskKind::classification) throw InvalidArgument("bundle is not a classifier");
}

}  // namespace

void SamplingPlan::validate() const {
    if (total_iterations < 1) throw InvalidArgument("sampling: total_iterations must be >= 1");
    if (burn_in < 0 || burn_in >= total_iterations) {
        throw InvalidArgument("sampling: burn_in must be in [0, total_iterations)");
    }
    if (stride < 1) throw InvalidArgument("sampling: stride must be >= 1");
    if (!(fraction > 0.0 && fraction <= 1.0)) throw InvalidArgument("sampling: fraction must be in (0, 1]");
}

std::vector<std::int64_t> SamplingPlan::selected_iterations() const {
    validate();
    std::vector<std::int64_t> candidates;
    for (std::int64_t it = burn_in; it < total_iterations; it += stride) candidates.push_back(it);
    if (fraction < 1.0) {
        const auto keep = static_cast<std::size_t>(std::llround(fraction * static_cast<double>(candidates.size())));
        Rng rng(seed, StreamPurpose::sampling);
        // partial Fisher-Yates: the first `keep` slots become a uniform subset
        for (std::size_t i = 0; i < keep; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(rng.below(candidates.size() - i));
            std::swap(candidates[i], candidates[j]);
        }
        candidates.resize(keep);
        std::sort(candidates.begin(), candidates.end());
    }
    if (candidates.empty()) throw InvalidArgument("sampling plan selects no iterations");
    return candidates;
}

std::size_t EnsembleBundle::class_count() const {
    const std::size_t k = topology.output_size();
    return k == 1 ? 2 : k;
}

void EnsembleBundle::validate() const {
    require_members(*this);
    for (const auto& m : members) {
        if (m.params.size() != topology.param_count()) {
            throw ShapeError("ensemble member at iteration " + std::to_string(m.iteration) +
                             " has the wrong parameter count");
        }
        if (!(m.temperature >= 0.0)) throw InvalidArgument("ensemble member temperature must be >= 0");
    }
}

EnsembleBundle collect(const Trajectory& trajectory, const SamplingPlan& plan,
                       const net::Topology& topology, const data::ScalerParams& feature_scaler,
                       const std::optional<data::ScalerParams>& target_scaler,
                       data::TaskKind task) {
    plan.validate();
    if (static_cast<std::int64_t>(trajectory.records.size()) < plan.burn_in + 1) {
        throw InvalidArgument("collect: trajectory has " + std::to_string(trajectory.records.size()) +
                              " records, burn-in needs at least " + std::to_string(plan.burn_in + 1));
    }
    std::unordered_map<std::int64_t, const Snapshot*> by_iteration;
    for (const auto& s : trajectory.snapshots) by_iteration.emplace(s.iteration, &s);

    EnsembleBundle b;
    b.topology = topology;
    b.feature_scaler = feature_scaler;
    b.target_scaler = target_scaler;
    b.task = task;
    for (auto it : plan.selected_iterations()) {
        if (it >= static_cast<std::int64_t>(trajectory.records.size())) break;
        const auto found = by_iteration.find(it);
        if (found == by_iteration.end()) {
            throw InvalidArgument("collect: no snapshot retained for iteration " + std::to_string(it));
        }
        b.members.push_back(*found->second);
    }
    if (b.members.empty()) throw InvalidArgument("collect: empty selection");
    b.validate();
    return b;
}

EnsembleBundle pool(std::span<const EnsembleBundle> bundles) {
    if (bundles.empty()) throw InvalidArgument("pool: no bundles");
    EnsembleBundle out = bundles.front();
    out.members.clear();
    for (const auto& b : bundles) {
        if (!(b.topology == out.topology) || b.task != out.task) {
            throw InvalidArgument("pool: bundles disagree on topology or task");
        }
        out.members.insert(out.members.end(), b.members.begin(), b.members.end());
    }
    out.validate();
    return out;
}

EnsembleBundle pool(std::vector<EnsembleBundle>&& bundles) {
    if (bundles.empty()) throw InvalidArgument("pool: no bundles");
    EnsembleBundle out = std::move(bundles.front());
    for (std::size_t i = 1; i < bundles.size(); ++i) {
        auto& b = bundles[i];
        if (!(b.topology == out.topology) || b.task != out.task) {
            throw InvalidArgument("pool: bundles disagree on topology or task");
        }
        out.members.insert(out.members.end(), std::make_move_iterator(b.members.begin()),
                           std::make_move_iterator(b.members.end()));
        b.members.clear();
        b.members.shrink_to_fit();
    }
    bundles.clear();
    out.validate();
    return out;
}

Matrix member_predict(const EnsembleBundle& bundle, std::size_t member, const Matrix& inputs) {
    const Matrix scaled = data::minmax_apply(bundle.feature_scaler, inputs);
    Matrix out = net::forward(bundle.topology, bundle.members.at(member).params, scaled);
    if (bundle.target_scaler) out = data::minmax_invert(*bundle.target_scaler, out);
    return out;
}

Matrix regression_mean(const EnsembleBundle& bundle, const Matrix& inputs) {
    require_members(bundle);
    const std::size_t n = bundle.size();
    const std::size_t nchunks = chunk_count(n);
    const Matrix scaled = data::minmax_apply(bundle.feature_scaler, inputs);
    const auto K = static_cast<Eigen::Index>(bundle.topology.output_size());
    std::vector<Matrix> partial(nchunks, Matrix::Zero(inputs.rows(), K));

#pragma omp parallel for schedule(dynamic)
    for (std::size_t c = 0; c < nchunks; ++c) {
        const std::size_t end = std::min(n, (c + 1) * kMemberChunk);
        for (std::size_t m = c * kMemberChunk; m < end; ++m) {
            Matrix out = net::forward(bundle.topology, bundle.members[m].params, scaled);
            if (bundle.target_scaler) out = data::minmax_invert(*bundle.target_scaler, out);
            partial[c] += out;
        }
    }
    Matrix sum = Matrix::Zero(inputs.rows(), K);
    for (const auto& p : partial) sum += p;
    return sum / static_cast<double>(n);
}

PredictionDistribution regression_distribution(const EnsembleBundle& bundle,
                                               std::span<const double> input) {
    require_members(bundle);
    Matrix point(1, static_cast<Eigen::Index>(input.size()));
    for (std::size_t i = 0; i < input.size(); ++i) point(0, static_cast<Eigen::Index>(i)) = input[i];

    PredictionDistribution d;
    const auto K = static_cast<Eigen::Index>(bundle.topology.output_size());
    d.values.resize(static_cast<Eigen::Index>(bundle.size()), K);
#pragma omp parallel for schedule(static)
    for (std::size_t m = 0; m < bundle.size(); ++m) {
        d.values.row(static_cast<Eigen::Index>(m)) = member_predict(bundle, m, point).row(0);
    }
    // same chunked order as regression_mean so the two agree bit-for-bit
    d.mean.assign(static_cast<std::size_t>(K), 0.0);
    for (std::size_t c = 0; c < chunk_count(bundle.size()); ++c) {
        std::vector<double> part(static_cast<std::size_t>(K), 0.0);
        const std::size_t end = std::min(bundle.size(), (c + 1) * kMemberChunk);
        for (std::size_t m = c * kMemberChunk; m < end; ++m) {
            for (Eigen::Index k = 0; k < K; ++k) part[k] += d.values(static_cast<Eigen::Index>(m), k);
        }
        for (Eigen::Index k = 0; k < K; ++k) d.mean[k] += part[k];
    }
    for (auto& v : d.mean) v /= static_cast<double>(bundle.size());
    return d;
}

std::vector<int> decide_classes(const Matrix& outputs) {
    std::vector<int> labels(static_cast<std::size_t>(outputs.rows()));
    for (Eigen::Index r = 0; r < outputs.rows(); ++r) {
        if (outputs.cols() == 1) {
            labels[r] = outputs(r, 0) > 0.0 ? 1 : 0;
            continue;
        }
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < outputs.cols(); ++k) {
            if (outputs(r, k) > outputs(r, best)) best = k;
        }
        labels[r] = static_cast<int>(best);
    }
    return labels;
}

Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> vote_counts(
    const EnsembleBundle& bundle, const Matrix& inputs) {
    require_classifier(bundle);
    using Counts = Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
    const auto C = static_cast<Eigen::Index>(bundle.class_count());
    const Matrix scaled = data::minmax_apply(bundle.feature_scaler, inputs);
    const std::size_t nchunks = chunk_count(bundle.size());
    std::vector<Counts> partial(nchunks, Counts::Zero(inputs.rows(), C));

#pragma omp parallel for schedule(dynamic)
    for (std::size_t c = 0; c < nchunks; ++c) {
        const std::size_t end = std::min(bundle.size(), (c + 1) * kMemberChunk);
        for (std::size_t m = c * kMemberChunk; m < end; ++m) {
            const auto labels = decide_classes(net::forward(bundle.topology, bundle.members[m].params, scaled));
            for (std::size_t r = 0; r < labels.size(); ++r) ++partial[c](static_cast<Eigen::Index>(r), labels[r]);
        }
    }
    Counts total = Counts::Zero(inputs.rows(), C);
    for (const auto& p : partial) total += p;
    return total;
}

std::vector<int> majority_vote(const EnsembleBundle& bundle, const Matrix& inputs) {
    const auto counts = vote_counts(bundle, inputs);
    std::vector<int> out(static_cast<std::size_t>(counts.rows()));
    for (Eigen::Index r = 0; r < counts.rows(); ++r) {
        Eigen::Index best = 0;
        for (Eigen::Index k = 1; k < counts.cols(); ++k) {
            if (counts(r, k) > counts(r, best)) best = k;
        }
        out[r] = static_cast<int>(best);
    }
    return out;
}

Matrix vote_proportions(const EnsembleBundle& bundle, const Matrix& inputs) {
    return vote_counts(bundle, inputs).cast<double>() / static_cast<double>(bundle.size());
}

DecisionGrid decision_grid(const EnsembleBundle& bundle, const GridBounds& bounds,
                           std::size_t resolution) {
    require_classifier(bundle);
    if (bundle.topology.input_size() != 2) {
        throw InvalidArgument("decision_grid needs a 2-feature network, this one takes " +
                              std::to_string(bundle.topology.input_size()));
    }
    if (resolution < 1) throw InvalidArgument("decision_grid: resolution must be >= 1");
    auto axis = [resolution](double lo, double hi) {
        std::vector<double> a(resolution);
        if (resolution == 1) {
            a[0] = 0.5 * (lo + hi);
            return a;
        }
        for (std::size_t i = 0; i < resolution; ++i) {
            a[i] = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(resolution - 1);
        }
        return a;
    };
    DecisionGrid g;
    g.xs = axis(bounds.x_min, bounds.x_max);
    g.ys = axis(bounds.y_min, bounds.y_max);
    g.points.resize(static_cast<Eigen::Index>(resolution * resolution), 2);
    for (std::size_t iy = 0; iy < resolution; ++iy) {
        for (std::size_t ix = 0; ix < resolution; ++ix) {
            const auto r = static_cast<Eigen::Index>(iy * resolution + ix);
            g.points(r, 0) = g.xs[ix];
            g.points(r, 1) = g.ys[iy];
        }
    }
    g.proportions = vote_proportions(bundle, g.points);
    return g;
}

}  // namespace simmer::ensemble
