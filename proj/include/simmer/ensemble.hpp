#pragma once

// Ensembles of finite-temperature snapshots and their aggregate predictions.
// Inputs to every prediction routine are in original (unscaled) feature units;
// regression outputs come back in original target units.

#include "simmer/data.hpp"
#include "simmer/net.hpp"
#include "simmer/trajectory.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace simmer::ensemble {

struct SamplingPlan {
    std::int64_t total_iterations = 0;
    std::int64_t burn_in = 0;
    std::int64_t stride = 1;
    double fraction = 1.0;  // uniform subsample without replacement, in (0, 1]
    std::uint64_t seed = 0;

    void validate() const;
    /// Sorted iteration indices the plan keeps. Deterministic in (plan, seed).
    std::vector<std::int64_t> selected_iterations() const;
};

struct EnsembleBundle {
    net::Topology topology;
    std::vector<Snapshot> members;
    data::ScalerParams feature_scaler;
    std::optional<data::ScalerParams> target_scaler;  // regression only
    data::TaskKind task = data::TaskKind::regression;

    std::size_t size() const noexcept { return members.size(); }
    /// Number of classes: 2 for a single-logit output, else the output width.
    std::size_t class_count() const;
    void validate() const;
};

/// Picks the plan's iterations out of the trajectory's snapshots.
/// Throws InvalidArgument if the trajectory is too short, a selected snapshot is
/// missing, or the selection is empty.
EnsembleBundle collect(const Trajectory& trajectory, const SamplingPlan& plan,
                       const net::Topology& topology, const data::ScalerParams& feature_scaler,
                       const std::optional<data::ScalerParams>& target_scaler,
                       data::TaskKind task);

/// Concatenates members of bundles that share topology and scalers.
EnsembleBundle pool(std::span<const EnsembleBundle> bundles);
/// Same, moving members out of `bundles` (left empty).
EnsembleBundle pool(std::vector<EnsembleBundle>&& bundles);

/// Output of one member, inverse-scaled for regression (logits for classification).
Matrix member_predict(const EnsembleBundle& bundle, std::size_t member, const Matrix& inputs);

Matrix regression_mean(const EnsembleBundle& bundle, const Matrix& inputs);

struct PredictionDistribution {
    Matrix values;  // members x outputs
    std::vector<double> mean;
};
PredictionDistribution regression_distribution(const EnsembleBundle& bundle,
                                               std::span<const double> input);

/// Class decision of raw network outputs: argmax with ties to the lowest index;
/// a single logit is class 1 iff it is > 0.
std::vector<int> decide_classes(const Matrix& outputs);

/// inputs x classes vote tallies.
Eigen::Matrix<std::int64_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> vote_counts(
    const EnsembleBundle& bundle, const Matrix& inputs);

std::vector<int> majority_vote(const EnsembleBundle& bundle, const Matrix& inputs);
Matrix vote_proportions(const EnsembleBundle& bundle, const Matrix& inputs);

struct GridBounds {
    double x_min = -1.0, x_max = 1.0;
    double y_min = -1.0, y_max = 1.0;
};

struct DecisionGrid {
    std::vector<double> xs;  // resolution values along feature 0
    std::vector<double> ys;  // resolution values along feature 1
    Matrix proportions;      // row (iy * resolution + ix) holds the node's class fractions
    Matrix points;           // the node coordinates, same row order
};

/// Vote proportions on a resolution x resolution lattice over two features.
/// resolution 1 evaluates the centre of the bounds.
DecisionGrid decision_grid(const EnsembleBundle& bundle, const GridBounds& bounds,
                           std::size_t resolution);

}  // namespace simmer::ensemble
