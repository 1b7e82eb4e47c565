#pragma once

// Experiment pipelines behind the command-line subcommands, plus the run
// directory formats they read and write.
//
// Run directory layout (numbers written in shortest round-trip form):
//   config.resolved.json        resolved config, code version, config hash
//   adam_loss.csv               epoch,loss_train,loss_test            (train-adam)
//   params_final.{bin,json}     final Adam parameters                 (train-adam)
//   params_previous.{bin,json}  parameters one epoch earlier          (train-adam)
//   train_report.json           summary of the Adam run               (train-adam)
//   trajectory_rep<NNN>.csv     iteration,T_target,T_kinetic,loss_train,loss_test,extended_energy
//   ensemble/bundle.{bin,json}  pooled ensemble snapshots             (retrofit, simmer)
//   metrics.json                adam vs ensemble test metric          (retrofit, simmer)
//
// Parameter files (.bin) are raw IEEE-754 binary64, little-endian, in the
// network's parameter layout; the JSON sidecar carries topology and count.

#include "simmer/config.hpp"
#include "simmer/data.hpp"
#include "simmer/ensemble.hpp"
#include "simmer/optimize.hpp"
#include "simmer/trajectory.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace simmer::cli {

std::string code_version();

/// Dataset, split, scalers and the train/test batches for one config.
struct Experiment {
    data::Dataset dataset;
    data::Split split;
    data::ScalerParams feature_scaler;
    std::optional<data::ScalerParams> target_scaler;
    net::Topology topology;
    net::LossKind loss = net::LossKind::sse;
    net::Batch train;
    net::Batch test;
    data::TaskKind task = data::TaskKind::regression;
};

Experiment prepare(const ExperimentConfig& config);

ParamVector initial_params(const ExperimentConfig& config, const net::Topology& topology,
                           std::uint32_t replicate);

/// "mse" (regression, original units) or "accuracy" (classification).
std::string metric_kind(const Experiment& ex);
/// Test metric of a single parameter vector.
double single_test_metric(const Experiment& ex, std::span<const double> params);
/// Test metric of an ensemble (mean prediction or majority vote).
double ensemble_test_metric(const Experiment& ex, const ensemble::EnsembleBundle& bundle);
/// true if `candidate` beats `baseline` for this metric kind.
bool metric_improved(const std::string& kind, double baseline, double candidate);

optimize::TrainReport adam_phase(const ExperimentConfig& config, const Experiment& ex,
                                 std::uint32_t replicate);

struct SimmerOutcome {
    Trajectory trajectory;  // every step logged, snapshots only for sampled iterations
    ensemble::EnsembleBundle bundle;
};

/// Integrates `start` for simmer.total_iterations steps under the config's schedule
/// and collects the ensemble given by the sampling plan.
SimmerOutcome simmer_phase(const ExperimentConfig& config, const Experiment& ex,
                           dynamics::PhaseState start, std::uint32_t replicate);

// --- run directory I/O ---

void write_params(const std::filesystem::path& stem, const net::Topology& topology,
                  std::span<const double> params);
ParamVector read_params(const std::filesystem::path& stem, net::Topology* topology = nullptr);

void write_trajectory_csv(const std::filesystem::path& path, const Trajectory& trajectory);
std::vector<TrajectoryRecord> read_trajectory_csv(const std::filesystem::path& path);

void write_bundle(const std::filesystem::path& dir, const ensemble::EnsembleBundle& bundle);
ensemble::EnsembleBundle read_bundle(const std::filesystem::path& dir);

// --- subcommands ---

struct RunOptions {
    std::filesystem::path out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint32_t> replicates;
    std::optional<std::filesystem::path> from_run;
};

/// Applies --seed / --replicates overrides.
ExperimentConfig with_overrides(ExperimentConfig config, const RunOptions& opts);

void run_train_adam(const ExperimentConfig& config, const RunOptions& opts);
void run_retrofit(const ExperimentConfig& config, const RunOptions& opts);
void run_simmer(const ExperimentConfig& config, const RunOptions& opts);

struct EvaluateRequest {
    std::optional<std::size_t> grid_resolution;
    std::optional<ensemble::GridBounds> grid_bounds;  // default: training feature range
    std::vector<std::vector<double>> distribution_points;
};
void run_evaluate(const std::filesystem::path& run_dir, const EvaluateRequest& request,
                  const std::filesystem::path& out_dir);

/// Hessian spectrum at the Adam endpoint of `from_run` (or a fresh Adam run).
void run_spectrum(const ExperimentConfig& config, const RunOptions& opts, std::size_t cap);

}  // namespace simmer::cli
