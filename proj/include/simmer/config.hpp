#pragma once

// Experiment configuration. One JSON document per experiment; relative file
// paths are resolved against the config file's directory. See
// configs/README.md for the field reference.

#include "simmer/dynamics.hpp"
#include "simmer/net.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace simmer::cli {

struct DatasetSpec {
    std::string kind = "noisy_sine";  // noisy_sine | csv
    std::size_t n_points = 101;
    double noise_amp = 0.1;
    std::optional<std::uint64_t> seed;  // defaults to the experiment seed
    std::filesystem::path path;
    std::filesystem::path schema;
};

struct SplitSpec {
    std::size_t n_train = 0;
    std::optional<std::uint64_t> seed;
};

struct NetworkSpec {
    std::vector<std::size_t> layers;
    std::vector<std::string> activations;
    std::string loss = "sse";
    std::string initializer = "glorot_normal";  // glorot_normal | stratified_glorot
};

struct AdamSpec {
    double learning_rate = 0.002;
    std::int64_t epochs = 2000;
};

struct ScheduleSpec {
    std::string kind = "constant";  // constant | ramp
    double T_initial = 0.0;
    double T_target = 0.0;
    double delta_T = 0.01;
    std::int64_t hold_iterations = 1000;
};

struct SimmerSpec {
    double dt = 0.002;
    std::size_t chain_length = 2;
    double chain_mass = 1.0;
    double particle_mass = 1.0;
    std::int64_t total_iterations = 10000;
    ScheduleSpec schedule;
};

struct SamplingSpec {
    std::int64_t burn_in = 0;
    std::int64_t stride = 1;
    double fraction = 1.0;
    std::optional<std::uint64_t> seed;
};

struct ExperimentConfig {
    std::string name = "experiment";
    DatasetSpec dataset;
    SplitSpec split;
    NetworkSpec network;
    std::uint64_t seed = 0;
    std::uint32_t replicates = 1;
    std::optional<AdamSpec> adam;
    std::optional<SimmerSpec> simmer;
    std::optional<SamplingSpec> sampling;

    /// Parses and validates. Relative paths resolve against `base_dir`.
    /// Throws ConfigError whose message starts with the offending field path.
    static ExperimentConfig from_json(const nlohmann::json& j,
                                      const std::filesystem::path& base_dir = {});
    static ExperimentConfig load(const std::filesystem::path& path);

    /// Fully resolved form: every optional seed filled in, absolute paths.
    nlohmann::json to_json() const;
    void validate() const;

    std::uint64_t dataset_seed() const { return dataset.seed.value_or(seed); }
    std::uint64_t split_seed() const { return split.seed.value_or(seed); }
    std::uint64_t sampling_seed() const {
        return sampling && sampling->seed ? *sampling->seed : seed;
    }
    /// Replicate r initializes (and draws velocities) with seed + r.
    std::uint64_t replicate_seed(std::uint32_t r) const { return seed + r; }

    net::Topology topology() const;
    net::LossKind loss_kind() const;
    dynamics::IntegratorConfig integrator() const;  // requires `simmer`
};

/// FNV-1a 64 of the resolved config dump, hex encoded.
std::string config_hash(const ExperimentConfig& config);

}  // namespace simmer::cli
