#pragma once

// Datasets: synthetic noisy sine, schema-driven CSV ingestion, random splits and
// min-max scaling to [-1, 1].

#include "simmer/net.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace simmer::data {

enum class TaskKind { regression, classification };

struct Dataset {
    Matrix features;  // S x D
    Matrix targets;   // S x K, one-hot rows for classification
    std::vector<std::string> feature_names;
    std::vector<std::string> target_names;  // class labels (sorted) for classification
    TaskKind task = TaskKind::regression;

    std::size_t size() const noexcept { return static_cast<std::size_t>(features.rows()); }
};

struct Split {
    std::vector<std::size_t> train;
    std::vector<std::size_t> test;
    std::uint64_t seed = 0;
};

/// Per-column min/max of the training rows.
struct ScalerParams {
    std::vector<double> min;
    std::vector<double> max;
    std::vector<std::string> names;

    std::size_t size() const noexcept { return min.size(); }
};

enum class InvalidRowPolicy { error, drop };

/// Declarative CSV schema. Text format, one directive per line, `#` comments:
///
///     task classification        # or regression
///     feature sepal_width        # repeatable, order preserved
///     target species             # one column (classification) or several (regression)
///     invalid_rows drop          # or error (default)
///
struct Schema {
    TaskKind task = TaskKind::regression;
    std::vector<std::string> features;
    std::vector<std::string> targets;
    InvalidRowPolicy invalid_rows = InvalidRowPolicy::error;

    static Schema parse(const std::string& text);
    static Schema load(const std::filesystem::path& path);
    std::string to_text() const;
};

/// x: n_points equally spaced on [-1, 1]; y = sin(2 pi x) + noise_amp * N(0, 1).
Dataset gen_noisy_sine(std::size_t n_points, double noise_amp, std::uint64_t seed);

/// Reads a headed, comma-separated file. Empty or unparsable cells in used
/// columns either drop the row or raise DataError naming the line, per schema.
Dataset load_csv(const std::filesystem::path& path, const Schema& schema);

/// Uniform random permutation of [0, S); the first n_train indices are training rows.
Split split(const Dataset& dataset, std::size_t n_train, std::uint64_t seed);

/// Fits on the given rows of `m`. Throws DataError naming a constant column.
ScalerParams minmax_fit(const Matrix& m, const std::vector<std::size_t>& rows,
                        const std::vector<std::string>& names = {});
/// Feature scaler fitted on the training rows of a split.
ScalerParams minmax_fit(const Dataset& dataset, const Split& split);

Matrix minmax_apply(const ScalerParams& scaler, const Matrix& m);
Matrix minmax_invert(const ScalerParams& scaler, const Matrix& m);

Matrix select_rows(const Matrix& m, const std::vector<std::size_t>& rows);

}  // namespace simmer::data
