#pragma once

#include "simmer/net.hpp"
#include "simmer/rng.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

namespace simmer::testing {

inline Matrix random_matrix(Rng& rng, Eigen::Index rows, Eigen::Index cols, double scale = 1.0) {
    Matrix m(rows, cols);
    for (Eigen::Index i = 0; i < m.size(); ++i) m.data()[i] = scale * rng.normal();
    return m;
}

inline ParamVector random_params(Rng& rng, const net::Topology& t, double scale = 0.5) {
    ParamVector p(t.param_count());
    for (double& v : p) v = scale * rng.normal();
    return p;
}

/// Targets that suit the loss: one-hot rows for categorical CE, {0,1} for BCE.
inline Matrix random_targets(Rng& rng, net::LossKind kind, Eigen::Index rows, Eigen::Index cols) {
    Matrix t = Matrix::Zero(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (kind == net::LossKind::categorical_cross_entropy) {
            t(r, static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(cols)))) = 1.0;
        } else if (kind == net::LossKind::binary_cross_entropy_from_logits) {
            for (Eigen::Index c = 0; c < cols; ++c) t(r, c) = static_cast<double>(rng.below(2));
        } else {
            for (Eigen::Index c = 0; c < cols; ++c) t(r, c) = rng.normal();
        }
    }
    return t;
}

inline std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::filesystem::path scratch_dir(const std::string& name) {
    auto dir = std::filesystem::temp_directory_path() / ("simmer_test_" + name);
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace simmer::testing
