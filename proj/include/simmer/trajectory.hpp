#pragma once

#include "simmer/net.hpp"

#include <cstdint>
#include <vector>

namespace simmer {

/// One logged integrator step. `iteration` counts completed steps from 0.
struct TrajectoryRecord {
    std::int64_t iteration = 0;
    double T_target = 0.0;
    double T_kinetic = 0.0;
    double loss_train = 0.0;
    double loss_test = 0.0;
    double extended_energy = 0.0;
};

struct Snapshot {
    std::int64_t iteration = 0;
    double temperature = 0.0;
    std::uint32_t replicate = 0;
    ParamVector params;
};

/// Scalar log of every step plus the parameter snapshots that were retained.
struct Trajectory {
    std::vector<TrajectoryRecord> records;
    std::vector<Snapshot> snapshots;
};

}  // namespace simmer
