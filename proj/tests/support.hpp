#pragma once

#include <string>
#include <vector>

#include <nlkv/ingest.hpp>

namespace testing_support {

// Constant-speed vehicle sampled every `step` seconds over [t0, t1].
inline nlkv::VehicleTrajectory cruise(std::string id, double t0, double t1, double x0, double v, double step = 1.0) {
    nlkv::VehicleTrajectory veh{std::move(id), {}};
    for (double t = t0; t < t1; t += step) veh.points.push_back({t, x0 + v * (t - t0)});
    veh.points.push_back({t1, x0 + v * (t1 - t0)});
    return veh;
}

}  // namespace testing_support
