#pragma once

#include "modflight/geom.hpp"

namespace modflight {

// Desired flat outputs with derivatives through jerk.
struct Setpoint {
    Vec3 p = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    Vec3 a = Vec3::Zero();
    Vec3 j = Vec3::Zero();
    double yaw = 0.0;
};

}  // namespace modflight
