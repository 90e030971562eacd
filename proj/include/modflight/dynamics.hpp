#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <random>

#include "modflight/geom.hpp"
#include "modflight/vehicle.hpp"

namespace modflight {

struct RigidState {
    Vec3 p = Vec3::Zero();      // CM position, inertial, m
    Vec3 v = Vec3::Zero();      // m/s
    RotationMatrix r;           // body -> inertial
    Vec3 omega = Vec3::Zero();  // body rates, rad/s
};

/// Per-rotor thrusts in newtons.
using ThrustCommand = Vector;

struct Wrench {
    double thrust = 0.0;
    Vec3 torque = Vec3::Zero();
};

struct Accelerations {
    Vec3 linear = Vec3::Zero();   // inertial
    Vec3 angular = Vec3::Zero();  // body
};

struct PlantConfig {
    VehicleTruth truth;
    double gravity = 9.81;
    double dt = 1.0 / 1050.0;
    double thrust_noise_std = 0.0;
    double feedback_delay = 0.0;  // consumed by the harness through DelayLine
    std::uint64_t seed = 0;
};

ThrustCommand saturate(const ThrustCommand& u, const VehicleTruth& truth);

/// [T; tau] = A_u u.
Wrench total_wrench(const ThrustCommand& u, const VehicleTruth& truth);

/// Full rigid-body model: Pdd = (T/m) k + g, wdot = I^-1 (tau - w x I w).
Accelerations rigid_body_accelerations(const RigidState& s, const Wrench& w, const VehicleTruth& truth,
                                       double gravity);

/// Ground-truth plant. Owns its RNG; one instance per simulation.
class Plant {
public:
    explicit Plant(PlantConfig cfg);

    /// One RK4 step of length cfg.dt. `u` must already be saturated.
    RigidState step(const RigidState& s, const ThrustCommand& u);

    const PlantConfig& config() const { return cfg_; }
    /// Thrusts actually applied during the last step (command plus noise).
    const ThrustCommand& last_applied() const { return last_applied_; }
    /// Accelerations at the start of the last step.
    const Accelerations& last_accelerations() const { return last_accel_; }
    bool last_step_grounded() const { return grounded_; }

private:
    PlantConfig cfg_;
    Mat3 inertia_inv_;
    std::mt19937_64 rng_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    ThrustCommand last_applied_;
    Accelerations last_accel_;
    bool grounded_ = false;
};

struct DelayedSample {
    double t = 0.0;
    Vec3 p = Vec3::Zero();
    Vec3 v = Vec3::Zero();
    double yaw = 0.0;
};

/// FIFO of position / velocity / yaw measurements, released after `delay` seconds.
class DelayLine {
public:
    explicit DelayLine(double delay);
    void push(const DelayedSample& sample);
    /// Newest sample with timestamp <= t - delay, or the oldest one held.
    DelayedSample at(double t) const;

private:
    double delay_;
    std::deque<DelayedSample> buffer_;
};

/// Unit quaternion (w, x, y, z) with w >= 0.
Eigen::Vector4d to_quaternion(const RotationMatrix& r);

std::string flight_log_header(std::size_t n_rotors);
void write_flight_row(std::ostream& out, double t, const RigidState& s, const ThrustCommand& u);

}  // namespace modflight
