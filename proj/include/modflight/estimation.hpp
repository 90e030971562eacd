#pragma once

#include <string>
#include <vector>

#include "modflight/geom.hpp"
#include "modflight/imu.hpp"
#include "modflight/vehicle.hpp"

namespace modflight {

struct MassEstimate {
    double mass = 0.0;
    double payload_share = 0.05;  // assumed payload mass per propelling module, kg
    std::size_t n = 0;
};

// R_i maps module i's frame into the control-module frame; R_0 = I.
struct OrientationEstimate {
    std::vector<RotationMatrix> rotations;
    std::vector<double> residuals;   // rad/s RMS
    std::vector<double> conditions;
};

// IMU positions relative to the geometric centre of all IMUs, control-module frame.
struct ArmEstimate {
    std::vector<Vec3> arms;
    std::vector<double> residuals;   // m/s^2 RMS
    double condition = 0.0;
};

struct ConfigEstimate {
    Matrix a;
    Matrix a_u;
    double mass = 0.0;
    Mat3 inertia = Mat3::Zero();
};

/// m = sum of module masses + payload_share * N.
MassEstimate estimate_mass(const std::vector<ModuleSpec>& modules, double payload_share = 0.05);

/// Stacked 9-unknown least squares per module, then orthonormalised.
OrientationEstimate estimate_orientations(const CalibrationLog& log);

/// Sixth-order central difference; the three samples at each end use one-sided
/// second-order differences.
std::vector<Vec3> differentiate(const std::vector<Vec3>& signal, double dt);

/// `edge_trim` samples at each end are left out of the stack (their rate
/// derivatives are lower order).
ArmEstimate estimate_arms(const CalibrationLog& log, const OrientationEstimate& orient, std::size_t edge_trim = 3);

/// Uniform thin lamina through the given vertices, about the origin. Vertices are
/// projected to their mean Z and ordered by polar angle about their centroid.
Mat3 polygon_inertia(const std::vector<Vec3>& vertices, double mass);

/// `modules` in IMU order (control module first), matching the estimates.
Mat3 estimate_inertia(const MassEstimate& mass, const OrientationEstimate& orient, const ArmEstimate& arms,
                      const std::vector<ModuleSpec>& modules);

ConfigEstimate estimate_config_matrix(const MassEstimate& mass, const OrientationEstimate& orient,
                                      const ArmEstimate& arms, const Mat3& inertia,
                                      const std::vector<ModuleSpec>& modules);

struct EstimationOptions {
    double cutoff = 4.0;  // Hz; 0 skips filtering
    double payload_share = 0.05;
    std::size_t edge_trim = 3;
};

struct EstimateReport {
    std::string log_id;
    MassEstimate mass;
    OrientationEstimate orientations;
    ArmEstimate arms;
    ConfigEstimate config;
};

/// Full pipeline: filter, orientations, arms, mass, inertia, configuration matrix.
EstimateReport run_estimation(const CalibrationLog& log, const std::vector<ModuleSpec>& modules,
                              const EstimationOptions& options = {}, std::string log_id = "");

std::string serialize_estimate(const EstimateReport& report);
EstimateReport parse_estimate(const std::string& text);

}  // namespace modflight
