#pragma once

#include <string>
#include <string_view>
#include <vector>

#include "modflight/geom.hpp"

namespace modflight {

enum class ModuleKind { Control, Propelling };

// All offsets are in the module frame, measured from the module's IMU. The module
// frame is the payload frame rotated by `mount_yaw` about +Z.
struct ModuleSpec {
    ModuleKind kind = ModuleKind::Propelling;
    double mass = 0.0;
    Mat3 inertia_local = Mat3::Zero();  // about the module CM
    Vec3 cm_offset = Vec3::Zero();
    Vec3 attach_offset = Vec3::Zero();  // where the module bolts to the payload
    Vec3 rotor_offset = Vec3::Zero();   // rotor hub; lateral part must be zero
    Vec3 mount_position = Vec3::Zero(); // IMU position in the payload frame
    double mount_yaw = 0.0;
    double thrust_min = 0.0;
    double thrust_max = 0.0;
    int spin = 0;             // +1 / -1 for propelling modules
    double drag_ratio = 0.0;  // |c_i| in metres

    double signed_drag_ratio() const { return spin * drag_ratio; }
    void validate() const;
};

struct PayloadSpec {
    double mass = 0.0;
    Mat3 inertia = Mat3::Zero();
    Vec3 cm_position = Vec3::Zero();
};

struct VehicleDescription {
    PayloadSpec payload;
    std::vector<ModuleSpec> modules;
};

// Ground truth of an assembled vehicle. The body frame has its origin at the CM
// and the axes of the control module. Per-IMU vectors are in IMU order: index 0
// is the control module, 1..N the propelling modules in description order.
struct VehicleTruth {
    std::size_t n = 0;
    std::vector<ModuleSpec> modules;  // IMU order
    PayloadSpec payload;
    double total_mass = 0.0;
    Vec3 cm = Vec3::Zero();  // payload frame
    RotationMatrix body_from_payload;
    Mat3 inertia = Mat3::Zero();
    std::vector<Vec3> imu_positions;
    std::vector<RotationMatrix> module_orientations;  // module -> body
    std::vector<Vec3> arms;           // rotor hubs, size N
    std::vector<Vec3> attach_points;  // propelling attach points, size N
    Vector drag_ratios;               // signed c_i
    Vector thrust_min;
    Vector thrust_max;
    Matrix a_u;
    Matrix a;
};

/// Rows: ones, r_y, -r_x, c.
Matrix thrust_wrench_map(const std::vector<Vec3>& rotor_arms, const Vector& drag_ratios);

/// blockdiag(m, I)^-1 * A_u.
Matrix configuration_from_wrench_map(const Matrix& a_u, double mass, const Mat3& inertia);

/// Throws SingularConfiguration when sigma_min(A) < 1e-6 sigma_max(A).
void require_full_rank(const Matrix& a, const char* what);

VehicleTruth assemble_vehicle(const PayloadSpec& payload, const std::vector<ModuleSpec>& modules);
VehicleTruth assemble_vehicle(const VehicleDescription& description);

Matrix config_matrix(const VehicleTruth& truth);

/// Control module first, then propelling modules in input order.
std::vector<ModuleSpec> imu_ordered(const std::vector<ModuleSpec>& modules);

ModuleSpec propelling_module(const Vec3& mount_position, double mount_yaw, int spin);
ModuleSpec control_module(const Vec3& mount_position, double mount_yaw = 0.0);

enum class Platform { A, B, C, D, E, F };

Platform parse_platform(std::string_view name);
char platform_letter(Platform p);
const std::vector<Platform>& all_platforms();

/// Reconstructed prototype layouts (see README for how they were fitted).
VehicleDescription preset(Platform platform);

std::string serialize_vehicle(const VehicleDescription& description);
VehicleDescription parse_vehicle(const std::string& text);

}  // namespace modflight
