#include "modflight/vehicle.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <cmath>

#include <nlohmann/json.hpp>

#include "modflight/errors.hpp"

namespace modflight {

namespace {

using json = nlohmann::ordered_json;

constexpr double kPropellingMass = 0.130;
constexpr double kControlMass = 0.250;
constexpr double kThrustMax = 6.5;
constexpr double kDragRatio = 0.016;

Mat3 propelling_inertia() {
    Mat3 m;
    m << 5.02e-5, -1.22e-7, 3.17e-5,
        -1.22e-7, 3.85e-4, 8.15e-8,
        3.17e-5, 8.15e-8, 3.86e-4;
    return m;
}

Mat3 control_inertia() {
    Mat3 m;
    m << 2.76e-4, -3.86e-7, -1.59e-5,
        -3.86e-7, 2.39e-4, -1.18e-5,
        -1.59e-5, -1.18e-5, 2.32e-4;
    return m;
}

Mat3 parallel_axis(double mass, const Vec3& d) {
    return mass * (d.squaredNorm() * Mat3::Identity() - d * d.transpose());
}

bool symmetric(const Mat3& m) { return (m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-12 * (1.0 + m.norm()); }

// Payload and layout data for the six prototypes. Mount positions are IMU
// positions in the payload frame; module yaw points the module's +X outward.
struct PresetMount {
    double x, y, z;
    int spin;
};

struct PresetRow {
    double payload_mass;
    std::array<double, 3> payload_cm;
    std::array<double, 6> payload_inertia;  // xx, yy, zz, xy, xz, yz
    std::array<double, 3> control_mount;
    std::vector<PresetMount> mounts;
};

const std::array<PresetRow, 6>& preset_rows() {
    static const std::array<PresetRow, 6> rows{{
        {0.2075, {0.0005, 0.0015, 0.0},
         {0.000344492, 0.000332069, 0.000278014, 0.000126386, -2.21162e-07, -7.59231e-06},
         {0.003, -0.002, 0.0071},
         {{0.1915, 0.0021, -0.0096, 1}, {-0.0067, -0.191, -0.0096, -1}, {-0.1916, -0.0011, -0.0096, 1},
          {-0.0017, 0.1917, -0.0096, -1}}},
        {0.2353, {-0.0038, -0.0018, 0.0},
         {0.000400684, 0.000212209, 0.000194426, -1.62848e-05, -1.97606e-05, -2.0365e-05},
         {0.003, -0.002, 0.0033},
         {{-0.1913, 0.0028, -0.0175, 1}, {-0.094, 0.1676, -0.0175, -1}, {0.097, 0.1654, -0.0175, 1},
          {0.1914, -0.0008, -0.0175, -1}, {0.0939, -0.1656, -0.0175, 1}, {-0.0959, -0.1617, -0.0175, -1}}},
        {0.3613, {0.0004, -0.0013, 0.0},
         {0.000479029, 0.000730824, 0.000815097, 0.000314593, 4.65268e-05, -1.97159e-05},
         {0.003, -0.002, -0.0079},
         {{0.0007, 0.232, -0.0275, 1}, {0.1608, 0.1655, -0.0275, -1}, {0.2296, 0.0022, -0.0275, 1},
          {0.1624, -0.162, -0.0275, -1}, {-0.0005, -0.2278, -0.0275, 1}, {-0.1643, -0.1634, -0.0275, -1},
          {-0.233, 0.0002, -0.0275, 1}, {-0.1633, 0.1616, -0.0275, -1}}},
        {0.228, {-0.0209, -0.0313, 0.0},
         {0.000257801, 0.000323261, 0.000296685, 0.000144628, 0.0, 0.0},
         {0.003, -0.002, 0.0131},
         {{-0.1065, -0.1861, 0.001, 1}, {-0.1093, 0.1452, 0.001, -1}, {0.0829, 0.1473, 0.001, 1},
          {0.1802, -0.0178, 0.001, -1}}},
        {0.3168, {-0.0035, 0.0026, 0.0},
         {0.00135486, 0.00136162, 7.09357e-05, 2.00253e-05, -1.61503e-05, -6.78427e-05},
         {0.003, -0.002, -0.01},
         {{-0.1598, 0.0078, 0.06, 1}, {-0.0813, 0.1377, 0.02, -1}, {0.0715, 0.1437, 0.06, 1},
          {0.1631, -0.005, 0.02, -1}, {0.083, -0.1403, 0.06, 1}, {-0.0739, -0.1455, 0.02, -1}}},
        {0.7912, {0.0022, 0.0159, 0.0},
         {0.00239057, 0.0219919, 0.0236007, -6.70844e-05, -0.00201266, 0.000630855},
         {0.003, -0.002, 0.05},
         {{-0.0886, 0.1778, 0.06, 1}, {0.0798, 0.1776, 0.02, -1}, {0.2955, 0.0647, 0.06, 1},
          {0.274, -0.1375, 0.02, -1}, {0.0724, -0.1598, 0.06, 1}, {-0.096, -0.1609, 0.02, -1},
          {-0.27, -0.1402, 0.06, 1}, {-0.2914, 0.0666, 0.02, -1}}},
    }};
    return rows;
}

json vec_to_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json mat_to_json(const Mat3& m) {
    json rows = json::array();
    for (int r = 0; r < 3; ++r) rows.push_back(json::array({m(r, 0), m(r, 1), m(r, 2)}));
    return rows;
}

Vec3 vec_from_json(const json& j, const char* key) {
    const json& v = j.at(key);
    if (!v.is_array() || v.size() != 3) throw Error(ErrorKind::ParseError, std::string(key) + " must be a 3-vector");
    return Vec3(v[0].get<double>(), v[1].get<double>(), v[2].get<double>());
}

Mat3 mat_from_json(const json& j, const char* key) {
    const json& v = j.at(key);
    if (!v.is_array() || v.size() != 3) throw Error(ErrorKind::ParseError, std::string(key) + " must be 3x3");
    Mat3 m;
    for (int r = 0; r < 3; ++r) {
        if (!v[r].is_array() || v[r].size() != 3) throw Error(ErrorKind::ParseError, std::string(key) + " must be 3x3");
        for (int c = 0; c < 3; ++c) m(r, c) = v[r][c].get<double>();
    }
    return m;
}

}  // namespace

void ModuleSpec::validate() const {
    if (!(mass > 0.0)) throw Error(ErrorKind::InvalidArgument, "module mass must be positive");
    if (!inertia_local.allFinite() || !symmetric(inertia_local) ||
        Eigen::SelfAdjointEigenSolver<Mat3>(inertia_local).eigenvalues().minCoeff() <= 0.0) {
        throw Error(ErrorKind::InvalidArgument, "module inertia must be symmetric positive definite");
    }
    if (!cm_offset.allFinite() || !attach_offset.allFinite() || !rotor_offset.allFinite() ||
        !mount_position.allFinite() || !std::isfinite(mount_yaw)) {
        throw Error(ErrorKind::InvalidArgument, "module geometry must be finite");
    }
    if (kind == ModuleKind::Propelling) {
        if (!(thrust_max > thrust_min) || !(thrust_min >= 0.0)) {
            throw Error(ErrorKind::InvalidArgument, "thrust range must satisfy 0 <= T_min < T_max");
        }
        if (spin != 1 && spin != -1) throw Error(ErrorKind::InvalidArgument, "spin must be +1 or -1");
        if (!(drag_ratio > 0.0)) throw Error(ErrorKind::InvalidArgument, "drag ratio must be positive");
        if (std::abs(rotor_offset.x()) > 1e-12 || std::abs(rotor_offset.y()) > 1e-12) {
            throw Error(ErrorKind::InvalidArgument, "rotor must sit directly above the IMU");
        }
    }
}

Matrix thrust_wrench_map(const std::vector<Vec3>& rotor_arms, const Vector& drag_ratios) {
    const auto n = static_cast<Eigen::Index>(rotor_arms.size());
    if (drag_ratios.size() != n) throw Error(ErrorKind::InvalidArgument, "arm / drag ratio count mismatch");
    Matrix a_u(4, n);
    for (Eigen::Index i = 0; i < n; ++i) {
        a_u(0, i) = 1.0;
        a_u(1, i) = rotor_arms[i].y();
        a_u(2, i) = -rotor_arms[i].x();
        a_u(3, i) = drag_ratios(i);
    }
    return a_u;
}

Matrix configuration_from_wrench_map(const Matrix& a_u, double mass, const Mat3& inertia) {
    Matrix a(4, a_u.cols());
    a.row(0) = a_u.row(0) / mass;
    a.bottomRows(3) = inertia.ldlt().solve(a_u.bottomRows(3));
    return a;
}

void require_full_rank(const Matrix& a, const char* what) {
    const Vector sv = Eigen::JacobiSVD<Matrix>(a).singularValues();
    if (sv.size() < 4 || !(sv(sv.size() - 1) >= 1e-6 * sv(0))) {
        throw Error(ErrorKind::SingularConfiguration, std::string(what) + " is rank deficient");
    }
}

std::vector<ModuleSpec> imu_ordered(const std::vector<ModuleSpec>& modules) {
    std::vector<ModuleSpec> out;
    const auto controls = std::count_if(modules.begin(), modules.end(),
                                        [](const ModuleSpec& m) { return m.kind == ModuleKind::Control; });
    if (controls != 1) throw Error(ErrorKind::InvalidArgument, "exactly one control module is required");
    for (const auto& m : modules) {
        if (m.kind == ModuleKind::Control) out.push_back(m);
    }
    for (const auto& m : modules) {
        if (m.kind == ModuleKind::Propelling) out.push_back(m);
    }
    return out;
}

VehicleTruth assemble_vehicle(const PayloadSpec& payload, const std::vector<ModuleSpec>& modules) {
    for (const auto& m : modules) m.validate();
    if (!(payload.mass >= 0.0) || !payload.inertia.allFinite() || !symmetric(payload.inertia) ||
        Eigen::SelfAdjointEigenSolver<Mat3>(payload.inertia).eigenvalues().minCoeff() < -1e-15) {
        throw Error(ErrorKind::InvalidArgument, "payload must have non-negative mass and PSD inertia");
    }

    VehicleTruth t;
    t.modules = imu_ordered(modules);
    t.payload = payload;
    t.n = t.modules.size() - 1;
    if (t.n < 4) throw Error(ErrorKind::InvalidArgument, "at least four propelling modules are required");

    // Everything is first collected in the payload frame.
    std::vector<Vec3> module_cms;
    double mass = payload.mass;
    Vec3 weighted = payload.mass * payload.cm_position;
    for (const auto& m : t.modules) {
        const RotationMatrix rz = RotationMatrix::about_z(m.mount_yaw);
        module_cms.push_back(m.mount_position + rz * m.cm_offset);
        mass += m.mass;
        weighted += m.mass * module_cms.back();
    }
    t.total_mass = mass;
    t.cm = weighted / mass;
    t.body_from_payload = RotationMatrix::about_z(t.modules.front().mount_yaw).transpose();
    const Mat3 rb = t.body_from_payload.matrix();

    Mat3 inertia = payload.inertia + parallel_axis(payload.mass, payload.cm_position - t.cm);
    for (std::size_t i = 0; i < t.modules.size(); ++i) {
        const auto& m = t.modules[i];
        const Mat3 rz = RotationMatrix::about_z(m.mount_yaw).matrix();
        inertia += rz * m.inertia_local * rz.transpose() + parallel_axis(m.mass, module_cms[i] - t.cm);
        t.imu_positions.push_back(rb * (m.mount_position - t.cm));
        t.module_orientations.push_back(t.body_from_payload * RotationMatrix::about_z(m.mount_yaw));
        if (m.kind == ModuleKind::Propelling) {
            t.arms.push_back(rb * (m.mount_position + rz * m.rotor_offset - t.cm));
            t.attach_points.push_back(rb * (m.mount_position + rz * m.attach_offset - t.cm));
        }
    }
    t.inertia = rb * inertia * rb.transpose();
    t.inertia = 0.5 * (t.inertia + t.inertia.transpose()).eval();

    const auto n = static_cast<Eigen::Index>(t.n);
    t.drag_ratios.resize(n);
    t.thrust_min.resize(n);
    t.thrust_max.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        const auto& m = t.modules[static_cast<std::size_t>(i) + 1];
        t.drag_ratios(i) = m.signed_drag_ratio();
        t.thrust_min(i) = m.thrust_min;
        t.thrust_max(i) = m.thrust_max;
    }
    t.a_u = thrust_wrench_map(t.arms, t.drag_ratios);
    t.a = configuration_from_wrench_map(t.a_u, t.total_mass, t.inertia);
    require_full_rank(t.a, "configuration matrix");
    return t;
}

VehicleTruth assemble_vehicle(const VehicleDescription& description) {
    return assemble_vehicle(description.payload, description.modules);
}

Matrix config_matrix(const VehicleTruth& truth) {
    const Matrix rebuilt = configuration_from_wrench_map(truth.a_u, truth.total_mass, truth.inertia);
    if ((rebuilt - truth.a).cwiseAbs().maxCoeff() > 1e-12 * (1.0 + truth.a.cwiseAbs().maxCoeff())) {
        throw Error(ErrorKind::InvalidArgument, "stored configuration matrix is inconsistent with A_u");
    }
    return truth.a;
}

ModuleSpec propelling_module(const Vec3& mount_position, double mount_yaw, int spin) {
    ModuleSpec m;
    m.kind = ModuleKind::Propelling;
    m.mass = kPropellingMass;
    m.inertia_local = propelling_inertia();
    m.cm_offset = Vec3(-0.0425, 0.0, 0.0155);
    m.attach_offset = Vec3(-0.10, 0.0, -0.015);
    m.rotor_offset = Vec3(0.0, 0.0, 0.035);
    m.mount_position = mount_position;
    m.mount_yaw = mount_yaw;
    m.thrust_min = 0.0;
    m.thrust_max = kThrustMax;
    m.spin = spin;
    m.drag_ratio = kDragRatio;
    return m;
}

ModuleSpec control_module(const Vec3& mount_position, double mount_yaw) {
    ModuleSpec m;
    m.kind = ModuleKind::Control;
    m.mass = kControlMass;
    m.inertia_local = control_inertia();
    m.cm_offset = Vec3(0.0, 0.0, 0.01);
    m.attach_offset = Vec3(0.0, 0.0, -0.01);
    m.mount_position = mount_position;
    m.mount_yaw = mount_yaw;
    return m;
}

Platform parse_platform(std::string_view name) {
    if (name.size() == 1) {
        const char c = static_cast<char>(std::toupper(static_cast<unsigned char>(name[0])));
        if (c >= 'A' && c <= 'F') return static_cast<Platform>(c - 'A');
    }
    throw Error(ErrorKind::InvalidArgument, "unknown platform '" + std::string(name) + "'");
}

char platform_letter(Platform p) { return static_cast<char>('A' + static_cast<int>(p)); }

const std::vector<Platform>& all_platforms() {
    static const std::vector<Platform> all{Platform::A, Platform::B, Platform::C,
                                           Platform::D, Platform::E, Platform::F};
    return all;
}

VehicleDescription preset(Platform platform) {
    const PresetRow& row = preset_rows()[static_cast<std::size_t>(platform)];
    VehicleDescription d;
    d.payload.mass = row.payload_mass;
    d.payload.cm_position = Vec3(row.payload_cm[0], row.payload_cm[1], row.payload_cm[2]);
    const auto& pi = row.payload_inertia;
    d.payload.inertia << pi[0], pi[3], pi[4], pi[3], pi[1], pi[5], pi[4], pi[5], pi[2];
    d.modules.push_back(control_module(Vec3(row.control_mount[0], row.control_mount[1], row.control_mount[2])));
    for (const auto& mount : row.mounts) {
        d.modules.push_back(
            propelling_module(Vec3(mount.x, mount.y, mount.z), std::atan2(mount.y, mount.x), mount.spin));
    }
    return d;
}

std::string serialize_vehicle(const VehicleDescription& d) {
    json root;
    root["format"] = "modflight-vehicle/1";
    root["payload"] = {{"mass", d.payload.mass},
                       {"cm", vec_to_json(d.payload.cm_position)},
                       {"inertia", mat_to_json(d.payload.inertia)}};
    json mods = json::array();
    for (const auto& m : d.modules) {
        json j;
        j["kind"] = m.kind == ModuleKind::Control ? "control" : "propelling";
        j["mount"] = vec_to_json(m.mount_position);
        j["yaw"] = m.mount_yaw;
        j["mass"] = m.mass;
        j["inertia"] = mat_to_json(m.inertia_local);
        j["cm_offset"] = vec_to_json(m.cm_offset);
        j["attach_offset"] = vec_to_json(m.attach_offset);
        if (m.kind == ModuleKind::Propelling) {
            j["rotor_offset"] = vec_to_json(m.rotor_offset);
            j["spin"] = m.spin;
            j["drag_ratio"] = m.drag_ratio;
            j["thrust_range"] = json::array({m.thrust_min, m.thrust_max});
        }
        mods.push_back(std::move(j));
    }
    root["modules"] = std::move(mods);
    return root.dump(2) + "\n";
}

VehicleDescription parse_vehicle(const std::string& text) {
    VehicleDescription d;
    try {
        const json root = json::parse(text);
        const json& p = root.at("payload");
        d.payload.mass = p.at("mass").get<double>();
        d.payload.cm_position = vec_from_json(p, "cm");
        d.payload.inertia = mat_from_json(p, "inertia");
        for (const json& j : root.at("modules")) {
            ModuleSpec m;
            const auto kind = j.at("kind").get<std::string>();
            if (kind == "control") {
                m.kind = ModuleKind::Control;
            } else if (kind == "propelling") {
                m.kind = ModuleKind::Propelling;
            } else {
                throw Error(ErrorKind::ParseError, "unknown module kind '" + kind + "'");
            }
            m.mount_position = vec_from_json(j, "mount");
            m.mount_yaw = j.at("yaw").get<double>();
            m.mass = j.at("mass").get<double>();
            m.inertia_local = mat_from_json(j, "inertia");
            m.cm_offset = vec_from_json(j, "cm_offset");
            m.attach_offset = vec_from_json(j, "attach_offset");
            if (m.kind == ModuleKind::Propelling) {
                m.rotor_offset = vec_from_json(j, "rotor_offset");
                m.spin = j.at("spin").get<int>();
                m.drag_ratio = j.at("drag_ratio").get<double>();
                const json& range = j.at("thrust_range");
                if (!range.is_array() || range.size() != 2) {
                    throw Error(ErrorKind::ParseError, "thrust_range must have two entries");
                }
                m.thrust_min = range[0].get<double>();
                m.thrust_max = range[1].get<double>();
            }
            d.modules.push_back(m);
        }
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
    return d;
}

}  // namespace modflight
