#include "modflight/estimation.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include <nlohmann/json.hpp>

#include "modflight/errors.hpp"

namespace modflight {

namespace {

using json = nlohmann::ordered_json;

constexpr double kMinPolygonArea = 1e-8;

Mat3 point_mass_inertia(double mass, const Vec3& d) { return mass * (d.squaredNorm() * Mat3::Identity() - d * d.transpose()); }

// Second moment of a uniform triangle (a, b, c) of the given mass, about the origin.
Mat3 triangle_inertia(const Vec3& a, const Vec3& b, const Vec3& c, double mass) {
    const Vec3 s = a + b + c;
    const Mat3 second = (mass / 12.0) * (a * a.transpose() + b * b.transpose() + c * c.transpose() + s * s.transpose());
    return second.trace() * Mat3::Identity() - second;
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

json mat_json(const Matrix& m) {
    json rows = json::array();
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        json row = json::array();
        for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
        rows.push_back(row);
    }
    return rows;
}

Vec3 json_vec(const json& j) {
    if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::ParseError, "expected a 3-vector");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

Matrix json_mat(const json& j) {
    if (!j.is_array() || j.empty() || !j[0].is_array()) throw Error(ErrorKind::ParseError, "expected a matrix");
    Matrix m(static_cast<Eigen::Index>(j.size()), static_cast<Eigen::Index>(j[0].size()));
    for (Eigen::Index r = 0; r < m.rows(); ++r) {
        const json& row = j[static_cast<std::size_t>(r)];
        if (!row.is_array() || static_cast<Eigen::Index>(row.size()) != m.cols()) {
            throw Error(ErrorKind::ParseError, "ragged matrix");
        }
        for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = row[static_cast<std::size_t>(c)].get<double>();
    }
    return m;
}

}  // namespace

MassEstimate estimate_mass(const std::vector<ModuleSpec>& modules, double payload_share) {
    if (!(payload_share >= 0.0)) throw Error(ErrorKind::InvalidArgument, "payload share must be >= 0");
    MassEstimate e;
    e.payload_share = payload_share;
    for (const auto& m : modules) {
        e.mass += m.mass;
        if (m.kind == ModuleKind::Propelling) ++e.n;
    }
    e.mass += payload_share * static_cast<double>(e.n);
    return e;
}

OrientationEstimate estimate_orientations(const CalibrationLog& log) {
    log.validate();
    const std::size_t t_count = log.sample_count();
    const auto rows = static_cast<Eigen::Index>(3 * t_count);
    OrientationEstimate out;
    out.rotations.push_back(RotationMatrix());
    out.residuals.push_back(0.0);
    out.conditions.push_back(1.0);
    Vector rhs(rows);
    for (std::size_t k = 0; k < t_count; ++k) rhs.segment<3>(static_cast<Eigen::Index>(3 * k)) = log.imus[0][k].gyro;
    for (std::size_t i = 1; i < log.imu_count(); ++i) {
        // Unknowns are the entries of R_i in row-major order.
        Matrix a = Matrix::Zero(rows, 9);
        for (std::size_t k = 0; k < t_count; ++k) {
            const Vec3& w = log.imus[i][k].gyro;
            for (int r = 0; r < 3; ++r) a.block<1, 3>(static_cast<Eigen::Index>(3 * k) + r, 3 * r) = w.transpose();
        }
        const LeastSquaresSolution sol = solve_least_squares(a, rhs);
        Mat3 raw;
        for (int r = 0; r < 3; ++r) raw.row(r) = sol.x.segment<3>(3 * r).transpose();
        const RotationMatrix rot = orthonormalize(raw);
        double sq = 0.0;
        for (std::size_t k = 0; k < t_count; ++k) sq += (rot * log.imus[i][k].gyro - log.imus[0][k].gyro).squaredNorm();
        out.rotations.push_back(rot);
        out.residuals.push_back(std::sqrt(sq / static_cast<double>(3 * t_count)));
        out.conditions.push_back(sol.condition);
    }
    return out;
}

std::vector<Vec3> differentiate(const std::vector<Vec3>& x, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
    const std::size_t n = x.size();
    if (n < 7) throw Error(ErrorKind::InvalidArgument, "differentiation needs at least 7 samples");
    std::vector<Vec3> d(n);
    for (std::size_t k = 3; k + 3 < n; ++k) {
        d[k] = (45.0 * (x[k + 1] - x[k - 1]) - 9.0 * (x[k + 2] - x[k - 2]) + (x[k + 3] - x[k - 3])) / (60.0 * dt);
    }
    for (std::size_t k = 0; k < 3; ++k) {
        d[k] = (-3.0 * x[k] + 4.0 * x[k + 1] - x[k + 2]) / (2.0 * dt);
        const std::size_t j = n - 1 - k;
        d[j] = (3.0 * x[j] - 4.0 * x[j - 1] + x[j - 2]) / (2.0 * dt);
    }
    return d;
}

ArmEstimate estimate_arms(const CalibrationLog& log, const OrientationEstimate& orient, std::size_t edge_trim) {
    log.validate();
    const std::size_t imus = log.imu_count();
    if (orient.rotations.size() != imus) throw Error(ErrorKind::InvalidArgument, "orientation count mismatch");
    const std::size_t t_count = log.sample_count();
    if (2 * edge_trim + 1 >= t_count) throw Error(ErrorKind::InvalidArgument, "edge trim leaves no samples");
    const double inv = 1.0 / static_cast<double>(imus);

    std::vector<Vec3> mean_rate(t_count, Vec3::Zero());
    for (std::size_t k = 0; k < t_count; ++k) {
        for (std::size_t i = 0; i < imus; ++i) mean_rate[k] += inv * (orient.rotations[i] * log.imus[i][k].gyro);
    }
    const std::vector<Vec3> mean_rate_dot = differentiate(mean_rate, 1.0 / log.sample_rate);

    const std::size_t used = t_count - 2 * edge_trim;
    const auto rows = static_cast<Eigen::Index>(3 * used);
    Matrix op(rows, 3);
    std::vector<Vector> rhs(imus, Vector(rows));
    for (std::size_t j = 0; j < used; ++j) {
        const std::size_t k = j + edge_trim;
        const Mat3 w = skew(mean_rate[k]);
        const auto row = static_cast<Eigen::Index>(3 * j);
        op.block<3, 3>(row, 0) = w * w + skew(mean_rate_dot[k]);
        Vec3 mean_accel = Vec3::Zero();
        std::vector<Vec3> rotated(imus);
        for (std::size_t i = 0; i < imus; ++i) {
            rotated[i] = orient.rotations[i] * log.imus[i][k].accel;
            mean_accel += inv * rotated[i];
        }
        for (std::size_t i = 0; i < imus; ++i) rhs[i].segment<3>(row) = rotated[i] - mean_accel;
    }

    ArmEstimate out;
    for (std::size_t i = 0; i < imus; ++i) {
        const LeastSquaresSolution sol = solve_least_squares(op, rhs[i]);
        out.arms.push_back(sol.x);
        out.residuals.push_back(sol.residual_norm / std::sqrt(static_cast<double>(rows)));
        out.condition = sol.condition;
    }
    return out;
}

Mat3 polygon_inertia(const std::vector<Vec3>& vertices, double mass) {
    if (vertices.size() < 3) throw Error(ErrorKind::DegeneratePolygon, "polygon needs at least three vertices");
    if (!(mass >= 0.0)) throw Error(ErrorKind::InvalidArgument, "polygon mass must be >= 0");
    double z = 0.0;
    Vec3 centroid = Vec3::Zero();
    for (const auto& v : vertices) {
        z += v.z();
        centroid += v;
    }
    const double count = static_cast<double>(vertices.size());
    z /= count;
    centroid /= count;
    centroid.z() = z;

    std::vector<Vec3> ring;
    for (const auto& v : vertices) ring.emplace_back(v.x(), v.y(), z);
    std::vector<double> angle(ring.size());
    for (std::size_t i = 0; i < ring.size(); ++i) {
        angle[i] = std::atan2(ring[i].y() - centroid.y(), ring[i].x() - centroid.x());
    }
    std::vector<std::size_t> order(ring.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (angle[a] != angle[b]) return angle[a] < angle[b];
        return (ring[a] - centroid).squaredNorm() < (ring[b] - centroid).squaredNorm();
    });

    std::vector<double> areas;
    double total = 0.0;
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Vec3& p = ring[order[k]];
        const Vec3& q = ring[order[(k + 1) % order.size()]];
        areas.push_back(0.5 * std::abs((p - centroid).cross(q - centroid).z()));
        total += areas.back();
    }
    if (total < kMinPolygonArea) throw Error(ErrorKind::DegeneratePolygon, "polygon area is below 1e-8 m^2");

    Mat3 inertia = Mat3::Zero();
    for (std::size_t k = 0; k < order.size(); ++k) {
        const Vec3& p = ring[order[k]];
        const Vec3& q = ring[order[(k + 1) % order.size()]];
        inertia += triangle_inertia(centroid, p, q, mass * areas[k] / total);
    }
    return inertia;
}

Mat3 estimate_inertia(const MassEstimate& mass, const OrientationEstimate& orient, const ArmEstimate& arms,
                      const std::vector<ModuleSpec>& modules) {
    if (orient.rotations.size() != modules.size() || arms.arms.size() != modules.size()) {
        throw Error(ErrorKind::InvalidArgument, "estimates and module list differ in length");
    }
    Mat3 inertia = Mat3::Zero();
    std::vector<Vec3> mounts;
    for (std::size_t i = 0; i < modules.size(); ++i) {
        const ModuleSpec& m = modules[i];
        const Mat3 r = orient.rotations[i].matrix();
        const Vec3 cm = arms.arms[i] + r * m.cm_offset;
        inertia += r * m.inertia_local * r.transpose() + point_mass_inertia(m.mass, cm);
        if (m.kind == ModuleKind::Propelling) mounts.push_back(arms.arms[i] + r * m.attach_offset);
    }
    const double payload = mass.payload_share * static_cast<double>(mass.n);
    if (payload > 0.0) inertia += polygon_inertia(mounts, payload);
    return 0.5 * (inertia + inertia.transpose());
}

ConfigEstimate estimate_config_matrix(const MassEstimate& mass, const OrientationEstimate& orient,
                                      const ArmEstimate& arms, const Mat3& inertia,
                                      const std::vector<ModuleSpec>& modules) {
    if (arms.arms.size() != modules.size() || orient.rotations.size() != modules.size()) {
        throw Error(ErrorKind::InvalidArgument, "estimates and module list differ in length");
    }
    std::vector<Vec3> rotor_arms;
    std::vector<double> drag;
    for (std::size_t i = 0; i < modules.size(); ++i) {
        if (modules[i].kind != ModuleKind::Propelling) continue;
        rotor_arms.push_back(arms.arms[i]);
        drag.push_back(modules[i].signed_drag_ratio());
    }
    ConfigEstimate e;
    e.mass = mass.mass;
    e.inertia = inertia;
    e.a_u = thrust_wrench_map(rotor_arms, Eigen::Map<const Vector>(drag.data(), static_cast<Eigen::Index>(drag.size())));
    e.a = configuration_from_wrench_map(e.a_u, e.mass, inertia);
    require_full_rank(e.a, "estimated configuration matrix");
    return e;
}

EstimateReport run_estimation(const CalibrationLog& log, const std::vector<ModuleSpec>& modules,
                              const EstimationOptions& options, std::string log_id) {
    const std::vector<ModuleSpec> ordered = imu_ordered(modules);
    if (ordered.size() != log.imu_count()) throw Error(ErrorKind::InvalidArgument, "log and module list differ");
    const CalibrationLog filtered = options.cutoff > 0.0 ? lowpass_log(log, options.cutoff) : log;
    EstimateReport r;
    r.log_id = std::move(log_id);
    r.mass = estimate_mass(ordered, options.payload_share);
    r.orientations = estimate_orientations(filtered);
    r.arms = estimate_arms(filtered, r.orientations, options.edge_trim);
    const Mat3 inertia = estimate_inertia(r.mass, r.orientations, r.arms, ordered);
    r.config = estimate_config_matrix(r.mass, r.orientations, r.arms, inertia, ordered);
    return r;
}

std::string serialize_estimate(const EstimateReport& report) {
    json j;
    j["log_id"] = report.log_id;
    j["mass"] = report.mass.mass;
    j["payload_share"] = report.mass.payload_share;
    j["propelling_modules"] = report.mass.n;
    j["inertia"] = mat_json(report.config.inertia);
    j["a"] = mat_json(report.config.a);
    json modules = json::array();
    for (std::size_t i = 0; i < report.orientations.rotations.size(); ++i) {
        json m;
        m["rotation"] = mat_json(report.orientations.rotations[i].matrix());
        m["arm"] = vec_json(report.arms.arms.at(i));
        m["orientation_residual"] = report.orientations.residuals.at(i);
        m["orientation_condition"] = report.orientations.conditions.at(i);
        m["arm_residual"] = report.arms.residuals.at(i);
        modules.push_back(m);
    }
    j["modules"] = modules;
    j["arm_condition"] = report.arms.condition;
    j["a_u"] = mat_json(report.config.a_u);
    return j.dump(2) + "\n";
}

EstimateReport parse_estimate(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
    try {
        EstimateReport r;
        r.log_id = j.at("log_id").get<std::string>();
        r.mass.mass = j.at("mass").get<double>();
        r.mass.payload_share = j.at("payload_share").get<double>();
        r.mass.n = j.at("propelling_modules").get<std::size_t>();
        const Matrix inertia = json_mat(j.at("inertia"));
        if (inertia.rows() != 3 || inertia.cols() != 3) throw Error(ErrorKind::ParseError, "inertia must be 3x3");
        r.config.inertia = inertia;
        r.config.mass = r.mass.mass;
        r.config.a = json_mat(j.at("a"));
        r.config.a_u = json_mat(j.at("a_u"));
        if (r.config.a.rows() != 4 || r.config.a_u.rows() != 4 || r.config.a.cols() != r.config.a_u.cols()) {
            throw Error(ErrorKind::ParseError, "configuration matrices must be 4xN");
        }
        for (const auto& m : j.at("modules")) {
            const Matrix rot = json_mat(m.at("rotation"));
            if (rot.rows() != 3 || rot.cols() != 3) throw Error(ErrorKind::ParseError, "rotation must be 3x3");
            r.orientations.rotations.push_back(RotationMatrix::from_matrix(rot, 1e-6));
            r.orientations.residuals.push_back(m.at("orientation_residual").get<double>());
            r.orientations.conditions.push_back(m.at("orientation_condition").get<double>());
            r.arms.arms.push_back(json_vec(m.at("arm")));
            r.arms.residuals.push_back(m.at("arm_residual").get<double>());
        }
        r.arms.condition = j.at("arm_condition").get<double>();
        return r;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, e.what());
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::ParseError) throw;
        throw Error(ErrorKind::ParseError, e.what());
    }
}

}  // namespace modflight
