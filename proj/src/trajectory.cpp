#include "modflight/trajectory.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/LU>
#include <nlohmann/json.hpp>

#include "modflight/csv.hpp"
#include "modflight/errors.hpp"

namespace modflight {

namespace {

using json = nlohmann::ordered_json;
using Boundary = Eigen::Matrix<double, 10, 10>;

constexpr double kMinPolynomialDuration = 1e-3;
constexpr double kJointTolerance = 1e-9;

// Falling factorial n (n-1) ... (n-k+1).
double falling(int n, int k) {
    double r = 1.0;
    for (int i = 0; i < k; ++i) r *= n - i;
    return r;
}

const Eigen::FullPivLU<Boundary>& boundary_solver() {
    static const Eigen::FullPivLU<Boundary> lu = [] {
        Boundary m = Boundary::Zero();
        for (int k = 0; k < 5; ++k) {
            m(k, k) = falling(k, k);
            for (int n = k; n < 10; ++n) m(5 + k, n) = falling(n, k);
        }
        return Eigen::FullPivLU<Boundary>(m);
    }();
    return lu;
}

std::array<Vec3, 4> derivatives(const Setpoint& s) { return {s.p, s.v, s.a, s.j}; }

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }

Vec3 json_vec(const json& j) {
    if (!j.is_array() || j.size() != 3) throw Error(ErrorKind::ParseError, "expected a 3-vector");
    return Vec3(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
}

json setpoint_json(const Setpoint& s) {
    return json{{"p", vec_json(s.p)}, {"v", vec_json(s.v)}, {"a", vec_json(s.a)}, {"j", vec_json(s.j)}};
}

Setpoint json_setpoint(const json& j) {
    Setpoint s;
    s.p = json_vec(j.at("p"));
    s.v = json_vec(j.at("v"));
    s.a = json_vec(j.at("a"));
    s.j = json_vec(j.at("j"));
    return s;
}

}  // namespace

Segment Segment::hover(const Vec3& position, double duration) {
    if (!(duration > 0.0)) throw Error(ErrorKind::InvalidArgument, "segment duration must be positive");
    Segment s;
    s.kind_ = SegmentKind::Hover;
    s.duration_ = duration;
    s.start_ = s.end_ = at_rest(position);
    return s;
}

Segment Segment::polynomial(const Setpoint& start, const Setpoint& end, double duration) {
    if (!(duration >= kMinPolynomialDuration)) {
        throw Error(ErrorKind::IllConditioned, "polynomial segments need at least 1 ms");
    }
    Segment s;
    s.kind_ = SegmentKind::Polynomial;
    s.duration_ = duration;
    s.start_ = start;
    s.end_ = end;
    const auto a = derivatives(start);
    const auto b = derivatives(end);
    Eigen::Matrix<double, 10, 3> rhs = Eigen::Matrix<double, 10, 3>::Zero();
    double scale = 1.0;
    for (int k = 0; k < 4; ++k) {
        rhs.row(k) = scale * a[k].transpose();
        rhs.row(5 + k) = scale * b[k].transpose();
        scale *= duration;
    }
    s.coeffs_ = boundary_solver().solve(rhs);
    return s;
}

Segment Segment::helix(const Vec3& center, double radius, double period, double climb, double duration,
                       double phase) {
    if (!(radius > 0.0) || !(period > 0.0) || !(duration > 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "helix needs positive radius, period and duration");
    }
    Segment s;
    s.kind_ = SegmentKind::Helix;
    s.duration_ = duration;
    s.center_ = center;
    s.radius_ = radius;
    s.period_ = period;
    s.climb_ = climb;
    s.phase_ = phase;
    s.start_ = s.eval(0.0);
    s.end_ = s.eval(duration);
    return s;
}

Setpoint Segment::eval(double t) const {
    Setpoint sp;
    switch (kind_) {
        case SegmentKind::Hover:
            sp = start_;
            break;
        case SegmentKind::Polynomial: {
            const double tau = t / duration_;
            std::array<Vec3, 4> d{Vec3::Zero(), Vec3::Zero(), Vec3::Zero(), Vec3::Zero()};
            for (int k = 0; k < 4; ++k) {
                // Horner on the k-th derivative in normalised time.
                Vec3 acc = Vec3::Zero();
                for (int n = 9; n >= k; --n) acc = acc * tau + falling(n, k) * coeffs_.row(n).transpose();
                d[k] = acc / std::pow(duration_, k);
            }
            sp.p = d[0];
            sp.v = d[1];
            sp.a = d[2];
            sp.j = d[3];
            break;
        }
        case SegmentKind::Helix: {
            const double w = 2.0 * std::numbers::pi / period_;
            const double c = std::cos(w * t + phase_), s = std::sin(w * t + phase_);
            const double r = radius_;
            sp.p = center_ + Vec3(r * c, r * s, climb_ * t);
            sp.v = Vec3(-r * w * s, r * w * c, climb_);
            sp.a = Vec3(-r * w * w * c, -r * w * w * s, 0.0);
            sp.j = Vec3(r * w * w * w * s, -r * w * w * w * c, 0.0);
            break;
        }
    }
    return sp;
}

TrajectoryPlan::TrajectoryPlan(std::vector<Segment> segments, double yaw)
    : segments_(std::move(segments)), yaw_(yaw) {}

double TrajectoryPlan::duration() const {
    double total = 0.0;
    for (const auto& s : segments_) total += s.duration();
    return total;
}

Setpoint TrajectoryPlan::eval(double t) const {
    const double total = duration();
    if (segments_.empty() || !(t >= -kJointTolerance) || !(t <= total + kJointTolerance)) {
        throw Error(ErrorKind::OutOfRange, "time lies outside the plan");
    }
    double start = 0.0;
    for (std::size_t i = 0; i < segments_.size(); ++i) {
        const double end = start + segments_[i].duration();
        if (t < end || i + 1 == segments_.size()) {
            Setpoint sp = segments_[i].eval(std::clamp(t - start, 0.0, segments_[i].duration()));
            sp.yaw = yaw_;
            return sp;
        }
        start = end;
    }
    throw Error(ErrorKind::OutOfRange, "time lies outside the plan");
}

Setpoint at_rest(const Vec3& p) {
    Setpoint s;
    s.p = p;
    return s;
}

TrajectoryPlan hover_plan(const Vec3& target, double takeoff, double total) {
    if (!(total > takeoff)) throw Error(ErrorKind::InvalidArgument, "plan must be longer than the takeoff");
    const Vec3 ground(target.x(), target.y(), 0.0);
    return TrajectoryPlan({Segment::polynomial(at_rest(ground), at_rest(target), takeoff),
                           Segment::hover(target, total - takeoff)});
}

TrajectoryPlan helix_plan(const HelixPlanConfig& cfg) {
    if (!(cfg.hover > cfg.blend) || !(cfg.final_hover > cfg.blend)) {
        throw Error(ErrorKind::InvalidArgument, "hover stages must be longer than the blends");
    }
    const Vec3 hold = cfg.start + Vec3(0, 0, cfg.hover_height);
    const double speed = 2.0 * std::numbers::pi * cfg.radius / cfg.period;
    // Start the helix roughly where a rest-to-speed blend would carry the vehicle.
    const Vec3 entry = hold + Vec3(0, 0.5 * speed * cfg.blend, 0.5 * cfg.climb * cfg.blend);
    const Segment helix = Segment::helix(entry - Vec3(cfg.radius, 0, 0), cfg.radius, cfg.period, cfg.climb,
                                         cfg.helix_duration);
    const Setpoint exit = helix.end();
    const Vec3 settle = exit.p + 0.5 * cfg.blend * exit.v;

    std::vector<Segment> s;
    s.push_back(Segment::polynomial(at_rest(cfg.start), at_rest(hold), cfg.takeoff));
    s.push_back(Segment::hover(hold, cfg.hover - cfg.blend));
    s.push_back(Segment::polynomial(at_rest(hold), helix.start(), cfg.blend));
    s.push_back(helix);
    s.push_back(Segment::polynomial(exit, at_rest(settle), cfg.blend));
    s.push_back(Segment::hover(settle, cfg.final_hover - cfg.blend));
    return TrajectoryPlan(std::move(s));
}

std::string serialize_plan(const TrajectoryPlan& plan) {
    json segs = json::array();
    for (const auto& s : plan.segments()) {
        json j;
        j["duration"] = s.duration();
        switch (s.kind()) {
            case SegmentKind::Hover:
                j["kind"] = "hover";
                j["position"] = vec_json(s.start().p);
                break;
            case SegmentKind::Polynomial:
                j["kind"] = "polynomial";
                j["start"] = setpoint_json(s.start());
                j["end"] = setpoint_json(s.end());
                break;
            case SegmentKind::Helix:
                j["kind"] = "helix";
                j["center"] = vec_json(s.center());
                j["radius"] = s.radius();
                j["period"] = s.period();
                j["climb"] = s.climb();
                j["phase"] = s.phase();
                break;
        }
        segs.push_back(j);
    }
    json root;
    root["yaw"] = plan.yaw();
    root["segments"] = segs;
    return root.dump(2) + "\n";
}

TrajectoryPlan parse_plan(const std::string& text) {
    try {
        const json root = json::parse(text);
        std::vector<Segment> segs;
        for (const auto& j : root.at("segments")) {
            const std::string kind = j.at("kind").get<std::string>();
            const double duration = j.at("duration").get<double>();
            if (kind == "hover") {
                segs.push_back(Segment::hover(json_vec(j.at("position")), duration));
            } else if (kind == "polynomial") {
                segs.push_back(Segment::polynomial(json_setpoint(j.at("start")), json_setpoint(j.at("end")), duration));
            } else if (kind == "helix") {
                segs.push_back(Segment::helix(json_vec(j.at("center")), j.at("radius").get<double>(),
                                              j.at("period").get<double>(), j.at("climb").get<double>(), duration,
                                              j.value("phase", 0.0)));
            } else {
                throw Error(ErrorKind::ParseError, "unknown segment kind '" + kind + "'");
            }
        }
        return TrajectoryPlan(std::move(segs), root.value("yaw", 0.0));
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
}

std::string setpoint_log_header() { return "t,px,py,pz,vx,vy,vz,ax,ay,az,jx,jy,jz,yaw"; }

void write_setpoint_row(std::ostream& out, double t, const Setpoint& sp) {
    csv::write_row(out, {t, sp.p.x(), sp.p.y(), sp.p.z(), sp.v.x(), sp.v.y(), sp.v.z(), sp.a.x(), sp.a.y(), sp.a.z(),
                         sp.j.x(), sp.j.y(), sp.j.z(), sp.yaw});
}

}  // namespace modflight
