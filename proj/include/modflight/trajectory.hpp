#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "modflight/setpoint.hpp"

namespace modflight {

enum class SegmentKind { Hover, Polynomial, Helix };

class Segment {
public:
    static Segment hover(const Vec3& position, double duration);
    /// Degree-9 polynomial per axis; position through jerk matched at both ends, snap zero.
    /// Throws IllConditioned for durations below 1 ms.
    static Segment polynomial(const Setpoint& start, const Setpoint& end, double duration);
    /// center + [r cos(w t + phase), r sin(w t + phase), climb t], w = 2 pi / period.
    static Segment helix(const Vec3& center, double radius, double period, double climb, double duration,
                         double phase = 0.0);

    /// Local time in [0, duration]; yaw is left at zero.
    Setpoint eval(double t) const;

    SegmentKind kind() const { return kind_; }
    double duration() const { return duration_; }

    // Parameters, exposed for serialisation.
    const Setpoint& start() const { return start_; }
    const Setpoint& end() const { return end_; }
    const Vec3& center() const { return center_; }
    double radius() const { return radius_; }
    double period() const { return period_; }
    double climb() const { return climb_; }
    double phase() const { return phase_; }

private:
    Segment() = default;

    SegmentKind kind_ = SegmentKind::Hover;
    double duration_ = 0.0;
    Setpoint start_, end_;
    Eigen::Matrix<double, 10, 3> coeffs_ = Eigen::Matrix<double, 10, 3>::Zero();  // normalised time
    Vec3 center_ = Vec3::Zero();
    double radius_ = 0.0, period_ = 0.0, climb_ = 0.0, phase_ = 0.0;
};

class TrajectoryPlan {
public:
    TrajectoryPlan() = default;
    explicit TrajectoryPlan(std::vector<Segment> segments, double yaw = 0.0);

    void append(const Segment& segment) { segments_.push_back(segment); }
    double duration() const;
    /// Throws OutOfRange outside [0, duration]. At a joint the later segment is used.
    Setpoint eval(double t) const;

    const std::vector<Segment>& segments() const { return segments_; }
    double yaw() const { return yaw_; }

private:
    std::vector<Segment> segments_;
    double yaw_ = 0.0;
};

Setpoint at_rest(const Vec3& p);

/// Rest on the ground, polynomial climb to `target` over `takeoff` seconds, then hold.
TrajectoryPlan hover_plan(const Vec3& target, double takeoff, double total);

struct HelixPlanConfig {
    Vec3 start = Vec3::Zero();          // ground position
    double hover_height = 0.8;
    double takeoff = 10.0;
    double hover = 10.0;                // includes the entry blend
    double helix_duration = 30.0;
    double final_hover = 10.0;          // includes the exit blend
    double blend = 1.0;
    double radius = 0.5;
    double period = 10.0;
    double climb = 0.02;
};

/// Takeoff, hover, helix and hover; the helix is entered and left through polynomial blends.
TrajectoryPlan helix_plan(const HelixPlanConfig& cfg = {});

std::string serialize_plan(const TrajectoryPlan& plan);
TrajectoryPlan parse_plan(const std::string& text);

std::string setpoint_log_header();
void write_setpoint_row(std::ostream& out, double t, const Setpoint& sp);

}  // namespace modflight
