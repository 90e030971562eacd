#include "modflight/dynamics.hpp"

#include <ostream>
#include <string>

#include "modflight/csv.hpp"
#include "modflight/errors.hpp"

namespace modflight {

ThrustCommand saturate(const ThrustCommand& u, const VehicleTruth& truth) {
    if (u.size() != static_cast<Eigen::Index>(truth.n)) throw Error(ErrorKind::InvalidArgument, "thrust size mismatch");
    return u.cwiseMax(truth.thrust_min).cwiseMin(truth.thrust_max);
}

Wrench total_wrench(const ThrustCommand& u, const VehicleTruth& truth) {
    if (u.size() != truth.a_u.cols()) throw Error(ErrorKind::InvalidArgument, "thrust size mismatch");
    const Eigen::Vector4d w = truth.a_u * u;
    return Wrench{w(0), w.tail<3>()};
}

Accelerations rigid_body_accelerations(const RigidState& s, const Wrench& w, const VehicleTruth& truth,
                                       double gravity) {
    Accelerations a;
    a.linear = (w.thrust / truth.total_mass) * s.r.column(2) + Vec3(0, 0, -gravity);
    a.angular = truth.inertia.ldlt().solve(w.torque - s.omega.cross(truth.inertia * s.omega));
    return a;
}

Plant::Plant(PlantConfig cfg) : cfg_(std::move(cfg)), rng_(cfg_.seed) {
    if (!(cfg_.dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "plant dt must be positive");
    if (!(cfg_.thrust_noise_std >= 0.0)) throw Error(ErrorKind::InvalidArgument, "noise std must be >= 0");
    if (!(cfg_.feedback_delay >= 0.0)) throw Error(ErrorKind::InvalidArgument, "feedback delay must be >= 0");
    inertia_inv_ = cfg_.truth.inertia.inverse();
}

RigidState Plant::step(const RigidState& s, const ThrustCommand& u) {
    const VehicleTruth& truth = cfg_.truth;
    last_applied_ = u;
    if (cfg_.thrust_noise_std > 0.0) {
        for (Eigen::Index i = 0; i < last_applied_.size(); ++i) {
            last_applied_(i) += cfg_.thrust_noise_std * normal_(rng_);
        }
    }
    if (!last_applied_.allFinite()) throw Error(ErrorKind::NonFiniteState, "thrust command is non-finite");
    const Wrench w = total_wrench(last_applied_, truth);
    const double m = truth.total_mass;
    const double g = cfg_.gravity;
    const double h = cfg_.dt;
    const Vec3 gravity(0, 0, -g);

    auto linear = [&](const RotationMatrix& r) -> Vec3 { return (w.thrust / m) * r.column(2) + gravity; };
    auto angular = [&](const Vec3& om) -> Vec3 {
        return inertia_inv_ * (w.torque - om.cross(truth.inertia * om));
    };

    RigidState next = s;
    grounded_ = s.p.z() <= 0.0 && w.thrust * s.r(2, 2) - m * g <= 0.0;
    if (grounded_) {
        // Resting on the ground: no vertical motion, no rotation.
        Vec3 a = linear(s.r);
        a.z() = 0.0;
        last_accel_ = Accelerations{a, Vec3::Zero()};
        next.v = Vec3(s.v.x() + h * a.x(), s.v.y() + h * a.y(), 0.0);
        next.p = Vec3(s.p.x() + h * next.v.x(), s.p.y() + h * next.v.y(), 0.0);
        next.omega = Vec3::Zero();
    } else {
        const Vec3 a1 = linear(s.r);
        const Vec3 w1 = s.omega;
        const Vec3 al1 = angular(w1);
        last_accel_ = Accelerations{a1, al1};

        const RotationMatrix r2 = s.r * RotationMatrix::exp(0.5 * h * w1);
        const Vec3 v2 = s.v + 0.5 * h * a1;
        const Vec3 w2 = s.omega + 0.5 * h * al1;
        const Vec3 a2 = linear(r2);
        const Vec3 al2 = angular(w2);

        const RotationMatrix r3 = s.r * RotationMatrix::exp(0.5 * h * w2);
        const Vec3 v3 = s.v + 0.5 * h * a2;
        const Vec3 w3 = s.omega + 0.5 * h * al2;
        const Vec3 a3 = linear(r3);
        const Vec3 al3 = angular(w3);

        const RotationMatrix r4 = s.r * RotationMatrix::exp(h * w3);
        const Vec3 v4 = s.v + h * a3;
        const Vec3 w4 = s.omega + h * al3;
        const Vec3 a4 = linear(r4);
        const Vec3 al4 = angular(w4);

        next.p = s.p + (h / 6.0) * (s.v + 2.0 * v2 + 2.0 * v3 + v4);
        next.v = s.v + (h / 6.0) * (a1 + 2.0 * a2 + 2.0 * a3 + a4);
        next.omega = s.omega + (h / 6.0) * (al1 + 2.0 * al2 + 2.0 * al3 + al4);
        const Vec3 mean_rate = (w1 + 2.0 * w2 + 2.0 * w3 + w4) / 6.0;
        if (!mean_rate.allFinite()) throw Error(ErrorKind::NonFiniteState, "body rate became non-finite");
        next.r = integrate_rotation(s.r, mean_rate, h);

        if (next.p.z() < 0.0) {
            next.p.z() = 0.0;
            next.v.z() = std::max(next.v.z(), 0.0);
        }
    }
    if (!next.p.allFinite() || !next.v.allFinite() || !next.omega.allFinite() || !next.r.matrix().allFinite()) {
        throw Error(ErrorKind::NonFiniteState, "plant state became non-finite");
    }
    return next;
}

DelayLine::DelayLine(double delay) : delay_(delay) {
    if (!(delay >= 0.0)) throw Error(ErrorKind::InvalidArgument, "delay must be >= 0");
}

void DelayLine::push(const DelayedSample& sample) {
    buffer_.push_back(sample);
    // Keep one sample older than the release horizon so `at` always has an answer.
    while (buffer_.size() > 1 && buffer_[1].t <= sample.t - delay_) buffer_.pop_front();
}

DelayedSample DelayLine::at(double t) const {
    if (buffer_.empty()) throw Error(ErrorKind::InvalidArgument, "delay line is empty");
    const double horizon = t - delay_ + 1e-12;
    DelayedSample out = buffer_.front();
    for (const auto& s : buffer_) {
        if (s.t <= horizon) out = s;
        else break;
    }
    return out;
}

Eigen::Vector4d to_quaternion(const RotationMatrix& r) {
    Eigen::Quaterniond q(r.matrix());
    q.normalize();
    if (q.w() < 0.0) q.coeffs() *= -1.0;
    return Eigen::Vector4d(q.w(), q.x(), q.y(), q.z());
}

std::string flight_log_header(std::size_t n_rotors) {
    std::string h = "t,px,py,pz,vx,vy,vz,qw,qx,qy,qz,wx,wy,wz";
    for (std::size_t i = 1; i <= n_rotors; ++i) h += ",u" + std::to_string(i);
    return h;
}

void write_flight_row(std::ostream& out, double t, const RigidState& s, const ThrustCommand& u) {
    const Eigen::Vector4d q = to_quaternion(s.r);
    std::vector<double> row{t,      s.p.x(), s.p.y(), s.p.z(), s.v.x(), s.v.y(), s.v.z(),         q(0),
                            q(1),   q(2),    q(3),    s.omega.x(), s.omega.y(), s.omega.z()};
    for (Eigen::Index i = 0; i < u.size(); ++i) row.push_back(u(i));
    csv::write_row(out, row);
}

}  // namespace modflight
