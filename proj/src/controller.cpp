#include "modflight/controller.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include <Eigen/SVD>

#include "modflight/csv.hpp"
#include "modflight/errors.hpp"

namespace modflight {

namespace {

constexpr double kMaxGramCondition = 1e10;
constexpr double kRankTolerance = 1e-6;

Vec4 gravity_vector(double g) { return Vec4(g, 0, 0, 0); }

// Right pseudo-inverse applied to `rhs`.
Vector min_norm_solve(const Matrix& a, const Vec4& rhs) {
    if (a.rows() != 4 || a.cols() < 4) throw Error(ErrorKind::InvalidArgument, "A_hat must be 4xN with N >= 4");
    const Mat4 gram = a * a.transpose();
    const Eigen::JacobiSVD<Mat4> svd(gram);
    const double smax = svd.singularValues()(0);
    const double smin = svd.singularValues()(3);
    if (!(smin > 0.0) || smax / smin > kMaxGramCondition) {
        throw Error(ErrorKind::SingularConfiguration, "A_hat A_hat^T is not invertible");
    }
    return a.transpose() * gram.ldlt().solve(rhs);
}

}  // namespace

Gains Gains::hover() { return Gains{}; }

Gains Gains::trajectory() {
    Gains g;
    g.k_att = Vec3::Constant(10.0);
    g.lambda = Vec4(3.5e-2, 1.1e-1, 1.3e-1, 1.0e-2);
    return g;
}

void Gains::validate() const {
    if (!(k > 0 && k_p > 0 && k_d > 0 && k_z > 0) || !(k_att.minCoeff() > 0) || !(lambda.minCoeff() > 0)) {
        throw Error(ErrorKind::InvalidArgument, "all controller gains must be positive");
    }
    if (!(k > k_p / k_d)) throw Error(ErrorKind::InvalidArgument, "gains must satisfy k > k_p / k_d");
}

Composite compute_s(const RigidState& state, const Setpoint& sp, const Gains& gains, double gravity) {
    const double yaw = yaw_of(state.r);
    const Vec3 accel = gravity * state.r.column(2) + Vec3(0, 0, -gravity);
    const Vec3 pr = gains.k3() * sp.j - gains.k2() * (accel - sp.a) - gains.k1() * (state.v - sp.v) -
                    gains.k0() * (state.p - sp.p);
    Composite c;
    c.h(0) = -sp.v.z() + gains.k_z * (state.p.z() - sp.p.z());
    c.h(1) = pr.dot(state.r.column(1)) / gravity;
    c.h(2) = -pr.dot(state.r.column(0)) / gravity;
    c.h(3) = gains.k_att.z() * wrap_angle(yaw - sp.yaw);
    c.s = Vec4(state.v.z(), state.omega.x(), state.omega.y(), state.omega.z()) + c.h;
    return c;
}

ThrustCommand control_input(const Matrix& a_hat, const Gains& gains, const Vec4& s, const Vec4& h_dot,
                            double gravity) {
    const Vec4 demand = gravity_vector(gravity) - h_dot - gains.k_diag().cwiseProduct(s);
    return min_norm_solve(a_hat, demand);
}

Matrix adapt(const Matrix& a_hat, const Vec4& lambda, const Vec4& s, const ThrustCommand& u_applied, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "adaptation dt must be positive");
    if (u_applied.size() != a_hat.cols()) throw Error(ErrorKind::InvalidArgument, "thrust size mismatch");
    return a_hat + (lambda.cwiseProduct(s) * u_applied.transpose()) * dt;
}

int numerical_rank(const Matrix& a) {
    const Eigen::JacobiSVD<Matrix> svd(a);
    const auto& sv = svd.singularValues();
    int rank = 0;
    for (Eigen::Index i = 0; i < sv.size(); ++i) {
        if (sv(i) > kRankTolerance * sv(0)) ++rank;
    }
    return rank;
}

bool rank_deficient(const Matrix& a) { return numerical_rank(a) < std::min<int>(4, static_cast<int>(a.cols())); }

HRate::HRate(double dt, double cutoff) : dt_(dt) {
    if (!(dt > 0.0) || !(cutoff > 0.0)) throw Error(ErrorKind::InvalidArgument, "h-rate needs dt > 0 and cutoff > 0");
    const double tau = 1.0 / (2.0 * std::numbers::pi * cutoff);
    alpha_ = dt / (dt + tau);
}

Vec4 HRate::update(const Vec4& h) {
    if (!started_) {
        started_ = true;
        prev_ = h;
        out_.setZero();
        return out_;
    }
    const Vec4 raw = (h - prev_) / dt_;
    prev_ = h;
    out_ += alpha_ * (raw - out_);
    return out_;
}

void HRate::reset() {
    started_ = false;
    prev_.setZero();
    out_.setZero();
}

Matrix trim_step(const Matrix& a_hat, int axis, int sign_input, double delta) {
    if (axis < 1 || axis > 3) throw Error(ErrorKind::InvalidArgument, "trim axis must be 1, 2 or 3");
    if (sign_input != 1 && sign_input != -1) throw Error(ErrorKind::InvalidArgument, "trim sign must be +1 or -1");
    if (!(delta >= 0.0)) throw Error(ErrorKind::InvalidArgument, "trim step must be >= 0");
    if (a_hat.rows() != 4) throw Error(ErrorKind::InvalidArgument, "A_hat must have four rows");
    Matrix out = a_hat;
    out.row(axis) = a_hat.row(axis) - sign_input * delta * a_hat.row(axis).cwiseAbs();
    return out;
}

ThrustCommand nominal_input(const Matrix& a_hat, double gravity) {
    const Vector u0 = min_norm_solve(a_hat, gravity_vector(gravity));
    if (u0.minCoeff() < -1e-9) throw Error(ErrorKind::InfeasibleTrim, "hover allocation demands negative thrust");
    return u0;
}

double lyapunov_partial(const Vec4& s) { return 0.5 * s.squaredNorm(); }

double lyapunov_full(const Vec4& s, const Matrix& a_hat, const Matrix& a_true, const Vec4& lambda) {
    if (a_hat.rows() != a_true.rows() || a_hat.cols() != a_true.cols()) {
        throw Error(ErrorKind::InvalidArgument, "A_hat and A differ in shape");
    }
    const Matrix err = a_hat - a_true;
    return lyapunov_partial(s) + 0.5 * (err.transpose() * lambda.cwiseInverse().asDiagonal() * err).trace();
}

Controller::Controller(Matrix a_hat, Gains gains, double rate, double h_cutoff, double gravity)
    : a_hat_(std::move(a_hat)), gains_(gains), dt_(1.0 / rate), gravity_(gravity), h_rate_(1.0 / rate, h_cutoff) {
    gains_.validate();
    if (a_hat_.rows() != 4) throw Error(ErrorKind::InvalidArgument, "A_hat must have four rows");
}

Controller::Output Controller::update(const RigidState& feedback, const Setpoint& sp) {
    Output o;
    const Composite c = compute_s(feedback, sp, gains_, gravity_);
    o.s = c.s;
    o.h = c.h;
    o.h_dot = h_rate_.update(c.h);
    o.u = control_input(a_hat_, gains_, o.s, o.h_dot, gravity_);
    return o;
}

void Controller::adapt(const Vec4& s, const ThrustCommand& u_applied, double dt) {
    a_hat_ = modflight::adapt(a_hat_, gains_.lambda, s, u_applied, dt);
    rank_warning_ = rank_deficient(a_hat_);
}

std::string controller_log_header(std::size_t n_rotors) {
    std::string h = "t,s1,s2,s3,s4,h1,h2,h3,h4";
    for (std::size_t i = 1; i <= n_rotors; ++i) h += ",u" + std::to_string(i);
    return h + ",Vs,V,rankA";
}

void write_controller_row(std::ostream& out, double t, const Controller::Output& o, double v_s, double v_full,
                          int rank) {
    std::vector<double> row{t};
    for (int i = 0; i < 4; ++i) row.push_back(o.s(i));
    for (int i = 0; i < 4; ++i) row.push_back(o.h(i));
    for (Eigen::Index i = 0; i < o.u.size(); ++i) row.push_back(o.u(i));
    row.push_back(v_s);
    row.push_back(v_full);
    row.push_back(static_cast<double>(rank));
    csv::write_row(out, row);
}

}  // namespace modflight
