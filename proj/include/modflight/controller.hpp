#pragma once

#include <iosfwd>
#include <string>

#include "modflight/dynamics.hpp"
#include "modflight/geom.hpp"
#include "modflight/setpoint.hpp"

namespace modflight {

using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;

struct Gains {
    double k = 4.0;
    double k_p = 8.0;
    double k_d = 4.0;
    double k_z = 2.0;
    Vec3 k_att = Vec3::Constant(9.0);  // roll, pitch, yaw
    Vec4 lambda = Vec4(1.2e-2, 3.5e-2, 3.5e-2, 3.5e-3);

    static Gains hover();
    static Gains trajectory();

    /// All positive and k > k_p / k_d; throws InvalidArgument otherwise.
    void validate() const;

    Vec4 k_diag() const { return Vec4(k_z, k_att.x(), k_att.y(), k_att.z()); }
    Mat3 k3() const { return Vec3(1, 1, 0).asDiagonal(); }
    Mat3 k2() const { return Vec3(k, k, 0).asDiagonal(); }
    Mat3 k1() const { return Vec3(k * k_d, k * k_d, 1).asDiagonal(); }
    Mat3 k0() const { return Vec3(k * k_p, k * k_p, k_z).asDiagonal(); }
};

struct Composite {
    Vec4 s = Vec4::Zero();
    Vec4 h = Vec4::Zero();
};

/// s = [z_dot; omega] + h, with the acceleration reconstructed from attitude as g k + g_vec.
Composite compute_s(const RigidState& state, const Setpoint& sp, const Gains& gains, double gravity = 9.81);

/// Minimum-norm u with A_hat u = g_v - h_dot - K s. Not saturated.
ThrustCommand control_input(const Matrix& a_hat, const Gains& gains, const Vec4& s, const Vec4& h_dot,
                            double gravity = 9.81);

/// A_hat + Lambda s u^T dt.
Matrix adapt(const Matrix& a_hat, const Vec4& lambda, const Vec4& s, const ThrustCommand& u_applied, double dt);

/// True when sigma_min(A) < 1e-6 sigma_max(A).
bool rank_deficient(const Matrix& a);
int numerical_rank(const Matrix& a);

/// Causal derivative of h: backward difference through a single-pole low-pass.
class HRate {
public:
    explicit HRate(double dt, double cutoff = 20.0);
    /// The first call returns zero.
    Vec4 update(const Vec4& h);
    void reset();

private:
    double dt_;
    double alpha_;
    bool started_ = false;
    Vec4 prev_ = Vec4::Zero();
    Vec4 out_ = Vec4::Zero();
};

/// row[axis] -= sign * delta * |row[axis]|, axis in {1, 2, 3} (roll, pitch, yaw).
Matrix trim_step(const Matrix& a_hat, int axis, int sign_input, double delta);

/// Minimum-norm u0 with A_hat u0 = g_v. Throws InfeasibleTrim on negative thrust.
ThrustCommand nominal_input(const Matrix& a_hat, double gravity = 9.81);

double lyapunov_partial(const Vec4& s);
double lyapunov_full(const Vec4& s, const Matrix& a_hat, const Matrix& a_true, const Vec4& lambda);

/// Owns A_hat and the h-rate filter for one flight.
class Controller {
public:
    struct Output {
        Vec4 s = Vec4::Zero();
        Vec4 h = Vec4::Zero();
        Vec4 h_dot = Vec4::Zero();
        ThrustCommand u;
    };

    Controller(Matrix a_hat, Gains gains, double rate = 150.0, double h_cutoff = 20.0, double gravity = 9.81);

    Output update(const RigidState& feedback, const Setpoint& sp);
    void adapt(const Vec4& s, const ThrustCommand& u_applied, double dt);

    const Matrix& a_hat() const { return a_hat_; }
    void set_a_hat(Matrix a) { a_hat_ = std::move(a); }
    const Gains& gains() const { return gains_; }
    bool rank_warning() const { return rank_warning_; }
    double dt() const { return dt_; }

private:
    Matrix a_hat_;
    Gains gains_;
    double dt_;
    double gravity_;
    HRate h_rate_;
    bool rank_warning_ = false;
};

std::string controller_log_header(std::size_t n_rotors);
void write_controller_row(std::ostream& out, double t, const Controller::Output& o, double v_s, double v_full,
                          int rank);

}  // namespace modflight
