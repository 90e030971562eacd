#pragma once

#include <Eigen/Dense>

namespace modflight {

using Vec3 = Eigen::Vector3d;
using Mat3 = Eigen::Matrix3d;
using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Orthonormal 3x3 matrix with det = +1. Columns are the body axes expressed
/// in the parent frame.
class RotationMatrix {
public:
    RotationMatrix() : m_(Mat3::Identity()) {}

    /// Validates orthonormality and handedness within `tol`; throws Degenerate otherwise.
    static RotationMatrix from_matrix(const Mat3& m, double tol = 1e-9);
    static RotationMatrix about_z(double angle);
    static RotationMatrix about_axis(const Vec3& axis, double angle);
    /// Exponential map of a rotation vector (Rodrigues).
    static RotationMatrix exp(const Vec3& rotation_vector);

    const Mat3& matrix() const { return m_; }
    double operator()(int r, int c) const { return m_(r, c); }
    Vec3 column(int c) const { return m_.col(c); }

    RotationMatrix transpose() const { return RotationMatrix(Mat3(m_.transpose())); }
    RotationMatrix operator*(const RotationMatrix& other) const { return RotationMatrix(Mat3(m_ * other.m_)); }
    Vec3 operator*(const Vec3& v) const { return m_ * v; }

    /// Geodesic distance to `other` in radians.
    double angle_to(const RotationMatrix& other) const;

private:
    explicit RotationMatrix(const Mat3& m) : m_(m) {}
    friend RotationMatrix orthonormalize(const Mat3& m);
    Mat3 m_;
};

Mat3 skew(const Vec3& v);

/// R * exp(skew(omega * dt)).
RotationMatrix integrate_rotation(const RotationMatrix& r, const Vec3& omega, double dt);

/// Z-Y-X Euler yaw in (-pi, pi]. Throws SingularAttitude at gimbal lock.
double yaw_of(const RotationMatrix& r);

/// Wraps an angle to (-pi, pi].
double wrap_angle(double angle);

/// Nearest rotation in Frobenius norm (SVD polar factor, det forced to +1).
RotationMatrix orthonormalize(const Mat3& m);

struct LeastSquaresSolution {
    Vector x;
    double condition = 0.0;
    double residual_norm = 0.0;
};

/// Column-pivoted QR solve of min |Ax - b|. Throws RankDeficient above `max_condition`.
LeastSquaresSolution solve_least_squares(const Matrix& a, const Vector& b, double max_condition = 1e8);

}  // namespace modflight
