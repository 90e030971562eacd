#include "modflight/geom.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "modflight/errors.hpp"

namespace modflight {

namespace {

constexpr double kDriftTolerance = 1e-12;

}  // namespace

RotationMatrix RotationMatrix::from_matrix(const Mat3& m, double tol) {
    if (!m.allFinite()) throw Error(ErrorKind::Degenerate, "rotation has non-finite entries");
    const double ortho = (m.transpose() * m - Mat3::Identity()).norm();
    const double det = m.determinant();
    if (ortho > tol || std::abs(det - 1.0) > tol) {
        throw Error(ErrorKind::Degenerate, "matrix is not a proper rotation");
    }
    return RotationMatrix(m);
}

RotationMatrix RotationMatrix::about_z(double angle) {
    Mat3 m;
    const double c = std::cos(angle), s = std::sin(angle);
    m << c, -s, 0, s, c, 0, 0, 0, 1;
    return RotationMatrix(m);
}

RotationMatrix RotationMatrix::about_axis(const Vec3& axis, double angle) {
    const double n = axis.norm();
    if (!(n > 0.0)) throw Error(ErrorKind::InvalidArgument, "rotation axis must be non-zero");
    return exp(axis / n * angle);
}

RotationMatrix RotationMatrix::exp(const Vec3& rotation_vector) {
    const double theta2 = rotation_vector.squaredNorm();
    const double theta = std::sqrt(theta2);
    double a, b;
    if (theta < 1e-4) {
        a = 1.0 - theta2 / 6.0 + theta2 * theta2 / 120.0;
        b = 0.5 - theta2 / 24.0 + theta2 * theta2 / 720.0;
    } else {
        a = std::sin(theta) / theta;
        b = (1.0 - std::cos(theta)) / theta2;
    }
    const Mat3 k = skew(rotation_vector);
    return RotationMatrix(Mat3(Mat3::Identity() + a * k + b * k * k));
}

double RotationMatrix::angle_to(const RotationMatrix& other) const {
    const Mat3 d = m_.transpose() * other.m_;
    // atan2 form stays accurate near zero where acos((tr-1)/2) loses digits.
    const Vec3 axis(d(2, 1) - d(1, 2), d(0, 2) - d(2, 0), d(1, 0) - d(0, 1));
    return std::atan2(0.5 * axis.norm(), 0.5 * (d.trace() - 1.0));
}

Mat3 skew(const Vec3& v) {
    Mat3 m;
    m << 0, -v.z(), v.y(), v.z(), 0, -v.x(), -v.y(), v.x(), 0;
    return m;
}

RotationMatrix integrate_rotation(const RotationMatrix& r, const Vec3& omega, double dt) {
    if (!(dt > 0.0)) throw Error(ErrorKind::InvalidArgument, "dt must be positive");
    const Mat3 next = r.matrix() * RotationMatrix::exp(omega * dt).matrix();
    if ((next.transpose() * next - Mat3::Identity()).norm() > kDriftTolerance) {
        return orthonormalize(next);
    }
    return RotationMatrix::from_matrix(next);
}

double wrap_angle(double angle) {
    constexpr double pi = std::numbers::pi;
    double w = std::remainder(angle, 2.0 * pi);
    if (w <= -pi) w += 2.0 * pi;
    return w;
}

double yaw_of(const RotationMatrix& r) {
    if (std::abs(r(2, 0)) > 1.0 - 1e-9) {
        throw Error(ErrorKind::SingularAttitude, "pitch at +/-90 degrees, yaw undefined");
    }
    return wrap_angle(std::atan2(r(1, 0), r(0, 0)));
}

RotationMatrix orthonormalize(const Mat3& m) {
    if (!m.allFinite()) throw Error(ErrorKind::Degenerate, "non-finite matrix");
    Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
    if (svd.singularValues().minCoeff() < 1e-12) {
        throw Error(ErrorKind::Degenerate, "matrix is (near) singular");
    }
    const Mat3 u = svd.matrixU();
    const Mat3 v = svd.matrixV();
    Mat3 d = Mat3::Identity();
    d(2, 2) = (u * v.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
    return RotationMatrix(Mat3(u * d * v.transpose()));
}

LeastSquaresSolution solve_least_squares(const Matrix& a, const Vector& b, double max_condition) {
    if (a.rows() < a.cols() || a.cols() == 0) {
        throw Error(ErrorKind::InvalidArgument, "least squares needs rows >= cols > 0");
    }
    if (b.size() != a.rows()) throw Error(ErrorKind::InvalidArgument, "dimension mismatch in least squares");
    if (!a.allFinite() || !b.allFinite()) throw Error(ErrorKind::InvalidArgument, "non-finite least-squares input");

    Eigen::ColPivHouseholderQR<Matrix> qr(a);
    const Eigen::Index n = a.cols();
    const Matrix r = qr.matrixR().topLeftCorner(n, n).template triangularView<Eigen::Upper>();
    const Vector sv = Eigen::JacobiSVD<Matrix>(r).singularValues();
    const double smax = sv(0);
    const double smin = sv(n - 1);
    const double condition = smin > 0.0 ? smax / smin : std::numeric_limits<double>::infinity();
    if (!(condition <= max_condition)) {
        throw Error(ErrorKind::RankDeficient, "condition number " + std::to_string(condition) + " exceeds threshold");
    }
    LeastSquaresSolution out;
    out.x = qr.solve(b);
    out.condition = condition;
    out.residual_norm = (a * out.x - b).norm();
    return out;
}

}  // namespace modflight
