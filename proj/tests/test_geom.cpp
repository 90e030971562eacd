#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "modflight/errors.hpp"
#include "modflight/geom.hpp"
#include "support/error_kind.hpp"
#include "support/generators.hpp"

namespace modflight {
namespace {

using testing::error_kind_of;
using testing::Gen;

constexpr double kPi = std::numbers::pi;

Vec3 cross_by_hand(const Vec3& a, const Vec3& b) {
    return Vec3(a.y() * b.z() - a.z() * b.y(), a.z() * b.x() - a.x() * b.z(), a.x() * b.y() - a.y() * b.x());
}

double orthogonality_error(const Mat3& r) { return (r.transpose() * r - Mat3::Identity()).norm(); }

TEST(Skew, ZeroVectorGivesZeroMatrix) { EXPECT_EQ(skew(Vec3::Zero()), Mat3::Zero()); }

TEST(Skew, AppliedToUnitX) {
    const Vec3 out = skew(Vec3(1, 2, 3)) * Vec3(1, 0, 0);
    EXPECT_EQ(out, Vec3(0, 3, -2));
}

TEST(Skew, AnnihilatesItsOwnVector) {
    const Vec3 v(0.3, -1.7, 2.2);
    EXPECT_LT((skew(v) * v).norm(), 1e-15);
}

TEST(IntegrateRotation, ZeroRateKeepsIdentity) {
    const RotationMatrix r = integrate_rotation(RotationMatrix(), Vec3::Zero(), 0.01);
    EXPECT_EQ(r.matrix(), Mat3::Identity());
}

TEST(IntegrateRotation, QuarterTurnAboutZ) {
    const RotationMatrix r = integrate_rotation(RotationMatrix(), Vec3(0, 0, kPi / 2), 1.0);
    Mat3 expected;
    expected << 0, -1, 0, 1, 0, 0, 0, 0, 1;
    EXPECT_LT((r.matrix() - expected).norm(), 1e-15);
}

TEST(IntegrateRotation, ManySmallStepsEqualOneLargeStep) {
    const Vec3 omega(0.4, -1.1, 0.7);
    RotationMatrix stepped;
    for (int i = 0; i < 1000; ++i) stepped = integrate_rotation(stepped, omega, 1e-3);
    const RotationMatrix single = integrate_rotation(RotationMatrix(), omega, 1.0);
    EXPECT_LT((stepped.matrix() - single.matrix()).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(IntegrateRotation, RejectsNonPositiveStep) {
    EXPECT_EQ(error_kind_of([] { integrate_rotation(RotationMatrix(), Vec3::UnitX(), 0.0); }), ErrorKind::InvalidArgument);
}

TEST(Yaw, IdentityIsZero) { EXPECT_EQ(yaw_of(RotationMatrix()), 0.0); }

TEST(Yaw, ThirtyDegreeTurn) {
    EXPECT_NEAR(yaw_of(RotationMatrix::about_z(kPi / 6)), kPi / 6, 1e-15);
}

TEST(Yaw, HalfTurnMapsToPlusPi) { EXPECT_DOUBLE_EQ(yaw_of(RotationMatrix::about_z(-kPi)), kPi); }

TEST(Yaw, GimbalLockIsSingular) {
    const RotationMatrix pitched = RotationMatrix::from_matrix(testing::closed_form_ry(kPi / 2));
    EXPECT_EQ(error_kind_of([&] { yaw_of(pitched); }), ErrorKind::SingularAttitude);
}

TEST(WrapAngle, RangeIsHalfOpen) {
    EXPECT_DOUBLE_EQ(wrap_angle(kPi), kPi);
    EXPECT_DOUBLE_EQ(wrap_angle(-kPi), kPi);
    EXPECT_NEAR(wrap_angle(3 * kPi / 2), -kPi / 2, 1e-15);
    EXPECT_NEAR(wrap_angle(0.25 + 4 * kPi), 0.25, 1e-14);
}

TEST(LeastSquares, IdentitySystem) {
    const auto sol = solve_least_squares(Matrix::Identity(3, 3), Vector::LinSpaced(3, 1, 3));
    EXPECT_LT((sol.x - Vector::LinSpaced(3, 1, 3)).norm(), 1e-15);
    EXPECT_NEAR(sol.condition, 1.0, 1e-12);
}

TEST(LeastSquares, ConsistentOverdeterminedSystem) {
    Gen gen(11);
    const Matrix a = gen.matrix(40, 5);
    Vector x_true(5);
    x_true << 0.5, -2.0, 3.25, 0.0, 1.0;
    const auto sol = solve_least_squares(a, a * x_true);
    EXPECT_LT((sol.x - x_true).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT(sol.residual_norm, 1e-10);
}

TEST(LeastSquares, RankOneStackIsRankDeficient) {
    Matrix a(6, 3);
    for (int i = 0; i < 6; ++i) a.row(i) = (i + 1.0) * Eigen::RowVector3d(1, 2, 3);
    EXPECT_EQ(error_kind_of([&] { solve_least_squares(a, Vector::Ones(6)); }), ErrorKind::RankDeficient);
}

TEST(LeastSquares, UnderdeterminedIsInvalid) {
    EXPECT_EQ(error_kind_of([] { solve_least_squares(Matrix::Ones(2, 3), Vector::Ones(2)); }), ErrorKind::InvalidArgument);
}

TEST(Orthonormalize, RotationIsFixedPoint) {
    const RotationMatrix r = RotationMatrix::about_axis(Vec3(1, 2, 3), 0.8);
    EXPECT_LT((orthonormalize(r.matrix()).matrix() - r.matrix()).norm(), 1e-12);
}

TEST(Orthonormalize, RemovesUniformScaling) {
    EXPECT_LT((orthonormalize(1.1 * Mat3::Identity()).matrix() - Mat3::Identity()).norm(), 1e-15);
}

TEST(Orthonormalize, SmallPerturbationStaysClose) {
    Gen gen(5);
    const RotationMatrix r = gen.rotation();
    Mat3 e = gen.matrix(3, 3);
    e *= 1e-3 / e.norm();
    EXPECT_LT((orthonormalize(r.matrix() + e).matrix() - r.matrix()).norm(), 1e-3);
}

TEST(Orthonormalize, ReflectionGetsProperSign) {
    Mat3 m = Mat3::Identity();
    m(2, 2) = -1.0;
    const RotationMatrix r = orthonormalize(m);
    EXPECT_NEAR(r.matrix().determinant(), 1.0, 1e-12);
}

TEST(Orthonormalize, SingularMatrixIsDegenerate) {
    EXPECT_EQ(error_kind_of([] { orthonormalize(Mat3::Zero()); }), ErrorKind::Degenerate);
}

TEST(RotationMatrix, FromMatrixValidates) {
    EXPECT_EQ(error_kind_of([] { RotationMatrix::from_matrix(2.0 * Mat3::Identity()); }), ErrorKind::Degenerate);
    Mat3 reflection = Mat3::Identity();
    reflection(0, 0) = -1.0;
    EXPECT_EQ(error_kind_of([&] { RotationMatrix::from_matrix(reflection); }), ErrorKind::Degenerate);
}

TEST(RotationMatrix, AngleToMatchesConstruction) {
    const RotationMatrix a = RotationMatrix::about_axis(Vec3(0, 1, 1), 0.3);
    const RotationMatrix b = a * RotationMatrix::about_axis(Vec3(1, 0, 0), 1e-7);
    EXPECT_NEAR(a.angle_to(b), 1e-7, 1e-15);
}

// ---- properties ----

constexpr int kCases = 2000;

TEST(GeomProperty, SkewMatchesCrossProduct) {
    Gen gen(101);
    for (int i = 0; i < kCases; ++i) {
        const Vec3 v = gen.vec(3.0), w = gen.vec(3.0);
        const Mat3 s = skew(v);
        ASSERT_LT((s * w - cross_by_hand(v, w)).norm(), 1e-13) << "case " << i;
        ASSERT_EQ(s.transpose(), -s) << "case " << i;
    }
    RecordProperty("cases", kCases);
}

TEST(GeomProperty, IntegrationStaysOnSO3OverAMillionSteps) {
    Gen gen(102);
    RotationMatrix r;
    for (int i = 0; i < 1000000; ++i) r = integrate_rotation(r, gen.vec(2.0), gen.uniform(1e-4, 1e-2));
    EXPECT_LT(orthogonality_error(r.matrix()), 1e-9);
    EXPECT_NEAR(r.matrix().determinant(), 1.0, 1e-9);
    RecordProperty("cases", 1000000);
}

TEST(GeomProperty, ExponentialMapGroupProperty) {
    Gen gen(103);
    for (int i = 0; i < kCases; ++i) {
        const Vec3 omega = gen.vec(1.5);
        const double t1 = gen.uniform(0.0, 1.0), t2 = gen.uniform(0.0, 1.0);
        const Mat3 lhs = RotationMatrix::exp(omega * t1).matrix() * RotationMatrix::exp(omega * t2).matrix();
        ASSERT_LT((lhs - RotationMatrix::exp(omega * (t1 + t2)).matrix()).norm(), 1e-12) << "case " << i;
    }
    RecordProperty("cases", kCases);
}

TEST(GeomProperty, ExponentialMatchesRodriguesAboutZ) {
    Gen gen(104);
    for (int i = 0; i < kCases; ++i) {
        const double a = gen.uniform(-6.0, 6.0);
        ASSERT_LT((RotationMatrix::exp(Vec3(0, 0, a)).matrix() - testing::closed_form_rz(a)).norm(), 1e-14);
    }
    RecordProperty("cases", kCases);
}

TEST(GeomProperty, YawRecoversZYXComposition) {
    Gen gen(105);
    for (int i = 0; i < kCases; ++i) {
        const double yaw = gen.uniform(-kPi + 1e-9, kPi), pitch = gen.uniform(-1.5, 1.5),
                     roll = gen.uniform(-kPi, kPi);
        const Mat3 m = testing::closed_form_rz(yaw) * testing::closed_form_ry(pitch) * testing::closed_form_rx(roll);
        ASSERT_NEAR(yaw_of(RotationMatrix::from_matrix(m)), yaw, 1e-12) << "case " << i;
    }
    RecordProperty("cases", kCases);
}

TEST(GeomProperty, LeastSquaresResidualIsOrthogonalToColumns) {
    Gen gen(106);
    int checked = 0;
    for (int i = 0; i < kCases; ++i) {
        const int n = gen.integer(1, 9);
        const int m = n + gen.integer(0, 40);
        const Matrix a = gen.matrix(m, n);
        const Vector b = gen.matrix(m, 1);
        LeastSquaresSolution sol;
        try {
            sol = solve_least_squares(a, b);
        } catch (const Error&) {
            continue;  // random square systems are occasionally ill-conditioned
        }
        const double scale = a.norm() * b.norm();
        ASSERT_LT((a.transpose() * (a * sol.x - b)).norm(), 1e-8 * scale) << "case " << i;
        ++checked;
    }
    RecordProperty("cases", checked);
}

TEST(GeomProperty, LeastSquaresMatchesNormalEquations) {
    Gen gen(107);
    for (int i = 0; i < kCases; ++i) {
        const Matrix a = gen.matrix(12, 4);
        const Vector b = gen.matrix(12, 1);
        const Vector normal = (a.transpose() * a).inverse() * a.transpose() * b;
        ASSERT_LT((solve_least_squares(a, b).x - normal).norm(), 1e-9 * (1.0 + normal.norm())) << "case " << i;
    }
    RecordProperty("cases", kCases);
}

TEST(GeomProperty, OrthonormalizeIsIdempotent) {
    Gen gen(108);
    int checked = 0;
    for (int i = 0; i < kCases; ++i) {
        const Mat3 m = gen.matrix(3, 3);
        if (std::abs(m.determinant()) < 1e-3) continue;
        const RotationMatrix once = orthonormalize(m);
        const RotationMatrix twice = orthonormalize(once.matrix());
        ASSERT_LT((once.matrix() - twice.matrix()).norm(), 1e-12) << "case " << i;
        ASSERT_LT(orthogonality_error(once.matrix()), 1e-12) << "case " << i;
        ASSERT_NEAR(once.matrix().determinant(), 1.0, 1e-12) << "case " << i;
        ++checked;
    }
    RecordProperty("cases", checked);
}

TEST(GeomProperty, OrthonormalizeIsNearestRotation) {
    Gen gen(109);
    for (int i = 0; i < kCases; ++i) {
        const Mat3 m = gen.rotation().matrix() + gen.matrix(3, 3, 0.05);
        const RotationMatrix best = orthonormalize(m);
        const double d_best = (m - best.matrix()).norm();
        // Any nearby rotation is at least as far from m.
        const RotationMatrix other = best * RotationMatrix::exp(gen.vec(0.05));
        ASSERT_LE(d_best, (m - other.matrix()).norm() + 1e-12) << "case " << i;
    }
    RecordProperty("cases", kCases);
}

TEST(GeomProperty, WrapAngleIsIdempotentAndInRange) {
    Gen gen(110);
    for (int i = 0; i < kCases; ++i) {
        const double a = gen.uniform(-100.0, 100.0);
        const double w = wrap_angle(a);
        ASSERT_GT(w, -kPi);
        ASSERT_LE(w, kPi);
        ASSERT_NEAR(std::remainder(a - w, 2 * kPi), 0.0, 1e-12);
        ASSERT_EQ(wrap_angle(w), w);
    }
    RecordProperty("cases", kCases);
}

}  // namespace
}  // namespace modflight
