#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "modflight/errors.hpp"
#include "modflight/trajectory.hpp"

using namespace modflight;

namespace {

// Unique degree-9 rest-to-rest profile (all derivatives through snap zero at both ends).
double rest_to_rest(double tau) {
    const double t5 = std::pow(tau, 5);
    return t5 * (126 - 420 * tau + 540 * tau * tau - 315 * std::pow(tau, 3) + 70 * std::pow(tau, 4));
}

Setpoint random_setpoint(std::mt19937_64& rng) {
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Setpoint s;
    s.p = Vec3(u(rng), u(rng), u(rng));
    s.v = Vec3(u(rng), u(rng), u(rng));
    s.a = Vec3(u(rng), u(rng), u(rng));
    s.j = Vec3(u(rng), u(rng), u(rng));
    return s;
}

void expect_near(const Vec3& a, const Vec3& b, double tol) { EXPECT_LT((a - b).norm(), tol) << a.transpose() << " vs " << b.transpose(); }

void expect_same(const Setpoint& a, const Setpoint& b, double tol) {
    expect_near(a.p, b.p, tol);
    expect_near(a.v, b.v, tol);
    expect_near(a.a, b.a, tol);
    expect_near(a.j, b.j, tol);
}

// Central differences of each emitted derivative against the next one.
double derivative_mismatch(const TrajectoryPlan& plan, double t0, double t1, double h) {
    double worst = 0.0;
    for (double t = t0 + h; t < t1 - h; t += h) {
        const Setpoint m = plan.eval(t - h), c = plan.eval(t), p = plan.eval(t + h);
        worst = std::max(worst, ((p.p - m.p) / (2 * h) - c.v).norm());
        worst = std::max(worst, ((p.v - m.v) / (2 * h) - c.a).norm());
        worst = std::max(worst, ((p.a - m.a) / (2 * h) - c.j).norm());
    }
    return worst;
}

}  // namespace

TEST(Polynomial, RestSegmentIsConstant) {
    const Segment s = Segment::polynomial(at_rest(Vec3(1, 2, 3)), at_rest(Vec3(1, 2, 3)), 4.0);
    for (double t : {0.0, 1.3, 4.0}) {
        const Setpoint sp = s.eval(t);
        expect_near(sp.p, Vec3(1, 2, 3), 1e-12);
        EXPECT_LT(sp.v.norm() + sp.a.norm() + sp.j.norm(), 1e-12);
    }
}

TEST(Polynomial, RestToRestMatchesClosedForm) {
    const double T = 10.0;
    const Segment s = Segment::polynomial(at_rest(Vec3::Zero()), at_rest(Vec3(1, 0, 0)), T);
    for (int i = 0; i <= 20; ++i) {
        const double t = T * i / 20.0;
        EXPECT_NEAR(s.eval(t).p.x(), rest_to_rest(t / T), 1e-12);
    }
    // Peak velocity at the midpoint: (630 / 256) / T.
    EXPECT_NEAR(s.eval(T / 2).v.x(), 630.0 / 256.0 / T, 1e-12);
    EXPECT_NEAR(s.eval(T / 2).v.x(), 0.24609375, 1e-12);
}

TEST(Polynomial, BoundaryConditionsHold) {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const Setpoint a = random_setpoint(rng), b = random_setpoint(rng);
        const double T = 0.5 + 4.0 * std::uniform_real_distribution<double>(0, 1)(rng);
        const Segment s = Segment::polynomial(a, b, T);
        expect_same(s.eval(0.0), a, 1e-9);
        expect_same(s.eval(T), b, 1e-9);
    }
}

TEST(Polynomial, SnapVanishesAtEnds) {
    std::mt19937_64 rng(3);
    const Segment s = Segment::polynomial(random_setpoint(rng), random_setpoint(rng), 2.0);
    const double h = 1e-4;
    // Second-order one-sided differences of jerk.
    const Vec3 snap0 = (-3 * s.eval(0).j + 4 * s.eval(h).j - s.eval(2 * h).j) / (2 * h);
    const Vec3 snap1 = (3 * s.eval(2.0).j - 4 * s.eval(2.0 - h).j + s.eval(2.0 - 2 * h).j) / (2 * h);
    EXPECT_LT(snap0.norm(), 1e-4);
    EXPECT_LT(snap1.norm(), 1e-4);
}

TEST(Polynomial, ShortDurationIsIllConditioned) {
    try {
        Segment::polynomial(at_rest(Vec3::Zero()), at_rest(Vec3::UnitX()), 5e-4);
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::IllConditioned);
    }
    EXPECT_NO_THROW(Segment::polynomial(at_rest(Vec3::Zero()), at_rest(Vec3::UnitX()), 1e-3));
}

TEST(Polynomial, ChainedSegmentsAreContinuous) {
    std::mt19937_64 rng(5);
    const Setpoint a = random_setpoint(rng), b = random_setpoint(rng), c = random_setpoint(rng);
    const TrajectoryPlan plan({Segment::polynomial(a, b, 1.5), Segment::polynomial(b, c, 2.5)});
    expect_same(plan.eval(1.5 - 1e-12), plan.eval(1.5), 1e-9);
    expect_same(plan.segments()[0].eval(1.5), plan.segments()[1].eval(0.0), 1e-9);
}

TEST(Helix, AccelerationMagnitudeIsCentripetal) {
    const double r = 0.5, T0 = 10.0;
    const Segment s = Segment::helix(Vec3(0, 0, 1), r, T0, 0.02, 30.0);
    const double w = 2 * std::numbers::pi / T0;
    for (double t : {0.0, 2.5, 7.1, 29.0}) {
        const Setpoint sp = s.eval(t);
        EXPECT_NEAR(sp.a.norm(), r * w * w, 1e-12);
        EXPECT_NEAR(sp.j.norm(), r * w * w * w, 1e-12);
        EXPECT_NEAR(std::hypot(sp.v.x(), sp.v.y()), r * w, 1e-12);
        EXPECT_NEAR(std::hypot(sp.p.x(), sp.p.y()), r, 1e-12);
        EXPECT_NEAR(sp.p.z(), 1.0 + 0.02 * t, 1e-12);
    }
}

TEST(Helix, FlatCircleHasNoVerticalMotion) {
    const Segment s = Segment::helix(Vec3(0, 0, 0.8), 0.5, 10.0, 0.0, 10.0);
    for (double t = 0; t <= 10.0; t += 0.37) {
        const Setpoint sp = s.eval(t);
        EXPECT_DOUBLE_EQ(sp.p.z(), 0.8);
        EXPECT_EQ(sp.v.z(), 0.0);
        EXPECT_EQ(sp.a.z(), 0.0);
        EXPECT_EQ(sp.j.z(), 0.0);
    }
}

TEST(Helix, RejectsBadParameters) {
    EXPECT_THROW(Segment::helix(Vec3::Zero(), 0.0, 10.0, 0.0, 1.0), Error);
    EXPECT_THROW(Segment::helix(Vec3::Zero(), 0.5, 0.0, 0.0, 1.0), Error);
    EXPECT_THROW(Segment::hover(Vec3::Zero(), 0.0), Error);
}

TEST(Plan, HoverPlanHoldsTarget) {
    const TrajectoryPlan plan = hover_plan(Vec3(0, 0, 0.8), 5.0, 120.0);
    EXPECT_DOUBLE_EQ(plan.duration(), 120.0);
    expect_near(plan.eval(0.0).p, Vec3::Zero(), 1e-12);
    for (double t : {5.0, 20.0, 119.9, 120.0}) {
        const Setpoint sp = plan.eval(t);
        expect_near(sp.p, Vec3(0, 0, 0.8), 1e-9);
        EXPECT_LT(sp.v.norm() + sp.a.norm() + sp.j.norm(), 1e-9);
        EXPECT_EQ(sp.yaw, 0.0);
    }
}

TEST(Plan, OutOfRange) {
    const TrajectoryPlan plan = hover_plan(Vec3(0, 0, 0.8), 5.0, 10.0);
    for (double t : {-0.01, 10.01}) {
        try {
            plan.eval(t);
            FAIL();
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::OutOfRange);
        }
    }
    EXPECT_THROW(TrajectoryPlan().eval(0.0), Error);
}

TEST(Plan, HelixPlanStagesAndContinuity) {
    const TrajectoryPlan plan = helix_plan();
    EXPECT_NEAR(plan.duration(), 60.0, 1e-12);
    ASSERT_EQ(plan.segments().size(), 6u);
    EXPECT_EQ(plan.segments()[3].kind(), SegmentKind::Helix);
    EXPECT_DOUBLE_EQ(plan.segments()[3].radius(), 0.5);
    EXPECT_DOUBLE_EQ(plan.segments()[3].duration(), 30.0);
    // Helix spans 20 s to 50 s.
    double t = 0.0;
    for (int i = 0; i < 3; ++i) t += plan.segments()[i].duration();
    EXPECT_NEAR(t, 20.0, 1e-12);

    expect_near(plan.eval(10.0).p, Vec3(0, 0, 0.8), 1e-9);
    double joint = 0.0;
    for (std::size_t i = 0; i + 1 < plan.segments().size(); ++i) {
        joint += plan.segments()[i].duration();
        expect_same(plan.segments()[i].eval(plan.segments()[i].duration()), plan.segments()[i + 1].eval(0.0), 1e-9);
        expect_same(plan.eval(joint - 1e-13), plan.eval(joint), 1e-9);
    }
    const Setpoint last = plan.eval(60.0);
    EXPECT_LT(last.v.norm() + last.a.norm() + last.j.norm(), 1e-9);
}

TEST(Plan, FiniteDifferencesMatchDerivatives) {
    const TrajectoryPlan plan = helix_plan();
    // 1 kHz sampling; O(h^2) error of central differences stays far below the bound.
    EXPECT_LT(derivative_mismatch(plan, 0.0, plan.duration(), 1e-3), 1e-4);
}

TEST(Plan, FiniteDifferencesConvergeQuadratically) {
    std::mt19937_64 rng(17);
    for (int trial = 0; trial < 50; ++trial) {
        const Setpoint a = random_setpoint(rng), b = random_setpoint(rng), c = random_setpoint(rng);
        const TrajectoryPlan plan({Segment::polynomial(a, b, 2.0), Segment::polynomial(b, c, 3.0)});
        const double coarse = derivative_mismatch(plan, 0.0, plan.duration(), 2e-3);
        const double fine = derivative_mismatch(plan, 0.0, plan.duration(), 1e-3);
        EXPECT_LT(fine, 1e-3);
        EXPECT_GT(coarse / fine, 3.5);
        EXPECT_LT(coarse / fine, 4.5);
    }
}

TEST(Plan, JsonRoundTrip) {
    const TrajectoryPlan plan = helix_plan();
    const TrajectoryPlan back = parse_plan(serialize_plan(plan));
    ASSERT_EQ(back.segments().size(), plan.segments().size());
    for (double t = 0.0; t <= 60.0; t += 0.731) expect_same(back.eval(t), plan.eval(t), 1e-12);
    EXPECT_EQ(serialize_plan(back), serialize_plan(plan));
}

TEST(Plan, ParseErrors) {
    for (const char* bad : {"", "{", R"({"segments":[{"kind":"spiral","duration":1}]})",
                            R"({"segments":[{"kind":"hover","duration":1,"position":[0,0]}]})"}) {
        try {
            parse_plan(bad);
            FAIL() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::ParseError) << bad;
        }
    }
}

TEST(Plan, SetpointLog) {
    std::ostringstream out;
    out << setpoint_log_header() << '\n';
    Setpoint sp = at_rest(Vec3(0, 0, 0.8));
    sp.v.x() = 0.25;
    write_setpoint_row(out, 1.5, sp);
    EXPECT_EQ(out.str(), "t,px,py,pz,vx,vy,vz,ax,ay,az,jx,jy,jz,yaw\n1.5,0,0,0.8,0.25,0,0,0,0,0,0,0,0,0\n");
}
