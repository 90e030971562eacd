#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <gtest/gtest.h>

#include "modflight/errors.hpp"
#include "modflight/harness.hpp"

using namespace modflight;

namespace {

std::vector<TrackSample> offset_track(const Vec3& offset, double t_end, double dt) {
    std::vector<TrackSample> out;
    for (double t = 0.0; t <= t_end + 1e-12; t += dt) out.push_back(TrackSample{t, Vec3(0, 0, 0.8) + offset, Vec3(0, 0, 0.8)});
    return out;
}

std::string slurp(const std::filesystem::path& p) {
    std::ifstream in(p);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::filesystem::path scratch_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() / ("modflight_harness_" + name);
    std::filesystem::remove_all(dir);
    return dir;
}

Scenario ideal_hover(const std::string& platform) {
    Scenario sc;
    sc.platform = platform;
    sc.config_source = ConfigSource::Truth;
    sc.adapt = false;
    sc.thrust_noise_std = 0.0;
    sc.duration = 40.0;
    sc.windows = {{20.0, 40.0}};
    return sc;
}

}  // namespace

TEST(Metrics, ZeroErrorGivesZeros) {
    const Metrics m = compute_metrics(offset_track(Vec3::Zero(), 10.0, 0.1), {{0.0, 10.0}});
    ASSERT_EQ(m.windows.size(), 1u);
    EXPECT_EQ(m.windows[0].mean, Vec3::Zero());
    EXPECT_EQ(m.windows[0].std, Vec3::Zero());
    EXPECT_EQ(m.windows[0].mean_abs, Vec3::Zero());
    ASSERT_TRUE(m.settled.has_value());
    EXPECT_EQ(*m.settled, 0.0);
}

TEST(Metrics, ConstantOffset) {
    const Metrics m = compute_metrics(offset_track(Vec3(0.03, 0, 0), 10.0, 0.1), {{2.0, 8.0}});
    EXPECT_NEAR(m.windows[0].mean.x(), 0.03, 1e-15);
    EXPECT_NEAR(m.windows[0].std.x(), 0.0, 1e-15);
    EXPECT_NEAR(m.windows[0].mean_abs.x(), 0.03, 1e-15);
    EXPECT_EQ(m.windows[0].samples, 61u);
}

TEST(Metrics, HandBuiltThreeSamples) {
    const std::vector<TrackSample> track{
        {0.0, Vec3(0.01, -0.02, 0), Vec3::Zero()},
        {1.0, Vec3(0.02, 0.00, 0), Vec3::Zero()},
        {2.0, Vec3(0.06, 0.02, 0), Vec3::Zero()},
    };
    const Metrics m = compute_metrics(track, {{0.0, 2.0}, {1.0, 2.0}});
    // x errors 0.01, 0.02, 0.06: mean 0.03, population variance (4 + 1 + 9) e-4 / 3.
    EXPECT_NEAR(m.windows[0].mean.x(), 0.03, 1e-15);
    EXPECT_NEAR(m.windows[0].std.x(), std::sqrt(0.0014 / 3.0), 1e-15);
    EXPECT_NEAR(m.windows[0].mean.y(), 0.0, 1e-15);
    EXPECT_NEAR(m.windows[0].mean_abs.y(), 0.04 / 3.0, 1e-15);
    EXPECT_NEAR(m.windows[1].mean.x(), 0.04, 1e-15);
    EXPECT_NEAR(m.windows[1].std.x(), 0.02, 1e-15);
    EXPECT_EQ(m.windows[1].samples, 2u);
}

TEST(Metrics, EmptyWindowThrows) {
    try {
        compute_metrics(offset_track(Vec3::Zero(), 10.0, 0.1), {{20.0, 30.0}});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.kind(), ErrorKind::EmptyWindow);
    }
}

TEST(Metrics, HelixRmsAndSettling) {
    auto track = offset_track(Vec3(0, 0.1, 0), 20.0, 0.5);
    for (auto& s : track) {
        if (s.t >= 8.0) s.p = s.p_d + Vec3(0.02, 0, 0);
    }
    const Metrics m = compute_metrics(track, {{0.0, 20.0}}, Window{10.0, 20.0});
    ASSERT_TRUE(m.helix_rms.has_value());
    EXPECT_NEAR(m.helix_rms->x(), 0.02, 1e-15);
    EXPECT_NEAR(m.helix_rms->y(), 0.0, 1e-15);
    ASSERT_TRUE(m.settled.has_value());
    EXPECT_DOUBLE_EQ(*m.settled, 8.0);
    const Metrics never = compute_metrics(offset_track(Vec3(0, 0, 0.06), 20.0, 0.5), {{0.0, 20.0}});
    EXPECT_FALSE(never.settled.has_value());
}

TEST(Metrics, ReadTrackRejectsMisalignedLogs) {
    std::istringstream flight("t,px,py,pz\n0,0,0,0\n0.1,0,0,0\n");
    std::istringstream sp("t,px,py,pz\n0,0,0,0\n0.2,0,0,0\n");
    EXPECT_THROW(read_track(flight, sp), Error);
    std::istringstream f2("t,px,py,pz\n0,0,0,0\n");
    std::istringstream s2("bogus\n0,0,0,0\n");
    EXPECT_THROW(read_track(f2, s2), Error);
}

TEST(Trim, NominalAllocationOnTruthDoesNotTip) {
    for (Platform p : all_platforms()) {
        const VehicleTruth t = assemble_vehicle(preset(p));
        EXPECT_LT(tipping_acceleration(t, nominal_input(t.a)).norm(), 1e-9) << platform_letter(p);
    }
}

TEST(Trim, SignOracleReducesImbalanceMonotonically) {
    for (Platform p : all_platforms()) {
        const VehicleTruth t = assemble_vehicle(preset(p));
        Matrix a = t.a;
        a.block(1, 0, 2, a.cols() / 2) *= 1.3;
        TrimOptions opt;
        opt.enabled = true;
        const TrimSummary s = run_trim(a, t, opt);
        ASSERT_GE(s.history.size(), 2u);
        EXPECT_GT(s.history.front(), 1.0) << platform_letter(p);
        for (std::size_t i = 1; i < s.history.size(); ++i) {
            EXPECT_LT(s.history[i], s.history[i - 1]) << platform_letter(p) << " step " << i;
        }
        EXPECT_TRUE(s.converged);
        EXPECT_LT(s.history.back(), 0.1);
        EXPECT_LE(s.steps, 50);
    }
}

TEST(Trim, RejectsBadOptions) {
    const VehicleTruth t = assemble_vehicle(preset(Platform::A));
    Matrix a = t.a;
    TrimOptions opt;
    opt.delta = 0.0;
    EXPECT_THROW(run_trim(a, t, opt), Error);
}

TEST(Scenario, IdealHoverConvergesWithMonotoneVs) {
    const Report r = run_scenario(ideal_hover("A"));
    EXPECT_TRUE(r.completed);
    const double takeoff_end = 5.0;
    for (std::size_t k = 1; k < r.v_s.size(); ++k) {
        if (r.times[k - 1] < takeoff_end) continue;
        // 1e-28 is the roundoff floor of s (about 1e-14 per component).
        EXPECT_LE(r.v_s[k], r.v_s[k - 1] * (1.0 + 1e-6) + 1e-28) << "t = " << r.times[k];
    }
    EXPECT_LT(r.metrics.windows[0].mean_abs.maxCoeff(), 1e-6);
}

TEST(Scenario, PipelineHoverReportsCalibration) {
    Scenario sc;
    sc.duration = 60.0;
    sc.windows = {{20.0, 50.0}};
    const Report r = run_scenario(sc);
    ASSERT_TRUE(r.calibration.has_value());
    EXPECT_EQ(r.calibration->position_error.size(), 5u);
    EXPECT_GT(r.calibration->position_rmse, 0.005);
    EXPECT_LT(r.calibration->position_rmse, 0.05);
    EXPECT_TRUE(r.completed);
    EXPECT_LT(r.metrics.windows[0].mean_abs.maxCoeff(), 0.05);
    EXPECT_FALSE(r.a_final.isApprox(r.a_initial));
}

TEST(Scenario, ReversedRollRowFailsLiftoff) {
    Scenario sc = ideal_hover("A");
    const std::filesystem::path dir = scratch_dir("liftoff");
    std::filesystem::create_directories(dir);
    // Estimate file with the roll row negated: positive feedback on roll.
    const VehicleTruth t = assemble_vehicle(preset(Platform::A));
    EstimateReport est;
    est.config.a = t.a;
    est.config.a.row(1) *= -1.0;
    est.config.a_u = t.a_u;
    est.config.mass = t.total_mass;
    est.config.inertia = t.inertia;
    for (std::size_t i = 0; i <= t.n; ++i) {
        est.orientations.rotations.push_back(RotationMatrix());
        est.orientations.residuals.push_back(0.0);
        est.orientations.conditions.push_back(1.0);
        est.arms.arms.push_back(Vec3::Zero());
        est.arms.residuals.push_back(0.0);
    }
    est.mass.mass = t.total_mass;
    est.mass.n = t.n;
    std::ofstream(dir / "bad.json") << serialize_estimate(est);
    sc.config_source = ConfigSource::File;
    sc.config_file = (dir / "bad.json").string();
    sc.thrust_noise_std = 0.05;  // something has to excite the unstable roll axis
    try {
        run_scenario(sc);
        FAIL();
    } catch (const ScenarioFailed& e) {
        EXPECT_EQ(e.phase(), "flight");
        EXPECT_EQ(e.reason(), "LiftoffFailure");
    }
}

TEST(Scenario, LeavingTheArenaIsFlagged) {
    Scenario sc = ideal_hover("A");
    sc.hover_height = 3.0;
    const Report r = run_scenario(sc);
    EXPECT_TRUE(r.arena_exit);
    EXPECT_FALSE(r.completed);
    EXPECT_LT(r.flight_time, sc.duration);
    EXPECT_EQ(r.metrics.windows[0].samples, 0u);
}

TEST(Scenario, LogsAreDeterministicAndRecomputable) {
    Scenario sc;
    sc.duration = 30.0;
    sc.windows = {{10.0, 30.0}};
    sc.seed = 7;
    const auto d1 = scratch_dir("det1"), d2 = scratch_dir("det2");
    sc.output_dir = d1.string();
    const Report r = run_scenario(sc);
    sc.output_dir = d2.string();
    run_scenario(sc);
    for (const char* f : {"calibration.csv", "flight.csv", "setpoint.csv", "controller.csv", "estimate.json", "report.txt"}) {
        ASSERT_TRUE(std::filesystem::exists(d1 / f)) << f;
        EXPECT_EQ(slurp(d1 / f), slurp(d2 / f)) << f;
    }
    std::ifstream flight(d1 / "flight.csv"), sp(d1 / "setpoint.csv");
    const Metrics m = compute_metrics(read_track(flight, sp), sc.windows);
    EXPECT_LT((m.windows[0].mean - r.metrics.windows[0].mean).norm(), 1e-12);
    EXPECT_LT((m.windows[0].std - r.metrics.windows[0].std).norm(), 1e-12);
    EXPECT_EQ(m.windows[0].samples, r.metrics.windows[0].samples);
}

TEST(Scenario, DifferentSeedsDiffer) {
    Scenario sc;
    sc.duration = 20.0;
    sc.windows = {{10.0, 20.0}};
    sc.seed = 1;
    const Report a = run_scenario(sc);
    sc.seed = 2;
    const Report b = run_scenario(sc);
    EXPECT_NE(a.calibration->position_rmse, b.calibration->position_rmse);
}

TEST(ScenarioFile, RoundTrip) {
    Scenario sc;
    sc.name = "helix-e";
    sc.platform = "E";
    sc.plan = PlanKind::Helix;
    sc.gains = GainProfile::Trajectory;
    sc.trim.enabled = true;
    sc.trim.corrupt = 0.3;
    sc.imu_noise.accel_std = 0.2;
    sc.windows = {{20, 50}};
    sc.seed = 99;
    const Scenario back = parse_scenario(serialize_scenario(sc));
    EXPECT_EQ(serialize_scenario(back), serialize_scenario(sc));
    EXPECT_EQ(back.plan, PlanKind::Helix);
    EXPECT_EQ(back.gains, GainProfile::Trajectory);
    EXPECT_EQ(back.seed, 99u);
    EXPECT_DOUBLE_EQ(back.imu_noise.accel_std, 0.2);
}

TEST(ScenarioFile, DefaultsAndErrors) {
    const Scenario sc = parse_scenario(R"({"platform": "C"})");
    EXPECT_EQ(sc.platform, "C");
    EXPECT_DOUBLE_EQ(sc.duration, 120.0);
    for (const char* bad : {"{", R"({"plan": "loop"})", R"({"gains": "fast"})", R"({"config_source": "guess"})"}) {
        try {
            parse_scenario(bad);
            FAIL() << bad;
        } catch (const Error& e) {
            EXPECT_EQ(e.kind(), ErrorKind::ParseError) << bad;
        }
    }
}
