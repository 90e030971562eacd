#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "modflight/controller.hpp"
#include "modflight/estimation.hpp"
#include "modflight/imu.hpp"
#include "modflight/trajectory.hpp"
#include "modflight/vehicle.hpp"

namespace modflight {

enum class ConfigSource { Pipeline, Truth, File };
enum class PlanKind { Hover, Helix, File };
enum class GainProfile { Hover, Trajectory };

struct TrimOptions {
    bool enabled = false;
    double corrupt = 0.0;     // scale roll/pitch rows by (1 + corrupt) on the first half of the columns
    double delta = 0.02;
    double threshold = 0.05;  // rad/s^2
    int max_steps = 50;
    double throttle = 0.95;   // fraction of the hover allocation applied on the ground
};

struct Window {
    double t0 = 0.0;
    double t1 = 0.0;
};

struct Scenario {
    std::string name = "scenario";
    std::string platform = "A";          // preset letter, ignored when vehicle_file is set
    std::string vehicle_file;
    ConfigSource config_source = ConfigSource::Pipeline;
    std::string config_file;             // estimate JSON when config_source is File

    ExcitationConfig excitation;
    ImuNoise imu_noise;
    EstimationOptions estimation;
    TrimOptions trim;

    PlanKind plan = PlanKind::Hover;
    std::string plan_file;
    double duration = 120.0;             // hover plans only
    double hover_height = 0.8;
    double takeoff = 5.0;                // hover plans only
    HelixPlanConfig helix;

    GainProfile gains = GainProfile::Hover;
    bool adapt = true;
    double control_rate = 150.0;
    int adapt_every = 6;                 // controller ticks per adaptation update
    int substeps = 7;                    // plant steps per controller tick
    double h_cutoff = 20.0;
    double thrust_noise_std = 0.05;
    double feedback_delay = 0.0;
    double gravity = 9.81;

    std::vector<Window> windows{{20.0, 50.0}, {50.0, 110.0}};
    std::uint64_t seed = 1;
    std::string output_dir;              // empty: no files written
};

struct WindowStats {
    Window window;
    std::size_t samples = 0;
    Vec3 mean = Vec3::Zero();      // signed P - P_d
    Vec3 std = Vec3::Zero();
    Vec3 mean_abs = Vec3::Zero();
};

struct TrackSample {
    double t = 0.0;
    Vec3 p = Vec3::Zero();
    Vec3 p_d = Vec3::Zero();
};

struct Metrics {
    std::vector<WindowStats> windows;
    std::optional<Vec3> helix_rms;   // over the helix segment when the plan has one
    std::optional<double> settled;   // first time from which |error| < band on every axis for 5 s
};

struct CalibrationSummary {
    std::vector<double> position_error;  // per IMU, m
    std::vector<double> angle_error;     // per IMU, rad
    double position_rmse = 0.0;
    double angle_rmse = 0.0;
};

struct TrimStep {
    int axis = 0;  // 1 roll, 2 pitch, 3 yaw row of the configuration matrix
    int sign = 0;
    double delta = 0.0;
};

struct TrimSummary {
    int steps = 0;                 // attempts, accepted or not
    std::vector<TrimStep> accepted;
    std::vector<double> history;  // |angular acceleration| after each accepted step, first entry initial
    bool converged = false;
};

struct Report {
    std::string scenario;
    std::string platform;
    std::size_t rotors = 0;
    double planned_duration = 0.0;
    double flight_time = 0.0;
    bool completed = false;
    bool arena_exit = false;
    bool crashed = false;
    bool rank_warning = false;
    Metrics metrics;
    std::vector<double> times;   // controller ticks
    std::vector<double> v_s;     // partial Lyapunov value per tick
    std::vector<double> v_full;  // with the true configuration matrix
    std::vector<TrackSample> track;
    std::optional<CalibrationSummary> calibration;
    std::optional<TrimSummary> trim;
    Matrix a_initial;
    Matrix a_final;
    Matrix a_true;
};

/// Sign oracle and row updates on the grounded plant. `a_hat` is trimmed in place.
TrimSummary run_trim(Matrix& a_hat, const VehicleTruth& truth, const TrimOptions& options, double gravity = 9.81);

/// Angular acceleration the grounded vehicle would feel under `u` (before ground reaction).
Vec3 tipping_acceleration(const VehicleTruth& truth, const ThrustCommand& u, double gravity = 9.81);

struct CalibrationRun {
    CalibrationLog log;
    EstimateReport estimate;
    CalibrationSummary summary;
};

/// Synthetic excitation and estimation with the scenario's seed streams.
/// Estimation errors surface as ScenarioFailed with phase "calibrate".
CalibrationRun run_calibration(const Scenario& sc, const VehicleDescription& desc, const VehicleTruth& truth);

/// Throws ScenarioFailed (e.g. LiftoffFailure) or Error on bad input.
Report run_scenario(const Scenario& sc);

/// Throws EmptyWindow if a window holds no samples.
Metrics compute_metrics(const std::vector<TrackSample>& track, const std::vector<Window>& windows,
                        std::optional<Window> helix = std::nullopt, double band = 0.05);

/// Joins flight.csv and setpoint.csv row by row; throws ParseError on mismatched times.
std::vector<TrackSample> read_track(std::istream& flight, std::istream& setpoints);

CalibrationSummary summarize_calibration(const EstimateReport& est, const VehicleTruth& truth);

VehicleDescription scenario_vehicle(const Scenario& sc);
TrajectoryPlan scenario_plan(const Scenario& sc);

std::string serialize_scenario(const Scenario& sc);
Scenario parse_scenario(const std::string& text);

void write_report(std::ostream& out, const Report& report);

}  // namespace modflight
