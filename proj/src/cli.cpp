#include "modflight/cli.hpp"

#include <filesystem>
#include <fstream>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>

#include "modflight/csv.hpp"
#include "modflight/errors.hpp"
#include "modflight/harness.hpp"

namespace modflight {

namespace {

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string read_text(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

// Common vehicle / seed / output flags shared by the pipeline subcommands.
struct CommonFlags {
    std::string scenario;
    std::string preset;
    std::string vehicle;
    std::string output_dir;
    std::uint64_t seed = 0;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--scenario", f.scenario, "scenario JSON file");
    cmd->add_option("--preset", f.preset, "platform preset A-F");
    cmd->add_option("--vehicle", f.vehicle, "vehicle description JSON");
    cmd->add_option("--output-dir", f.output_dir, "directory for logs and report");
    cmd->add_option("--seed", f.seed, "random seed");
}

Scenario base_scenario(const CommonFlags& f, const CLI::App* cmd) {
    Scenario sc = f.scenario.empty() ? Scenario{} : parse_scenario(read_text(f.scenario));
    if (!f.preset.empty()) {
        try {
            parse_platform(f.preset);
        } catch (const Error&) {
            throw UsageError("unknown preset '" + f.preset + "'");
        }
        sc.platform = f.preset;
        sc.vehicle_file.clear();
    }
    if (!f.vehicle.empty()) sc.vehicle_file = f.vehicle;
    if (sc.vehicle_file.empty()) {
        try {
            parse_platform(sc.platform);
        } catch (const Error&) {
            throw UsageError("unknown preset '" + sc.platform + "'");
        }
    }
    if (cmd->count("--seed")) sc.seed = f.seed;
    if (!f.output_dir.empty()) sc.output_dir = f.output_dir;
    return sc;
}

Window parse_window(const std::string& text) {
    const auto parts = csv::split(text, ',');
    if (parts.size() != 2) throw UsageError("window must be t0,t1");
    try {
        return Window{std::stod(parts[0]), std::stod(parts[1])};
    } catch (const std::exception&) {
        throw UsageError("window must be t0,t1");
    }
}

void print_windows(std::ostream& out, const Metrics& m) {
    for (const auto& w : m.windows) {
        out << "window " << csv::format(w.window.t0) << "-" << csv::format(w.window.t1) << " samples " << w.samples
            << '\n';
        out << "  mean     " << csv::format(w.mean.x()) << ' ' << csv::format(w.mean.y()) << ' '
            << csv::format(w.mean.z()) << '\n';
        out << "  std      " << csv::format(w.std.x()) << ' ' << csv::format(w.std.y()) << ' '
            << csv::format(w.std.z()) << '\n';
        out << "  mean_abs " << csv::format(w.mean_abs.x()) << ' ' << csv::format(w.mean_abs.y()) << ' '
            << csv::format(w.mean_abs.z()) << '\n';
    }
}

int calibrate(const CommonFlags& f, const CLI::App* cmd, const std::string& log_path, std::ostream& out) {
    const Scenario sc = base_scenario(f, cmd);
    const VehicleDescription desc = scenario_vehicle(sc);
    const VehicleTruth truth = assemble_vehicle(desc);
    EstimateReport est;
    CalibrationSummary sum;
    CalibrationLog log;
    if (!log_path.empty()) {
        std::ifstream in(log_path);
        if (!in) throw UsageError("cannot open '" + log_path + "'");
        log = read_calibration_log(in);
        try {
            est = run_estimation(log, desc.modules, sc.estimation, log_path);
        } catch (const Error& e) {
            throw ScenarioFailed("calibrate", to_string(e.kind()), e.what());
        }
        sum = summarize_calibration(est, truth);
    } else {
        CalibrationRun run = run_calibration(sc, desc, truth);
        log = std::move(run.log);
        est = std::move(run.estimate);
        sum = run.summary;
    }
    out << "mass " << csv::format(est.mass.mass) << " kg\n";
    out << "position_rmse " << csv::format(sum.position_rmse) << " m\n";
    out << "angle_rmse " << csv::format(sum.angle_rmse) << " rad\n";
    for (std::size_t i = 0; i < sum.position_error.size(); ++i) {
        out << "imu " << i << " position_error " << csv::format(sum.position_error[i]) << " angle_error "
            << csv::format(sum.angle_error[i]) << '\n';
    }
    if (!sc.output_dir.empty()) {
        std::filesystem::create_directories(sc.output_dir);
        if (log_path.empty()) {
            std::ofstream lo(std::filesystem::path(sc.output_dir) / "calibration.csv");
            write_calibration_log(lo, log);
        }
        std::ofstream(std::filesystem::path(sc.output_dir) / "estimate.json") << serialize_estimate(est);
    }
    return 0;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
    CLI::App app{"Modular multirotor calibration and adaptive flight simulator", "modflight"};
    app.require_subcommand(1);

    CommonFlags cal_flags, fly_flags, trim_flags;
    std::string cal_log;
    CLI::App* cal = app.add_subcommand("calibrate", "synthetic excitation and IMU-based estimation");
    add_common(cal, cal_flags);
    cal->add_option("--log", cal_log, "estimate from an existing calibration CSV instead");

    CLI::App* fly = app.add_subcommand("fly", "calibrate (optionally), trim (optionally) and fly a plan");
    add_common(fly, fly_flags);
    std::string plan, gains, config;
    double duration = 0.0;
    bool no_adapt = false, trim_enabled = false;
    double corrupt = 0.0;
    fly->add_option("--plan", plan, "hover, helix or a plan JSON file");
    fly->add_option("--duration", duration, "hover plan length, s");
    fly->add_option("--gains", gains, "hover or trajectory")->check(CLI::IsMember({"hover", "trajectory"}));
    fly->add_option("--config", config, "pipeline, truth or an estimate JSON file");
    fly->add_flag("--no-adapt", no_adapt, "disable parameter adaptation");
    fly->add_flag("--trim", trim_enabled, "run the scripted trimming loop before takeoff");
    fly->add_option("--corrupt", corrupt, "scale roll/pitch rows of half the rotors by 1 + value");

    CLI::App* trim = app.add_subcommand("trim", "scripted trimming on the grounded vehicle");
    add_common(trim, trim_flags);
    double trim_corrupt = 0.3, trim_delta = 0.02;
    int trim_steps = 50;
    std::string trim_config = "truth";
    trim->add_option("--corrupt", trim_corrupt, "roll/pitch corruption fraction");
    trim->add_option("--delta", trim_delta, "trim step size");
    trim->add_option("--max-steps", trim_steps, "step budget");
    trim->add_option("--config", trim_config, "truth or pipeline")->check(CLI::IsMember({"truth", "pipeline"}));

    CLI::App* metrics = app.add_subcommand("metrics", "windowed position errors from logs");
    std::string flight_path, setpoint_path;
    std::vector<std::string> windows;
    metrics->add_option("--flight", flight_path, "flight.csv")->required();
    metrics->add_option("--setpoint", setpoint_path, "setpoint.csv")->required();
    metrics->add_option("--window", windows, "t0,t1 (repeatable)");

    CLI::App* dump = app.add_subcommand("preset-dump", "print a preset vehicle description");
    std::string dump_preset;
    dump->add_option("--preset", dump_preset, "platform preset A-F")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return 0;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return 0;
    } catch (const CLI::ParseError& e) {
        err << "modflight: " << e.what() << '\n';
        return 2;
    }

    try {
        if (cal->parsed()) return calibrate(cal_flags, cal, cal_log, out);

        if (fly->parsed()) {
            Scenario sc = base_scenario(fly_flags, fly);
            if (!plan.empty()) {
                if (plan == "hover") {
                    sc.plan = PlanKind::Hover;
                } else if (plan == "helix") {
                    sc.plan = PlanKind::Helix;
                    if (gains.empty()) sc.gains = GainProfile::Trajectory;
                    if (!fly->count("--duration") && fly_flags.scenario.empty()) sc.windows = {{20.0, 50.0}};
                } else {
                    sc.plan = PlanKind::File;
                    sc.plan_file = plan;
                }
            }
            if (fly->count("--duration")) {
                if (!(duration > sc.takeoff)) throw UsageError("duration must exceed the takeoff time");
                sc.duration = duration;
            }
            if (!gains.empty()) sc.gains = gains == "trajectory" ? GainProfile::Trajectory : GainProfile::Hover;
            if (!config.empty()) {
                if (config == "pipeline") {
                    sc.config_source = ConfigSource::Pipeline;
                } else if (config == "truth") {
                    sc.config_source = ConfigSource::Truth;
                } else {
                    sc.config_source = ConfigSource::File;
                    sc.config_file = config;
                }
            }
            if (no_adapt) sc.adapt = false;
            if (trim_enabled) sc.trim.enabled = true;
            if (fly->count("--corrupt")) sc.trim.corrupt = corrupt;
            // Keep only windows that fit inside the flight.
            const double length = scenario_plan(sc).duration();
            std::vector<Window> kept;
            for (const auto& w : sc.windows) {
                if (w.t0 < length) kept.push_back(Window{w.t0, std::min(w.t1, length)});
            }
            sc.windows = kept;
            const Report r = run_scenario(sc);
            write_report(out, r);
            return (r.arena_exit || r.crashed) ? 1 : 0;
        }

        if (trim->parsed()) {
            Scenario sc = base_scenario(trim_flags, trim);
            sc.config_source = trim_config == "truth" ? ConfigSource::Truth : ConfigSource::Pipeline;
            sc.trim.enabled = true;
            sc.trim.corrupt = trim_corrupt;
            sc.trim.delta = trim_delta;
            sc.trim.max_steps = trim_steps;
            sc.takeoff = 5.0;
            sc.duration = 20.0;
            sc.windows = {{10.0, 20.0}};
            const Report r = run_scenario(sc);
            write_report(out, r);
            return (r.trim && r.trim->converged && r.completed) ? 0 : 1;
        }

        if (metrics->parsed()) {
            std::ifstream fl(flight_path), sp(setpoint_path);
            if (!fl || !sp) throw UsageError("cannot open the flight or setpoint log");
            std::vector<Window> ws;
            for (const auto& w : windows) ws.push_back(parse_window(w));
            if (ws.empty()) ws = {{20.0, 50.0}, {50.0, 110.0}};
            const Metrics m = compute_metrics(read_track(fl, sp), ws);
            print_windows(out, m);
            out << "settled " << (m.settled ? csv::format(*m.settled) : std::string("never")) << '\n';
            return 0;
        }

        if (dump->parsed()) {
            Platform p;
            try {
                p = parse_platform(dump_preset);
            } catch (const Error&) {
                throw UsageError("unknown preset '" + dump_preset + "'");
            }
            out << serialize_vehicle(preset(p));
            return 0;
        }
    } catch (const UsageError& e) {
        err << "modflight: " << e.what() << '\n';
        return 2;
    } catch (const ScenarioFailed& e) {
        err << "modflight: scenario failed during " << e.phase() << " (" << e.reason() << "): " << e.what() << '\n';
        return 1;
    } catch (const Error& e) {
        err << "modflight: " << e.what() << '\n';
        return e.kind() == ErrorKind::ParseError || e.kind() == ErrorKind::InvalidArgument ? 2 : 1;
    }
    return 2;
}

}  // namespace modflight
