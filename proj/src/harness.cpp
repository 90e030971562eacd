#include "modflight/harness.hpp"

#include <array>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <random>
#include <sstream>

#include <nlohmann/json.hpp>

#include "modflight/csv.hpp"
#include "modflight/dynamics.hpp"
#include "modflight/errors.hpp"

namespace modflight {

namespace {

using json = nlohmann::ordered_json;

constexpr double kArenaHalfWidth = 1.8;
constexpr double kArenaHeight = 2.5;
constexpr double kLiftoffRate = 2.0;      // rad/s
constexpr double kLiftoffAltitude = 0.2;  // m
constexpr double kSettleHold = 5.0;       // s

// Independent streams for excitation, IMU noise and plant noise.
std::array<std::uint64_t, 3> derive_seeds(std::uint64_t seed) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)};
    std::array<std::uint32_t, 6> words{};
    seq.generate(words.begin(), words.end());
    std::array<std::uint64_t, 3> out{};
    for (int i = 0; i < 3; ++i) out[i] = (static_cast<std::uint64_t>(words[2 * i]) << 32) | words[2 * i + 1];
    return out;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorKind::InvalidArgument, "cannot open '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::ofstream open_output(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write '" + path.string() + "'");
    return out;
}

Gains profile_gains(GainProfile p) { return p == GainProfile::Trajectory ? Gains::trajectory() : Gains::hover(); }

WindowStats window_stats(const std::vector<TrackSample>& track, const Window& w) {
    WindowStats st;
    st.window = w;
    auto inside = [&](const TrackSample& s) { return s.t >= w.t0 && s.t <= w.t1; };
    Vec3 sum = Vec3::Zero(), sum_abs = Vec3::Zero();
    for (const auto& s : track) {
        if (!inside(s)) continue;
        const Vec3 e = s.p - s.p_d;
        sum += e;
        sum_abs += e.cwiseAbs();
        ++st.samples;
    }
    if (st.samples == 0) return st;
    const double n = static_cast<double>(st.samples);
    st.mean = sum / n;
    st.mean_abs = sum_abs / n;
    Vec3 var = Vec3::Zero();
    for (const auto& s : track) {
        if (!inside(s)) continue;
        const Vec3 d = s.p - s.p_d - st.mean;
        var += d.cwiseProduct(d);
    }
    st.std = (var / n).cwiseSqrt();
    return st;
}

std::optional<double> settle_time(const std::vector<TrackSample>& track, double band) {
    std::optional<double> start;
    for (const auto& s : track) {
        const bool inside = (s.p - s.p_d).cwiseAbs().maxCoeff() < band;
        if (!inside) {
            start.reset();
            continue;
        }
        if (!start) start = s.t;
        if (s.t - *start >= kSettleHold) return start;
    }
    return std::nullopt;
}

std::optional<Window> helix_window(const TrajectoryPlan& plan) {
    double t = 0.0;
    for (const auto& seg : plan.segments()) {
        if (seg.kind() == SegmentKind::Helix) return Window{t, t + seg.duration()};
        t += seg.duration();
    }
    return std::nullopt;
}

const char* source_name(ConfigSource s) {
    switch (s) {
        case ConfigSource::Pipeline: return "pipeline";
        case ConfigSource::Truth: return "truth";
        case ConfigSource::File: return "file";
    }
    return "pipeline";
}

const char* plan_name(PlanKind p) {
    switch (p) {
        case PlanKind::Hover: return "hover";
        case PlanKind::Helix: return "helix";
        case PlanKind::File: return "file";
    }
    return "hover";
}

json vec_json(const Vec3& v) { return json::array({v.x(), v.y(), v.z()}); }
Vec3 json_vec(const json& j) { return Vec3(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>()); }

}  // namespace

Vec3 tipping_acceleration(const VehicleTruth& truth, const ThrustCommand& u, double gravity) {
    return rigid_body_accelerations(RigidState{}, total_wrench(u, truth), truth, gravity).angular;
}

TrimSummary run_trim(Matrix& a_hat, const VehicleTruth& truth, const TrimOptions& options, double gravity) {
    if (!(options.delta > 0.0) || !(options.threshold > 0.0) || options.max_steps < 0) {
        throw Error(ErrorKind::InvalidArgument, "trim needs delta > 0, threshold > 0 and a step budget");
    }
    auto measure = [&](const Matrix& a) {
        const ThrustCommand u = saturate(options.throttle * nominal_input(a, gravity), truth);
        return tipping_acceleration(truth, u, gravity);
    };
    TrimSummary out;
    Vec3 w = measure(a_hat);
    out.history.push_back(w.norm());
    double delta = options.delta;
    while (w.norm() >= options.threshold && out.steps < options.max_steps) {
        Eigen::Index axis = 0;
        w.cwiseAbs().maxCoeff(&axis);
        const int sign = w(axis) > 0.0 ? -1 : 1;
        const Matrix candidate = trim_step(a_hat, static_cast<int>(axis) + 1, sign, delta);
        ++out.steps;
        const Vec3 wc = measure(candidate);
        if (wc.norm() < w.norm()) {
            a_hat = candidate;
            w = wc;
            out.accepted.push_back(TrimStep{static_cast<int>(axis) + 1, sign, delta});
            out.history.push_back(w.norm());
        } else {
            // Overshoot: retry the same axis with a finer step.
            delta *= 0.5;
        }
    }
    out.converged = w.norm() < options.threshold;
    return out;
}

Metrics compute_metrics(const std::vector<TrackSample>& track, const std::vector<Window>& windows,
                        std::optional<Window> helix, double band) {
    Metrics m;
    for (const auto& w : windows) {
        WindowStats st = window_stats(track, w);
        if (st.samples == 0) throw Error(ErrorKind::EmptyWindow, "no samples in a metrics window");
        m.windows.push_back(st);
    }
    if (helix) {
        const WindowStats st = window_stats(track, *helix);
        if (st.samples == 0) throw Error(ErrorKind::EmptyWindow, "no samples in the helix window");
        Vec3 sq = Vec3::Zero();
        for (const auto& s : track) {
            if (s.t < helix->t0 || s.t > helix->t1) continue;
            const Vec3 e = s.p - s.p_d;
            sq += e.cwiseProduct(e);
        }
        m.helix_rms = (sq / static_cast<double>(st.samples)).cwiseSqrt();
    }
    m.settled = settle_time(track, band);
    return m;
}

std::vector<TrackSample> read_track(std::istream& flight, std::istream& setpoints) {
    std::string fl, sl;
    if (!std::getline(flight, fl) || !std::getline(setpoints, sl)) {
        throw Error(ErrorKind::ParseError, "missing log header");
    }
    if (fl.rfind("t,px,py,pz", 0) != 0 || sl.rfind("t,px,py,pz", 0) != 0) {
        throw Error(ErrorKind::ParseError, "unexpected log header");
    }
    std::vector<TrackSample> out;
    while (std::getline(flight, fl)) {
        if (fl.empty()) continue;
        if (!std::getline(setpoints, sl)) throw Error(ErrorKind::ParseError, "setpoint log is shorter than flight log");
        const auto f = csv::parse_row(fl);
        const auto s = csv::parse_row(sl);
        if (f.size() < 4 || s.size() < 4) throw Error(ErrorKind::ParseError, "short log row");
        if (std::abs(f[0] - s[0]) > 1e-9) throw Error(ErrorKind::ParseError, "logs are not time-aligned");
        out.push_back(TrackSample{f[0], Vec3(f[1], f[2], f[3]), Vec3(s[1], s[2], s[3])});
    }
    return out;
}

CalibrationSummary summarize_calibration(const EstimateReport& est, const VehicleTruth& truth) {
    const std::size_t n = truth.imu_positions.size();
    if (est.arms.arms.size() != n || est.orientations.rotations.size() != n) {
        throw Error(ErrorKind::InvalidArgument, "estimate and vehicle differ in module count");
    }
    Vec3 gc = Vec3::Zero();
    for (const auto& r : truth.imu_positions) gc += r / static_cast<double>(n);
    CalibrationSummary out;
    double sp = 0.0, sa = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double ep = (est.arms.arms[i] - (truth.imu_positions[i] - gc)).norm();
        const double ea = est.orientations.rotations[i].angle_to(truth.module_orientations[i]);
        out.position_error.push_back(ep);
        out.angle_error.push_back(ea);
        sp += ep * ep;
        sa += ea * ea;
    }
    out.position_rmse = std::sqrt(sp / static_cast<double>(n));
    out.angle_rmse = std::sqrt(sa / static_cast<double>(n));
    return out;
}

VehicleDescription scenario_vehicle(const Scenario& sc) {
    if (!sc.vehicle_file.empty()) return parse_vehicle(read_file(sc.vehicle_file));
    return preset(parse_platform(sc.platform));
}

TrajectoryPlan scenario_plan(const Scenario& sc) {
    switch (sc.plan) {
        case PlanKind::Hover:
            return hover_plan(Vec3(0, 0, sc.hover_height), sc.takeoff, sc.duration);
        case PlanKind::Helix: {
            HelixPlanConfig cfg = sc.helix;
            cfg.hover_height = sc.hover_height;
            return helix_plan(cfg);
        }
        case PlanKind::File:
            return parse_plan(read_file(sc.plan_file));
    }
    throw Error(ErrorKind::InvalidArgument, "unknown plan kind");
}

CalibrationRun run_calibration(const Scenario& sc, const VehicleDescription& desc, const VehicleTruth& truth) {
    const auto seeds = derive_seeds(sc.seed);
    ImuNoise noise = sc.imu_noise;
    noise.seed = seeds[1];
    CalibrationRun out;
    out.log = generate_calibration_log(truth, excitation_trajectory(sc.excitation, seeds[0]), noise, sc.gravity);
    try {
        out.estimate = run_estimation(out.log, desc.modules, sc.estimation, sc.name);
    } catch (const Error& e) {
        throw ScenarioFailed("calibrate", to_string(e.kind()), e.what());
    }
    out.summary = summarize_calibration(out.estimate, truth);
    return out;
}

Report run_scenario(const Scenario& sc) {
    const auto seeds = derive_seeds(sc.seed);
    const VehicleDescription desc = scenario_vehicle(sc);
    const VehicleTruth truth = assemble_vehicle(desc);
    const TrajectoryPlan plan = scenario_plan(sc);
    const Gains gains = profile_gains(sc.gains);
    gains.validate();
    if (!(sc.control_rate > 0.0) || sc.substeps < 1 || sc.adapt_every < 1) {
        throw Error(ErrorKind::InvalidArgument, "rates and step counts must be positive");
    }

    std::optional<std::filesystem::path> dir;
    if (!sc.output_dir.empty()) {
        dir = sc.output_dir;
        std::filesystem::create_directories(*dir);
    }

    Report rep;
    rep.scenario = sc.name;
    rep.platform = sc.vehicle_file.empty() ? sc.platform : sc.vehicle_file;
    rep.rotors = truth.n;
    rep.a_true = truth.a;
    rep.planned_duration = plan.duration();

    // Calibration and estimation.
    Matrix a_hat;
    if (sc.config_source == ConfigSource::Pipeline) {
        CalibrationRun cal = run_calibration(sc, desc, truth);
        rep.calibration = cal.summary;
        a_hat = cal.estimate.config.a;
        if (dir) {
            auto out = open_output(*dir / "calibration.csv");
            write_calibration_log(out, cal.log);
            open_output(*dir / "estimate.json") << serialize_estimate(cal.estimate);
        }
    } else if (sc.config_source == ConfigSource::File) {
        a_hat = parse_estimate(read_file(sc.config_file)).config.a;
    } else {
        a_hat = truth.a;
    }
    if (a_hat.rows() != 4 || a_hat.cols() != static_cast<Eigen::Index>(truth.n)) {
        throw Error(ErrorKind::InvalidArgument, "configuration matrix does not match the vehicle");
    }

    // Optional corruption and scripted trimming on the grounded vehicle.
    if (sc.trim.corrupt != 0.0) {
        const Eigen::Index half = a_hat.cols() / 2;
        a_hat.block(1, 0, 2, half) *= 1.0 + sc.trim.corrupt;
    }
    if (sc.trim.enabled) {
        try {
            rep.trim = run_trim(a_hat, truth, sc.trim, sc.gravity);
        } catch (const Error& e) {
            throw ScenarioFailed("trim", to_string(e.kind()), e.what());
        }
    }
    rep.a_initial = a_hat;

    // Flight.
    PlantConfig pc;
    pc.truth = truth;
    pc.gravity = sc.gravity;
    pc.dt = 1.0 / (sc.control_rate * sc.substeps);
    pc.thrust_noise_std = sc.thrust_noise_std;
    pc.feedback_delay = sc.feedback_delay;
    pc.seed = seeds[2];
    Plant plant(pc);
    DelayLine feedback(sc.feedback_delay);
    Controller ctl(a_hat, gains, sc.control_rate, sc.h_cutoff, sc.gravity);
    const double adapt_dt = sc.adapt_every / sc.control_rate;

    std::ofstream flight_log, setpoint_log, controller_log;
    if (dir) {
        flight_log = open_output(*dir / "flight.csv");
        setpoint_log = open_output(*dir / "setpoint.csv");
        controller_log = open_output(*dir / "controller.csv");
        flight_log << flight_log_header(truth.n) << '\n';
        setpoint_log << setpoint_log_header() << '\n';
        controller_log << controller_log_header(truth.n) << '\n';
    }

    RigidState x;
    x.p = plan.eval(0.0).p;
    x.p.z() = std::max(0.0, x.p.z());
    bool airborne = false;
    bool grounded = true;
    std::vector<TrackSample>& track = rep.track;
    const long ticks = std::lround(plan.duration() * sc.control_rate);

    for (long k = 0; k <= ticks; ++k) {
        const double t = static_cast<double>(k) / sc.control_rate;
        feedback.push(DelayedSample{t, x.p, x.v, yaw_of(x.r)});
        const DelayedSample meas = feedback.at(t);
        RigidState fb = x;
        fb.p = meas.p;
        fb.v = meas.v;

        const Setpoint sp = plan.eval(std::min(t, plan.duration()));
        Controller::Output out;
        try {
            out = ctl.update(fb, sp);
        } catch (const Error& e) {
            throw ScenarioFailed("flight", to_string(e.kind()), e.what());
        }
        const ThrustCommand u = saturate(out.u, truth);
        const double vs = lyapunov_partial(out.s);
        const double vf = lyapunov_full(out.s, ctl.a_hat(), truth.a, gains.lambda);

        rep.times.push_back(t);
        rep.v_s.push_back(vs);
        rep.v_full.push_back(vf);
        track.push_back(TrackSample{t, x.p, sp.p});
        if (dir) {
            write_flight_row(flight_log, t, x, u);
            write_setpoint_row(setpoint_log, t, sp);
            write_controller_row(controller_log, t, out, vs, vf, numerical_rank(ctl.a_hat()));
        }
        rep.flight_time = t;

        if (x.p.z() < kLiftoffAltitude && x.omega.norm() > kLiftoffRate) {
            throw ScenarioFailed("flight", "LiftoffFailure",
                                 "body rate exceeded 2 rad/s below 0.2 m at t = " + csv::format(t));
        }
        if (x.p.z() >= kLiftoffAltitude) airborne = true;
        if (std::abs(x.p.x()) > kArenaHalfWidth || std::abs(x.p.y()) > kArenaHalfWidth || x.p.z() > kArenaHeight) {
            rep.arena_exit = true;
            break;
        }
        if (airborne && (x.p.z() <= 0.0 || x.r(2, 2) < 0.0)) {
            rep.crashed = true;
            break;
        }
        if (k == ticks) {
            rep.completed = true;
            break;
        }

        // The plant cannot respond while resting on the ground, so learning waits for liftoff.
        if (sc.adapt && !grounded && k % sc.adapt_every == 0) {
            ctl.adapt(out.s, u, adapt_dt);
            rep.rank_warning = rep.rank_warning || ctl.rank_warning();
        }
        try {
            for (int i = 0; i < sc.substeps; ++i) x = plant.step(x, u);
        } catch (const Error& e) {
            throw ScenarioFailed("flight", to_string(e.kind()), e.what());
        }
        grounded = plant.last_step_grounded();
    }
    rep.a_final = ctl.a_hat();

    // Windows past the end of an aborted flight are reported with zero samples.
    for (const auto& w : sc.windows) rep.metrics.windows.push_back(window_stats(track, w));
    if (const auto hw = helix_window(plan)) {
        try {
            rep.metrics.helix_rms = compute_metrics(track, {}, hw).helix_rms;
        } catch (const Error&) {
        }
    }
    rep.metrics.settled = settle_time(track, 0.05);

    if (dir) {
        auto out = open_output(*dir / "report.txt");
        write_report(out, rep);
    }
    return rep;
}

void write_report(std::ostream& out, const Report& r) {
    auto vec = [](const Vec3& v) {
        return csv::format(v.x()) + " " + csv::format(v.y()) + " " + csv::format(v.z());
    };
    out << "scenario: " << r.scenario << '\n';
    out << "platform: " << r.platform << '\n';
    out << "rotors: " << r.rotors << '\n';
    out << "planned_duration: " << csv::format(r.planned_duration) << '\n';
    out << "flight_time: " << csv::format(r.flight_time) << '\n';
    out << "completed: " << (r.completed ? "yes" : "no") << '\n';
    out << "arena_exit: " << (r.arena_exit ? "yes" : "no") << '\n';
    out << "crashed: " << (r.crashed ? "yes" : "no") << '\n';
    out << "rank_warning: " << (r.rank_warning ? "yes" : "no") << '\n';
    for (const auto& w : r.metrics.windows) {
        out << "window " << csv::format(w.window.t0) << "-" << csv::format(w.window.t1) << ": samples "
            << w.samples;
        if (w.samples > 0) {
            out << " mean " << vec(w.mean) << " std " << vec(w.std) << " mean_abs " << vec(w.mean_abs);
        }
        out << '\n';
    }
    if (r.metrics.helix_rms) out << "helix_rms: " << vec(*r.metrics.helix_rms) << '\n';
    out << "settled: " << (r.metrics.settled ? csv::format(*r.metrics.settled) : std::string("never")) << '\n';
    if (!r.v_s.empty()) out << "final_Vs: " << csv::format(r.v_s.back()) << '\n';
    if (r.calibration) {
        out << "calibration_position_rmse: " << csv::format(r.calibration->position_rmse) << '\n';
        out << "calibration_angle_rmse: " << csv::format(r.calibration->angle_rmse) << '\n';
        out << "calibration_position_error:";
        for (double e : r.calibration->position_error) out << ' ' << csv::format(e);
        out << '\n';
    }
    if (r.trim) {
        out << "trim_steps: " << r.trim->steps << '\n';
        out << "trim_converged: " << (r.trim->converged ? "yes" : "no") << '\n';
        out << "trim_history:";
        for (double h : r.trim->history) out << ' ' << csv::format(h);
        out << '\n';
    }
}

std::string serialize_scenario(const Scenario& sc) {
    json j;
    j["name"] = sc.name;
    j["platform"] = sc.platform;
    j["vehicle_file"] = sc.vehicle_file;
    j["config_source"] = source_name(sc.config_source);
    j["config_file"] = sc.config_file;
    j["excitation"] = {{"duration", sc.excitation.duration},
                       {"sample_rate", sc.excitation.sample_rate},
                       {"frequencies", vec_json(sc.excitation.frequencies)},
                       {"amplitudes", vec_json(sc.excitation.amplitudes)},
                       {"wander_amplitude", sc.excitation.wander_amplitude},
                       {"substeps", sc.excitation.substeps}};
    j["imu_noise"] = {{"gyro_std", sc.imu_noise.gyro_std},
                      {"accel_std", sc.imu_noise.accel_std},
                      {"gyro_bias", vec_json(sc.imu_noise.gyro_bias)},
                      {"accel_bias", vec_json(sc.imu_noise.accel_bias)},
                      {"accel_turn_on_bias_std", sc.imu_noise.accel_turn_on_bias_std}};
    j["estimation"] = {{"cutoff", sc.estimation.cutoff},
                       {"payload_share", sc.estimation.payload_share},
                       {"edge_trim", sc.estimation.edge_trim}};
    j["trim"] = {{"enabled", sc.trim.enabled},       {"corrupt", sc.trim.corrupt},
                 {"delta", sc.trim.delta},           {"threshold", sc.trim.threshold},
                 {"max_steps", sc.trim.max_steps},   {"throttle", sc.trim.throttle}};
    j["plan"] = plan_name(sc.plan);
    j["plan_file"] = sc.plan_file;
    j["duration"] = sc.duration;
    j["hover_height"] = sc.hover_height;
    j["takeoff"] = sc.takeoff;
    j["helix"] = {{"takeoff", sc.helix.takeoff},
                  {"hover", sc.helix.hover},
                  {"helix_duration", sc.helix.helix_duration},
                  {"final_hover", sc.helix.final_hover},
                  {"blend", sc.helix.blend},
                  {"radius", sc.helix.radius},
                  {"period", sc.helix.period},
                  {"climb", sc.helix.climb}};
    j["gains"] = sc.gains == GainProfile::Trajectory ? "trajectory" : "hover";
    j["adapt"] = sc.adapt;
    j["control_rate"] = sc.control_rate;
    j["adapt_every"] = sc.adapt_every;
    j["substeps"] = sc.substeps;
    j["h_cutoff"] = sc.h_cutoff;
    j["thrust_noise_std"] = sc.thrust_noise_std;
    j["feedback_delay"] = sc.feedback_delay;
    j["gravity"] = sc.gravity;
    json windows = json::array();
    for (const auto& w : sc.windows) windows.push_back(json::array({w.t0, w.t1}));
    j["windows"] = windows;
    j["seed"] = sc.seed;
    j["output_dir"] = sc.output_dir;
    return j.dump(2) + "\n";
}

Scenario parse_scenario(const std::string& text) {
    try {
        const json j = json::parse(text);
        Scenario sc;
        sc.name = j.value("name", sc.name);
        sc.platform = j.value("platform", sc.platform);
        sc.vehicle_file = j.value("vehicle_file", sc.vehicle_file);
        const std::string source = j.value("config_source", std::string("pipeline"));
        if (source == "pipeline") sc.config_source = ConfigSource::Pipeline;
        else if (source == "truth") sc.config_source = ConfigSource::Truth;
        else if (source == "file") sc.config_source = ConfigSource::File;
        else throw Error(ErrorKind::ParseError, "unknown config_source '" + source + "'");
        sc.config_file = j.value("config_file", sc.config_file);
        if (j.contains("excitation")) {
            const json& e = j["excitation"];
            sc.excitation.duration = e.value("duration", sc.excitation.duration);
            sc.excitation.sample_rate = e.value("sample_rate", sc.excitation.sample_rate);
            if (e.contains("frequencies")) sc.excitation.frequencies = json_vec(e["frequencies"]);
            if (e.contains("amplitudes")) sc.excitation.amplitudes = json_vec(e["amplitudes"]);
            sc.excitation.wander_amplitude = e.value("wander_amplitude", sc.excitation.wander_amplitude);
            sc.excitation.substeps = e.value("substeps", sc.excitation.substeps);
        }
        if (j.contains("imu_noise")) {
            const json& n = j["imu_noise"];
            sc.imu_noise.gyro_std = n.value("gyro_std", sc.imu_noise.gyro_std);
            sc.imu_noise.accel_std = n.value("accel_std", sc.imu_noise.accel_std);
            if (n.contains("gyro_bias")) sc.imu_noise.gyro_bias = json_vec(n["gyro_bias"]);
            if (n.contains("accel_bias")) sc.imu_noise.accel_bias = json_vec(n["accel_bias"]);
            sc.imu_noise.accel_turn_on_bias_std = n.value("accel_turn_on_bias_std", sc.imu_noise.accel_turn_on_bias_std);
        }
        if (j.contains("estimation")) {
            const json& e = j["estimation"];
            sc.estimation.cutoff = e.value("cutoff", sc.estimation.cutoff);
            sc.estimation.payload_share = e.value("payload_share", sc.estimation.payload_share);
            sc.estimation.edge_trim = e.value("edge_trim", sc.estimation.edge_trim);
        }
        if (j.contains("trim")) {
            const json& t = j["trim"];
            sc.trim.enabled = t.value("enabled", sc.trim.enabled);
            sc.trim.corrupt = t.value("corrupt", sc.trim.corrupt);
            sc.trim.delta = t.value("delta", sc.trim.delta);
            sc.trim.threshold = t.value("threshold", sc.trim.threshold);
            sc.trim.max_steps = t.value("max_steps", sc.trim.max_steps);
            sc.trim.throttle = t.value("throttle", sc.trim.throttle);
        }
        const std::string plan = j.value("plan", std::string("hover"));
        if (plan == "hover") sc.plan = PlanKind::Hover;
        else if (plan == "helix") sc.plan = PlanKind::Helix;
        else if (plan == "file") sc.plan = PlanKind::File;
        else throw Error(ErrorKind::ParseError, "unknown plan '" + plan + "'");
        sc.plan_file = j.value("plan_file", sc.plan_file);
        sc.duration = j.value("duration", sc.duration);
        sc.hover_height = j.value("hover_height", sc.hover_height);
        sc.takeoff = j.value("takeoff", sc.takeoff);
        if (j.contains("helix")) {
            const json& h = j["helix"];
            sc.helix.takeoff = h.value("takeoff", sc.helix.takeoff);
            sc.helix.hover = h.value("hover", sc.helix.hover);
            sc.helix.helix_duration = h.value("helix_duration", sc.helix.helix_duration);
            sc.helix.final_hover = h.value("final_hover", sc.helix.final_hover);
            sc.helix.blend = h.value("blend", sc.helix.blend);
            sc.helix.radius = h.value("radius", sc.helix.radius);
            sc.helix.period = h.value("period", sc.helix.period);
            sc.helix.climb = h.value("climb", sc.helix.climb);
        }
        const std::string gains = j.value("gains", std::string("hover"));
        if (gains == "hover") sc.gains = GainProfile::Hover;
        else if (gains == "trajectory") sc.gains = GainProfile::Trajectory;
        else throw Error(ErrorKind::ParseError, "unknown gain profile '" + gains + "'");
        sc.adapt = j.value("adapt", sc.adapt);
        sc.control_rate = j.value("control_rate", sc.control_rate);
        sc.adapt_every = j.value("adapt_every", sc.adapt_every);
        sc.substeps = j.value("substeps", sc.substeps);
        sc.h_cutoff = j.value("h_cutoff", sc.h_cutoff);
        sc.thrust_noise_std = j.value("thrust_noise_std", sc.thrust_noise_std);
        sc.feedback_delay = j.value("feedback_delay", sc.feedback_delay);
        sc.gravity = j.value("gravity", sc.gravity);
        if (j.contains("windows")) {
            sc.windows.clear();
            for (const auto& w : j["windows"]) sc.windows.push_back(Window{w.at(0).get<double>(), w.at(1).get<double>()});
        }
        sc.seed = j.value("seed", sc.seed);
        sc.output_dir = j.value("output_dir", sc.output_dir);
        return sc;
    } catch (const json::exception& e) {
        throw Error(ErrorKind::ParseError, e.what());
    }
}

}  // namespace modflight
