#include "modflight/imu.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <numbers>
#include <ostream>
#include <string>

#include "modflight/csv.hpp"
#include "modflight/errors.hpp"

namespace modflight {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kMinSamples = 200;
constexpr std::uint64_t kBiasStreamSalt = 0x9e3779b97f4a7c15ULL;

struct Biquad {
    double b0, b1, b2, a1, a2;
};

Biquad butterworth2(double cutoff, double sample_rate) {
    const double k = std::tan(std::numbers::pi * cutoff / sample_rate);
    const double norm = 1.0 / (1.0 + std::sqrt(2.0) * k + k * k);
    Biquad f;
    f.a1 = 2.0 * (k * k - 1.0) * norm;
    f.a2 = (1.0 - std::sqrt(2.0) * k + k * k) * norm;
    // b0 = k^2 norm analytically; written this way the DC gain is 1 to rounding.
    f.b0 = (1.0 + f.a1 + f.a2) / 4.0;
    f.b1 = 2.0 * f.b0;
    f.b2 = f.b0;
    return f;
}

// Transposed direct-form II, state initialised to the steady state of x[0].
void run_biquad(const Biquad& f, std::vector<double>& x) {
    if (x.empty()) return;
    double z1 = (1.0 - f.b0) * x[0];
    double z2 = (f.b2 - f.a2) * x[0];
    for (double& v : x) {
        const double in = v;
        const double out = f.b0 * in + z1;
        z1 = f.b1 * in - f.a1 * out + z2;
        z2 = f.b2 * in - f.a2 * out;
        v = out;
    }
}

std::vector<double> filtfilt(const Biquad& f, const std::vector<double>& x, std::size_t pad) {
    const std::size_t n = x.size();
    pad = std::min(pad, n - 1);
    // Odd reflection about the end points keeps the edges free of start-up transients.
    std::vector<double> ext;
    ext.reserve(n + 2 * pad);
    for (std::size_t i = pad; i >= 1; --i) ext.push_back(2.0 * x[0] - x[i]);
    ext.insert(ext.end(), x.begin(), x.end());
    for (std::size_t i = 1; i <= pad; ++i) ext.push_back(2.0 * x[n - 1] - x[n - 1 - i]);
    run_biquad(f, ext);
    std::reverse(ext.begin(), ext.end());
    run_biquad(f, ext);
    std::reverse(ext.begin(), ext.end());
    return std::vector<double>(ext.begin() + static_cast<std::ptrdiff_t>(pad),
                               ext.begin() + static_cast<std::ptrdiff_t>(pad + n));
}

}  // namespace

void CalibrationLog::validate() const {
    if (imus.empty()) throw Error(ErrorKind::InvalidArgument, "calibration log has no IMUs");
    if (times.size() < kMinSamples) {
        throw Error(ErrorKind::InvalidArgument, "calibration log needs at least 200 samples per IMU");
    }
    for (const auto& stream : imus) {
        if (stream.size() != times.size()) throw Error(ErrorKind::InvalidArgument, "ragged calibration log");
        for (std::size_t k = 0; k < times.size(); ++k) {
            if (stream[k].t != times[k]) throw Error(ErrorKind::InvalidArgument, "IMU timestamps are not aligned");
        }
    }
    if (!(sample_rate > 0.0)) throw Error(ErrorKind::InvalidArgument, "sample rate must be positive");
}

ImuNoise ImuNoise::none() {
    ImuNoise n;
    n.gyro_std = 0.0;
    n.accel_std = 0.0;
    n.accel_turn_on_bias_std = 0.0;
    return n;
}

ImuNoiseSource::ImuNoiseSource(const ImuNoise& noise, std::size_t imu_count) : noise_(noise), white_(noise.seed) {
    if (!(noise.gyro_std >= 0.0) || !(noise.accel_std >= 0.0) || !(noise.accel_turn_on_bias_std >= 0.0)) {
        throw Error(ErrorKind::InvalidArgument, "noise standard deviations must be >= 0");
    }
    std::mt19937_64 bias_rng(noise.seed ^ kBiasStreamSalt);
    std::normal_distribution<double> unit(0.0, 1.0);
    for (std::size_t i = 0; i < imu_count; ++i) {
        Vec3 b(unit(bias_rng), unit(bias_rng), unit(bias_rng));
        turn_on_bias_.push_back(noise.accel_turn_on_bias_std * b);
    }
}

void ImuNoiseSource::apply(ImuSample& sample, std::size_t imu_index) {
    for (int k = 0; k < 3; ++k) {
        sample.gyro(k) += noise_.gyro_bias(k) + noise_.gyro_std * normal_(white_);
        sample.accel(k) += noise_.accel_bias(k) + turn_on_bias_.at(imu_index)(k) + noise_.accel_std * normal_(white_);
    }
}

ImuSample sample_imu(const RigidState& state, const Vec3& angular_accel, const Vec3& linear_accel,
                     const VehicleTruth& truth, std::size_t imu_index, double t, double gravity) {
    if (imu_index >= truth.imu_positions.size()) throw Error(ErrorKind::InvalidArgument, "IMU index out of range");
    const Mat3 ri_t = truth.module_orientations[imu_index].matrix().transpose();
    const Vec3& r = truth.imu_positions[imu_index];
    const Vec3& w = state.omega;
    const Vec3 specific = state.r.matrix().transpose() * (linear_accel + Vec3(0, 0, gravity));
    const Vec3 lever = w.cross(w.cross(r)) + angular_accel.cross(r);
    ImuSample s;
    s.t = t;
    s.gyro = ri_t * w;
    s.accel = ri_t * (specific + lever);
    return s;
}

Excitation excitation_trajectory(const ExcitationConfig& cfg, std::uint64_t seed) {
    if (!(cfg.duration > 0.0) || !(cfg.sample_rate > 0.0) || cfg.substeps < 1) {
        throw Error(ErrorKind::InvalidArgument, "excitation needs positive duration, rate and substeps");
    }
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> phase(0.0, kTwoPi);
    Vec3 rot_phase, wander_phase;
    for (int k = 0; k < 3; ++k) rot_phase(k) = phase(rng);
    for (int k = 0; k < 3; ++k) wander_phase(k) = phase(rng);
    const Vec3 wander_freq(0.11, 0.13, 0.17);
    const Vec3 wander_amp = cfg.wander_amplitude * Vec3(1.0, 1.0, 0.5);

    auto rate = [&](double t) {
        Vec3 w;
        for (int k = 0; k < 3; ++k) w(k) = cfg.amplitudes(k) * std::sin(kTwoPi * cfg.frequencies(k) * t + rot_phase(k));
        return w;
    };
    auto rate_dot = [&](double t) {
        Vec3 w;
        for (int k = 0; k < 3; ++k) {
            const double om = kTwoPi * cfg.frequencies(k);
            w(k) = cfg.amplitudes(k) * om * std::cos(om * t + rot_phase(k));
        }
        return w;
    };

    Excitation ex;
    ex.sample_rate = cfg.sample_rate;
    ex.short_duration = cfg.duration < 30.0;
    const auto count = static_cast<std::size_t>(std::floor(cfg.duration * cfg.sample_rate + 1e-9));
    const double dt = 1.0 / cfg.sample_rate;
    const double h = dt / cfg.substeps;
    RotationMatrix r;
    Vec3 sum_sq = Vec3::Zero();
    for (std::size_t i = 0; i < count; ++i) {
        const double t = static_cast<double>(i) * dt;
        MotionSample m;
        m.t = t;
        m.state.r = r;
        m.state.omega = rate(t);
        m.angular_accel = rate_dot(t);
        for (int k = 0; k < 3; ++k) {
            const double om = kTwoPi * wander_freq(k);
            const double arg = om * t + wander_phase(k);
            m.state.p(k) = wander_amp(k) * std::sin(arg);
            m.state.v(k) = wander_amp(k) * om * std::cos(arg);
            m.linear_accel(k) = -wander_amp(k) * om * om * std::sin(arg);
        }
        m.state.p.z() += 1.0;
        sum_sq += m.state.omega.cwiseAbs2();
        ex.samples.push_back(m);
        // Midpoint exponential steps to the next sample time.
        for (int s = 0; s < cfg.substeps; ++s) r = integrate_rotation(r, rate(t + (s + 0.5) * h), h);
    }
    if (count > 0) ex.rms_rate = (sum_sq / static_cast<double>(count)).cwiseSqrt();
    ex.poor_excitation = ex.rms_rate.minCoeff() < 0.1;
    return ex;
}

CalibrationLog generate_calibration_log(const VehicleTruth& truth, const Excitation& motion, const ImuNoise& noise,
                                        double gravity) {
    CalibrationLog log;
    log.sample_rate = motion.sample_rate;
    const std::size_t imus = truth.imu_positions.size();
    log.imus.resize(imus);
    ImuNoiseSource source(noise, imus);
    for (const auto& m : motion.samples) {
        log.times.push_back(m.t);
        for (std::size_t i = 0; i < imus; ++i) {
            ImuSample s = sample_imu(m.state, m.angular_accel, m.linear_accel, truth, i, m.t, gravity);
            source.apply(s, i);
            log.imus[i].push_back(s);
        }
    }
    return log;
}

std::vector<Vec3> lowpass(const std::vector<Vec3>& signal, double cutoff, double sample_rate) {
    if (!(cutoff > 0.0) || !(sample_rate > 0.0) || !(cutoff < 0.5 * sample_rate)) {
        throw Error(ErrorKind::InvalidCutoff, "cutoff must lie in (0, sample_rate / 2)");
    }
    if (signal.size() < 2) return signal;
    const Biquad f = butterworth2(cutoff, sample_rate);
    const auto pad = static_cast<std::size_t>(std::ceil(3.0 * sample_rate / cutoff));
    std::vector<Vec3> out(signal.size());
    std::vector<double> channel(signal.size());
    for (int k = 0; k < 3; ++k) {
        for (std::size_t i = 0; i < signal.size(); ++i) channel[i] = signal[i](k);
        const std::vector<double> y = filtfilt(f, channel, pad);
        for (std::size_t i = 0; i < signal.size(); ++i) out[i](k) = y[i];
    }
    return out;
}

CalibrationLog lowpass_log(const CalibrationLog& log, double cutoff) {
    CalibrationLog out = log;
    std::vector<Vec3> gyro(log.sample_count()), accel(log.sample_count());
    for (std::size_t i = 0; i < log.imu_count(); ++i) {
        for (std::size_t k = 0; k < log.sample_count(); ++k) {
            gyro[k] = log.imus[i][k].gyro;
            accel[k] = log.imus[i][k].accel;
        }
        const auto fg = lowpass(gyro, cutoff, log.sample_rate);
        const auto fa = lowpass(accel, cutoff, log.sample_rate);
        for (std::size_t k = 0; k < log.sample_count(); ++k) {
            out.imus[i][k].gyro = fg[k];
            out.imus[i][k].accel = fa[k];
        }
    }
    return out;
}

void write_calibration_log(std::ostream& out, const CalibrationLog& log) {
    out << "t,module_id,gx,gy,gz,ax,ay,az\n";
    for (std::size_t k = 0; k < log.sample_count(); ++k) {
        for (std::size_t i = 0; i < log.imu_count(); ++i) {
            const ImuSample& s = log.imus[i][k];
            csv::write_row(out, {s.t, static_cast<double>(i), s.gyro.x(), s.gyro.y(), s.gyro.z(), s.accel.x(),
                                 s.accel.y(), s.accel.z()});
        }
    }
}

CalibrationLog read_calibration_log(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorKind::ParseError, "empty calibration log");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "t,module_id,gx,gy,gz,ax,ay,az") throw Error(ErrorKind::ParseError, "unexpected calibration header");
    CalibrationLog log;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto v = csv::parse_row(line);
        if (v.size() != 8) throw Error(ErrorKind::ParseError, "calibration rows need 8 fields");
        const double id = v[1];
        if (id < 0 || id != std::floor(id)) throw Error(ErrorKind::ParseError, "bad module id");
        const auto idx = static_cast<std::size_t>(id);
        if (idx == 0) log.times.push_back(v[0]);
        if (idx >= log.imus.size()) log.imus.resize(idx + 1);
        log.imus[idx].push_back(ImuSample{v[0], Vec3(v[2], v[3], v[4]), Vec3(v[5], v[6], v[7])});
    }
    if (log.times.size() >= 2) {
        log.sample_rate = static_cast<double>(log.times.size() - 1) / (log.times.back() - log.times.front());
    }
    for (const auto& stream : log.imus) {
        if (stream.size() != log.times.size()) throw Error(ErrorKind::ParseError, "modules are not interleaved");
    }
    return log;
}

}  // namespace modflight
