#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>
#include <vector>

#include "modflight/dynamics.hpp"
#include "modflight/geom.hpp"
#include "modflight/vehicle.hpp"

namespace modflight {

struct ImuSample {
    double t = 0.0;
    Vec3 gyro = Vec3::Zero();   // module frame, rad/s
    Vec3 accel = Vec3::Zero();  // module frame, specific force (level and static reads +g on Z)
};

// Time-aligned streams of all N+1 IMUs; imus[0] is the control module.
struct CalibrationLog {
    double sample_rate = 0.0;
    std::vector<double> times;
    std::vector<std::vector<ImuSample>> imus;

    std::size_t imu_count() const { return imus.size(); }
    std::size_t sample_count() const { return times.size(); }
    /// Throws InvalidArgument on ragged streams, mismatched timestamps or < 200 samples.
    void validate() const;
};

struct ImuNoise {
    double gyro_std = 0.01;
    double accel_std = 0.05;
    Vec3 gyro_bias = Vec3::Zero();
    Vec3 accel_bias = Vec3::Zero();
    // Per-IMU constant accelerometer offset, drawn once per IMU (turn-on bias).
    double accel_turn_on_bias_std = 0.12;
    std::uint64_t seed = 1;

    static ImuNoise none();
};

/// Seeded noise applied to ideal samples. Turn-on biases come from a separate stream
/// so changing the white-noise level leaves them untouched.
class ImuNoiseSource {
public:
    ImuNoiseSource(const ImuNoise& noise, std::size_t imu_count);
    void apply(ImuSample& sample, std::size_t imu_index);
    const Vec3& turn_on_bias(std::size_t imu_index) const { return turn_on_bias_.at(imu_index); }

private:
    ImuNoise noise_;
    std::mt19937_64 white_;
    std::normal_distribution<double> normal_{0.0, 1.0};
    std::vector<Vec3> turn_on_bias_;
};

/// Ideal reading of IMU `imu_index` for the given motion.
ImuSample sample_imu(const RigidState& state, const Vec3& angular_accel, const Vec3& linear_accel,
                     const VehicleTruth& truth, std::size_t imu_index, double t, double gravity = 9.81);

struct ExcitationConfig {
    double duration = 90.0;
    double sample_rate = 50.0;
    Vec3 frequencies = Vec3(0.3, 0.45, 0.7);  // Hz, one sinusoid per body axis
    Vec3 amplitudes = Vec3(1.0, 1.0, 1.0);    // rad/s
    double wander_amplitude = 0.1;            // m
    int substeps = 16;                        // attitude integration steps per sample
};

struct MotionSample {
    double t = 0.0;
    RigidState state;
    Vec3 angular_accel = Vec3::Zero();
    Vec3 linear_accel = Vec3::Zero();
};

struct Excitation {
    double sample_rate = 0.0;
    std::vector<MotionSample> samples;
    Vec3 rms_rate = Vec3::Zero();
    bool poor_excitation = false;  // some axis has RMS rate below 0.1 rad/s
    bool short_duration = false;   // shorter than 30 s
};

/// Hand-held style rotation about all three axes plus slow translational wander.
Excitation excitation_trajectory(const ExcitationConfig& cfg, std::uint64_t seed);

CalibrationLog generate_calibration_log(const VehicleTruth& truth, const Excitation& motion, const ImuNoise& noise,
                                        double gravity = 9.81);

/// Zero-phase second-order Butterworth (forward-backward). Throws InvalidCutoff.
std::vector<Vec3> lowpass(const std::vector<Vec3>& signal, double cutoff, double sample_rate);

/// Returns a copy of `log` with gyro and accel streams low-passed.
CalibrationLog lowpass_log(const CalibrationLog& log, double cutoff);

void write_calibration_log(std::ostream& out, const CalibrationLog& log);
CalibrationLog read_calibration_log(std::istream& in);

}  // namespace modflight
