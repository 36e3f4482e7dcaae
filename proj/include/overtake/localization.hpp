#pragma once

// Linear Kalman filter fusing INS accelerations (control input) with GPS
// position/velocity fixes. State is [pos_x, pos_y, vel_x, vel_y].

#include <Eigen/Dense>

#include <cstdint>
#include <vector>

#include "overtake/kinematics.hpp"

namespace overtake {

using Vec2 = Eigen::Vector2d;
using Vec4 = Eigen::Vector4d;
using Mat4 = Eigen::Matrix4d;
using Mat42 = Eigen::Matrix<double, 4, 2>;

/// Raised when the innovation covariance cannot be inverted.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

struct KalmanState {
    Vec4 s = Vec4::Zero();
    Mat4 p = default_initial_covariance();

    static Mat4 default_initial_covariance();

    /// Symmetric within `tol` and smallest eigenvalue >= -tol.
    bool is_symmetric_psd(double tol = 1e-9) const;
};

struct ProcessModel {
    double dt = 0.1;
    Mat4 a;
    Mat42 b;
    Mat4 q;

    /// Constant-acceleration model with the default process noise
    /// (0.01 on positions, 0.1 on velocities).
    static ProcessModel constant_acceleration(double dt);
    static ProcessModel constant_acceleration(double dt, const Mat4& q);
};

struct MeasurementModel {
    Mat4 h = Mat4::Identity();
    Mat4 r = default_noise();

    /// diag(49, 49, 1, 1): 7 m GPS position error, 1 m/s velocity error.
    static Mat4 default_noise();
};

struct ControlInput {
    Vec2 u = Vec2::Zero();
};

KalmanState predict(const KalmanState& state, const ProcessModel& model, const ControlInput& u);

/// Gain from the predicted covariance; posterior covariance (I - K H) P,
/// symmetrized. Throws NumericalError on a singular innovation matrix.
KalmanState update(const KalmanState& predicted, const MeasurementModel& meas, const Vec4& z);

struct TrajectoryStep {
    ControlInput control;
    Vec4 truth;
};

struct TrackConfig {
    double dt = 0.1;
    double gps_sigma = 7.0;
    double velocity_sigma = 1.0;
    Mat4 q = ProcessModel::constant_acceleration(0.1).q;
    Mat4 r = MeasurementModel::default_noise();
    Mat4 p0 = KalmanState::default_initial_covariance();
};

struct TrackStep {
    Vec4 truth;
    Vec4 measured;
    KalmanState fused;
};

/// Runs predict+update over a trajectory with simulated GPS fixes drawn
/// around the true state. The first fix initializes the filter. Deterministic
/// for a given seed.
std::vector<TrackStep> track(const std::vector<TrajectoryStep>& trajectory, const TrackConfig& cfg,
                             std::uint64_t seed);

/// Exact constant-acceleration trajectory sampled every dt, `steps` samples.
std::vector<TrajectoryStep> constant_acceleration_trajectory(const Vec4& initial, const Vec2& accel,
                                                             double dt, std::size_t steps);

} // namespace overtake
