#include "overtake/localization.hpp"

#include "overtake/rng.hpp"

namespace overtake {

namespace {

template <typename M>
void require_finite(const M& m, const char* what)
{
    if (!m.allFinite()) {
        throw DomainError(what);
    }
}

} // namespace

Mat4 KalmanState::default_initial_covariance()
{
    return Vec4(100.0, 100.0, 10.0, 10.0).asDiagonal();
}

bool KalmanState::is_symmetric_psd(double tol) const
{
    if (!p.allFinite()) {
        return false;
    }
    if ((p - p.transpose()).cwiseAbs().maxCoeff() > tol * std::max(1.0, p.cwiseAbs().maxCoeff())) {
        return false;
    }
    Eigen::SelfAdjointEigenSolver<Mat4> eig(p, Eigen::EigenvaluesOnly);
    return eig.eigenvalues().minCoeff() >= -tol;
}

ProcessModel ProcessModel::constant_acceleration(double dt)
{
    return constant_acceleration(dt, Vec4(0.01, 0.01, 0.1, 0.1).asDiagonal());
}

ProcessModel ProcessModel::constant_acceleration(double dt, const Mat4& q)
{
    ProcessModel m;
    m.dt = dt;
    m.a = Mat4::Identity();
    m.a(0, 2) = dt;
    m.a(1, 3) = dt;
    m.b = Mat42::Zero();
    m.b(0, 0) = 0.5 * dt * dt;
    m.b(1, 1) = 0.5 * dt * dt;
    m.b(2, 0) = dt;
    m.b(3, 1) = dt;
    m.q = q;
    return m;
}

Mat4 MeasurementModel::default_noise()
{
    return Vec4(49.0, 49.0, 1.0, 1.0).asDiagonal();
}

KalmanState predict(const KalmanState& state, const ProcessModel& model, const ControlInput& u)
{
    require_finite(state.s, "predict: non-finite state");
    require_finite(state.p, "predict: non-finite covariance");
    require_finite(u.u, "predict: non-finite control input");
    require_finite(model.a, "predict: non-finite transition matrix");

    KalmanState out;
    out.s = model.a * state.s + model.b * u.u;
    out.p = model.a * state.p * model.a.transpose() + model.q;
    out.p = 0.5 * (out.p + out.p.transpose());
    return out;
}

KalmanState update(const KalmanState& predicted, const MeasurementModel& meas, const Vec4& z)
{
    require_finite(z, "update: non-finite measurement");
    require_finite(predicted.s, "update: non-finite state");

    const Mat4 innovation_cov = meas.h * predicted.p * meas.h.transpose() + meas.r;
    Eigen::FullPivLU<Mat4> lu(innovation_cov);
    if (!lu.isInvertible()) {
        throw NumericalError("update: singular innovation covariance");
    }
    const Mat4 gain = predicted.p * meas.h.transpose() * lu.inverse();

    KalmanState out;
    out.s = predicted.s + gain * (z - meas.h * predicted.s);
    out.p = (Mat4::Identity() - gain * meas.h) * predicted.p;
    out.p = 0.5 * (out.p + out.p.transpose());
    return out;
}

std::vector<TrackStep> track(const std::vector<TrajectoryStep>& trajectory, const TrackConfig& cfg,
                             std::uint64_t seed)
{
    if (trajectory.empty()) {
        throw DomainError("track: empty trajectory");
    }
    if (!(cfg.gps_sigma >= 0.0) || !(cfg.velocity_sigma >= 0.0) || !(cfg.dt >= 0.0)) {
        throw DomainError("track: sigmas and dt must be non-negative");
    }

    Rng rng(seed);
    const auto measure = [&](const Vec4& truth) {
        Vec4 z;
        z(0) = truth(0) + cfg.gps_sigma * rng.normal();
        z(1) = truth(1) + cfg.gps_sigma * rng.normal();
        z(2) = truth(2) + cfg.velocity_sigma * rng.normal();
        z(3) = truth(3) + cfg.velocity_sigma * rng.normal();
        return z;
    };

    const ProcessModel process = ProcessModel::constant_acceleration(cfg.dt, cfg.q);
    MeasurementModel meas;
    meas.r = cfg.r;

    std::vector<TrackStep> out;
    out.reserve(trajectory.size());

    KalmanState state;
    state.s = measure(trajectory.front().truth);
    state.p = cfg.p0;
    out.push_back({trajectory.front().truth, state.s, state});

    for (std::size_t k = 1; k < trajectory.size(); ++k) {
        const auto& step = trajectory[k];
        const Vec4 z = measure(step.truth);
        state = update(predict(state, process, step.control), meas, z);
        out.push_back({step.truth, z, state});
    }
    return out;
}

std::vector<TrajectoryStep> constant_acceleration_trajectory(const Vec4& initial, const Vec2& accel,
                                                             double dt, std::size_t steps)
{
    std::vector<TrajectoryStep> out;
    out.reserve(steps);
    for (std::size_t k = 0; k < steps; ++k) {
        const double t = static_cast<double>(k) * dt;
        Vec4 truth;
        truth(0) = initial(0) + initial(2) * t + 0.5 * accel(0) * t * t;
        truth(1) = initial(1) + initial(3) * t + 0.5 * accel(1) * t * t;
        truth(2) = initial(2) + accel(0) * t;
        truth(3) = initial(3) + accel(1) * t;
        out.push_back({ControlInput{accel}, truth});
    }
    return out;
}

} // namespace overtake
