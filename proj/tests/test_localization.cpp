#include <gtest/gtest.h>

#include <cmath>

#include "overtake/localization.hpp"
#include "overtake/rng.hpp"

using namespace overtake;

namespace {

void expect_vec_near(const Vec4& a, const Vec4& b, double tol)
{
    for (int i = 0; i < 4; ++i) {
        EXPECT_NEAR(a(i), b(i), tol) << "component " << i;
    }
}

KalmanState state_with(const Vec4& s, const Mat4& p)
{
    KalmanState k;
    k.s = s;
    k.p = p;
    return k;
}

} // namespace

TEST(Predict, ConstantVelocity)
{
    const auto model = ProcessModel::constant_acceleration(0.1, Mat4::Zero());
    const KalmanState out = predict(state_with(Vec4(0, 0, 10, 0), Mat4::Identity()), model, {});
    expect_vec_near(out.s, Vec4(1, 0, 10, 0), 1e-12);
}

TEST(Predict, ConstantAccelerationUsesHalfDtSquared)
{
    const auto model = ProcessModel::constant_acceleration(1.0, Mat4::Zero());
    const KalmanState out = predict(state_with(Vec4::Zero(), Mat4::Identity()), model, {Vec2(2, 0)});
    expect_vec_near(out.s, Vec4(1, 0, 2, 0), 1e-12);
}

TEST(Predict, ZeroDtIsIdentity)
{
    const auto model = ProcessModel::constant_acceleration(0.0, Mat4::Zero());
    const KalmanState out = predict(state_with(Vec4(3, 4, 5, 6), Mat4::Identity()), model, {});
    EXPECT_TRUE(out.p.isApprox(Mat4::Identity()));
    expect_vec_near(out.s, Vec4(3, 4, 5, 6), 0.0);
}

TEST(Predict, MatrixStructure)
{
    const auto m = ProcessModel::constant_acceleration(0.2);
    Mat4 a = Mat4::Identity();
    a(0, 2) = 0.2;
    a(1, 3) = 0.2;
    EXPECT_TRUE(m.a.isApprox(a));
    EXPECT_DOUBLE_EQ(m.b(0, 0), 0.02);
    EXPECT_DOUBLE_EQ(m.b(1, 1), 0.02);
    EXPECT_DOUBLE_EQ(m.b(2, 0), 0.2);
    EXPECT_DOUBLE_EQ(m.b(3, 1), 0.2);
    EXPECT_DOUBLE_EQ(m.b(0, 1), 0.0);
}

TEST(Predict, RejectsNonFinite)
{
    const auto model = ProcessModel::constant_acceleration(0.1);
    KalmanState s;
    s.s(0) = std::nan("");
    EXPECT_THROW(predict(s, model, {}), DomainError);
    EXPECT_THROW(predict(KalmanState{}, model, {Vec2(INFINITY, 0)}), DomainError);
}

TEST(Predict, IsLinearInState)
{
    Rng rng(5);
    const auto model = ProcessModel::constant_acceleration(0.1);
    const ControlInput u{Vec2(0.3, -0.2)};
    for (int i = 0; i < 100; ++i) {
        const Vec4 s1(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        const Vec4 s2(rng.normal(), rng.normal(), rng.normal(), rng.normal());
        const double alpha = rng.uniform(-2, 2);
        const double beta = rng.uniform(-2, 2);
        const Vec4 combined = predict(state_with(alpha * s1 + beta * s2, Mat4::Identity()), model, u).s;
        const Vec4 expected = alpha * model.a * s1 + beta * model.a * s2 + model.b * u.u;
        expect_vec_near(combined, expected, 1e-12);
    }
}

TEST(Update, HugeMeasurementNoiseIgnoresMeasurement)
{
    MeasurementModel meas;
    meas.r = 1e12 * Mat4::Identity();
    const Vec4 s(1, 2, 3, 4);
    const KalmanState out = update(state_with(s, Mat4::Identity()), meas, Vec4(100, 100, 100, 100));
    expect_vec_near(out.s, s, 1e-9);
}

TEST(Update, ZeroMeasurementNoiseTrustsMeasurement)
{
    MeasurementModel meas;
    meas.r = Mat4::Zero();
    const Vec4 z(7, 8, 9, 10);
    const KalmanState out = update(state_with(Vec4(1, 2, 3, 4), Mat4::Identity()), meas, z);
    expect_vec_near(out.s, z, 1e-12);
    EXPECT_NEAR(out.p.norm(), 0.0, 1e-12);
}

TEST(Update, UnitCovariancesHalveTheInnovation)
{
    MeasurementModel meas;
    meas.r = Mat4::Identity();
    const Vec4 s(1, 2, 3, 4);
    const Vec4 z(3, 2, 1, 0);
    const KalmanState out = update(state_with(s, Mat4::Identity()), meas, z);
    expect_vec_near(out.s, s + 0.5 * (z - s), 1e-12);
    EXPECT_TRUE(out.p.isApprox(0.5 * Mat4::Identity()));
}

TEST(Update, SingularInnovationIsReported)
{
    MeasurementModel meas;
    meas.r = Mat4::Zero();
    EXPECT_THROW(update(state_with(Vec4::Zero(), Mat4::Zero()), meas, Vec4::Zero()), NumericalError);
}

TEST(Update, JosephFormAgreesForOptimalGain)
{
    Rng rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        Mat4 l = Mat4::Zero();
        for (int i = 0; i < 4; ++i) {
            for (int j = 0; j <= i; ++j) {
                l(i, j) = rng.normal();
            }
            l(i, i) = std::abs(l(i, i)) + 0.5;
        }
        const Mat4 p = l * l.transpose();
        MeasurementModel meas;
        meas.r = Vec4(rng.uniform(0.5, 50), rng.uniform(0.5, 50), rng.uniform(0.1, 2), rng.uniform(0.1, 2)).asDiagonal();

        const Mat4 k = p * meas.h.transpose() * (meas.h * p * meas.h.transpose() + meas.r).inverse();
        const Mat4 ikh = Mat4::Identity() - k * meas.h;
        const Mat4 joseph = ikh * p * ikh.transpose() + k * meas.r * k.transpose();

        const KalmanState out = update(state_with(Vec4::Zero(), p), meas, Vec4::Zero());
        EXPECT_LE((out.p - joseph).norm(), 1e-6 * joseph.norm());
    }
}

TEST(Covariance, StaysSymmetricPsdOverManyCycles)
{
    Rng rng(3);
    const auto model = ProcessModel::constant_acceleration(0.1);
    MeasurementModel meas;
    KalmanState state;
    for (int i = 0; i < 10000; ++i) {
        state = predict(state, model, {Vec2(rng.normal(), rng.normal())});
        state = update(state, meas, Vec4(rng.normal(0, 7), rng.normal(0, 7), rng.normal(), rng.normal()));
        ASSERT_TRUE(state.is_symmetric_psd()) << "cycle " << i;
    }
}

TEST(Track, IsDeterministicPerSeed)
{
    const auto traj = constant_acceleration_trajectory(Vec4(0, 0, 20, 0), Vec2(0.5, 0), 0.1, 100);
    const auto a = track(traj, {}, 42);
    const auto b = track(traj, {}, 42);
    const auto c = track(traj, {}, 43);
    ASSERT_EQ(a.size(), 100u);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].fused.s, b[i].fused.s);
        EXPECT_EQ(a[i].measured, b[i].measured);
    }
    EXPECT_NE(a.back().measured, c.back().measured);
}

TEST(Track, NoiselessMeasurementsAreReproduced)
{
    TrackConfig cfg;
    cfg.gps_sigma = 0.0;
    cfg.velocity_sigma = 0.0;
    cfg.r = Mat4::Zero();
    const auto traj = constant_acceleration_trajectory(Vec4(0, 0, 15, 1), Vec2(0.2, 0.1), 0.1, 50);
    for (const auto& step : track(traj, cfg, 1)) {
        expect_vec_near(step.fused.s, step.measured, 1e-9);
    }
}

TEST(Track, ZeroDtHoldsInitialState)
{
    TrackConfig cfg;
    cfg.dt = 0.0;
    cfg.gps_sigma = 0.0;
    cfg.velocity_sigma = 0.0;
    const auto traj = constant_acceleration_trajectory(Vec4(5, 6, 7, 8), Vec2::Zero(), 0.0, 20);
    for (const auto& step : track(traj, cfg, 1)) {
        expect_vec_near(step.fused.s, Vec4(5, 6, 7, 8), 1e-12);
    }
}

TEST(Track, RejectsEmptyTrajectory)
{
    EXPECT_THROW(track({}, {}, 1), DomainError);
}

TEST(Track, ErrorShrinksWithExactMeasurementsOnAcceleratingRun)
{
    // H = I and z equal to the truth: error never grows from one step to the next.
    TrackConfig cfg;
    cfg.gps_sigma = 0.0;
    cfg.velocity_sigma = 0.0;
    const auto traj = constant_acceleration_trajectory(Vec4(0, 0, 10, 0), Vec2(1.0, 0.5), 0.1, 200);
    double prev = INFINITY;
    for (const auto& step : track(traj, cfg, 7)) {
        const double err = (step.fused.s - step.truth).norm();
        EXPECT_LE(err, prev + 1e-12);
        prev = err;
    }
}

TEST(Track, FusedPositionBeatsRawGps)
{
    double fused_sq = 0.0;
    double raw_sq = 0.0;
    std::size_t n = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto traj = constant_acceleration_trajectory(Vec4(0, 0, 25, 0), Vec2::Zero(), 0.1, 601);
        for (const auto& step : track(traj, {}, seed)) {
            fused_sq += (step.fused.s.head<2>() - step.truth.head<2>()).squaredNorm();
            raw_sq += (step.measured.head<2>() - step.truth.head<2>()).squaredNorm();
            ++n;
        }
    }
    EXPECT_LT(std::sqrt(fused_sq / n), 0.7 * std::sqrt(raw_sq / n));
}
