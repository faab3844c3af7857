#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <vector>

#include "orbilat/analysis.hpp"

using namespace orbilat;

namespace {

std::vector<double> gaussian_series(std::size_t n, double mu, double sigma, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(mu, sigma);
    std::vector<double> v(n);
    for (auto& x : v) x = g(rng);
    return v;
}

// AR(1) with unit innovations: x_t = rho x_{t-1} + e_t
std::vector<double> ar1_series(std::size_t n, double rho, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g(0.0, 1.0);
    std::vector<double> v(n);
    double x = 0.0;
    for (auto& y : v) y = x = rho * x + g(rng);
    return v;
}

std::vector<FitPoint> m2_grid(double a0, double a1, double a2) {
    std::vector<FitPoint> pts;
    for (double m2 : {250.0, 500.0, 1000.0, 2000.0, 4000.0}) {
        const double x = 1.0 / m2;
        pts.push_back({x, a0 + a1 * x + a2 * x * x, 0.01});
    }
    return pts;
}

} // namespace

TEST(Jackknife, ConstantSeriesHasZeroError) {
    const std::vector<double> v(1000, 3.25);
    const auto e = jackknife(v, 10);
    EXPECT_DOUBLE_EQ(e.mean, 3.25);
    EXPECT_EQ(e.err, 0.0);
    EXPECT_EQ(e.n_bins, 100);
}

TEST(Jackknife, IidNormalErrorMatchesSigmaOverRootN) {
    const std::size_t n = 20000;
    const auto v = gaussian_series(n, 1.0, 2.0, 11);
    const auto e = jackknife(v, 1);
    EXPECT_NEAR(e.err, 2.0 / std::sqrt(double(n)), 0.3 * 2.0 / std::sqrt(double(n)));
    EXPECT_NEAR(e.mean, 1.0, 4.0 * e.err);
}

TEST(Jackknife, UnbinnedEstimateIsMeanExactly) {
    const auto v = gaussian_series(999, 0.0, 1.0, 12);
    double s = 0.0;
    for (double x : v) s += x;
    EXPECT_NEAR(jackknife(v, 1).mean, s / v.size(), 1e-15);
}

TEST(Jackknife, BinningPlateauForCorrelatedSeries) {
    // AR(1) with rho = 0.8: tau_int = (1 + rho) / (2 (1 - rho)) = 4.5, so the
    // binned error approaches sqrt(2 tau_int) times the naive one.
    const double rho = 0.8;
    const std::size_t n = 200000;
    const auto v = ar1_series(n, rho, 13);
    const auto report = binning_report(v, 512);
    const double naive = report.front().err;
    const double plateau = report.back().err;
    EXPECT_NEAR(plateau / naive, std::sqrt(2.0 * 4.5), 0.2 * std::sqrt(2.0 * 4.5));
    // errors grow monotonically to the plateau (up to noise in the tail)
    EXPECT_GT(jackknife(v, 64).err, 2.5 * naive);
    EXPECT_NEAR(jackknife(v, 256).err, jackknife(v, 128).err, 0.15 * jackknife(v, 128).err);
}

TEST(Jackknife, TooFewBinsThrows) {
    const std::vector<double> v(15, 1.0);
    EXPECT_THROW(jackknife(v, 10), InsufficientStatisticsError);
    EXPECT_NO_THROW(jackknife(v, 7));
}

TEST(Jackknife, DerivedIdentityEstimatorEqualsMean) {
    const auto v = gaussian_series(1000, 0.5, 1.0, 14);
    const auto a = jackknife(v, 10);
    const auto b = jackknife_derived({std::span<const double>(v)}, 10, [](std::span<const double> m) { return m[0]; });
    EXPECT_EQ(a.mean, b.mean);
    EXPECT_EQ(a.err, b.err);
}

TEST(Susceptibility, ConstantSeriesIsZero) {
    const std::vector<double> v(400, 0.7);
    const auto s = susceptibility(v, 10);
    EXPECT_NEAR(s.mean, 0.0, 1e-15);
    EXPECT_NEAR(s.err, 0.0, 1e-15);
}

TEST(Susceptibility, TwoValuedSeriesGivesSquaredHalfGap) {
    // values p +- delta with equal frequency: variance delta^2
    const double delta = 0.2;
    std::vector<double> v;
    for (int i = 0; i < 1000; ++i) v.push_back(i % 2 ? 0.5 + delta : 0.5 - delta);
    EXPECT_NEAR(susceptibility(v, 10).mean, delta * delta, 0.01 * delta * delta);
}

TEST(Susceptibility, AgreesWithNaiveVariance) {
    const auto v = gaussian_series(10000, 0.3, 0.1, 15);
    double s = 0.0, s2 = 0.0;
    for (double x : v) {
        s += x;
        s2 += x * x;
    }
    const double mean = s / v.size();
    const auto chi = susceptibility(v, 20);
    EXPECT_NEAR(chi.mean, s2 / v.size() - mean * mean, 1e-12);
    EXPECT_GT(chi.err, 0.0);
    EXPECT_LT(chi.err, 0.1 * chi.mean);
}

TEST(QuadExtrapolate, ExactQuadraticRecovered) {
    auto pts = m2_grid(2.0, 3.0, -1.0);
    // 2 + 3x - x^2 on a wider x range as well
    pts.push_back({0.5, 2.0 + 1.5 - 0.25, 0.01});
    const auto r = quad_extrapolate(pts);
    EXPECT_NEAR(r.a0, 2.0, 1e-12);
    EXPECT_NEAR(r.a1, 3.0, 1e-10);
    EXPECT_NEAR(r.a2, -1.0, 1e-9);
    EXPECT_NEAR(r.chi2_per_dof, 0.0, 1e-12);
}

TEST(QuadExtrapolate, ConstantDataGivesConstant) {
    const auto r = quad_extrapolate(m2_grid(1.7, 0.0, 0.0));
    EXPECT_NEAR(r.a0, 1.7, 1e-12);
    EXPECT_NEAR(r.at(0.002), 1.7, 1e-12);
}

TEST(QuadExtrapolate, MatchesQrOracle) {
    std::mt19937_64 rng(16);
    std::normal_distribution<double> g(0.0, 1.0);
    std::uniform_real_distribution<double> us(0.005, 0.05);
    for (int trial = 0; trial < 20; ++trial) {
        std::vector<FitPoint> pts;
        for (double m2 : {250.0, 500.0, 1000.0, 2000.0, 4000.0, 8000.0}) {
            const double sigma = us(rng);
            const double x = 1.0 / m2;
            pts.push_back({x, 1.0 - 30.0 * x + 2000.0 * x * x + sigma * g(rng), sigma});
        }
        Eigen::MatrixXd a(pts.size(), 3);
        Eigen::VectorXd b(pts.size());
        for (std::size_t i = 0; i < pts.size(); ++i) {
            a(i, 0) = 1.0 / pts[i].sigma;
            a(i, 1) = pts[i].x / pts[i].sigma;
            a(i, 2) = pts[i].x * pts[i].x / pts[i].sigma;
            b(i) = pts[i].y / pts[i].sigma;
        }
        const Eigen::Vector3d coef = a.colPivHouseholderQr().solve(b);
        const Eigen::Matrix3d cov = (a.transpose() * a).inverse();
        const auto r = quad_extrapolate(pts);
        EXPECT_NEAR(r.a0, coef(0), 1e-9);
        EXPECT_NEAR(r.a1, coef(1), 1e-9 * std::abs(coef(1)) + 1e-9);
        EXPECT_NEAR(r.a2, coef(2), 1e-9 * std::abs(coef(2)) + 1e-9);
        EXPECT_NEAR(r.a0_err, std::sqrt(cov(0, 0)), 1e-9 * std::sqrt(cov(0, 0)));
    }
}

TEST(QuadExtrapolate, ShiftAndSigmaScaleEquivariant) {
    std::mt19937_64 rng(17);
    std::normal_distribution<double> g(0.0, 0.01);
    auto pts = m2_grid(1.0, -20.0, 500.0);
    for (auto& p : pts) p.y += g(rng);
    const auto base = quad_extrapolate(pts);

    auto shifted = pts;
    for (auto& p : shifted) p.y += 5.0;
    const auto rs = quad_extrapolate(shifted);
    EXPECT_NEAR(rs.a0, base.a0 + 5.0, 1e-10);
    EXPECT_NEAR(rs.a0_err, base.a0_err, 1e-12);

    auto scaled = pts;
    for (auto& p : scaled) p.sigma *= 3.0;
    const auto rk = quad_extrapolate(scaled);
    EXPECT_NEAR(rk.a0, base.a0, 1e-12);
    EXPECT_NEAR(rk.a0_err, 3.0 * base.a0_err, 1e-12);
    EXPECT_NEAR(rk.chi2_per_dof, base.chi2_per_dof / 9.0, 1e-10);
}

TEST(QuadExtrapolate, SingularDesignsAreErrors) {
    std::vector<FitPoint> two_x = {{0.1, 1, 1}, {0.1, 2, 1}, {0.2, 1, 1}, {0.2, 3, 1}};
    EXPECT_THROW(quad_extrapolate(two_x), SingularFitError);
    std::vector<FitPoint> zero_sigma = m2_grid(1, 0, 0);
    zero_sigma[2].sigma = 0.0;
    EXPECT_THROW(quad_extrapolate(zero_sigma), SingularFitError);
    auto few = m2_grid(1, 0, 0);
    few.resize(3);
    EXPECT_THROW(quad_extrapolate(few), InsufficientStatisticsError);
}
