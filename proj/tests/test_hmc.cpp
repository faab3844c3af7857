#include <gtest/gtest.h>

#include <cmath>
#include <vector>

#include "orbilat/analysis.hpp"
#include "orbilat/hmc.hpp"
#include "orbilat/orbifold.hpp"
#include "orbilat/wilson.hpp"
#include "test_support.hpp"

using namespace orbilat;
using namespace orbilat::testing;

namespace {

PhysParams su2_params(double m2 = 0.0) {
    PhysParams p;
    p.n_colors = 2;
    p.spatial_dims = 2;
    p.g2 = 1.0;
    p.a = 0.3;
    p.a_t = 0.3;
    p.m2 = m2;
    p.m2_u1 = m2;
    return p;
}

const LatticeShape& shape443() {
    static const LatticeShape s(4, {4, 4});
    return s;
}

template <class Theory>
typename Theory::State thermalize(const Theory& th, typename Theory::State st, double dt, int n_md, int n, Rng& rng) {
    HmcParams hp;
    hp.dt = dt;
    hp.n_md = n_md;
    for (int i = 0; i < n; ++i) hmc_trajectory(th, st, hp, rng, i);
    return st;
}

double max_diff(const WilsonConfig<2>& a, const WilsonConfig<2>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.links().size(); ++i)
        d = std::max(d, max_abs(a.links()[i].matrix() - b.links()[i].matrix()));
    return d;
}

double max_diff(const OrbifoldConfig<2>& a, const OrbifoldConfig<2>& b) {
    double d = 0.0;
    for (std::size_t i = 0; i < a.z_links().size(); ++i) d = std::max(d, max_abs(a.z_links()[i] - b.z_links()[i]));
    for (std::size_t i = 0; i < a.ut_links().size(); ++i)
        d = std::max(d, max_abs(a.ut_links()[i].matrix() - b.ut_links()[i].matrix()));
    return d;
}

// Mean |dH| over a fixed set of momenta at trajectory length 1.
template <class Theory>
double mean_abs_dh(const Theory& th, const typename Theory::State& st,
                   const std::vector<typename Theory::Momenta>& moms, double dt) {
    double sum = 0.0;
    for (const auto& m0 : moms) {
        auto s = st;
        auto m = m0;
        const double h0 = hamiltonian(th, s, m);
        leapfrog(th, s, m, dt, int(std::lround(1.0 / dt)));
        sum += std::abs(hamiltonian(th, s, m) - h0);
    }
    return sum / moms.size();
}

template <class Theory>
double dh_slope(const Theory& th, const typename Theory::State& st, double dt0, Rng& rng) {
    std::vector<typename Theory::Momenta> moms;
    for (int i = 0; i < 8; ++i) moms.push_back(th.refresh(st, rng));
    std::vector<double> lx, ly;
    for (double dt : {dt0, dt0 / 2, dt0 / 4}) {
        lx.push_back(std::log(dt));
        ly.push_back(std::log(mean_abs_dh(th, st, moms, dt)));
    }
    // least-squares slope
    const double mx = (lx[0] + lx[1] + lx[2]) / 3;
    const double my = (ly[0] + ly[1] + ly[2]) / 3;
    double sxy = 0.0, sxx = 0.0;
    for (int i = 0; i < 3; ++i) {
        sxy += (lx[i] - mx) * (ly[i] - my);
        sxx += (lx[i] - mx) * (lx[i] - mx);
    }
    return sxy / sxx;
}

} // namespace

TEST(Leapfrog, ReversibleWilson) {
    Rng rng(1);
    const WilsonTheory<2> th(su2_params());
    const auto st0 = thermalize(th, WilsonConfig<2>(shape443()), 0.05, 20, 30, rng);
    auto st = st0;
    auto mom = th.refresh(st, rng);
    leapfrog(th, st, mom, 0.05, 20);
    th.negate(mom);
    leapfrog(th, st, mom, 0.05, 20);
    EXPECT_LT(max_diff(st, st0), 1e-8);
}

TEST(Leapfrog, ReversibleOrbifold) {
    Rng rng(2);
    const auto p = su2_params(500.0);
    const OrbifoldTheory<2> th(p);
    const auto st0 = random_orbifold_config<2>(shape443(), p, rng, 0.05);
    auto st = st0;
    auto mom = th.refresh(st, rng);
    leapfrog(th, st, mom, 0.01, 100);
    th.negate(mom);
    leapfrog(th, st, mom, 0.01, 100);
    EXPECT_LT(max_diff(st, st0), 1e-8);
}

TEST(Leapfrog, EnergyViolationScalesAsStepSquaredWilson) {
    Rng rng(3);
    const WilsonTheory<2> th(su2_params());
    const auto st = thermalize(th, WilsonConfig<2>(shape443()), 0.05, 20, 50, rng);
    EXPECT_NEAR(dh_slope(th, st, 0.05, rng), 2.0, 0.1);
}

TEST(Leapfrog, EnergyViolationScalesAsStepSquaredOrbifold) {
    Rng rng(4);
    const auto p = su2_params(250.0);
    const OrbifoldTheory<2> th(p);
    const auto st = thermalize(th, identity_orbifold_config<2>(shape443(), p), 0.01, 100, 30, rng);
    EXPECT_NEAR(dh_slope(th, st, 0.01, rng), 2.0, 0.1);
}

TEST(Leapfrog, ZeroMomentaAtMinimumStayPut) {
    const auto p = su2_params(1000.0);
    const OrbifoldTheory<2> th(p);
    Rng rng(5);
    const auto st0 = identity_orbifold_config<2>(shape443(), p);
    auto st = st0;
    auto mom = th.refresh(st, rng);
    for (auto& z : mom.z) z = Matrix<2>{};
    for (auto& u : mom.ut) u = AlgebraElement<2>{};
    leapfrog(th, st, mom, 0.01, 50);
    // sqrt(c)^2 = c only up to rounding
    EXPECT_LT(max_diff(st, st0), 1e-12);

    const WilsonTheory<2> wt(p);
    const WilsonConfig<2> w0(shape443());
    auto w = w0;
    std::vector<AlgebraElement<2>> wm(w.links().size());
    leapfrog(wt, w, wm, 0.05, 20);
    EXPECT_EQ(w, w0);
}

TEST(Hmc, AcceptanceAboveNinetyPercentWhenEnergyErrorSmall) {
    Rng rng(6);
    const WilsonTheory<2> th(su2_params());
    auto st = thermalize(th, WilsonConfig<2>(shape443()), 0.04, 25, 100, rng);
    HmcParams hp;
    hp.dt = 0.04;
    hp.n_md = 25;
    int acc = 0;
    double abs_dh = 0.0;
    for (int i = 0; i < 500; ++i) {
        const auto r = hmc_trajectory(th, st, hp, rng, i);
        acc += r.accepted;
        abs_dh += std::abs(r.dh);
    }
    EXPECT_LT(abs_dh / 500, 0.1);
    EXPECT_GT(acc / 500.0, 0.9);
}

TEST(Hmc, ExpMinusDeltaHAveragesToOne) {
    Rng rng(7);
    const WilsonTheory<2> th(su2_params());
    auto st = thermalize(th, WilsonConfig<2>(shape443()), 0.05, 20, 100, rng);
    HmcParams hp;
    hp.dt = 0.05;
    hp.n_md = 20;
    std::vector<double> w;
    for (int i = 0; i < 2000; ++i) w.push_back(std::exp(-hmc_trajectory(th, st, hp, rng, i).dh));
    const auto e = jackknife(w, 20);
    EXPECT_LT(std::abs(e.mean - 1.0), 3.0 * e.err) << e.mean << " +- " << e.err;
}

TEST(Hmc, DeterministicForFixedSeed) {
    const auto p = su2_params(250.0);
    const OrbifoldTheory<2> th(p);
    HmcParams hp;
    hp.dt = 0.01;
    hp.n_md = 50;
    auto run = [&] {
        Rng rng(8);
        auto st = identity_orbifold_config<2>(shape443(), p);
        std::vector<double> dh;
        for (int i = 0; i < 5; ++i) dh.push_back(hmc_trajectory(th, st, hp, rng, i).dh);
        return std::make_pair(st, dh);
    };
    const auto a = run();
    const auto b = run();
    EXPECT_EQ(a.first, b.first);
    EXPECT_EQ(a.second, b.second);
}

TEST(Hmc, RejectionRestoresStateExactly) {
    Rng rng(9);
    const WilsonTheory<2> th(su2_params());
    const auto st0 = thermalize(th, WilsonConfig<2>(shape443()), 0.05, 20, 20, rng);
    HmcParams hp;
    hp.dt = 0.4;
    hp.n_md = 3;
    int rejected = 0;
    for (int i = 0; i < 5; ++i) {
        auto st = st0;
        const auto r = hmc_trajectory(th, st, hp, rng, i);
        if (!r.accepted) {
            ++rejected;
            EXPECT_EQ(st, st0);
        }
    }
    EXPECT_GT(rejected, 0);
}

TEST(Hmc, AcceptedStateStaysInGroup) {
    Rng rng(10);
    const WilsonTheory<2> th(su2_params());
    const auto st = thermalize(th, WilsonConfig<2>(shape443()), 0.05, 20, 20, rng);
    EXPECT_LT(th.drift_from_group(st), 1e-13);
}
