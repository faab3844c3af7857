#pragma once

// Hybrid Monte Carlo over either action. A Theory supplies
//   State, Momenta, refresh(state, rng), kinetic(mom), action(state),
//   kick(state, mom, dt), drift(state, mom, dt), negate(mom),
//   reunitarize_links(state)
// (see WilsonTheory and OrbifoldTheory).

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>

#include "errors.hpp"

namespace orbilat {

struct HmcParams {
    double dt = 0.05;
    int n_md = 20;
    long n_traj = 10000;
    long n_therm = 1000;
    int meas_every = 1;
    std::uint64_t seed = 1;

    double trajectory_length() const { return dt * n_md; }
    bool operator==(const HmcParams&) const = default;
};

struct TrajectoryRecord {
    long index = 0;
    double dh = 0.0;
    bool accepted = false;
};

// Kick-drift-kick leapfrog, n_md steps of size dt. Adjacent half kicks are
// merged into full kicks.
template <class Theory>
void leapfrog(const Theory& theory, typename Theory::State& state, typename Theory::Momenta& mom,
              double dt, int n_md) {
    theory.kick(state, mom, 0.5 * dt);
    for (int step = 0; step < n_md; ++step) {
        theory.drift(state, mom, dt);
        theory.kick(state, mom, step + 1 < n_md ? dt : 0.5 * dt);
    }
}

template <class Theory>
double hamiltonian(const Theory& theory, const typename Theory::State& state,
                   const typename Theory::Momenta& mom) {
    return theory.kinetic(mom) + theory.action(state);
}

// One HMC trajectory: Gaussian refresh, leapfrog, Metropolis on
// dH = H_new - H_old. A uniform number is drawn on every trajectory so the
// random stream does not depend on the sign of dH. On rejection the prior
// state is restored bit for bit. Group links are reprojected once per
// trajectory; a DriftError there carries the trajectory index.
template <class Theory, class Rng>
TrajectoryRecord hmc_trajectory(const Theory& theory, typename Theory::State& state, const HmcParams& hp,
                                Rng& rng, long index = 0) {
    auto mom = theory.refresh(state, rng);
    const double h0 = hamiltonian(theory, state, mom);
    typename Theory::State trial = state;
    leapfrog(theory, trial, mom, hp.dt, hp.n_md);
    const double h1 = hamiltonian(theory, trial, mom);
    TrajectoryRecord rec;
    rec.index = index;
    rec.dh = h1 - h0;
    if (!std::isfinite(rec.dh)) {
        std::ostringstream os;
        os << "trajectory " << index << ": non-finite energy change";
        throw NumericalError(os.str());
    }
    std::uniform_real_distribution<double> uniform(0.0, 1.0);
    const double r = uniform(rng);
    rec.accepted = r < std::exp(-rec.dh);
    if (rec.accepted) {
        try {
            theory.reunitarize_links(trial);
        } catch (const DriftError& e) {
            std::ostringstream os;
            os << "trajectory " << index << ": " << e.what();
            throw DriftError(os.str(), e.deviation());
        }
        state = std::move(trial);
    }
    return rec;
}

} // namespace orbilat
