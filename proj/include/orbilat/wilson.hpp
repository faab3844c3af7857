#pragma once

// Anisotropic Wilson plaquette action for SU(N) on a (d+1)-dimensional
// periodic lattice, and its molecular-dynamics force.
//
//   S = - sum_n [ (c/a_t) sum_j 2 Re Tr P_tj(n) + a_t a^{d-4}/(2g^2) sum_{j<k} 2 Re Tr P_jk(n) ]
//
// with P_{mu nu}(n) = U_mu(n) U_nu(n+mu) U_mu(n+nu)^dagger U_nu(n)^dagger.

#include <memory>
#include <vector>

#include "geometry.hpp"
#include "matalg.hpp"
#include "params.hpp"

namespace orbilat {

template <int N>
class WilsonConfig {
  public:
    WilsonConfig() = default;

    explicit WilsonConfig(const LatticeShape& shape)
        : shape_(shape),
          neighbors_(std::make_shared<const NeighborTable>(shape)),
          links_(shape.volume() * shape.dims()) {}

    const LatticeShape& shape() const { return shape_; }
    const NeighborTable& neighbors() const { return *neighbors_; }

    SpecialUnitary<N>& link(Site s, int mu) { return links_[s * shape_.dims() + mu]; }
    const SpecialUnitary<N>& link(Site s, int mu) const { return links_[s * shape_.dims() + mu]; }

    std::vector<SpecialUnitary<N>>& links() { return links_; }
    const std::vector<SpecialUnitary<N>>& links() const { return links_; }

    bool operator==(const WilsonConfig& o) const { return shape_ == o.shape_ && links_ == o.links_; }

  private:
    LatticeShape shape_;
    std::shared_ptr<const NeighborTable> neighbors_;
    std::vector<SpecialUnitary<N>> links_;
};

template <int N, class Rng>
WilsonConfig<N> random_wilson_config(const LatticeShape& shape, Rng& rng) {
    WilsonConfig<N> cfg(shape);
    for (auto& u : cfg.links()) u = random_special_unitary<N>(rng);
    return cfg;
}

template <int N>
Matrix<N> plaquette(const WilsonConfig<N>& cfg, Site n, int mu, int nu) {
    const auto& nb = cfg.neighbors();
    return cfg.link(n, mu).matrix() * cfg.link(nb.up(n, mu), nu).matrix() *
           dagger(cfg.link(nb.up(n, nu), mu).matrix()) * dagger(cfg.link(n, nu).matrix());
}

template <int N>
double wilson_action(const WilsonConfig<N>& cfg, const PhysParams& p) {
    const int dims = cfg.shape().dims();
    const double wt = p.temporal_weight();
    const double ws = p.spatial_weight();
    double s_t = 0.0;
    double s_s = 0.0;
    for (Site n = 0; n < cfg.shape().volume(); ++n) {
        for (int j = 1; j < dims; ++j) s_t += trace(plaquette(cfg, n, time_dir, j)).real();
        for (int j = 1; j < dims; ++j)
            for (int k = j + 1; k < dims; ++k) s_s += trace(plaquette(cfg, n, j, k)).real();
    }
    return -2.0 * (wt * s_t + ws * s_s);
}

// Sum of weighted staples around link (n, mu) such that the part of the
// action containing U_mu(n) is -2 Re Tr(U_mu(n) * staple_sum).
// Temporal plane first, then spatial planes in ascending order.
template <int N>
Matrix<N> weighted_staples(const WilsonConfig<N>& cfg, const PhysParams& p, Site n, int mu) {
    const auto& nb = cfg.neighbors();
    const int dims = cfg.shape().dims();
    const double wt = p.temporal_weight();
    const double ws = p.spatial_weight();
    const Site n_mu = nb.up(n, mu);
    Matrix<N> sum;
    for (int nu = 0; nu < dims; ++nu) {
        if (nu == mu) continue;
        const double w = (nu == time_dir || mu == time_dir) ? wt : ws;
        const Site n_nu = nb.up(n, nu);
        const Site n_mnu = nb.down(n, nu);
        const Site n_mu_mnu = nb.down(n_mu, nu);
        Matrix<N> up = cfg.link(n_mu, nu).matrix() * dagger(cfg.link(n_nu, mu).matrix()) *
                       dagger(cfg.link(n, nu).matrix());
        Matrix<N> down = dagger(cfg.link(n_mu_mnu, nu).matrix()) *
                         dagger(cfg.link(n_mnu, mu).matrix()) * cfg.link(n_mnu, nu).matrix();
        sum += (up + down) * w;
    }
    return sum;
}

// Force F = -grad S on every link, where the gradient is taken along
// left-invariant flows U -> exp(eps X) U and paired via <X, Y> = Re Tr(X Y^dagger):
// dS/deps = -<F, X>.
template <int N>
std::vector<AlgebraElement<N>> wilson_force(const WilsonConfig<N>& cfg, const PhysParams& p) {
    const int dims = cfg.shape().dims();
    std::vector<AlgebraElement<N>> f(cfg.links().size());
    for (Site n = 0; n < cfg.shape().volume(); ++n)
        for (int mu = 0; mu < dims; ++mu)
            f[n * dims + mu] =
                AlgebraElement<N>::project(cfg.link(n, mu).matrix() * weighted_staples(cfg, p, n, mu)) *
                (-2.0);
    return f;
}

// U_mu(n) -> Omega(n) U_mu(n) Omega(n+mu)^dagger
template <int N>
WilsonConfig<N> gauge_transform(const WilsonConfig<N>& cfg, const std::vector<SpecialUnitary<N>>& omega) {
    WilsonConfig<N> r = cfg;
    const int dims = cfg.shape().dims();
    for (Site n = 0; n < cfg.shape().volume(); ++n)
        for (int mu = 0; mu < dims; ++mu)
            r.link(n, mu) = omega[n] * cfg.link(n, mu) * dagger(omega[cfg.neighbors().up(n, mu)]);
    return r;
}

// Multiplies every temporal link on time slice t0 by the center element z 1.
// The result is still SU(N) because z^N = 1.
template <int N>
WilsonConfig<N> center_transform(const WilsonConfig<N>& cfg, int t0, int k = 1) {
    WilsonConfig<N> r = cfg;
    const Complex z = std::polar(1.0, 2.0 * std::numbers::pi * k / N);
    for (Site n = 0; n < cfg.shape().volume(); ++n)
        if (cfg.shape().coordinate(n, time_dir) == t0)
            r.link(n, time_dir) = SpecialUnitary<N>::assume(cfg.link(n, time_dir).matrix() * z);
    return r;
}

// Cyclic shift by one lattice unit along mu: new(n) = old(n - mu).
template <int N>
WilsonConfig<N> translate(const WilsonConfig<N>& cfg, int mu) {
    WilsonConfig<N> r = cfg;
    const int dims = cfg.shape().dims();
    for (Site n = 0; n < cfg.shape().volume(); ++n)
        for (int nu = 0; nu < dims; ++nu) r.link(n, nu) = cfg.link(cfg.neighbors().down(n, mu), nu);
    return r;
}

// Molecular-dynamics adapter used by the HMC driver.
template <int N>
class WilsonTheory {
  public:
    using State = WilsonConfig<N>;
    using Momenta = std::vector<AlgebraElement<N>>;

    explicit WilsonTheory(PhysParams p) : p_(p) {}
    const PhysParams& params() const { return p_; }

    template <class Rng>
    Momenta refresh(const State& s, Rng& rng) const {
        Momenta m(s.links().size());
        for (auto& x : m) x = random_algebra<N>(rng);
        return m;
    }

    double kinetic(const Momenta& m) const {
        double k = 0.0;
        for (const auto& x : m) k += 0.5 * norm2(x.matrix());
        return k;
    }

    double action(const State& s) const { return wilson_action(s, p_); }

    void kick(const State& s, Momenta& m, double dt) const {
        const auto f = wilson_force(s, p_);
        for (std::size_t i = 0; i < m.size(); ++i) {
            if (!is_finite(f[i].matrix()))
                throw NumericalError("non-finite Wilson force at site " +
                                     std::to_string(i / s.shape().dims()) + " direction " +
                                     std::to_string(i % s.shape().dims()));
            m[i] += f[i] * dt;
        }
    }

    void drift(State& s, const Momenta& m, double dt) const {
        auto& links = s.links();
        for (std::size_t i = 0; i < links.size(); ++i) links[i] = exp_algebra(m[i], dt) * links[i];
    }

    void negate(Momenta& m) const {
        for (auto& x : m) x = -x;
    }

    void reunitarize_links(State& s) const {
        for (auto& u : s.links()) u = reunitarize(u.matrix());
    }

    // max |U^dagger U - 1| over all links
    double drift_from_group(const State& s) const {
        double d = 0.0;
        for (const auto& u : s.links()) d = std::max(d, unitarity_deviation(u.matrix()));
        return d;
    }

  private:
    PhysParams p_;
};

} // namespace orbilat
