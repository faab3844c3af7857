#pragma once

// Orbifold lattice action: unconstrained complex N x N matrices Z_j on the
// spatial links (flat measure) and SU(N) temporal links U_t (Haar measure).
//
//   T1 = (1/a_t)              sum_{n,j}   Tr |U_t(n) Z_j(n+t) - Z_j(n) U_t(n+j)|^2
//   T2 = (g^2 a_t / 2a^d)     sum_n       Tr |sum_j (Z_j(n) Z_j(n)^+ - Z_j(n-j)^+ Z_j(n-j))|^2
//   T3 = (2 g^2 a_t / a^d)    sum_{n,j<k} Tr |Z_j(n) Z_k(n+j) - Z_k(n) Z_j(n+k)|^2
//   T4 = (m^2 g^2 a_t a^{2-d}/2)  sum_{n,j} Tr |Z_j(n) Z_j(n)^+ - c 1|^2
//   T5 = (m_U1^2 a_t a^{d-2}/2g^2) sum_{n,j} |c^{-N/2} det Z_j(n) - 1|^2
//
// with |M|^2 = M M^+ inside a trace.
//
// Force table (Wirtinger derivative D = dS/dZbar, S real so dS = 2 Re Tr(D dZ^+)):
//
//   A_j(n)    = U_t(n) Z_j(n+t) - Z_j(n) U_t(n+j)
//   B(n)      = sum_j Z_j(n) Z_j(n)^+ - Z_j(n-j)^+ Z_j(n-j)
//   C_jk(n)   = Z_j(n) Z_k(n+j) - Z_k(n) Z_j(n+k)          (C_kj = -C_jk)
//   E_j(n)    = Z_j(n) Z_j(n)^+ - c
//   f_j(n)    = c^{-N/2} det Z_j(n) - 1
//
//   D_T1 = k1 [ U_t(n-t)^+ A_j(n-t) - A_j(n) U_t(n+j)^+ ]
//   D_T2 = 2 k2 [ B(n) Z_j(n) - Z_j(n) B(n+j) ]
//   D_T3 = k3 sum_{k != j} [ C_jk(n) Z_k(n+j)^+ - Z_k(n-k)^+ C_jk(n-k) ]
//   D_T4 = 2 k4 E_j(n) Z_j(n)
//   D_T5 = k5 c^{-N/2} f_j(n) adj(Z_j(n))^+
//
// The temporal-link force comes from T1 only. Along U_t -> exp(eps X) U_t,
// dS/deps = Re Tr(X M) with
//   M(n) = 2 k1 sum_j [ U_t(n) Z_j(n+t) A_j(n)^+ - U_t(n) A_j(n-j)^+ Z_j(n-j) ]
// and the force is F = TA(M) (traceless anti-Hermitian part), dS/deps = -<F, X>.

#include <array>
#include <memory>
#include <vector>

#include "geometry.hpp"
#include "matalg.hpp"
#include "params.hpp"
#include "wilson.hpp"

namespace orbilat {

template <int N>
class OrbifoldConfig {
  public:
    OrbifoldConfig() = default;

    explicit OrbifoldConfig(const LatticeShape& shape)
        : shape_(shape),
          neighbors_(std::make_shared<const NeighborTable>(shape)),
          z_(shape.volume() * shape.spatial_dims()),
          ut_(shape.volume()) {}

    const LatticeShape& shape() const { return shape_; }
    const NeighborTable& neighbors() const { return *neighbors_; }
    int spatial_dims() const { return shape_.spatial_dims(); }

    // j = 1..d
    Matrix<N>& z(Site s, int j) { return z_[s * shape_.spatial_dims() + (j - 1)]; }
    const Matrix<N>& z(Site s, int j) const { return z_[s * shape_.spatial_dims() + (j - 1)]; }
    SpecialUnitary<N>& ut(Site s) { return ut_[s]; }
    const SpecialUnitary<N>& ut(Site s) const { return ut_[s]; }

    std::vector<Matrix<N>>& z_links() { return z_; }
    const std::vector<Matrix<N>>& z_links() const { return z_; }
    std::vector<SpecialUnitary<N>>& ut_links() { return ut_; }
    const std::vector<SpecialUnitary<N>>& ut_links() const { return ut_; }

    bool operator==(const OrbifoldConfig& o) const {
        return shape_ == o.shape_ && z_ == o.z_ && ut_ == o.ut_;
    }

  private:
    LatticeShape shape_;
    std::shared_ptr<const NeighborTable> neighbors_;
    std::vector<Matrix<N>> z_;
    std::vector<SpecialUnitary<N>> ut_;
};

// Which of the five terms enter the action and forces.
struct OrbifoldTerms {
    std::array<bool, 5> enabled{true, true, true, true, true};

    static OrbifoldTerms only(int term) {
        OrbifoldTerms t;
        t.enabled.fill(false);
        t.enabled[term - 1] = true;
        return t;
    }
    bool has(int term) const { return enabled[term - 1]; }
    bool operator==(const OrbifoldTerms&) const = default;
};

struct OrbifoldCoefficients {
    double k1, k2, k3, k4, k5, c, c_pow;  // c_pow = c^{-N/2}

    static OrbifoldCoefficients from(const PhysParams& p, int n_colors) {
        const int d = p.spatial_dims;
        const double ad = std::pow(p.a, d);
        OrbifoldCoefficients k{};
        k.c = p.c();
        k.k1 = 1.0 / p.a_t;
        k.k2 = p.g2 * p.a_t / (2.0 * ad);
        k.k3 = 2.0 * p.g2 * p.a_t / ad;
        k.k4 = p.m2 * p.g2 * p.a_t * std::pow(p.a, 2 - d) / 2.0;
        k.k5 = p.m2_u1 * p.a_t * std::pow(p.a, d - 2) / (2.0 * p.g2);
        k.c_pow = std::pow(k.c, -0.5 * n_colors);
        return k;
    }
};

struct OrbifoldActionTerms {
    std::array<double, 5> t{};
    double total() const { return t[0] + t[1] + t[2] + t[3] + t[4]; }
};

namespace detail {

template <int N>
Matrix<N> hopping_mismatch(const OrbifoldConfig<N>& cfg, Site n, int j) {
    const auto& nb = cfg.neighbors();
    return cfg.ut(n).matrix() * cfg.z(nb.up(n, time_dir), j) - cfg.z(n, j) * cfg.ut(nb.up(n, j)).matrix();
}

template <int N>
Matrix<N> moment_sum(const OrbifoldConfig<N>& cfg, Site n) {
    const auto& nb = cfg.neighbors();
    Matrix<N> b;
    for (int j = 1; j <= cfg.spatial_dims(); ++j) {
        const Matrix<N>& z = cfg.z(n, j);
        const Matrix<N>& zb = cfg.z(nb.down(n, j), j);
        b += z * dagger(z) - dagger(zb) * zb;
    }
    return b;
}

template <int N>
Matrix<N> plaquette_mismatch(const OrbifoldConfig<N>& cfg, Site n, int j, int k) {
    const auto& nb = cfg.neighbors();
    return cfg.z(n, j) * cfg.z(nb.up(n, j), k) - cfg.z(n, k) * cfg.z(nb.up(n, k), j);
}

} // namespace detail

template <int N>
OrbifoldActionTerms orbifold_action_terms(const OrbifoldConfig<N>& cfg, const PhysParams& p,
                                          const OrbifoldTerms& terms = {}) {
    const auto k = OrbifoldCoefficients::from(p, N);
    const int d = cfg.spatial_dims();
    const Matrix<N> c1 = Matrix<N>::scalar(k.c);
    OrbifoldActionTerms r;
    for (Site n = 0; n < cfg.shape().volume(); ++n) {
        for (int j = 1; j <= d; ++j) {
            if (terms.has(1)) r.t[0] += norm2(detail::hopping_mismatch(cfg, n, j));
            if (terms.has(3))
                for (int l = j + 1; l <= d; ++l) r.t[2] += norm2(detail::plaquette_mismatch(cfg, n, j, l));
            const Matrix<N>& z = cfg.z(n, j);
            if (terms.has(4)) r.t[3] += norm2(z * dagger(z) - c1);
            if (terms.has(5)) r.t[4] += std::norm(k.c_pow * det(z) - 1.0);
        }
        if (terms.has(2)) r.t[1] += norm2(detail::moment_sum(cfg, n));
    }
    r.t[0] *= k.k1;
    r.t[1] *= k.k2;
    r.t[2] *= k.k3;
    r.t[3] *= k.k4;
    r.t[4] *= k.k5;
    return r;
}

template <int N>
double orbifold_action(const OrbifoldConfig<N>& cfg, const PhysParams& p, const OrbifoldTerms& terms = {}) {
    return orbifold_action_terms(cfg, p, terms).total();
}

// dS/dZbar for every spatial link, indexed like OrbifoldConfig::z_links().
template <int N>
std::vector<Matrix<N>> orbifold_force_z(const OrbifoldConfig<N>& cfg, const PhysParams& p,
                                        const OrbifoldTerms& terms = {}) {
    const auto k = OrbifoldCoefficients::from(p, N);
    const auto& nb = cfg.neighbors();
    const int d = cfg.spatial_dims();
    const Site vol = cfg.shape().volume();
    std::vector<Matrix<N>> force(vol * d);

    if (terms.has(1)) {
        std::vector<Matrix<N>> a(vol * d);
        for (Site n = 0; n < vol; ++n)
            for (int j = 1; j <= d; ++j) a[n * d + j - 1] = detail::hopping_mismatch(cfg, n, j);
        for (Site n = 0; n < vol; ++n) {
            const Site n_mt = nb.down(n, time_dir);
            for (int j = 1; j <= d; ++j) {
                force[n * d + j - 1] += (dagger(cfg.ut(n_mt).matrix()) * a[n_mt * d + j - 1] -
                                         a[n * d + j - 1] * dagger(cfg.ut(nb.up(n, j)).matrix())) *
                                        k.k1;
            }
        }
    }

    if (terms.has(2)) {
        std::vector<Matrix<N>> b(vol);
        for (Site n = 0; n < vol; ++n) b[n] = detail::moment_sum(cfg, n);
        for (Site n = 0; n < vol; ++n)
            for (int j = 1; j <= d; ++j) {
                const Matrix<N>& z = cfg.z(n, j);
                force[n * d + j - 1] += (b[n] * z - z * b[nb.up(n, j)]) * (2.0 * k.k2);
            }
    }

    if (terms.has(3) && d >= 2) {
        // C_jk for j < k, stored per site
        const int pairs = d * (d - 1) / 2;
        auto pair_index = [d](int j, int l) {
            // j < l, 1-based
            int idx = 0;
            for (int a = 1; a < j; ++a) idx += d - a;
            return idx + (l - j - 1);
        };
        std::vector<Matrix<N>> cm(vol * pairs);
        for (Site n = 0; n < vol; ++n)
            for (int j = 1; j <= d; ++j)
                for (int l = j + 1; l <= d; ++l)
                    cm[n * pairs + pair_index(j, l)] = detail::plaquette_mismatch(cfg, n, j, l);
        auto c_at = [&](Site n, int j, int l) -> Matrix<N> {
            return j < l ? cm[n * pairs + pair_index(j, l)] : -cm[n * pairs + pair_index(l, j)];
        };
        for (Site n = 0; n < vol; ++n)
            for (int j = 1; j <= d; ++j) {
                Matrix<N> acc;
                for (int l = 1; l <= d; ++l) {
                    if (l == j) continue;
                    const Site n_ml = nb.down(n, l);
                    acc += c_at(n, j, l) * dagger(cfg.z(nb.up(n, j), l));
                    acc -= dagger(cfg.z(n_ml, l)) * c_at(n_ml, j, l);
                }
                force[n * d + j - 1] += acc * k.k3;
            }
    }

    if (terms.has(4) || terms.has(5)) {
        const Matrix<N> c1 = Matrix<N>::scalar(k.c);
        for (Site n = 0; n < vol; ++n)
            for (int j = 1; j <= d; ++j) {
                const Matrix<N>& z = cfg.z(n, j);
                if (terms.has(4)) force[n * d + j - 1] += (z * dagger(z) - c1) * z * (2.0 * k.k4);
                if (terms.has(5)) {
                    const Complex f = k.c_pow * det(z) - 1.0;
                    force[n * d + j - 1] += dagger(adjugate(z)) * (k.k5 * k.c_pow * f);
                }
            }
    }
    return force;
}

// Force F = -grad S on the temporal links (T1 only), same convention as
// wilson_force: dS/deps = -<F, X> along U_t -> exp(eps X) U_t.
template <int N>
std::vector<AlgebraElement<N>> orbifold_force_ut(const OrbifoldConfig<N>& cfg, const PhysParams& p,
                                                 const OrbifoldTerms& terms = {}) {
    const Site vol = cfg.shape().volume();
    std::vector<AlgebraElement<N>> force(vol);
    if (!terms.has(1)) return force;
    const auto k = OrbifoldCoefficients::from(p, N);
    const auto& nb = cfg.neighbors();
    const int d = cfg.spatial_dims();
    for (Site n = 0; n < vol; ++n) {
        const Matrix<N>& ut = cfg.ut(n).matrix();
        const Site n_t = nb.up(n, time_dir);
        Matrix<N> m;
        for (int j = 1; j <= d; ++j) {
            const Site n_mj = nb.down(n, j);
            m += cfg.z(n_t, j) * dagger(detail::hopping_mismatch(cfg, n, j));
            m -= dagger(detail::hopping_mismatch(cfg, n_mj, j)) * cfg.z(n_mj, j);
        }
        force[n] = AlgebraElement<N>::project(ut * m) * (2.0 * k.k1);
    }
    return force;
}

// Infinite-mass embedding of a Wilson configuration: Z_j = sqrt(c) U_j, U_t copied.
template <int N>
OrbifoldConfig<N> frozen_reduce(const WilsonConfig<N>& w, const PhysParams& p) {
    OrbifoldConfig<N> o(w.shape());
    const double sc = std::sqrt(p.c());
    for (Site n = 0; n < w.shape().volume(); ++n) {
        o.ut(n) = w.link(n, time_dir);
        for (int j = 1; j <= o.spatial_dims(); ++j) o.z(n, j) = w.link(n, j).matrix() * sc;
    }
    return o;
}

// Z_j(n) = sqrt(c) 1, U_t = 1: the global minimum S = 0.
template <int N>
OrbifoldConfig<N> identity_orbifold_config(const LatticeShape& shape, const PhysParams& p) {
    return frozen_reduce(WilsonConfig<N>(shape), p);
}

// Z_j(n) -> Omega(n) Z_j(n) Omega(n+j)^+, U_t(n) -> Omega(n) U_t(n) Omega(n+t)^+
template <int N>
OrbifoldConfig<N> gauge_transform(const OrbifoldConfig<N>& cfg, const std::vector<SpecialUnitary<N>>& omega) {
    OrbifoldConfig<N> r = cfg;
    const auto& nb = cfg.neighbors();
    for (Site n = 0; n < cfg.shape().volume(); ++n) {
        r.ut(n) = omega[n] * cfg.ut(n) * dagger(omega[nb.up(n, time_dir)]);
        for (int j = 1; j <= cfg.spatial_dims(); ++j)
            r.z(n, j) = omega[n].matrix() * cfg.z(n, j) * dagger(omega[nb.up(n, j)].matrix());
    }
    return r;
}

template <int N>
OrbifoldConfig<N> center_transform(const OrbifoldConfig<N>& cfg, int t0, int k = 1) {
    OrbifoldConfig<N> r = cfg;
    const Complex z = std::polar(1.0, 2.0 * std::numbers::pi * k / N);
    for (Site n = 0; n < cfg.shape().volume(); ++n)
        if (cfg.shape().coordinate(n, time_dir) == t0)
            r.ut(n) = SpecialUnitary<N>::assume(cfg.ut(n).matrix() * z);
    return r;
}

template <int N>
OrbifoldConfig<N> translate(const OrbifoldConfig<N>& cfg, int mu) {
    OrbifoldConfig<N> r = cfg;
    for (Site n = 0; n < cfg.shape().volume(); ++n) {
        const Site src = cfg.neighbors().down(n, mu);
        r.ut(n) = cfg.ut(src);
        for (int j = 1; j <= cfg.spatial_dims(); ++j) r.z(n, j) = cfg.z(src, j);
    }
    return r;
}

// Phase space: complex momenta P conjugate to Z with K = sum Tr(P^+ P),
// plus su(N) momenta for U_t with K = 1/2 <pi, pi>. The flow is
// dZ/dtau = P, dP/dtau = -dS/dZbar, which conserves H = K + S.
template <int N>
struct OrbifoldMomenta {
    std::vector<Matrix<N>> z;
    std::vector<AlgebraElement<N>> ut;
    bool operator==(const OrbifoldMomenta&) const = default;
};

template <int N>
class OrbifoldTheory {
  public:
    using State = OrbifoldConfig<N>;
    using Momenta = OrbifoldMomenta<N>;

    OrbifoldTheory(PhysParams p, OrbifoldTerms terms = {}) : p_(p), terms_(terms) {}
    const PhysParams& params() const { return p_; }
    const OrbifoldTerms& terms() const { return terms_; }

    // exp(-Tr P^+ P): real and imaginary parts of each entry ~ N(0, 1/2).
    template <class Rng>
    Momenta refresh(const State& s, Rng& rng) const {
        Momenta m;
        m.z.resize(s.z_links().size());
        std::normal_distribution<double> gauss(0.0, std::sqrt(0.5));
        for (auto& x : m.z)
            for (auto& e : x.data()) {
                const double re = gauss(rng);
                const double im = gauss(rng);
                e = Complex(re, im);
            }
        m.ut.resize(s.ut_links().size());
        for (auto& x : m.ut) x = random_algebra<N>(rng);
        return m;
    }

    double kinetic(const Momenta& m) const {
        double k = 0.0;
        for (const auto& x : m.z) k += norm2(x);
        for (const auto& x : m.ut) k += 0.5 * norm2(x.matrix());
        return k;
    }

    double action(const State& s) const { return orbifold_action(s, p_, terms_); }

    void kick(const State& s, Momenta& m, double dt) const {
        const auto fz = orbifold_force_z(s, p_, terms_);
        const auto fu = orbifold_force_ut(s, p_, terms_);
        const int d = s.spatial_dims();
        for (std::size_t i = 0; i < m.z.size(); ++i) {
            if (!is_finite(fz[i]))
                throw NumericalError("non-finite orbifold Z force at site " + std::to_string(i / d) +
                                     " direction " + std::to_string(i % d + 1));
            m.z[i] -= fz[i] * dt;
        }
        for (std::size_t i = 0; i < m.ut.size(); ++i) {
            if (!is_finite(fu[i].matrix()))
                throw NumericalError("non-finite orbifold U_t force at site " + std::to_string(i));
            m.ut[i] += fu[i] * dt;
        }
    }

    void drift(State& s, const Momenta& m, double dt) const {
        auto& z = s.z_links();
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += m.z[i] * dt;
        auto& ut = s.ut_links();
        for (std::size_t i = 0; i < ut.size(); ++i) ut[i] = exp_algebra(m.ut[i], dt) * ut[i];
    }

    void negate(Momenta& m) const {
        for (auto& x : m.z) x = -x;
        for (auto& x : m.ut) x = -x;
    }

    void reunitarize_links(State& s) const {
        for (auto& u : s.ut_links()) u = reunitarize(u.matrix());
    }

    double drift_from_group(const State& s) const {
        double d = 0.0;
        for (const auto& u : s.ut_links()) d = std::max(d, unitarity_deviation(u.matrix()));
        return d;
    }

  private:
    PhysParams p_;
    OrbifoldTerms terms_;
};

} // namespace orbilat
