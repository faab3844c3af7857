#pragma once

// Measurement channels. Plaquette traces are unnormalised (Tr, not Tr/N);
// the Polyakov loop carries the 1/N.

#include <cmath>
#include <complex>
#include <vector>

#include "matalg.hpp"
#include "orbifold.hpp"
#include "wilson.hpp"

namespace orbilat {

struct ObservableSnapshot {
    double plaq_z = 0.0;           // <Re Tr Z_1 Z_2 Z_1^+ Z_2^+>
    double plaq_u_spatial = 0.0;   // <Re Tr U U U^+ U^+>_spatial
    double plaq_u_temporal = 0.0;  // <Re Tr U U U^+ U^+>_temporal
    double tr_w_dev = 0.0;         // <Tr (W - 1)^2>
    double re_det_u = 1.0;
    double im_det_u = 0.0;
    double re_p = 0.0;
    double im_p = 0.0;
    double abs_p = 0.0;
};

struct Plaquettes {
    double plaq_z = 0.0;
    double plaq_u_spatial = 0.0;
    double plaq_u_temporal = 0.0;
};

namespace detail {

// Averages of Re Tr over spatial planes and temporal planes of any link
// field given as accessors spatial(n, j), temporal(n).
template <int N, class SpatialLink, class TemporalLink>
std::pair<double, double> plaquette_averages(const LatticeShape& shape, const NeighborTable& nb,
                                             SpatialLink&& spatial, TemporalLink&& temporal) {
    const int d = shape.spatial_dims();
    double s_sum = 0.0;
    double t_sum = 0.0;
    for (Site n = 0; n < shape.volume(); ++n) {
        for (int j = 1; j <= d; ++j) {
            for (int k = j + 1; k <= d; ++k)
                s_sum += trace(spatial(n, j) * spatial(nb.up(n, j), k) * dagger(spatial(nb.up(n, k), j)) *
                               dagger(spatial(n, k)))
                             .real();
            t_sum += trace(temporal(n) * spatial(nb.up(n, time_dir), j) * dagger(temporal(nb.up(n, j))) *
                           dagger(spatial(n, j)))
                         .real();
        }
    }
    const double planes = d * (d - 1) / 2.0;
    const double vol = double(shape.volume());
    return {planes > 0 ? s_sum / (vol * planes) : 0.0, t_sum / (vol * d)};
}

} // namespace detail

// For a Wilson configuration plaq_z is reported as c^2 * plaq_u_spatial,
// the value a frozen orbifold configuration would give.
template <int N>
Plaquettes plaquettes(const WilsonConfig<N>& cfg, const PhysParams& p) {
    auto [s, t] = detail::plaquette_averages<N>(
        cfg.shape(), cfg.neighbors(), [&](Site n, int j) -> const Matrix<N>& { return cfg.link(n, j).matrix(); },
        [&](Site n) -> const Matrix<N>& { return cfg.link(n, time_dir).matrix(); });
    const double c = p.c();
    return {c * c * s, s, t};
}

// Unitary parts U_j of every spatial link via Z = sqrt(c) W U. Throws
// DecompositionError on a near-singular link.
template <int N>
std::vector<PolarPair<N>> polar_parts(const OrbifoldConfig<N>& cfg, const PhysParams& p) {
    std::vector<PolarPair<N>> parts;
    parts.reserve(cfg.z_links().size());
    const double c = p.c();
    for (const auto& z : cfg.z_links()) parts.push_back(polar_decompose(z, c));
    return parts;
}

template <int N>
Plaquettes plaquettes(const OrbifoldConfig<N>& cfg, const PhysParams&, const std::vector<PolarPair<N>>& parts) {
    const int d = cfg.spatial_dims();
    Plaquettes r;
    auto [s, t] = detail::plaquette_averages<N>(
        cfg.shape(), cfg.neighbors(), [&](Site n, int j) -> const Matrix<N>& { return parts[n * d + j - 1].u; },
        [&](Site n) -> const Matrix<N>& { return cfg.ut(n).matrix(); });
    r.plaq_u_spatial = s;
    r.plaq_u_temporal = t;
    auto [sz, tz] = detail::plaquette_averages<N>(
        cfg.shape(), cfg.neighbors(), [&](Site n, int j) -> const Matrix<N>& { return cfg.z(n, j); },
        [&](Site n) -> const Matrix<N>& { return cfg.ut(n).matrix(); });
    (void)tz;
    r.plaq_z = sz;
    return r;
}

template <int N>
Plaquettes plaquettes(const OrbifoldConfig<N>& cfg, const PhysParams& p) {
    return plaquettes(cfg, p, polar_parts(cfg, p));
}

// P = (1/V_s) sum_x (1/N) Tr prod_t U_t(t, x)
template <int N>
Complex polyakov_loop(const LatticeShape& shape, const std::vector<SpecialUnitary<N>>& temporal_links,
                      std::size_t link_stride, std::size_t link_offset) {
    const Site vs = shape.spatial_volume();
    const Site t_stride = shape.stride(time_dir);
    Complex sum = 0.0;
    for (Site x = 0; x < vs; ++x) {
        Matrix<N> line = Matrix<N>::identity();
        for (int t = 0; t < shape.n_t(); ++t)
            line = line * temporal_links[(x + t * t_stride) * link_stride + link_offset].matrix();
        sum += trace(line);
    }
    return sum / (double(N) * double(vs));
}

template <int N>
Complex polyakov(const WilsonConfig<N>& cfg) {
    return polyakov_loop<N>(cfg.shape(), cfg.links(), cfg.shape().dims(), time_dir);
}

template <int N>
Complex polyakov(const OrbifoldConfig<N>& cfg) {
    return polyakov_loop<N>(cfg.shape(), cfg.ut_links(), 1, 0);
}

struct WAndDet {
    double tr_w_dev = 0.0;
    Complex det_u = 1.0;
};

template <int N>
WAndDet w_and_det(const std::vector<PolarPair<N>>& parts) {
    WAndDet r;
    r.det_u = 0.0;
    const Matrix<N> one = Matrix<N>::identity();
    for (const auto& pp : parts) {
        const Matrix<N> dev = pp.w - one;
        r.tr_w_dev += trace(dev * dev).real();
        r.det_u += det(pp.u);
    }
    r.tr_w_dev /= double(parts.size());
    r.det_u /= double(parts.size());
    return r;
}

template <int N>
WAndDet w_and_det(const OrbifoldConfig<N>& cfg, const PhysParams& p) {
    return w_and_det(polar_parts(cfg, p));
}

template <int N>
ObservableSnapshot measure(const WilsonConfig<N>& cfg, const PhysParams& p) {
    ObservableSnapshot s;
    const auto pl = plaquettes(cfg, p);
    s.plaq_z = pl.plaq_z;
    s.plaq_u_spatial = pl.plaq_u_spatial;
    s.plaq_u_temporal = pl.plaq_u_temporal;
    const Complex poly = polyakov(cfg);
    s.re_p = poly.real();
    s.im_p = poly.imag();
    s.abs_p = std::abs(poly);
    return s;
}

// Throws DecompositionError when any Z link is too close to singular; the
// caller drops the configuration from the averages.
template <int N>
ObservableSnapshot measure(const OrbifoldConfig<N>& cfg, const PhysParams& p) {
    const auto parts = polar_parts(cfg, p);
    ObservableSnapshot s;
    const auto pl = plaquettes(cfg, p, parts);
    s.plaq_z = pl.plaq_z;
    s.plaq_u_spatial = pl.plaq_u_spatial;
    s.plaq_u_temporal = pl.plaq_u_temporal;
    const auto wd = w_and_det(parts);
    s.tr_w_dev = wd.tr_w_dev;
    s.re_det_u = wd.det_u.real();
    s.im_det_u = wd.det_u.imag();
    const Complex poly = polyakov(cfg);
    s.re_p = poly.real();
    s.im_p = poly.imag();
    s.abs_p = std::abs(poly);
    return s;
}

} // namespace orbilat
