#pragma once

#include <cmath>

namespace orbilat {

// Physical parameters shared by both actions. The coupling g2 has mass
// dimension 3 - d; a and a_t are the spatial and temporal spacings.
struct PhysParams {
    int n_colors = 2;
    int spatial_dims = 2;
    double g2 = 1.0;
    double a = 0.3;
    double a_t = 0.3;
    double m2 = 0.0;     // scalar (W) mass squared, orbifold only
    double m2_u1 = 0.0;  // U(1) mass squared, orbifold only

    // Magnitude of a frozen link: Z -> sqrt(c) U with c = a^{d-2} / (2 g^2).
    double c() const { return std::pow(a, spatial_dims - 2) / (2.0 * g2); }

    // Weight of a temporal plaquette in the Wilson action: c / a_t.
    double temporal_weight() const { return c() / a_t; }

    // Weight of a spatial plaquette: a_t a^{d-4} / (2 g^2).
    double spatial_weight() const { return a_t * std::pow(a, spatial_dims - 4) / (2.0 * g2); }

    double temperature(int n_t) const { return 1.0 / (n_t * a_t); }

    bool operator==(const PhysParams&) const = default;
};

} // namespace orbilat
