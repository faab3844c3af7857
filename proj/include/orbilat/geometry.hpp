#pragma once

// Periodic (d+1)-dimensional lattice: one temporal extent n_t and d spatial
// extents. Sites are flattened row-major with time slowest, so the sites of
// one time slice are contiguous and a Polyakov line walks a fixed stride.
//
// Direction 0 is time; directions 1..d are the spatial axes.

#include <cstdint>
#include <limits>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace orbilat {

using Site = std::int64_t;

inline constexpr int time_dir = 0;

class LatticeShape {
  public:
    LatticeShape() = default;

    LatticeShape(int n_t, std::vector<int> n_s) : extents_{n_t} {
        if (n_s.empty()) throw ConfigError("lattice needs at least one spatial direction");
        extents_.insert(extents_.end(), n_s.begin(), n_s.end());
        std::int64_t v = 1;
        for (int e : extents_) {
            if (e < 2) {
                std::ostringstream os;
                os << "lattice extent " << e << " is below the minimum of 2";
                throw ConfigError(os.str());
            }
            if (v > std::numeric_limits<std::int32_t>::max() / e)
                throw ConfigError("lattice volume overflows the site index range");
            v *= e;
        }
        volume_ = v;
        strides_.assign(extents_.size(), 1);
        for (int mu = int(extents_.size()) - 2; mu >= 0; --mu)
            strides_[mu] = strides_[mu + 1] * extents_[mu + 1];
    }

    int spatial_dims() const { return int(extents_.size()) - 1; }
    int dims() const { return int(extents_.size()); }
    int n_t() const { return extents_[0]; }
    int extent(int mu) const { return extents_[mu]; }
    std::vector<int> spatial_extents() const { return {extents_.begin() + 1, extents_.end()}; }
    Site volume() const { return volume_; }
    Site spatial_volume() const { return volume_ / extents_[0]; }
    Site stride(int mu) const { return strides_[mu]; }

    int coordinate(Site s, int mu) const { return int((s / strides_[mu]) % extents_[mu]); }

    std::vector<int> coordinates(Site s) const {
        std::vector<int> x(extents_.size());
        for (int mu = 0; mu < dims(); ++mu) x[mu] = coordinate(s, mu);
        return x;
    }

    Site index(const std::vector<int>& x) const {
        Site s = 0;
        for (int mu = 0; mu < dims(); ++mu) {
            int c = x[mu] % extents_[mu];
            if (c < 0) c += extents_[mu];
            s += c * strides_[mu];
        }
        return s;
    }

    // Neighbour one step along mu (sign = +1 or -1), periodic in every direction.
    Site neighbor(Site s, int mu, int sign) const {
        const int e = extents_[mu];
        const int x = coordinate(s, mu);
        int y = x + sign;
        if (y >= e) y -= e;
        if (y < 0) y += e;
        return s + Site(y - x) * strides_[mu];
    }

    bool operator==(const LatticeShape&) const = default;

  private:
    std::vector<int> extents_;
    std::vector<Site> strides_;
    Site volume_ = 0;
};

// Precomputed forward/backward neighbour table, shared read-only by the
// action and force kernels.
class NeighborTable {
  public:
    explicit NeighborTable(const LatticeShape& shape)
        : dims_(shape.dims()), fwd_(shape.volume() * dims_), bwd_(shape.volume() * dims_) {
        for (Site s = 0; s < shape.volume(); ++s)
            for (int mu = 0; mu < dims_; ++mu) {
                fwd_[s * dims_ + mu] = shape.neighbor(s, mu, +1);
                bwd_[s * dims_ + mu] = shape.neighbor(s, mu, -1);
            }
    }

    Site up(Site s, int mu) const { return fwd_[s * dims_ + mu]; }
    Site down(Site s, int mu) const { return bwd_[s * dims_ + mu]; }

  private:
    int dims_;
    std::vector<Site> fwd_;
    std::vector<Site> bwd_;
};

} // namespace orbilat
