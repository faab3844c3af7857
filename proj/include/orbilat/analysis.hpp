#pragma once

// Binned jackknife errors and the weighted quadratic extrapolation in
// x = 1/m^2 to x = 0.

#include <array>
#include <cmath>
#include <functional>
#include <span>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace orbilat {

struct EnsembleEstimate {
    double mean = 0.0;
    double err = 0.0;
    int n_bins = 0;
    int bin_size = 0;
};

// Means of consecutive bins; a trailing partial bin is dropped.
inline std::vector<double> bin_means(std::span<const double> series, int bin_size) {
    if (bin_size < 1) throw InsufficientStatisticsError("bin size must be at least 1");
    const std::size_t n_bins = series.size() / std::size_t(bin_size);
    if (n_bins < 2) {
        std::ostringstream os;
        os << "insufficient statistics: " << series.size() << " samples with bin size " << bin_size
           << " give fewer than 2 bins";
        throw InsufficientStatisticsError(os.str());
    }
    std::vector<double> means(n_bins, 0.0);
    for (std::size_t b = 0; b < n_bins; ++b) {
        double s = 0.0;
        for (int i = 0; i < bin_size; ++i) s += series[b * bin_size + i];
        means[b] = s / bin_size;
    }
    return means;
}

// Jackknife over bins for a derived quantity f(<x_1>, ..., <x_k>) of several
// equally long series. The estimate is f of the full-sample means; the
// error is sqrt((n-1)/n sum_b (f_b - f_bar)^2) over leave-one-bin-out f_b.
inline EnsembleEstimate jackknife_derived(const std::vector<std::span<const double>>& series, int bin_size,
                                          const std::function<double(std::span<const double>)>& estimator) {
    if (series.empty()) throw InsufficientStatisticsError("no series given");
    std::vector<std::vector<double>> bins;
    for (const auto& s : series) {
        if (s.size() != series.front().size())
            throw InsufficientStatisticsError("series lengths differ");
        bins.push_back(bin_means(s, bin_size));
    }
    const std::size_t n = bins.front().size();
    const std::size_t k = bins.size();

    std::vector<double> totals(k, 0.0);
    for (std::size_t i = 0; i < k; ++i)
        for (double m : bins[i]) totals[i] += m;

    std::vector<double> full(k);
    for (std::size_t i = 0; i < k; ++i) full[i] = totals[i] / double(n);

    std::vector<double> loo(n);
    std::vector<double> args(k);
    double loo_mean = 0.0;
    for (std::size_t b = 0; b < n; ++b) {
        for (std::size_t i = 0; i < k; ++i) args[i] = (totals[i] - bins[i][b]) / double(n - 1);
        loo[b] = estimator(args);
        loo_mean += loo[b];
    }
    loo_mean /= double(n);
    double var = 0.0;
    for (double v : loo) var += (v - loo_mean) * (v - loo_mean);

    EnsembleEstimate e;
    e.mean = estimator(full);
    e.err = std::sqrt(double(n - 1) / double(n) * var);
    e.n_bins = int(n);
    e.bin_size = bin_size;
    return e;
}

inline EnsembleEstimate jackknife(std::span<const double> series, int bin_size) {
    return jackknife_derived({series}, bin_size, [](std::span<const double> m) { return m[0]; });
}

// <|P|^2> - <|P|>^2 with jackknife error.
inline EnsembleEstimate susceptibility(std::span<const double> abs_p, int bin_size) {
    std::vector<double> sq(abs_p.size());
    for (std::size_t i = 0; i < abs_p.size(); ++i) sq[i] = abs_p[i] * abs_p[i];
    return jackknife_derived({abs_p, std::span<const double>(sq)}, bin_size,
                             [](std::span<const double> m) { return m[1] - m[0] * m[0]; });
}

// Jackknife error as a function of bin size, for judging whether the error
// has reached its plateau.
inline std::vector<EnsembleEstimate> binning_report(std::span<const double> series, int max_bin_size) {
    std::vector<EnsembleEstimate> r;
    for (int b = 1; b <= max_bin_size && series.size() / std::size_t(b) >= 2; b *= 2) r.push_back(jackknife(series, b));
    return r;
}

// ---------------------------------------------------------------------------

struct FitPoint {
    double x = 0.0;
    double y = 0.0;
    double sigma = 1.0;
};

// y = a0 + a1 x + a2 x^2
struct FitResult {
    double a0 = 0.0;
    double a1 = 0.0;
    double a2 = 0.0;
    double a0_err = 0.0;
    double chi2_per_dof = 0.0;
    std::array<std::array<double, 3>, 3> covariance{};
    int n_points = 0;

    double at(double x) const { return a0 + a1 * x + a2 * x * x; }
};

// Weighted least squares through the normal equations. x is rescaled to
// [-1, 1] before forming them; the rescaling is undone on the coefficients
// and the covariance.
inline FitResult quad_extrapolate(const std::vector<FitPoint>& points) {
    if (points.size() < 4) {
        std::ostringstream os;
        os << "quadratic extrapolation needs at least 4 points, got " << points.size();
        throw InsufficientStatisticsError(os.str());
    }
    double scale = 0.0;
    for (const auto& pt : points) {
        if (!(pt.sigma > 0.0) || !std::isfinite(pt.sigma))
            throw SingularFitError("quadratic extrapolation: every sigma must be positive and finite");
        scale = std::max(scale, std::abs(pt.x));
    }
    if (!(scale > 0.0)) throw SingularFitError("quadratic extrapolation: all x are zero");

    double m[3][3] = {};
    double v[3] = {};
    for (const auto& pt : points) {
        const double u = pt.x / scale;
        const double w = 1.0 / (pt.sigma * pt.sigma);
        const double basis[3] = {1.0, u, u * u};
        for (int i = 0; i < 3; ++i) {
            v[i] += w * basis[i] * pt.y;
            for (int j = 0; j < 3; ++j) m[i][j] += w * basis[i] * basis[j];
        }
    }

    // Cholesky m = L L^T
    double l[3][3] = {};
    double max_diag = std::max({m[0][0], m[1][1], m[2][2]});
    for (int i = 0; i < 3; ++i) {
        for (int j = 0; j <= i; ++j) {
            double s = m[i][j];
            for (int k = 0; k < j; ++k) s -= l[i][k] * l[j][k];
            if (i == j) {
                if (!(s > 1e-12 * max_diag))
                    throw SingularFitError("quadratic extrapolation: rank-deficient design (fewer than 3 distinct x)");
                l[i][i] = std::sqrt(s);
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    // inverse of L, then cov = L^{-T} L^{-1}
    double li[3][3] = {};
    for (int i = 0; i < 3; ++i) {
        li[i][i] = 1.0 / l[i][i];
        for (int j = 0; j < i; ++j) {
            double s = 0.0;
            for (int k = j; k < i; ++k) s -= l[i][k] * li[k][j];
            li[i][j] = s / l[i][i];
        }
    }
    double cov[3][3] = {};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j)
            for (int k = std::max(i, j); k < 3; ++k) cov[i][j] += li[k][i] * li[k][j];

    double b[3] = {};
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) b[i] += cov[i][j] * v[j];

    FitResult r;
    const double unscale[3] = {1.0, 1.0 / scale, 1.0 / (scale * scale)};
    r.a0 = b[0];
    r.a1 = b[1] * unscale[1];
    r.a2 = b[2] * unscale[2];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 3; ++j) r.covariance[i][j] = cov[i][j] * unscale[i] * unscale[j];
    r.a0_err = std::sqrt(r.covariance[0][0]);

    double chi2 = 0.0;
    for (const auto& pt : points) {
        const double res = (pt.y - r.at(pt.x)) / pt.sigma;
        chi2 += res * res;
    }
    r.n_points = int(points.size());
    r.chi2_per_dof = chi2 / double(points.size() - 3);
    return r;
}

} // namespace orbilat
