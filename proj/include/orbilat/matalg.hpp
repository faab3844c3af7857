#pragma once

// Fixed-size complex matrix algebra for SU(N) lattice fields.
//
// Matrix<N> is a plain value type (row-major, N*N complex entries).
// SpecialUnitary<N> and AlgebraElement<N> wrap a Matrix<N> and can only be
// produced by operations that land on the group / algebra, so a link or a
// momentum cannot silently pick up a non-unitary or non-traceless part.

#include <algorithm>
#include <array>
#include <cmath>
#include <complex>
#include <numbers>
#include <random>
#include <sstream>
#include <vector>

#include "errors.hpp"

namespace orbilat {

using Complex = std::complex<double>;

template <int N>
class Matrix {
    static_assert(N >= 2, "matrix size must be at least 2");

  public:
    static constexpr int size = N;

    constexpr Matrix() = default;

    static Matrix zero() { return Matrix{}; }
    static Matrix identity() {
        Matrix m;
        for (int i = 0; i < N; ++i) m(i, i) = 1.0;
        return m;
    }
    static Matrix scalar(Complex s) {
        Matrix m;
        for (int i = 0; i < N; ++i) m(i, i) = s;
        return m;
    }

    Complex& operator()(int r, int c) { return e_[r * N + c]; }
    const Complex& operator()(int r, int c) const { return e_[r * N + c]; }

    std::array<Complex, N * N>& data() { return e_; }
    const std::array<Complex, N * N>& data() const { return e_; }

    Matrix& operator+=(const Matrix& o) {
        for (int i = 0; i < N * N; ++i) e_[i] += o.e_[i];
        return *this;
    }
    Matrix& operator-=(const Matrix& o) {
        for (int i = 0; i < N * N; ++i) e_[i] -= o.e_[i];
        return *this;
    }
    Matrix& operator*=(double s) {
        for (auto& x : e_) x *= s;
        return *this;
    }
    Matrix& operator*=(Complex s) {
        for (auto& x : e_) x *= s;
        return *this;
    }

    bool operator==(const Matrix&) const = default;

  private:
    std::array<Complex, N * N> e_{};
};

template <int N>
Matrix<N> operator+(Matrix<N> a, const Matrix<N>& b) {
    return a += b;
}
template <int N>
Matrix<N> operator-(Matrix<N> a, const Matrix<N>& b) {
    return a -= b;
}
template <int N>
Matrix<N> operator-(Matrix<N> a) {
    return a *= -1.0;
}
template <int N>
Matrix<N> operator*(Matrix<N> a, double s) {
    return a *= s;
}
template <int N>
Matrix<N> operator*(double s, Matrix<N> a) {
    return a *= s;
}
template <int N>
Matrix<N> operator*(Matrix<N> a, Complex s) {
    return a *= s;
}
template <int N>
Matrix<N> operator*(Complex s, Matrix<N> a) {
    return a *= s;
}

// Product written out on real/imaginary parts: std::complex multiplication
// goes through the NaN-recovering slow path otherwise.
template <int N>
Matrix<N> operator*(const Matrix<N>& a, const Matrix<N>& b) {
    Matrix<N> r;
    for (int i = 0; i < N; ++i) {
        for (int k = 0; k < N; ++k) {
            double re = 0.0;
            double im = 0.0;
            for (int j = 0; j < N; ++j) {
                const Complex x = a(i, j);
                const Complex y = b(j, k);
                re += x.real() * y.real() - x.imag() * y.imag();
                im += x.real() * y.imag() + x.imag() * y.real();
            }
            r(i, k) = Complex(re, im);
        }
    }
    return r;
}

template <int N>
Matrix<N> dagger(const Matrix<N>& m) {
    Matrix<N> r;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) r(i, j) = std::conj(m(j, i));
    return r;
}

template <int N>
Matrix<N> transpose(const Matrix<N>& m) {
    Matrix<N> r;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) r(i, j) = m(j, i);
    return r;
}

template <int N>
Complex trace(const Matrix<N>& m) {
    Complex t = 0.0;
    for (int i = 0; i < N; ++i) t += m(i, i);
    return t;
}

// Re Tr(A B) without forming the product.
template <int N>
double re_trace_product(const Matrix<N>& a, const Matrix<N>& b) {
    double s = 0.0;
    for (int i = 0; i < N; ++i)
        for (int j = 0; j < N; ++j) {
            const Complex x = a(i, j);
            const Complex y = b(j, i);
            s += x.real() * y.real() - x.imag() * y.imag();
        }
    return s;
}

// Real inner product <A, B> = Re Tr(A B^dagger).
template <int N>
double inner(const Matrix<N>& a, const Matrix<N>& b) {
    double s = 0.0;
    for (int i = 0; i < N * N; ++i)
        s += a.data()[i].real() * b.data()[i].real() + a.data()[i].imag() * b.data()[i].imag();
    return s;
}

// Tr(M M^dagger), the squared Frobenius norm.
template <int N>
double norm2(const Matrix<N>& m) {
    return inner(m, m);
}

template <int N>
double max_abs(const Matrix<N>& m) {
    double r = 0.0;
    for (const auto& x : m.data()) r = std::max(r, std::abs(x));
    return r;
}

template <int N>
bool is_finite(const Matrix<N>& m) {
    for (const auto& x : m.data())
        if (!std::isfinite(x.real()) || !std::isfinite(x.imag())) return false;
    return true;
}

template <int N>
Complex det(const Matrix<N>& m) {
    if constexpr (N == 2) {
        return m(0, 0) * m(1, 1) - m(0, 1) * m(1, 0);
    } else if constexpr (N == 3) {
        return m(0, 0) * (m(1, 1) * m(2, 2) - m(1, 2) * m(2, 1)) -
               m(0, 1) * (m(1, 0) * m(2, 2) - m(1, 2) * m(2, 0)) +
               m(0, 2) * (m(1, 0) * m(2, 1) - m(1, 1) * m(2, 0));
    } else {
        // Gaussian elimination with partial pivoting.
        Matrix<N> a = m;
        Complex d = 1.0;
        for (int c = 0; c < N; ++c) {
            int p = c;
            for (int r = c + 1; r < N; ++r)
                if (std::abs(a(r, c)) > std::abs(a(p, c))) p = r;
            if (a(p, c) == Complex(0.0)) return 0.0;
            if (p != c) {
                for (int k = 0; k < N; ++k) std::swap(a(p, k), a(c, k));
                d = -d;
            }
            d *= a(c, c);
            for (int r = c + 1; r < N; ++r) {
                const Complex f = a(r, c) / a(c, c);
                for (int k = c; k < N; ++k) a(r, k) -= f * a(c, k);
            }
        }
        return d;
    }
}

// Classical adjugate, adj(Z) = cof(Z)^T, so that Z adj(Z) = det(Z) 1.
// Defined for singular Z as well.
template <int N>
Matrix<N> adjugate(const Matrix<N>& z) {
    Matrix<N> r;
    if constexpr (N == 2) {
        r(0, 0) = z(1, 1);
        r(0, 1) = -z(0, 1);
        r(1, 0) = -z(1, 0);
        r(1, 1) = z(0, 0);
    } else if constexpr (N == 3) {
        r(0, 0) = z(1, 1) * z(2, 2) - z(1, 2) * z(2, 1);
        r(0, 1) = z(0, 2) * z(2, 1) - z(0, 1) * z(2, 2);
        r(0, 2) = z(0, 1) * z(1, 2) - z(0, 2) * z(1, 1);
        r(1, 0) = z(1, 2) * z(2, 0) - z(1, 0) * z(2, 2);
        r(1, 1) = z(0, 0) * z(2, 2) - z(0, 2) * z(2, 0);
        r(1, 2) = z(0, 2) * z(1, 0) - z(0, 0) * z(1, 2);
        r(2, 0) = z(1, 0) * z(2, 1) - z(1, 1) * z(2, 0);
        r(2, 1) = z(0, 1) * z(2, 0) - z(0, 0) * z(2, 1);
        r(2, 2) = z(0, 0) * z(1, 1) - z(0, 1) * z(1, 0);
    } else {
        // Generic cofactor expansion through (N-1)x(N-1) minors.
        for (int i = 0; i < N; ++i) {
            for (int j = 0; j < N; ++j) {
                Matrix<N - 1> minor;
                for (int r0 = 0, rr = 0; r0 < N; ++r0) {
                    if (r0 == i) continue;
                    for (int c0 = 0, cc = 0; c0 < N; ++c0) {
                        if (c0 == j) continue;
                        minor(rr, cc++) = z(r0, c0);
                    }
                    ++rr;
                }
                const double sign = ((i + j) % 2 == 0) ? 1.0 : -1.0;
                r(j, i) = sign * det(minor);
            }
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// Hermitian eigendecomposition: H = V diag(values) V^dagger, cyclic Jacobi.
// For N = 2 a single rotation diagonalises exactly, which is the closed form.

template <int N>
struct HermitianEigen {
    std::array<double, N> values{};
    Matrix<N> vectors;  // columns are eigenvectors
};

template <int N>
HermitianEigen<N> hermitian_eigen(const Matrix<N>& h_in) {
    Matrix<N> h = h_in;
    Matrix<N> v = Matrix<N>::identity();

    double scale = 0.0;
    for (const auto& x : h.data()) scale += std::norm(x);
    scale = std::sqrt(scale);
    const double tol = 1e-15 * scale;

    auto off_norm = [&] {
        double s = 0.0;
        for (int p = 0; p < N; ++p)
            for (int q = p + 1; q < N; ++q) s += std::norm(h(p, q));
        return std::sqrt(2.0 * s);
    };

    for (int sweep = 0; sweep < 50 && scale > 0.0 && off_norm() > tol; ++sweep) {
        for (int p = 0; p < N - 1; ++p) {
            for (int q = p + 1; q < N; ++q) {
                const double b = std::abs(h(p, q));
                if (b <= 1e-300) continue;
                // Phase rotation makes the (p,q) element real and positive,
                // then a real Jacobi rotation zeroes it.
                const Complex phase = std::conj(h(p, q)) / b;
                const double app = h(p, p).real();
                const double aqq = h(q, q).real();
                const double theta = (aqq - app) / (2.0 * b);
                const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                // Local unitary G on (p,q): columns [c, -s*phase], [s, c*phase].
                const Complex gpp = c;
                const Complex gpq = s;
                const Complex gqp = -s * phase;
                const Complex gqq = c * phase;
                // h <- G^dagger h G
                for (int k = 0; k < N; ++k) {
                    const Complex hkp = h(k, p);
                    const Complex hkq = h(k, q);
                    h(k, p) = hkp * gpp + hkq * gqp;
                    h(k, q) = hkp * gpq + hkq * gqq;
                }
                for (int k = 0; k < N; ++k) {
                    const Complex hpk = h(p, k);
                    const Complex hqk = h(q, k);
                    h(p, k) = std::conj(gpp) * hpk + std::conj(gqp) * hqk;
                    h(q, k) = std::conj(gpq) * hpk + std::conj(gqq) * hqk;
                }
                h(p, q) = 0.0;
                h(q, p) = 0.0;
                for (int k = 0; k < N; ++k) {
                    const Complex vkp = v(k, p);
                    const Complex vkq = v(k, q);
                    v(k, p) = vkp * gpp + vkq * gqp;
                    v(k, q) = vkp * gpq + vkq * gqq;
                }
            }
        }
    }

    HermitianEigen<N> r;
    for (int i = 0; i < N; ++i) r.values[i] = h(i, i).real();
    r.vectors = v;
    return r;
}

// V f(diag) V^dagger
template <int N, class F>
Matrix<N> hermitian_function(const HermitianEigen<N>& e, F&& f) {
    Matrix<N> r;
    for (int k = 0; k < N; ++k) {
        const double fk = f(e.values[k]);
        for (int i = 0; i < N; ++i) {
            const Complex vik = e.vectors(i, k) * fk;
            for (int j = 0; j < N; ++j) r(i, j) += vik * std::conj(e.vectors(j, k));
        }
    }
    return r;
}

// ---------------------------------------------------------------------------
// su(N): traceless anti-Hermitian matrices.

template <int N>
class AlgebraElement {
  public:
    static constexpr int dimension = N * N - 1;

    AlgebraElement() = default;

    // Traceless anti-Hermitian part (M - M^dagger)/2 - Tr(.)/N.
    static AlgebraElement project(const Matrix<N>& m) {
        AlgebraElement x;
        for (int i = 0; i < N; ++i)
            for (int j = 0; j < N; ++j) x.m_(i, j) = 0.5 * (m(i, j) - std::conj(m(j, i)));
        const Complex t = trace(x.m_) / double(N);
        for (int i = 0; i < N; ++i) x.m_(i, i) -= t;
        return x;
    }

    const Matrix<N>& matrix() const { return m_; }
    operator const Matrix<N>&() const { return m_; }

    AlgebraElement& operator+=(const AlgebraElement& o) {
        m_ += o.m_;
        return *this;
    }
    AlgebraElement& operator-=(const AlgebraElement& o) {
        m_ -= o.m_;
        return *this;
    }
    AlgebraElement& operator*=(double s) {
        m_ *= s;
        return *this;
    }
    friend AlgebraElement operator+(AlgebraElement a, const AlgebraElement& b) { return a += b; }
    friend AlgebraElement operator-(AlgebraElement a, const AlgebraElement& b) { return a -= b; }
    friend AlgebraElement operator-(AlgebraElement a) { return a *= -1.0; }
    friend AlgebraElement operator*(AlgebraElement a, double s) { return a *= s; }
    friend AlgebraElement operator*(double s, AlgebraElement a) { return a *= s; }
    bool operator==(const AlgebraElement&) const = default;

  private:
    Matrix<N> m_;
};

// Orthonormal basis T_a = i lambda_a / sqrt(2) built from generalised
// Gell-Mann matrices, normalised so that Tr(T_a T_b^dagger) = delta_ab.
template <int N>
const std::array<Matrix<N>, N * N - 1>& algebra_basis() {
    static const std::array<Matrix<N>, N * N - 1> basis = [] {
        std::array<Matrix<N>, N * N - 1> b{};
        const Complex i1(0.0, 1.0);
        const double inv_sqrt2 = 1.0 / std::sqrt(2.0);
        int a = 0;
        for (int j = 0; j < N; ++j) {
            for (int k = j + 1; k < N; ++k) {
                Matrix<N> sym;
                sym(j, k) = 1.0;
                sym(k, j) = 1.0;
                b[a++] = sym * (i1 * inv_sqrt2);
                Matrix<N> asym;
                asym(j, k) = Complex(0.0, -1.0);
                asym(k, j) = Complex(0.0, 1.0);
                b[a++] = asym * (i1 * inv_sqrt2);
            }
        }
        for (int l = 1; l < N; ++l) {
            Matrix<N> diag;
            const double norm = std::sqrt(2.0 / (l * (l + 1.0)));
            for (int j = 0; j < l; ++j) diag(j, j) = norm;
            diag(l, l) = -l * norm;
            b[a++] = diag * (i1 * inv_sqrt2);
        }
        return b;
    }();
    return basis;
}

// Real coordinates p_a = <X, T_a>.
template <int N>
std::array<double, N * N - 1> components(const AlgebraElement<N>& x) {
    std::array<double, N * N - 1> p{};
    const auto& basis = algebra_basis<N>();
    for (int a = 0; a < N * N - 1; ++a) p[a] = inner(x.matrix(), basis[a]);
    return p;
}

// Gaussian momentum: X = sum_a p_a T_a with p_a ~ N(0, 1), so that the
// kinetic energy is K = 1/2 sum_a p_a^2 = 1/2 <X, X>.
template <int N, class Rng>
AlgebraElement<N> random_algebra(Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const auto& basis = algebra_basis<N>();
    Matrix<N> m;
    for (int a = 0; a < N * N - 1; ++a) m += basis[a] * gauss(rng);
    return AlgebraElement<N>::project(m);
}

// ---------------------------------------------------------------------------
// SU(N) group elements.

template <int N>
class SpecialUnitary {
  public:
    SpecialUnitary() : m_(Matrix<N>::identity()) {}

    static SpecialUnitary identity() { return SpecialUnitary(); }

    // Wraps a matrix already known to be in SU(N) (e.g. a product of group
    // elements). No check is done; use reunitarize() for untrusted input.
    static SpecialUnitary assume(const Matrix<N>& m) {
        SpecialUnitary u;
        u.m_ = m;
        return u;
    }

    const Matrix<N>& matrix() const { return m_; }
    operator const Matrix<N>&() const { return m_; }

    friend SpecialUnitary operator*(const SpecialUnitary& a, const SpecialUnitary& b) {
        return assume(a.m_ * b.m_);
    }
    friend SpecialUnitary dagger(const SpecialUnitary& u) { return assume(dagger(u.m_)); }
    bool operator==(const SpecialUnitary&) const = default;

  private:
    Matrix<N> m_;
};

// max |U^dagger U - 1|
template <int N>
double unitarity_deviation(const Matrix<N>& u) {
    return max_abs(dagger(u) * u - Matrix<N>::identity());
}

// exp(s X) by scaling and squaring around a Taylor core.
template <int N>
SpecialUnitary<N> exp_algebra(const AlgebraElement<N>& x, double s = 1.0) {
    Matrix<N> a = x.matrix() * s;
    double norm = std::sqrt(norm2(a));  // Frobenius, submultiplicative
    if (!is_finite(a) || !std::isfinite(norm) || norm > 1e8) {
        std::ostringstream os;
        os << "exp_algebra: argument norm " << norm << " out of range";
        throw NumericalError(os.str());
    }
    int squarings = 0;
    while (norm > 0.25) {
        norm *= 0.5;
        ++squarings;
    }
    a *= std::ldexp(1.0, -squarings);

    // sum_{k<=order} a^k / k!, truncated once the next term is below 1e-17
    // (norm <= 0.25 needs at most 13). Paterson-Stockmeyer: Horner in a^4
    // over blocks of degree 3.
    int order = 1;
    for (double term = norm; term > 1e-17 && order < 18; ++order) term *= norm / (order + 1);
    std::array<double, 20> coef{};
    coef[0] = 1.0;
    for (int k = 1; k <= order; ++k) coef[k] = coef[k - 1] / k;
    std::array<Matrix<N>, 5> pw;
    pw[0] = Matrix<N>::identity();
    pw[1] = a;
    for (int k = 2; k <= std::min(order, 4); ++k) pw[k] = pw[k - 1] * a;
    auto block = [&](int i) {
        Matrix<N> b;
        for (int r = 0; r < 4 && 4 * i + r <= order; ++r) b += pw[r] * coef[4 * i + r];
        return b;
    };
    const int blocks = order / 4;
    Matrix<N> r = block(blocks);
    for (int i = blocks - 1; i >= 0; --i) r = r * pw[4] + block(i);
    for (int i = 0; i < squarings; ++i) r = r * r;
    return SpecialUnitary<N>::assume(r);
}

// Haar-random SU(N): Gram-Schmidt on a complex Gaussian matrix gives a Haar
// unitary; removing det^{1/N} keeps left invariance under SU(N).
template <int N, class Rng>
SpecialUnitary<N> random_special_unitary(Rng& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    Matrix<N> g;
    for (auto& x : g.data()) x = Complex(gauss(rng), gauss(rng));
    for (int c = 0; c < N; ++c) {
        for (int p = 0; p < c; ++p) {
            Complex proj = 0.0;
            for (int r = 0; r < N; ++r) proj += std::conj(g(r, p)) * g(r, c);
            for (int r = 0; r < N; ++r) g(r, c) -= proj * g(r, p);
        }
        double n = 0.0;
        for (int r = 0; r < N; ++r) n += std::norm(g(r, c));
        n = std::sqrt(n);
        for (int r = 0; r < N; ++r) g(r, c) /= n;
    }
    const Complex d = det(g);
    g *= std::polar(1.0, -std::arg(d) / N);
    return SpecialUnitary<N>::assume(g);
}

// Near-identity random element exp(eps X), X Gaussian in su(N).
template <int N, class Rng>
SpecialUnitary<N> random_near_identity(Rng& rng, double eps) {
    return exp_algebra(random_algebra<N>(rng), eps);
}

// ---------------------------------------------------------------------------
// Polar decomposition Z = sqrt(c) W U, W Hermitian positive definite,
// U unitary with unconstrained determinant phase.

template <int N>
struct PolarPair {
    Matrix<N> w;
    Matrix<N> u;
};

template <int N>
PolarPair<N> polar_decompose(const Matrix<N>& z, double c) {
    if (!(c > 0.0)) throw NumericalError("polar_decompose: c must be positive");
    const auto eig = hermitian_eigen(z * dagger(z));
    double lmin = eig.values[0];
    double lmax = eig.values[0];
    for (double l : eig.values) {
        lmin = std::min(lmin, l);
        lmax = std::max(lmax, l);
    }
    const double smax = std::sqrt(std::max(lmax, 0.0));
    const double smin = std::sqrt(std::max(lmin, 0.0));
    if (!(smax > 0.0) || !(smin > 1e-10 * smax) || !std::isfinite(smax)) {
        std::ostringstream os;
        os << "polar_decompose: near-singular matrix, smallest singular value " << smin
           << " (largest " << smax << ")";
        throw DecompositionError(os.str(), smin);
    }
    PolarPair<N> p;
    p.w = hermitian_function(eig, [c](double l) { return std::sqrt(l / c); });
    const Matrix<N> w_inv = hermitian_function(eig, [c](double l) { return std::sqrt(c / l); });
    p.u = w_inv * z * (1.0 / std::sqrt(c));
    return p;
}

// Projects a matrix within 1e-6 of U(N) back onto SU(N): polar projection
// followed by removal of the principal-branch det^{1/N} phase.
template <int N>
SpecialUnitary<N> reunitarize(const Matrix<N>& u, double tolerance = 1e-6) {
    const double dev = unitarity_deviation(u);
    if (!(dev <= tolerance)) {
        std::ostringstream os;
        os << "reunitarize: link drifted " << dev << " from the unitary manifold";
        throw DriftError(os.str(), dev);
    }
    const auto eig = hermitian_eigen(dagger(u) * u);
    Matrix<N> v = u * hermitian_function(eig, [](double l) { return 1.0 / std::sqrt(l); });
    const Complex d = det(v);
    v *= std::polar(1.0, -std::arg(d) / N);
    return SpecialUnitary<N>::assume(v);
}

} // namespace orbilat
