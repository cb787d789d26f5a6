#pragma once

// Quadratic vector equations x = a + B(x (x) x) attached to Markovian
// binary trees: construction from rate data, validation of the
// probabilistic structure, and sub/super/critical classification.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mbtq/linalg.hpp"

namespace mbtq {

/// The pair (a, B) defining x = a + B(x (x) x) in dimension n.
///
/// a[i] is the probability that an individual in phase i dies without
/// offspring; B(i, n*j + k) the probability that it eventually produces a
/// child in phase j while switching itself to phase k.
struct Qve {
    std::size_t n = 0;
    Vector a;   // length n
    Matrix B;   // n x n^2

    Qve() = default;
    Qve(Vector a_, Matrix B_) : n(a_.size()), a(std::move(a_)), B(std::move(B_)) {
        if (B.rows() != n || B.cols() != n * n)
            throw InvalidDimension("Qve: B must be n x n^2");
    }

    /// Scalar convenience: x = a + b x^2.
    static Qve scalar(double a0, double b0) {
        Matrix b(1, 1);
        b(0, 0) = b0;
        return Qve(Vector{a0}, b);
    }
};

/// Raw continuous-time rate data from which a Qve is built.
struct MbtRates {
    std::size_t n = 0;
    Matrix D0;      // hidden-transition generator part
    Vector D1_diag; // birth rates (diagonal)
    Vector death;   // death rates
    Matrix P0;      // parent post-birth phase, row-stochastic
    Matrix P1;      // child phase, row-stochastic
};

enum class Regime { Subcritical, Critical, Supercritical };

inline const char* to_string(Regime r) {
    switch (r) {
        case Regime::Subcritical: return "subcritical";
        case Regime::Critical: return "critical";
        default: return "supercritical";
    }
}

struct Classification {
    double rho_R = 0.0;
    Regime regime = Regime::Critical;
    bool positive_regular = false;
};

/// One violated model property, reported rather than thrown.
struct Diagnostic {
    std::string property;  // "entry-range" or "row-sum"
    std::size_t index;     // flattened offending index
    double magnitude;      // how far outside the allowed set
};

/// Checks that all entries of a and B lie in [0, 1] (exactly) and that
/// a + B(e (x) e) = e within tol. Returns one diagnostic per violation.
inline std::vector<Diagnostic> validate_mbt(const Qve& q, double tol) {
    std::vector<Diagnostic> out;
    for (std::size_t i = 0; i < q.n; ++i) {
        const double v = q.a[i];
        if (v < 0.0 || v > 1.0)
            out.push_back({"entry-range", i, v < 0.0 ? -v : v - 1.0});
    }
    for (std::size_t i = 0; i < q.B.data().size(); ++i) {
        const double v = q.B.data()[i];
        if (v < 0.0 || v > 1.0)
            out.push_back({"entry-range", q.n + i, v < 0.0 ? -v : v - 1.0});
    }
    const Vector mass = apply_bilinear(q.B, ones(q.n), ones(q.n));
    for (std::size_t i = 0; i < q.n; ++i) {
        const double dev = q.a[i] + mass[i] - 1.0;
        if (std::abs(dev) > tol) out.push_back({"row-sum", i, std::abs(dev)});
    }
    return out;
}

/// Mean-offspring matrix B(I (x) e + e (x) I); entry (i, j) is the mean
/// number of phase-j offspring-plus-continuations per phase-i individual.
inline Matrix offspring_matrix(const Qve& q) {
    return mixed_operator(q.B, ones(q.n), ones(q.n));
}

inline Classification classify(const Qve& q, double crit_tol = 1e-12, const Tolerances& tol = {}) {
    const Matrix r = offspring_matrix(q);
    Classification c;
    c.rho_R = spectral_radius(r, tol);
    if (std::abs(c.rho_R - 1.0) <= crit_tol)
        c.regime = Regime::Critical;
    else
        c.regime = c.rho_R > 1.0 ? Regime::Supercritical : Regime::Subcritical;
    c.positive_regular = is_irreducible(r);
    return c;
}

/// Builds the QVE a = -D0^{-1} d, B = -D0^{-1} Rrate with the birth-rate
/// tensor Rrate[i][n*j+k] = D1[i] * P1[i][j] * P0[i][k].
///
/// Row sums of Rrate equal D1 e, so a + B(e (x) e) = -D0^{-1}(death + D1 e)
/// = e holds to linear-solve accuracy by construction. Entries within
/// 1e-15 outside [0, 1] (rounding from the solves) are clamped; entries
/// below -1e-12 are rejected.
inline Qve from_rates(const MbtRates& m, const Tolerances& tol = {}) {
    const std::size_t n = m.n;
    if (m.D0.rows() != n || m.D0.cols() != n || m.D1_diag.size() != n ||
        m.death.size() != n || m.P0.rows() != n || m.P0.cols() != n ||
        m.P1.rows() != n || m.P1.cols() != n)
        throw InvalidDimension("from_rates: inconsistent dimensions");

    Matrix neg_d0 = scale(m.D0, -1.0);
    LuFactorization lu(neg_d0, tol);
    Vector a = lu.solve(m.death);

    Matrix b(n, n * n);
    Vector rhs(n), col(n);
    for (std::size_t j = 0; j < n; ++j) {
        for (std::size_t k = 0; k < n; ++k) {
            for (std::size_t i = 0; i < n; ++i) rhs[i] = m.D1_diag[i] * m.P1(i, j) * m.P0(i, k);
            col = lu.solve(rhs);
            for (std::size_t i = 0; i < n; ++i) b(i, n * j + k) = col[i];
        }
    }

    auto clamp_entry = [](double& v) {
        if (v < -1e-12)
            throw InvalidRates("from_rates: negative probability beyond tolerance");
        if (v < 0.0 && v >= -1e-15) v = 0.0;
        if (v > 1.0 && v <= 1.0 + 1e-15) v = 1.0;
    };
    for (double& v : a) clamp_entry(v);
    for (double& v : b.data()) clamp_entry(v);
    return Qve(std::move(a), std::move(b));
}

enum class DeathScale { Unit, Milli };

/// The nine-phase parametric test family. The hidden generator carries
/// the printed 1e-3 off-diagonal pattern, birth rates are
/// 1e-2 * (p, p, p, p, 5, 4, 4, 4, 4), and the death vector is the fifth
/// standard basis vector at scale 1 (Unit) or 1e-3 (Milli). The D0
/// diagonal closes the zero-row-sum constraint D0 e + D1 e + death = 0.
///
/// Unit is the canonical scale: it reproduces the reference statistics
/// (rho(R) between 1.0001 and 1.0095 across p in [0.9, 20]); Milli gives
/// a strongly supercritical family and is kept only for comparison.
inline MbtRates paper_family(double p, DeathScale scale = DeathScale::Unit) {
    if (!(p > 0.0)) throw std::invalid_argument("paper_family: p must be positive");
    const std::size_t n = 9;
    MbtRates m;
    m.n = n;
    m.D0 = Matrix(n, n);
    const struct { std::size_t i, j; double v; } off[] = {
        {0, 1, 6}, {1, 2, 6}, {2, 3, 6}, {3, 0, 6}, {3, 4, 1}, {3, 5, 1},
        {5, 6, 6}, {6, 7, 6}, {7, 8, 6}, {8, 0, 1}, {8, 4, 1}, {8, 5, 6},
    };
    for (const auto& o : off) m.D0(o.i, o.j) = o.v * 1e-3;

    m.D1_diag = {p, p, p, p, 5, 4, 4, 4, 4};
    for (double& v : m.D1_diag) v *= 1e-2;

    m.death = Vector(n, 0.0);
    m.death[4] = (scale == DeathScale::Unit) ? 1.0 : 1e-3;

    for (std::size_t i = 0; i < n; ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < n; ++j) row += m.D0(i, j);
        m.D0(i, i) = -(row + m.D1_diag[i] + m.death[i]);
    }

    m.P1 = Matrix(n, n);
    m.P0 = Matrix(n, n);
    for (std::size_t i = 0; i < 4; ++i) {
        m.P1(i, i) = 1.0;
        m.P0(i, 4) = 1.0;
    }
    m.P1(4, 0) = 0.1; m.P1(4, 4) = 0.9;
    m.P0(4, 0) = 0.1; m.P0(4, 4) = 0.9;
    for (std::size_t i = 5; i < n; ++i) {
        m.P1(i, 4) = 1.0;
        m.P0(i, i) = 1.0;
    }
    return m;
}

}  // namespace mbtq
