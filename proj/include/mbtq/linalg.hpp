#pragma once

// Dense small-dimension linear algebra used throughout the library:
// infinity norms, Kronecker products of vectors, the bilinear action of a
// coefficient matrix B (n x n^2), LU solves with partial pivoting, the
// Perron root of a nonnegative matrix, and irreducibility.
//
// Everything here is a pure function of its arguments; the matrices in
// this problem domain are tiny (n ~ 9), so clarity beats blocking and
// there is no sparse storage.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include "mbtq/errors.hpp"

namespace mbtq {

using Vector = std::vector<double>;

/// Dense row-major matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    friend bool operator==(const Matrix& a, const Matrix& b) {
        return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.data_ == b.data_;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Tolerances shared by the numerical kernels. One record so tests and
/// callers can tighten or loosen everything in one place.
struct Tolerances {
    double lu_pivot_rel = 1e-14;       // pivot below this times the matrix scale is singular
    double solve_residual_rel = 1e-10; // contract on ||Az - b|| relative to ||A|| ||z|| + ||b||
    double power_ratio_tol = 1e-12;    // agreement of the min/max component-ratio estimates
    std::size_t power_max_iters = 1000000;
    std::size_t power_stall_iters = 1000; // iterations without progress before shifting
    double power_shift_scale = 1e-8;      // shift = scale * inf_norm(M)
};

inline Vector ones(std::size_t n) {
    if (n == 0) throw InvalidDimension("ones: dimension must be positive");
    return Vector(n, 1.0);
}

inline Vector unit_vector(std::size_t n, std::size_t m) {
    if (m >= n) throw InvalidDimension("unit_vector: index out of range");
    Vector v(n, 0.0);
    v[m] = 1.0;
    return v;
}

inline double inf_norm(const Vector& v) {
    if (v.empty()) throw InvalidDimension("inf_norm: empty vector");
    double best = 0.0;
    for (double x : v) best = std::max(best, std::abs(x));
    return best;
}

/// Maximum absolute row sum.
inline double inf_norm(const Matrix& m) {
    if (m.rows() == 0 || m.cols() == 0) throw InvalidDimension("inf_norm: empty matrix");
    double best = 0.0;
    for (std::size_t i = 0; i < m.rows(); ++i) {
        double row = 0.0;
        for (std::size_t j = 0; j < m.cols(); ++j) row += std::abs(m(i, j));
        best = std::max(best, row);
    }
    return best;
}

/// Kronecker product of two length-n vectors. Entry n*j + k holds
/// x[j] * y[k]; this zero-based convention mirrors the column layout of
/// the coefficient matrix B everywhere in the library.
inline Vector kron_vec(const Vector& x, const Vector& y) {
    if (x.size() != y.size()) throw InvalidDimension("kron_vec: length mismatch");
    const std::size_t n = x.size();
    Vector out(n * n);
    for (std::size_t j = 0; j < n; ++j)
        for (std::size_t k = 0; k < n; ++k) out[n * j + k] = x[j] * y[k];
    return out;
}

inline Vector matvec(const Matrix& a, const Vector& x) {
    if (a.cols() != x.size()) throw InvalidDimension("matvec: dimension mismatch");
    Vector out(a.rows(), 0.0);
    for (std::size_t i = 0; i < a.rows(); ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < a.cols(); ++j) acc += a(i, j) * x[j];
        out[i] = acc;
    }
    return out;
}

/// B(x (x) y) for an n x n^2 matrix B, accumulated directly without
/// forming the Kronecker vector.
inline Vector apply_bilinear(const Matrix& b, const Vector& x, const Vector& y) {
    const std::size_t n = x.size();
    if (y.size() != n || b.rows() != n || b.cols() != n * n)
        throw InvalidDimension("apply_bilinear: dimension mismatch");
    Vector out(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double acc = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            const double xj = x[j];
            if (xj == 0.0) continue;
            double inner = 0.0;
            for (std::size_t k = 0; k < n; ++k) inner += b(i, n * j + k) * y[k];
            acc += xj * inner;
        }
        out[i] = acc;
    }
    return out;
}

/// The n x n matrix B(u (x) I + I (x) v); column m equals
/// B(u (x) e_m) + B(e_m (x) v). Callers form I - result for the
/// stability matrix and pass u = v = e for the offspring-mean matrix.
inline Matrix mixed_operator(const Matrix& b, const Vector& u, const Vector& v) {
    const std::size_t n = u.size();
    if (v.size() != n || b.rows() != n || b.cols() != n * n)
        throw InvalidDimension("mixed_operator: dimension mismatch");
    Matrix out(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t m = 0; m < n; ++m) {
            double acc = 0.0;
            for (std::size_t j = 0; j < n; ++j) acc += b(i, n * j + m) * u[j];
            for (std::size_t k = 0; k < n; ++k) acc += b(i, n * m + k) * v[k];
            out(i, m) = acc;
        }
    }
    return out;
}

inline Matrix add(const Matrix& a, const Matrix& b, double sb = 1.0) {
    if (a.rows() != b.rows() || a.cols() != b.cols())
        throw InvalidDimension("add: shape mismatch");
    Matrix out = a;
    for (std::size_t i = 0; i < out.data().size(); ++i) out.data()[i] += sb * b.data()[i];
    return out;
}

inline Matrix scale(const Matrix& a, double s) {
    Matrix out = a;
    for (double& x : out.data()) x *= s;
    return out;
}

inline Vector add(const Vector& a, const Vector& b, double sb = 1.0) {
    if (a.size() != b.size()) throw InvalidDimension("add: length mismatch");
    Vector out = a;
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += sb * b[i];
    return out;
}

inline Vector scale(const Vector& a, double s) {
    Vector out = a;
    for (double& x : out) x *= s;
    return out;
}

/// LU factorization with partial pivoting, kept so one factorization can
/// serve several right-hand sides (inverse columns, Newton steps).
class LuFactorization {
public:
    explicit LuFactorization(const Matrix& a, const Tolerances& tol = {}) : lu_(a), perm_(a.rows()) {
        if (a.rows() != a.cols()) throw InvalidDimension("lu: matrix must be square");
        const std::size_t n = a.rows();
        std::iota(perm_.begin(), perm_.end(), std::size_t{0});
        double amax = 0.0;
        for (double x : a.data()) amax = std::max(amax, std::abs(x));
        const double floor = tol.lu_pivot_rel * std::max(amax, std::numeric_limits<double>::min());
        for (std::size_t col = 0; col < n; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < n; ++r)
                if (std::abs(lu_(r, col)) > std::abs(lu_(piv, col))) piv = r;
            if (std::abs(lu_(piv, col)) <= floor)
                throw SingularMatrix("lu: pivot below singularity threshold");
            if (piv != col) {
                std::swap(perm_[piv], perm_[col]);
                for (std::size_t j = 0; j < n; ++j) std::swap(lu_(piv, j), lu_(col, j));
            }
            for (std::size_t r = col + 1; r < n; ++r) {
                const double f = lu_(r, col) / lu_(col, col);
                lu_(r, col) = f;
                for (std::size_t j = col + 1; j < n; ++j) lu_(r, j) -= f * lu_(col, j);
            }
        }
    }

    Vector solve(const Vector& b) const {
        const std::size_t n = lu_.rows();
        if (b.size() != n) throw InvalidDimension("lu solve: length mismatch");
        Vector y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double acc = b[perm_[i]];
            for (std::size_t j = 0; j < i; ++j) acc -= lu_(i, j) * y[j];
            y[i] = acc;
        }
        for (std::size_t ii = n; ii-- > 0;) {
            double acc = y[ii];
            for (std::size_t j = ii + 1; j < n; ++j) acc -= lu_(ii, j) * y[j];
            y[ii] = acc / lu_(ii, ii);
        }
        return y;
    }

private:
    Matrix lu_;
    std::vector<std::size_t> perm_;
};

inline Vector solve_linear(const Matrix& a, const Vector& b, const Tolerances& tol = {}) {
    return LuFactorization(a, tol).solve(b);
}

/// ||A^{-1}||_inf, computed by solving for the n columns of the inverse.
inline double inf_norm_inverse(const Matrix& a, const Tolerances& tol = {}) {
    const std::size_t n = a.rows();
    LuFactorization lu(a, tol);
    std::vector<double> row_sums(n, 0.0);
    for (std::size_t c = 0; c < n; ++c) {
        Vector col = lu.solve(unit_vector(n, c));
        for (std::size_t i = 0; i < n; ++i) row_sums[i] += std::abs(col[i]);
    }
    return *std::max_element(row_sums.begin(), row_sums.end());
}

/// Explicit inverse; used where the entries themselves matter (sign
/// checks on L^{-1}).
inline Matrix inverse(const Matrix& a, const Tolerances& tol = {}) {
    const std::size_t n = a.rows();
    LuFactorization lu(a, tol);
    Matrix out(n, n);
    for (std::size_t c = 0; c < n; ++c) {
        Vector col = lu.solve(unit_vector(n, c));
        for (std::size_t i = 0; i < n; ++i) out(i, c) = col[i];
    }
    return out;
}

/// Perron root of a nonnegative square matrix by power iteration.
///
/// Starts from the all-ones vector and normalizes by the inf-norm each
/// step; the min and max component ratios of successive iterates bracket
/// the root (Collatz-Wielandt), and iteration stops when they agree to
/// power_ratio_tol. If no progress is made for power_stall_iters steps
/// (periodic or reducible input), iteration restarts on M + eps*I, which
/// keeps the Perron root up to the shift while breaking periodicity.
inline double spectral_radius(const Matrix& m, const Tolerances& tol = {}) {
    if (m.rows() != m.cols()) throw InvalidDimension("spectral_radius: matrix must be square");
    const std::size_t n = m.rows();
    for (double x : m.data())
        if (x < 0.0) throw std::invalid_argument("spectral_radius: matrix must be nonnegative");
    const double mnorm = inf_norm(m);
    if (mnorm == 0.0) return 0.0;

    double shift = 0.0;
    Vector v(n, 1.0);
    double lo = 0.0, hi = mnorm;
    double checkpoint_gap = std::numeric_limits<double>::infinity();
    for (std::size_t iter = 1; iter <= tol.power_max_iters; ++iter) {
        Vector w = matvec(m, v);
        if (shift != 0.0)
            for (std::size_t i = 0; i < n; ++i) w[i] += shift * v[i];
        lo = std::numeric_limits<double>::infinity();
        hi = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            if (v[i] > 0.0) {
                const double r = w[i] / v[i];
                lo = std::min(lo, r);
                hi = std::max(hi, r);
            }
        }
        if (hi - lo <= tol.power_ratio_tol * std::max(1.0, hi))
            return 0.5 * (lo + hi) - shift;
        const double wnorm = inf_norm(w);
        if (wnorm == 0.0) return 0.0 - shift;  // nilpotent direction exhausted
        for (std::size_t i = 0; i < n; ++i) v[i] = w[i] / wnorm;
        if (iter % tol.power_stall_iters == 0) {
            const double gap = hi - lo;
            if (shift == 0.0 && gap > 0.5 * checkpoint_gap) {
                shift = tol.power_shift_scale * mnorm;
                std::fill(v.begin(), v.end(), 1.0);
                checkpoint_gap = std::numeric_limits<double>::infinity();
            } else {
                checkpoint_gap = gap;
            }
        }
    }
    throw NoConvergence("spectral_radius: power iteration did not converge", lo - shift, hi - shift);
}

/// True iff the directed graph with an edge i -> j whenever M(i,j) > 0 is
/// strongly connected. A 1x1 matrix is irreducible by convention, which
/// matches Perron-Frobenius usage for scalar problems.
inline bool is_irreducible(const Matrix& m) {
    if (m.rows() != m.cols()) throw InvalidDimension("is_irreducible: matrix must be square");
    const std::size_t n = m.rows();
    if (n == 1) return true;
    auto reaches_all = [&](bool forward) {
        std::vector<char> seen(n, 0);
        std::vector<std::size_t> stack{0};
        seen[0] = 1;
        std::size_t count = 1;
        while (!stack.empty()) {
            const std::size_t u = stack.back();
            stack.pop_back();
            for (std::size_t vtx = 0; vtx < n; ++vtx) {
                const double w = forward ? m(u, vtx) : m(vtx, u);
                if (w > 0.0 && !seen[vtx]) {
                    seen[vtx] = 1;
                    ++count;
                    stack.push_back(vtx);
                }
            }
        }
        return count == n;
    };
    return reaches_all(true) && reaches_all(false);
}

}  // namespace mbtq
