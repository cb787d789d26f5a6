#pragma once

// Depth (functional) iteration and Newton iteration for the minimal
// nonnegative solution of x = a + B(x (x) x), with full per-iterate
// traces so residual experiments can replay intermediate approximations.

#include <cstddef>
#include <vector>

#include "mbtq/linalg.hpp"
#include "mbtq/qve.hpp"

namespace mbtq {

enum class SolveMethod { Depth, Newton };

struct SolveReport {
    Vector x;                           // final iterate
    std::vector<Vector> iterates;       // x_0, x_1, ...
    std::vector<double> residual_norms; // inf-norm of the residual at each iterate
    bool converged = false;
    SolveMethod method = SolveMethod::Depth;

    // Diagnostics at the final iterate. stability_radius is
    // rho(B(x (x) I + I (x) x)); values this close to 1 mean the
    // stability matrix is numerically singular and the reported x cannot
    // be certified as an interior minimal solution (critical input).
    double stability_radius = 0.0;
    bool near_singular = false;
};

/// r = xhat - a - B(xhat (x) xhat).
inline Vector residual(const Qve& q, const Vector& xhat) {
    if (xhat.size() != q.n) throw InvalidDimension("residual: length mismatch");
    Vector r = apply_bilinear(q.B, xhat, xhat);
    for (std::size_t i = 0; i < q.n; ++i) r[i] = xhat[i] - q.a[i] - r[i];
    return r;
}

namespace detail {

inline void finish_report(const Qve& q, SolveReport& rep, const Tolerances& tol) {
    rep.x = rep.iterates.back();
    rep.stability_radius = spectral_radius(mixed_operator(q.B, rep.x, rep.x), tol);
    rep.near_singular = rep.stability_radius >= 1.0 - 1e-6;
}

}  // namespace detail

/// Fixed-point iteration x_{k+1} = a + B(x_k (x) x_k) from x_0 = 0.
/// Iterates increase monotonically to the minimal nonnegative solution;
/// convergence is linear with rate rho(I - L), so near-critical problems
/// need a generous maxit. On maxit exhaustion the report carries the last
/// iterate with converged = false.
inline SolveReport depth_iteration(const Qve& q, double tol = 1e-14,
                                   std::size_t maxit = 2000000,
                                   const Tolerances& numerics = {}) {
    SolveReport rep;
    rep.method = SolveMethod::Depth;
    Vector x(q.n, 0.0);
    for (std::size_t k = 0; k <= maxit; ++k) {
        const Vector r = residual(q, x);
        rep.iterates.push_back(x);
        rep.residual_norms.push_back(inf_norm(r));
        if (rep.residual_norms.back() <= tol) {
            rep.converged = true;
            break;
        }
        if (k == maxit) break;
        Vector next = apply_bilinear(q.B, x, x);
        for (std::size_t i = 0; i < q.n; ++i) next[i] += q.a[i];
        x = std::move(next);
    }
    detail::finish_report(q, rep, numerics);
    return rep;
}

/// Newton's iteration: solve (I - B(x_k (x) I + I (x) x_k)) d = -r_k and
/// step x_{k+1} = x_k + d. Quadratically convergent from any
/// 0 <= x0 <= a; the default start is 0. A singular step matrix
/// (critical or otherwise ill-posed input) propagates as SingularMatrix.
inline SolveReport newton_iteration(const Qve& q, double tol = 1e-14,
                                    std::size_t maxit = 200, Vector x0 = {},
                                    const Tolerances& numerics = {}) {
    if (x0.empty()) x0.assign(q.n, 0.0);
    if (x0.size() != q.n) throw InvalidDimension("newton_iteration: bad start vector");
    for (std::size_t i = 0; i < q.n; ++i)
        if (x0[i] < 0.0 || x0[i] > q.a[i])
            throw std::invalid_argument("newton_iteration: start must satisfy 0 <= x0 <= a");

    SolveReport rep;
    rep.method = SolveMethod::Newton;
    Vector x = std::move(x0);
    for (std::size_t k = 0; k <= maxit; ++k) {
        Vector r = residual(q, x);
        rep.iterates.push_back(x);
        rep.residual_norms.push_back(inf_norm(r));
        if (rep.residual_norms.back() <= tol) {
            rep.converged = true;
            break;
        }
        if (k == maxit) break;
        Matrix l = scale(mixed_operator(q.B, x, x), -1.0);
        for (std::size_t i = 0; i < q.n; ++i) l(i, i) += 1.0;
        for (double& v : r) v = -v;
        const Vector step = solve_linear(l, r, numerics);
        for (std::size_t i = 0; i < q.n; ++i) x[i] += step[i];
    }
    detail::finish_report(q, rep, numerics);
    return rep;
}

}  // namespace mbtq
