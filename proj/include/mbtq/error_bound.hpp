#pragma once

// Residual-based a posteriori error bound: given an approximate solution
// xhat, certify ||xhat - x*|| <= omega_star from the residual
// r = xhat - a - B(xhat (x) xhat) alone.

#include <cmath>
#include <optional>

#include "mbtq/linalg.hpp"
#include "mbtq/perturbation.hpp"
#include "mbtq/qve.hpp"
#include "mbtq/solve.hpp"

namespace mbtq {

struct ErrorBoundReport {
    double gamma = 0.0;     // ||r||
    double ell_hat = 0.0;   // ||Lhat^{-1}||
    double b_norm = 0.0;    // ||B||
    bool con1_ok = false;   // 0 <= xhat < e and rho(B(xhat (x) I + I (x) xhat)) < 1
    bool con21_ok = false;  // 1 - 4 lhat^2 b gamma >= 0
    bool con22_ok = false;  // sqrt(1 - 4 lhat^2 b gamma) above the interior threshold
    std::optional<double> omega_star;  // present iff all three conditions hold
    double estimate = 0.0;  // lhat * gamma, the first-order error estimate
};

/// Evaluates the certificate for xhat. When every condition passes,
/// omega_star = 2 lhat gamma / (1 + sqrt(1 - 4 lhat^2 b gamma)) is the
/// smaller root of lhat b w^2 - w + lhat gamma = 0 and bounds the true
/// error; otherwise omega_star stays absent and the report still carries
/// the uncertified diagnostics (gamma, ell_hat, estimate).
inline ErrorBoundReport error_bound(const Qve& q, const Vector& xhat,
                                    const Tolerances& tol = {}) {
    if (xhat.size() != q.n) throw InvalidDimension("error_bound: length mismatch");
    ErrorBoundReport rep;
    rep.gamma = inf_norm(residual(q, xhat));
    rep.b_norm = inf_norm(q.B);

    const Matrix mixed = mixed_operator(q.B, xhat, xhat);
    Matrix lhat = scale(mixed, -1.0);
    for (std::size_t i = 0; i < q.n; ++i) lhat(i, i) += 1.0;
    rep.ell_hat = inf_norm_inverse(lhat, tol);
    rep.estimate = rep.ell_hat * rep.gamma;

    bool in_box = true;
    for (double v : xhat)
        if (!(v >= 0.0 && v < 1.0)) in_box = false;
    rep.con1_ok = in_box && spectral_radius(mixed, tol) < 1.0;

    double disc = 1.0 - 4.0 * rep.ell_hat * rep.ell_hat * rep.b_norm * rep.gamma;
    if (disc < 0.0 && disc >= -1e-15) disc = 0.0;
    rep.con21_ok = disc >= 0.0;
    if (rep.con21_ok) {
        const double root = std::sqrt(disc);
        const double threshold =
            std::max(1.0 - 2.0 * rep.ell_hat * rep.b_norm * (1.0 - inf_norm(add(ones(q.n), xhat, -1.0))),
                     1.0 - 2.0 * rep.ell_hat * rep.b_norm * (1.0 - inf_norm(xhat)));
        rep.con22_ok = root > threshold;
        if (rep.con1_ok && rep.con22_ok)
            rep.omega_star = 2.0 * rep.ell_hat * rep.gamma / (1.0 + root);
    }
    return rep;
}

/// lhat * gamma; the cheap estimate of ||xhat - x*|| for small residuals.
inline double error_estimate(const Qve& q, const Vector& xhat, const Tolerances& tol = {}) {
    const Vector r = residual(q, xhat);
    Matrix lhat = scale(mixed_operator(q.B, xhat, xhat), -1.0);
    for (std::size_t i = 0; i < q.n; ++i) lhat(i, i) += 1.0;
    return inf_norm_inverse(lhat, tol) * inf_norm(r);
}

}  // namespace mbtq
