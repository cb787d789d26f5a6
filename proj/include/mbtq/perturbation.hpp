#pragma once

// Perturbation analysis of the minimal nonnegative solution: the scalar
// inputs (delta, ell, b_tilde, gap_norm), the admissibility conditions,
// the certified bound xi_star on ||x~* - x*||, first-order bounds, the
// condition estimate kappa_tilde, spectral identities at the solution,
// and the two perturbation generators used by the experiments.

#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>

#include "mbtq/linalg.hpp"
#include "mbtq/qve.hpp"

namespace mbtq {

/// Scalar quantities entering the perturbation bound.
struct PerturbationInputs {
    double delta = 0.0;      // ||dB||
    double ell = 0.0;        // ||L^{-1}|| at the unperturbed solution
    double b_tilde = 0.0;    // ||B + dB||
    double gap_norm = 0.0;   // ||x* (x) x* - e (x) e|| = 1 - (min_i x*_i)^2
    double xstar_norm = 0.0; // ||x*||
    double comp_norm = 0.0;  // ||e - x*||
};

struct PerturbationReport {
    PerturbationInputs inputs;
    bool cond1_ok = false;  // existence of a bounded perturbed solution
    bool cond2_ok = false;  // interior-solution (minimality) certificate
    std::optional<double> xi_star;  // present iff cond1_ok
    double first_order_abs = 0.0;
    std::optional<double> first_order_rel;
    double kappa_tilde = 0.0;
    std::optional<std::uint64_t> seed;  // set for randomly generated perturbations
    std::string generator;
};

/// L = I - B(x (x) I + I (x) x).
inline Matrix stability_matrix(const Qve& q, const Vector& x) {
    Matrix l = scale(mixed_operator(q.B, x, x), -1.0);
    for (std::size_t i = 0; i < q.n; ++i) l(i, i) += 1.0;
    return l;
}

/// Computes the bound inputs for a perturbation dB of the coefficient
/// matrix. xstar must be the converged minimal solution. gap_norm uses
/// the closed form 1 - (min x*)^2 and is cross-checked against the
/// explicit Kronecker construction.
inline PerturbationInputs perturbation_inputs(const Qve& q, const Vector& xstar,
                                              const Matrix& dB,
                                              const Tolerances& tol = {}) {
    if (xstar.size() != q.n || dB.rows() != q.n || dB.cols() != q.n * q.n)
        throw InvalidDimension("perturbation_inputs: dimension mismatch");
    PerturbationInputs in;
    in.delta = inf_norm(dB);
    in.ell = inf_norm_inverse(stability_matrix(q, xstar), tol);
    in.b_tilde = inf_norm(add(q.B, dB));

    double minx = xstar[0];
    for (double v : xstar) minx = std::min(minx, v);
    in.gap_norm = 1.0 - minx * minx;
    const Vector gap = add(kron_vec(xstar, xstar), kron_vec(ones(q.n), ones(q.n)), -1.0);
    if (std::abs(in.gap_norm - inf_norm(gap)) > 1e-14)
        throw std::invalid_argument(
            "perturbation_inputs: closed-form gap disagrees with Kronecker construction; "
            "xstar is not an interior solution");

    in.xstar_norm = inf_norm(xstar);
    in.comp_norm = inf_norm(add(ones(q.n), xstar, -1.0));
    return in;
}

namespace detail {

/// (1 - 2 l delta ||x*||)^2 - 4 l^2 b~ d delta, clamped to 0 when within
/// -1e-15 of zero (rounding at the admissibility boundary).
inline double admissibility_discriminant(const PerturbationInputs& in) {
    const double t = 1.0 - 2.0 * in.ell * in.delta * in.xstar_norm;
    double disc = t * t - 4.0 * in.ell * in.ell * in.b_tilde * in.gap_norm * in.delta;
    if (disc < 0.0 && disc >= -1e-15) disc = 0.0;
    return disc;
}

}  // namespace detail

struct Admissibility {
    bool cond1_ok = false;
    bool cond2_ok = false;
};

/// cond1: ||x*|| delta + sqrt(b~ d delta) <= 1 / (2 l)  -- the perturbed
/// equation has a solution within xi_star.
/// cond2: 2 l delta ||x*|| + sqrt(disc) > max{1 - 2 l b~ (1 - ||x*||),
/// 1 - 2 l b~ (1 - ||e - x*||)} -- that solution is interior, hence the
/// minimal one. cond2 is only evaluated when cond1 holds.
inline Admissibility check_admissible(const PerturbationInputs& in) {
    Admissibility adm;
    const double lhs1 = in.xstar_norm * in.delta +
                        std::sqrt(in.b_tilde * in.gap_norm * in.delta);
    adm.cond1_ok = lhs1 <= 1.0 / (2.0 * in.ell);
    if (!adm.cond1_ok) return adm;
    const double disc = detail::admissibility_discriminant(in);
    if (disc < 0.0) return adm;
    const double lhs2 = 2.0 * in.ell * in.delta * in.xstar_norm + std::sqrt(disc);
    const double rhs2 = std::max(1.0 - 2.0 * in.ell * in.b_tilde * (1.0 - in.xstar_norm),
                                 1.0 - 2.0 * in.ell * in.b_tilde * (1.0 - in.comp_norm));
    adm.cond2_ok = lhs2 > rhs2;
    return adm;
}

/// The certified bound xi_star on ||x~* - x*||, evaluated through the
/// rationalized root formula
///     xi* = 2 l d delta / (1 - 2 l delta ||x*|| + sqrt(disc)),
/// which is exact at delta = 0 and avoids the cancellation the
/// subtractive form suffers for small delta.
inline double perturbation_bound(const PerturbationInputs& in) {
    Admissibility adm = check_admissible(in);
    if (!adm.cond1_ok)
        throw BoundInadmissible("perturbation_bound: admissibility condition 1 fails");
    const double disc = detail::admissibility_discriminant(in);
    if (disc < 0.0)
        throw BoundInadmissible("perturbation_bound: negative discriminant");
    const double denom = 1.0 - 2.0 * in.ell * in.delta * in.xstar_norm + std::sqrt(disc);
    return 2.0 * in.ell * in.gap_norm * in.delta / denom;
}

struct FirstOrderBounds {
    double abs = 0.0;
    std::optional<double> rel;  // absent when ||x*|| = 0
};

/// First-order expansion of xi_star: abs = l d delta, and the matching
/// relative bound l ||B|| (d / ||x*||) (delta / ||B||).
inline FirstOrderBounds first_order_bounds(const PerturbationInputs& in, double b_norm) {
    FirstOrderBounds fo;
    fo.abs = in.ell * in.gap_norm * in.delta;
    if (in.xstar_norm > 0.0)
        fo.rel = in.ell * b_norm * (in.gap_norm / in.xstar_norm) * (in.delta / b_norm);
    return fo;
}

/// kappa~ = l d ||B|| / ||x*||, the first-order upper bound on the
/// relative condition number of the minimal solution.
inline double condition_estimate(const Qve& q, const Vector& xstar, const Tolerances& tol = {}) {
    const double ell = inf_norm_inverse(stability_matrix(q, xstar), tol);
    double minx = xstar[0];
    for (double v : xstar) minx = std::min(minx, v);
    const double gap = 1.0 - minx * minx;
    const double xn = inf_norm(xstar);
    if (xn == 0.0) throw std::invalid_argument("condition_estimate: xstar must be nonzero");
    return ell * gap * inf_norm(q.B) / xn;
}

struct RemarkDiagnostics {
    double rho_two = 0.0;  // rho(B[(e + x*) (x) I + I (x) (e + x*)]), identically 2
    double rho_R = 0.0;
    double rho_IL = 0.0;   // rho(I - L); rho_R + rho_IL >= 2
};

/// Spectral identities at the interior solution: the combined operator
/// has Perron root exactly 2 (its Perron vector is e - x*), and
/// rho(R) + rho(I - L) >= 2, so near-critical instances force
/// rho(I - L) toward 1 and l = ||L^{-1}|| toward infinity.
inline RemarkDiagnostics remark_diagnostics(const Qve& q, const Vector& xstar,
                                            const Tolerances& tol = {}) {
    RemarkDiagnostics d;
    const Vector epx = add(ones(q.n), xstar);
    d.rho_two = spectral_radius(mixed_operator(q.B, epx, epx), tol);
    d.rho_R = spectral_radius(offspring_matrix(q), tol);
    d.rho_IL = spectral_radius(mixed_operator(q.B, xstar, xstar), tol);
    return d;
}

/// A coefficient perturbation paired with the compensating da that keeps
/// e a solution of the perturbed equation: da = -dB(e (x) e).
struct PerturbationPair {
    Matrix dB;
    Vector da;
};

namespace detail {

inline Vector compensating_da(const Matrix& dB, std::size_t n) {
    return scale(apply_bilinear(dB, ones(n), ones(n)), -1.0);
}

inline void require_valid_mbt_range(const Qve& q, const PerturbationPair& p,
                                    const char* who) {
    for (std::size_t i = 0; i < q.n; ++i) {
        const double v = q.a[i] + p.da[i];
        if (v < 0.0 || v > 1.0)
            throw PerturbationTooLarge(std::string(who) + ": perturbed a leaves [0, 1]");
    }
    for (std::size_t i = 0; i < q.B.data().size(); ++i) {
        const double v = q.B.data()[i] + p.dB.data()[i];
        if (v < 0.0 || v > 1.0)
            throw PerturbationTooLarge(std::string(who) + ": perturbed B leaves [0, 1]");
    }
}

}  // namespace detail

/// dB = eta B with the compensating da.
inline PerturbationPair structured_perturbation(const Qve& q, double eta) {
    if (eta < 0.0) throw std::invalid_argument("structured_perturbation: eta must be >= 0");
    PerturbationPair p;
    p.dB = scale(q.B, eta);
    p.da = detail::compensating_da(p.dB, q.n);
    detail::require_valid_mbt_range(q, p, "structured_perturbation");
    return p;
}

/// dB drawn entrywise uniform on (0, 1) from mt19937_64(seed), rescaled
/// so ||dB|| = eta ||B||, with the compensating da. Bit-identical for a
/// fixed seed.
inline PerturbationPair random_perturbation(const Qve& q, double eta, std::uint64_t seed) {
    if (eta < 0.0) throw std::invalid_argument("random_perturbation: eta must be >= 0");
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    PerturbationPair p;
    p.dB = Matrix(q.n, q.n * q.n);
    for (double& v : p.dB.data()) {
        do {
            v = unif(rng);
        } while (v == 0.0);
    }
    const double target = eta * inf_norm(q.B);
    const double raw = inf_norm(p.dB);
    p.dB = scale(p.dB, raw > 0.0 ? target / raw : 0.0);
    p.da = detail::compensating_da(p.dB, q.n);
    for (std::size_t i = 0; i < q.n; ++i)
        if (q.a[i] + p.da[i] < 0.0)
            throw PerturbationTooLarge("random_perturbation: perturbed a has a negative entry");
    return p;
}

inline Qve apply_perturbation(const Qve& q, const PerturbationPair& p) {
    return Qve(add(q.a, p.da), add(q.B, p.dB));
}

/// Assembles the full report for one perturbation of q at the solution
/// xstar. xi_star is computed whenever cond1 holds; a failed cond2 only
/// withholds the minimality certificate, mirroring how the bound is used
/// in practice.
inline PerturbationReport perturbation_report(const Qve& q, const Vector& xstar,
                                              const Matrix& dB,
                                              const Tolerances& tol = {}) {
    PerturbationReport rep;
    rep.inputs = perturbation_inputs(q, xstar, dB, tol);
    const Admissibility adm = check_admissible(rep.inputs);
    rep.cond1_ok = adm.cond1_ok;
    rep.cond2_ok = adm.cond2_ok;
    if (rep.cond1_ok) rep.xi_star = perturbation_bound(rep.inputs);
    const FirstOrderBounds fo = first_order_bounds(rep.inputs, inf_norm(q.B));
    rep.first_order_abs = fo.abs;
    rep.first_order_rel = fo.rel;
    rep.kappa_tilde = condition_estimate(q, xstar, tol);
    return rep;
}

}  // namespace mbtq
