#pragma once

#include <stdexcept>
#include <string>

namespace mbtq {

/// Dimension mismatch between operands (wrong length, non-square, ...).
struct InvalidDimension : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

/// A linear system whose pivot fell below the singularity threshold.
struct SingularMatrix : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An iteration that exhausted its budget. Carries the bracketing
/// interval known at the point of failure.
struct NoConvergence : std::runtime_error {
    double lower;
    double upper;
    NoConvergence(const std::string& what, double lo, double hi)
        : std::runtime_error(what), lower(lo), upper(hi) {}
};

/// Rate data that cannot form a valid model (negative probabilities, ...).
struct InvalidRates : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Requested a certified bound whose admissibility condition fails.
struct BoundInadmissible : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// A generated perturbation pushes coefficients outside [0, 1].
struct PerturbationTooLarge : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// An offspring distribution whose mass deviates too far from 1.
struct InvalidDistribution : std::runtime_error {
    using std::runtime_error::runtime_error;
};

}  // namespace mbtq
