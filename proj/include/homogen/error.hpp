#pragma once

#include <stdexcept>
#include <string>

namespace homogen {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Collinear / duplicate points, rank-deficient DLT system, self-intersecting quads.
struct DegenerateConfiguration : Error {
    using Error::Error;
};

// Determinant magnitude below the invertibility floor.
struct SingularMatrix : Error {
    using Error::Error;
};

// A point mapped to w ~ 0 under a projective transform.
struct PointAtInfinity : Error {
    using Error::Error;
};

// seam_energy over a band whose weights sum to zero.
struct EmptyBand : Error {
    using Error::Error;
};

// Too few examples to train a model.
struct InsufficientData : Error {
    using Error::Error;
};

// NaN/Inf encountered during optimization.
struct NonFiniteLoss : Error {
    using Error::Error;
};

// Empty corpus or empty accepted sample set.
struct EmptyDataset : Error {
    using Error::Error;
};

// File / serialization failures.
struct IoError : Error {
    using Error::Error;
};

// Bad configuration values.
struct ConfigError : Error {
    using Error::Error;
};

}  // namespace homogen
