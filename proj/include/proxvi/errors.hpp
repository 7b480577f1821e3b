#pragma once

#include <stdexcept>
#include <string>

namespace proxvi {

// Base class for all library failures. One concrete type per contract
// violation so callers (and tests) can catch them individually.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotPositiveDefinite : Error {
    using Error::Error;
};
struct SingularMatrix : Error {
    using Error::Error;
};
struct DimensionMismatch : Error {
    using Error::Error;
};
struct ShapeMismatch : Error {
    using Error::Error;
};
struct NotApplicable : Error {
    using Error::Error;
};
struct NotSamplable : Error {
    using Error::Error;
};
struct EmptyBatch : Error {
    using Error::Error;
};
struct GenerationFailed : Error {
    using Error::Error;
};
struct FlowInversionFailed : Error {
    using Error::Error;
};
struct FamilyMismatch : Error {
    using Error::Error;
};
struct EmptyInput : Error {
    using Error::Error;
};
struct MetricMissing : Error {
    using Error::Error;
};
struct UnknownPreset : Error {
    using Error::Error;
};
struct IoError : Error {
    using Error::Error;
};

} // namespace proxvi
