#pragma once

#include <stdexcept>
#include <string>

namespace mfsac {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotStabilizable : Error { using Error::Error; };
struct IllConditioned : Error { using Error::Error; };
struct NotHurwitz : Error { using Error::Error; };
struct NonFinite : Error { using Error::Error; };
struct NotDecaying : Error { using Error::Error; };
struct InvalidSpec : Error { using Error::Error; };
struct OutOfSupport : Error { using Error::Error; };
struct ProjectionFailed : Error { using Error::Error; };
struct RiccatiFailure : Error { using Error::Error; };
struct ContractionViolated : Error { using Error::Error; };
struct MaxIterations : Error { using Error::Error; };
struct SingularBhat : Error { using Error::Error; };
struct EmptyObservation : Error { using Error::Error; };
struct StaleEstimates : Error { using Error::Error; };
struct GridMismatch : Error { using Error::Error; };
struct MissingRun : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace mfsac
