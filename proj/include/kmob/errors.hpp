#pragma once

#include <stdexcept>
#include <string>

namespace kmob {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct DegenerateEvaluation : Error { using Error::Error; };
struct OutOfDomain : Error { using Error::Error; };
struct EvaluationFailed : Error { using Error::Error; };
struct SingularMetric : Error { using Error::Error; };
struct UnsupportedValence : Error { using Error::Error; };
struct ZeroVector : Error { using Error::Error; };
struct DomainViolation : Error { using Error::Error; };
struct EmptyDomain : Error { using Error::Error; };
struct DegenerateFit : Error { using Error::Error; };
struct ModeMismatch : Error { using Error::Error; };
struct IllConditioned : Error { using Error::Error; };
struct SingularA : Error { using Error::Error; };
struct NonHorizontalInput : Error { using Error::Error; };
struct MissingPotential : Error { using Error::Error; };
struct WrongB : Error { using Error::Error; };
struct CoincidentEigenvalues : Error { using Error::Error; };
struct LengthMismatch : Error { using Error::Error; };
struct NegativeSquare : Error { using Error::Error; };
struct DuplicateEigenvalues : Error { using Error::Error; };
struct NotOnLevelSet : Error { using Error::Error; };
struct InvalidDecomposition : Error { using Error::Error; };
struct ConfigError : Error { using Error::Error; };
struct ConstructionError : Error { using Error::Error; };
struct IoError : Error { using Error::Error; };

}  // namespace kmob
