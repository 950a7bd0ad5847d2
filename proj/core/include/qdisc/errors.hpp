#pragma once

#include <stdexcept>
#include <string>

namespace qdisc {

// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Tensor-system bookkeeping.
struct DuplicateSystem : Error { using Error::Error; };
struct UnknownSystem : Error { using Error::Error; };
struct BadPermutation : Error { using Error::Error; };
struct DimMismatch : Error { using Error::Error; };

// Value validation.
struct BadIndex : Error { using Error::Error; };
struct BadParameter : Error { using Error::Error; };
struct NotUnitary : Error { using Error::Error; };
struct InvalidEnsemble : Error { using Error::Error; };
struct NotATester : Error { using Error::Error; };

// Oracle preconditions.
struct NotAGroup : Error { using Error::Error; };
struct NotIrreducible : Error { using Error::Error; };

// Resource guards.
struct SizeOverflow : Error { using Error::Error; };

// Solver and geometry failures.
struct SolverFailure : Error { using Error::Error; };
struct InfeasibleParty : Error { using Error::Error; };
struct DegenerateReference : Error { using Error::Error; };
struct GeometryError : Error { using Error::Error; };
struct BadRadius : Error { using Error::Error; };

// Front-end I/O.
struct ParseError : Error { using Error::Error; };
struct BadReport : Error { using Error::Error; };

}  // namespace qdisc
