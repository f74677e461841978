#pragma once

#include <stdexcept>
#include <string>

namespace mneme {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define MNEME_DEFINE_ERROR(Name)                 \
  class Name : public Error {                    \
   public:                                       \
    explicit Name(const std::string& what)       \
        : Error(std::string(#Name ": ") + what) {} \
  }

MNEME_DEFINE_ERROR(DomainError);
MNEME_DEFINE_ERROR(DecodeError);

// crypto
MNEME_DEFINE_ERROR(TagMismatch);
MNEME_DEFINE_ERROR(InvalidCommitment);
MNEME_DEFINE_ERROR(MalformedMessage);

// ledger
MNEME_DEFINE_ERROR(UnknownInput);
MNEME_DEFINE_ERROR(UnverifiedRegenesis);

// poc
MNEME_DEFINE_ERROR(NoNeighbors);
MNEME_DEFINE_ERROR(InsufficientTransactions);
MNEME_DEFINE_ERROR(TooFewPoints);

// poe
MNEME_DEFINE_ERROR(InsufficientPopulation);
MNEME_DEFINE_ERROR(ConflictingEpoch);

// analysis
MNEME_DEFINE_ERROR(Infeasible);
MNEME_DEFINE_ERROR(DegenerateDesign);

// scenario runner
MNEME_DEFINE_ERROR(ConfigError);
MNEME_DEFINE_ERROR(RuntimeViolation);

#undef MNEME_DEFINE_ERROR

}  // namespace mneme
