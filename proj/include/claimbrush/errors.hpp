#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace claimbrush {

// Base of every error raised by the library. Derived types map one-to-one
// onto the failure modes the CLI reports with exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

#define CLAIMBRUSH_DEFINE_ERROR(Name)   \
  class Name : public Error {           \
   public:                              \
    using Error::Error;                 \
  };

CLAIMBRUSH_DEFINE_ERROR(MalformedClaims)
CLAIMBRUSH_DEFINE_ERROR(UnknownClaim)
CLAIMBRUSH_DEFINE_ERROR(LengthMismatch)
CLAIMBRUSH_DEFINE_ERROR(EmptyBatch)
CLAIMBRUSH_DEFINE_ERROR(UntrainedScorer)
CLAIMBRUSH_DEFINE_ERROR(DimensionMismatch)
CLAIMBRUSH_DEFINE_ERROR(DegenerateData)
CLAIMBRUSH_DEFINE_ERROR(NoCitations)
CLAIMBRUSH_DEFINE_ERROR(UnknownToken)
CLAIMBRUSH_DEFINE_ERROR(DuplicateRecord)
CLAIMBRUSH_DEFINE_ERROR(InsufficientData)

#undef CLAIMBRUSH_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace claimbrush
