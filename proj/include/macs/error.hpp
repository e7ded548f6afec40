#pragma once

#include <stdexcept>
#include <string>

namespace macs {

// Root of every error raised by the library. The CLI maps these to exit code 2.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
  virtual const char* kind() const noexcept { return "Error"; }
};

#define MACS_DEFINE_ERROR(Name)                                  \
  class Name : public Error {                                    \
   public:                                                       \
    using Error::Error;                                          \
    const char* kind() const noexcept override { return #Name; } \
  }

MACS_DEFINE_ERROR(DimensionError);
MACS_DEFINE_ERROR(ActionBoundsError);
MACS_DEFINE_ERROR(InvalidReward);
MACS_DEFINE_ERROR(ConfigError);
MACS_DEFINE_ERROR(EmptyDataset);
MACS_DEFINE_ERROR(RangeError);
MACS_DEFINE_ERROR(NumericsError);
MACS_DEFINE_ERROR(VersionError);
MACS_DEFINE_ERROR(CorruptCheckpoint);
MACS_DEFINE_ERROR(InsufficientData);
MACS_DEFINE_ERROR(SupportError);
MACS_DEFINE_ERROR(StateMismatch);
MACS_DEFINE_ERROR(ExpertTooWeak);

#undef MACS_DEFINE_ERROR

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

  std::size_t line() const { return line_; }
  const char* kind() const noexcept override { return "ParseError"; }

 private:
  std::size_t line_;
};

}  // namespace macs
