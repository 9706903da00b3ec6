#pragma once

#include <stdexcept>
#include <string>

namespace feel {

/// Base for every error raised by the library. `kind()` is a stable short
/// tag used in the CLI's machine-readable error output.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
  virtual const char* kind() const noexcept = 0;
};

#define FEEL_DEFINE_ERROR(Name, tag)                        \
  class Name : public Error {                               \
   public:                                                  \
    using Error::Error;                                     \
    const char* kind() const noexcept override { return tag; } \
  };

FEEL_DEFINE_ERROR(InvalidArgument, "invalid_argument")
FEEL_DEFINE_ERROR(FormatError, "format_error")
FEEL_DEFINE_ERROR(CorruptFileError, "corrupt_file")
FEEL_DEFINE_ERROR(ValidationError, "validation_error")
FEEL_DEFINE_ERROR(IoError, "io_error")

#undef FEEL_DEFINE_ERROR

/// Parse failure in a line-oriented input; carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : Error("line " + std::to_string(line) + ": " + what), line_(line) {}
  const char* kind() const noexcept override { return "parse_error"; }
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace feel
