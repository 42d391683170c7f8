#ifndef LATENTW_ERROR_HPP
#define LATENTW_ERROR_HPP

#include <stdexcept>
#include <string>

namespace latentw {

/// Failure raised by the library. `code()` is a stable machine-readable tag
/// (e.g. "SpaceTooLarge"); `is_io()` separates file-system problems from
/// invalid input so the CLI can map them onto distinct exit codes.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& message, bool io = false)
      : std::runtime_error(message), code_(std::move(code)), io_(io) {}

  const std::string& code() const noexcept { return code_; }
  bool is_io() const noexcept { return io_; }

 private:
  std::string code_;
  bool io_;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& reason)
      : Error("ParseError", "line " + std::to_string(line) + ": " + reason), line_(line) {}

  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

inline Error io_error(const std::string& message) { return Error("IOError", message, true); }

}  // namespace latentw

#endif  // LATENTW_ERROR_HPP
