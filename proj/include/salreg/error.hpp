#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace salreg {

/// Malformed or truncated PNM / checkpoint input. Carries the byte offset
/// at which parsing stopped.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (at byte " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Dimension or channel mismatch between inputs.
class ShapeError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// The regression system is singular or too ill-conditioned to trust.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, double condition)
      : std::runtime_error(what + " (condition estimate " + std::to_string(condition) + ")"),
        condition_(condition) {}
  double condition() const noexcept { return condition_; }

 private:
  double condition_;
};

/// Training produced a non-finite loss.
class DivergenceError : public std::runtime_error {
 public:
  DivergenceError(const std::string& what, double last_finite_loss)
      : std::runtime_error(what), last_finite_loss_(last_finite_loss) {}
  double last_finite_loss() const noexcept { return last_finite_loss_; }

 private:
  double last_finite_loss_;
};

}  // namespace salreg
