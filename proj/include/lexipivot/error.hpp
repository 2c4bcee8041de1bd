#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace lexipivot {

enum class ErrorKind {
  shape,
  numeric,
  bounds,
  state,
  determinism,
  config,
  format,
  input,
  lookup,
  no_visual,
  evaluation,
  io,
};

std::string_view to_string(ErrorKind kind) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

template <ErrorKind Kind>
class KindError : public Error {
 public:
  explicit KindError(const std::string& message) : Error(Kind, message) {}
};

using ShapeError = KindError<ErrorKind::shape>;
using NumericError = KindError<ErrorKind::numeric>;
using BoundsError = KindError<ErrorKind::bounds>;
using StateError = KindError<ErrorKind::state>;
using DeterminismError = KindError<ErrorKind::determinism>;
using ConfigError = KindError<ErrorKind::config>;
using FormatError = KindError<ErrorKind::format>;
using InputError = KindError<ErrorKind::input>;
using LookupError = KindError<ErrorKind::lookup>;
using NoVisualError = KindError<ErrorKind::no_visual>;
using EvaluationError = KindError<ErrorKind::evaluation>;
using IoError = KindError<ErrorKind::io>;

}  // namespace lexipivot
