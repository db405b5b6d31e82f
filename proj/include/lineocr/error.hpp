// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace lineocr {

/// Base of every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Tensor extents or layer parameters do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// An argument lies outside its documented range.
class ParamError : public Error {
 public:
  using Error::Error;
};

/// An operation was called in the wrong state (e.g. backward without forward).
class StateError : public Error {
 public:
  using Error::Error;
};

/// Malformed or missing input data: images, ground truth, datasets.
class DataError : public Error {
 public:
  using Error::Error;
};

/// A CTC target cannot be aligned to the available number of timesteps.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

/// Network spec string could not be parsed.
class SpecParseError : public Error {
 public:
  SpecParseError(const std::string& token, std::size_t position, const std::string& reason)
      : Error("spec parse error at token " + std::to_string(position) + " '" + token + "': " + reason),
        token_(token),
        position_(position) {}

  const std::string& token() const noexcept { return token_; }
  /// 1-based index of the offending token.
  std::size_t position() const noexcept { return position_; }

 private:
  std::string token_;
  std::size_t position_;
};

}  // namespace lineocr
