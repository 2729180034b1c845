#pragma once

#include <stdexcept>
#include <string>

namespace koopctl {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Shapes of inputs do not agree.
class DimensionError : public Error {
 public:
  using Error::Error;
};

// Input violates a structural requirement (dictionary layout, region signs, ...).
class ValidationError : public Error {
 public:
  using Error::Error;
};

// NaN/Inf or a breakdown inside a numerical routine.
class NumericalError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace koopctl
