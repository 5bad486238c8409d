#pragma once

#include <stdexcept>
#include <string>

namespace intercept {

// Base for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class InvalidInput : public Error {
 public:
  using Error::Error;
};

// Not enough usable data (empty depth patch, histogram without peaks).
class NoData : public Error {
 public:
  using Error::Error;
};

// Collinear / coincident point sets and other rank-deficient fits.
class DegenerateGeometry : public Error {
 public:
  using Error::Error;
};

// Traversal direction could not be decided from the available points.
class UndecidedDirection : public Error {
 public:
  using Error::Error;
};

// Target at the follower origin, bearing is not defined.
class UndefinedBearing : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace intercept
