#pragma once

#include <stdexcept>
#include <string>

namespace umsched {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A job was placed on a machine where its processing time is infinite.
class InfeasiblePlacement : public Error {
 public:
  using Error::Error;
};

/// The time-indexed horizon exceeds the configured cap.
class HorizonTooLarge : public Error {
 public:
  using Error::Error;
};

class LpInfeasible : public Error {
 public:
  using Error::Error;
};

/// A structural invariant failed; always indicates a bug upstream.
class InvariantViolation : public Error {
 public:
  using Error::Error;
};

/// Enumeration size above the configured cap.
class CapExceeded : public Error {
 public:
  using Error::Error;
};

}  // namespace umsched
