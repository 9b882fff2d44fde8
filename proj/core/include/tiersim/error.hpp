// Copyright (c) 2026 tiersim contributors
// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <utility>

namespace tiersim {

/// Base class for every error thrown by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A domain object violates one of its declared invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// Least-squares fit attempted on samples with a single distinct x value.
class DegenerateFit : public Error {
 public:
  using Error::Error;
};

/// Deadline-driven policy (EDF/LSTF) applied to a request without a deadline.
class MissingDeadline : public Error {
 public:
  using Error::Error;
};

/// A reservation can never be satisfied (bytes exceed tier capacity).
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// Dataset profile name not among the built-in profiles.
class UnknownProfile : public Error {
 public:
  using Error::Error;
};

/// Experiment configuration rejected; carries the offending field path.
class ConfigError : public Error {
 public:
  ConfigError(std::string field, const std::string& message)
      : Error(field.empty() ? message : field + ": " + message),
        field_(std::move(field)) {}

  const std::string& field() const noexcept { return field_; }

 private:
  std::string field_;
};

/// Summary requested over a trace in which some request never finished.
class IncompleteTrace : public Error {
 public:
  using Error::Error;
};

/// Throughput window longer than the trace it is applied to.
class WindowTooLong : public Error {
 public:
  using Error::Error;
};

}  // namespace tiersim
