#pragma once

#include <stdexcept>
#include <string>

namespace csisense {

// Base class for all library errors. Subclasses map onto the failure
// categories surfaced by the CLI (config, shape, data, io, ...).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Input too short / malformed for the requested transform geometry.
class ShapeError : public Error {
 public:
  using Error::Error;
};

// Invalid values (negative amplitudes, non-finite features, unknown ids).
class DataError : public Error {
 public:
  using Error::Error;
};

class FitError : public Error {
 public:
  using Error::Error;
};

class SplitError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

// File exists but its contents do not match the declared layout.
class FormatError : public Error {
 public:
  using Error::Error;
};

class MetricError : public Error {
 public:
  using Error::Error;
};

// Aligned multi-AP input is incomplete or inconsistent.
class AlignmentError : public Error {
 public:
  using Error::Error;
};

class ArchiveError : public Error {
 public:
  using Error::Error;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

}  // namespace csisense
