#pragma once

#include <stdexcept>
#include <string>

namespace hetflow {

/// Bad run/cluster/workload configuration detected before execution.
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Malformed or out-of-contract input data (files, sizes, ranges).
class InputError : public std::runtime_error {
public:
  explicit InputError(const std::string& what) : std::runtime_error(what) {}
};

/// Violation of the sender/receiver/queue coordination rules.
class ProtocolError : public std::runtime_error {
public:
  explicit ProtocolError(const std::string& what) : std::runtime_error(what) {}
};

/// Regression input that cannot be fitted (too few or degenerate points).
class FitError : public std::runtime_error {
public:
  explicit FitError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace hetflow
