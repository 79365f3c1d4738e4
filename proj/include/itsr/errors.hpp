#pragma once

#include <stdexcept>
#include <string>

namespace itsr {

// Invalid or inconsistent configuration (bad field values, malformed files).
class ConfigError : public std::runtime_error {
public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Operation called on an object in the wrong state (untrained model,
// stepping a terminal beam, ...).
class StateError : public std::runtime_error {
public:
  explicit StateError(const std::string& msg) : std::runtime_error(msg) {}
};

// Lookup of a strategy that has no entry (cost table, outcome table).
class UnknownStrategyError : public std::runtime_error {
public:
  explicit UnknownStrategyError(const std::string& msg) : std::runtime_error(msg) {}
};

// Training loss became non-finite.
class TrainingDivergenceError : public std::runtime_error {
public:
  explicit TrainingDivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

// Filesystem/environment failure (distinct exit code from config errors).
class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace itsr
