#pragma once

#include <stdexcept>
#include <string>

namespace podtann {

// Base class for toolkit errors. Subclasses map onto CLI exit codes:
// config/schema 2, simulation 3, training 4, artifact mismatch 5.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct ConfigError : Error {
  using Error::Error;
};

// Malformed or inconsistent input files.
struct SchemaError : ConfigError {
  using ConfigError::ConfigError;
};
struct ShapeError : ConfigError {
  using ConfigError::ConfigError;
};
struct UnitError : ConfigError {
  using ConfigError::ConfigError;
};

struct SimulationError : Error {
  using Error::Error;
};
struct NonConvergence : SimulationError {
  using SimulationError::SimulationError;
};
struct CapUnreachable : SimulationError {
  using SimulationError::SimulationError;
};
struct CapacityExceeded : SimulationError {
  using SimulationError::SimulationError;
};

struct TrainingError : Error {
  using Error::Error;
};
struct Diverged : TrainingError {
  using TrainingError::TrainingError;
};

struct LayoutMismatch : Error {
  using Error::Error;
};
struct RankTooLarge : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};
struct ModeMismatch : Error {
  using Error::Error;
};
struct DegenerateField : Error {
  using Error::Error;
};
struct GridMismatch : Error {
  using Error::Error;
};

// Fingerprint chain violation between dataset, basis and model files.
struct ArtifactMismatch : Error {
  using Error::Error;
};

} // namespace podtann
