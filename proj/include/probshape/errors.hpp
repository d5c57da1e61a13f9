#pragma once

#include <stdexcept>
#include <string>

namespace probshape {

/// Invalid polygonal chain: degenerate edges, self-intersection, orientation flip.
class GeometryError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Acceptance-rejection or exit sampling could not produce a valid sample set.
class SamplingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// PINN training diverged (non-finite loss).
class TrainingError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace probshape
