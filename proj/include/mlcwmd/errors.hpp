#pragma once

#include <stdexcept>
#include <string>

namespace mlcwmd {

// Bad input files, manifests, or cell values; message carries row/column.
struct DataError : std::runtime_error {
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Estimation failures that are fatal for a whole run.
struct FitError : std::runtime_error {
  explicit FitError(const std::string& msg) : std::runtime_error(msg) {}
};

// Operation asked for something this configuration cannot do
// (e.g. exact Ising enumeration beyond the state cap).
struct CapabilityError : std::runtime_error {
  explicit CapabilityError(const std::string& msg) : std::runtime_error(msg) {}
};

// An EM start hit an undersized/degenerate cluster; the start is aborted
// and re-drawn rather than failing the run.
struct RestartRequired : std::runtime_error {
  explicit RestartRequired(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace mlcwmd
