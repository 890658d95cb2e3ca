#pragma once

#include <stdexcept>
#include <string>

namespace vslam {

/// Base class for all library errors.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Malformed bytes in an on-disk artifact (bad magic, truncation, ...).
struct FormatError : Error {
  using Error::Error;
};

/// Structurally valid input whose content is unusable (missing file,
/// non-monotonic timestamps, empty association, ...).
struct DataError : Error {
  using Error::Error;
};

/// Bad configuration key, value, or combination.
struct ConfigError : Error {
  using Error::Error;
};

/// Geometric precondition violated (non-positive depth, point behind
/// camera, degenerate point configuration).
struct GeometryError : Error {
  using Error::Error;
};

}  // namespace vslam
