#pragma once

#include <stdexcept>
#include <string>

namespace shom {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// eps out of (0, min(L1,L2)).
struct InvalidScaleError : Error {
  using Error::Error;
};

// Degenerate or out-of-cell obstacle polygons.
struct GeometryError : Error {
  using Error::Error;
};

// Mesh generation could not satisfy its quality / sizing contract.
struct MeshingError : Error {
  using Error::Error;
};

// Expression syntax error; carries the byte offset of the offending token.
struct ParseError : Error {
  ParseError(const std::string& msg, std::size_t offset)
      : Error(msg + " (byte " + std::to_string(offset) + ")"), byte_offset(offset) {}
  std::size_t byte_offset;
};

// Runtime evaluation failure (division by zero); carries the point.
struct EvalError : Error {
  EvalError(const std::string& msg, double a, double b)
      : Error(msg + " at (" + std::to_string(a) + ", " + std::to_string(b) + ")"),
        x(a), y(b) {}
  double x, y;
};

// Inconsistent boundary-condition assignment.
struct BcSpecError : Error {
  using Error::Error;
};

// Linear solver failure; message names the likely nullspace cause.
struct SolverError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  ConfigError(const std::string& msg, const std::string& pointer)
      : Error(msg + " [" + pointer + "]"), json_pointer(pointer) {}
  std::string json_pointer;
};

}  // namespace shom
