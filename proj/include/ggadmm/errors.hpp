#pragma once

#include <stdexcept>
#include <string>

namespace ggadmm {

// Base class for every error thrown by the library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// ---- topology ----
struct InvalidEdge : Error {
  using Error::Error;
};
struct NotConnected : Error {
  using Error::Error;
};
struct NotBipartite : Error {
  using Error::Error;
};

// ---- generic argument / shape problems ----
struct InvalidArgument : Error {
  using Error::Error;
};
struct DimensionMismatch : Error {
  using Error::Error;
};

// ---- data loading ----
struct InsufficientData : Error {
  using Error::Error;
};
struct SchemaError : Error {
  using Error::Error;
};
struct ParseError : Error {
  ParseError(const std::string& what, long line)
      : Error("line " + std::to_string(line) + ": " + what), line(line) {}
  long line;
};

// ---- numerics ----
struct NoConverge : Error {
  NoConverge(const std::string& what, int iters)
      : Error(what + " (after " + std::to_string(iters) + " iterations)"), iters(iters) {}
  int iters;
};
struct SingularSystem : Error {
  using Error::Error;
};
struct NonPositiveSeries : Error {
  using Error::Error;
};
struct MissingReference : Error {
  using Error::Error;
};

// ---- codec ----
struct BitBudgetExceeded : Error {
  using Error::Error;
};
struct CodeOutOfRange : Error {
  using Error::Error;
};
struct MalformedPayload : Error {
  using Error::Error;
};

// ---- configuration ----
struct ConfigError : Error {
  using Error::Error;
};
struct ConfigParseError : Error {
  ConfigParseError(const std::string& what, long line)
      : Error("line " + std::to_string(line) + ": " + what), line(line) {}
  long line;
};
struct ConfigValidationError : Error {
  using Error::Error;
};

}  // namespace ggadmm
