#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace penflow {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Invalid domain description (obstacle crossing the outer boundary, bad sizes).
class GeometryError : public Error {
 public:
  using Error::Error;
};

/// The mesher could not produce a valid triangulation.
class MeshGenerationError : public Error {
 public:
  using Error::Error;
};

/// Structural problems with a mesh or a request on it (empty region, unknown label).
class MeshError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// Input that admits no meaningful answer (e.g. a regression with one distinct x).
class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

struct NewtonReport {
  int iterations = 0;
  std::vector<double> residuals;  // max norm, entry 0 is the initial residual
  bool converged = false;
  double tolerance = 0.0;
};

/// Linear solve failure or Newton nonconvergence; carries the iteration history.
class SolverError : public Error {
 public:
  SolverError(const std::string& what, NewtonReport report = {}) : Error(what), report_(std::move(report)) {}
  const NewtonReport& report() const { return report_; }

 private:
  NewtonReport report_;
};

}  // namespace penflow
