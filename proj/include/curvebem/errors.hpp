#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "curvebem/types.hpp"

namespace curvebem {

enum class ErrorCode {
  invalid_argument = 1,
  projection_failure,
  invalid_mesh,
  degenerate_element,
  singular_evaluation,
  singular_system,
  not_converged,
  domain_error,
  near_field,
  range_error,
  io_error,
  internal,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what) : std::runtime_error(what), code_(code) {}
  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorCode::invalid_argument, what) {}
};

class ProjectionError : public Error {
 public:
  ProjectionError(const std::string& what, const Vec3& point)
      : Error(ErrorCode::projection_failure, what), point_(point) {}
  const Vec3& point() const noexcept { return point_; }

 private:
  Vec3 point_;
};

class InvalidMeshError : public Error {
 public:
  InvalidMeshError(const std::string& what, int element)
      : Error(ErrorCode::invalid_mesh, what), element_(element) {}
  int element() const noexcept { return element_; }

 private:
  int element_;
};

class DegenerateElementError : public Error {
 public:
  DegenerateElementError(const std::string& what, int element)
      : Error(ErrorCode::degenerate_element, what), element_(element) {}
  int element() const noexcept { return element_; }

 private:
  int element_;
};

class SingularSystemError : public Error {
 public:
  explicit SingularSystemError(const std::string& what) : Error(ErrorCode::singular_system, what) {}
};

class NotConvergedError : public Error {
 public:
  NotConvergedError(const std::string& what, std::vector<double> history)
      : Error(ErrorCode::not_converged, what), history_(std::move(history)) {}
  const std::vector<double>& residual_history() const noexcept { return history_; }

 private:
  std::vector<double> history_;
};

}  // namespace curvebem
