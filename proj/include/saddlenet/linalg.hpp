#pragma once

#include <functional>

#include "saddlenet/common.hpp"

namespace saddlenet {

struct PowerIterationResult {
  double value = 0.0;
  Vector vector;
  int iterations = 0;
  bool converged = false;
};

/// Dominant eigenpair of a symmetric positive semidefinite operator.
/// Stops when ||A v - lambda v|| <= tol * |lambda|.
PowerIterationResult power_iteration(const std::function<Vector(const Vector&)>& apply, Vector start, double tol,
                                     int max_iters);

/// ||B||_2 by power iteration on B^T B (50 iterations, tolerance 1e-10 by default).
double spectral_norm(const Matrix& b, int max_iters = 50, double tol = 1e-10);

}  // namespace saddlenet
