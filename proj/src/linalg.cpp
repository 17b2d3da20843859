#include "saddlenet/linalg.hpp"

#include <cmath>

namespace saddlenet {

PowerIterationResult power_iteration(const std::function<Vector(const Vector&)>& apply, Vector start, double tol,
                                     int max_iters) {
  PowerIterationResult result;
  require(start.size() > 0 && start.norm() > 0.0, "power_iteration: start vector must be nonzero");
  Vector v = start.normalized();
  for (int it = 0; it < max_iters; ++it) {
    const Vector av = apply(v);
    const double lambda = v.dot(av);
    result.value = lambda;
    result.iterations = it + 1;
    const double err = (av - lambda * v).norm();
    if (err <= tol * std::abs(lambda) || av.norm() == 0.0) {
      result.converged = true;
      result.vector = v;
      return result;
    }
    v = av.normalized();
  }
  result.vector = v;
  return result;
}

double spectral_norm(const Matrix& b, int max_iters, double tol) {
  if (b.size() == 0) return 0.0;
  const Vector start = Vector::Ones(b.cols());
  const auto r = power_iteration([&](const Vector& v) -> Vector { return b.transpose() * (b * v); }, start, tol,
                                 max_iters);
  return std::sqrt(std::max(r.value, 0.0));
}

}  // namespace saddlenet
