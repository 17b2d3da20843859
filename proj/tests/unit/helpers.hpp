#pragma once

#include <initializer_list>

#include <Eigen/Dense>

#include "doctest.h"
#include "saddlenet/saddle.hpp"
#include "saddlenet/sets.hpp"

namespace testing {

using saddlenet::Matrix;
using saddlenet::Vector;

inline Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Eigen::Index>(v.size()));
  Eigen::Index i = 0;
  for (double x : v) out[i++] = x;
  return out;
}

inline double max_abs(const Vector& a, const Vector& b) { return (a - b).cwiseAbs().maxCoeff(); }

// f(x, y) = a/2 ||x||^2 + x^T B y - b/2 ||y||^2, written out independently of
// the catalog so tests do not grade the library with its own builders.
inline saddlenet::SaddleProblem quadratic_bilinear(const Matrix& B, double a, double b,
                                                   saddlenet::ConvexSet set_x, saddlenet::ConvexSet set_y) {
  saddlenet::SaddleProblem p;
  p.name = "test";
  p.dim_x = B.rows();
  p.dim_y = B.cols();
  p.set_x = std::move(set_x);
  p.set_y = std::move(set_y);
  p.value = [B, a, b](const Vector& x, const Vector& y) {
    return 0.5 * a * x.squaredNorm() + x.dot(B * y) - 0.5 * b * y.squaredNorm();
  };
  p.grad_x = [B, a](const Vector& x, const Vector& y) -> Vector { return a * x + B * y; };
  p.grad_y = [B, b](const Vector& x, const Vector& y) -> Vector { return B.transpose() * x - b * y; };
  const double nb = Eigen::JacobiSVD<Matrix>(B).singularValues()(0);
  p.lipschitz = {a, nb, nb, b};
  return p;
}

inline saddlenet::SaddleProblem quadratic_bilinear(const Matrix& B, double a = 0.0, double b = 0.0) {
  return quadratic_bilinear(B, a, b, saddlenet::ConvexSet::whole_space(B.rows()),
                            saddlenet::ConvexSet::whole_space(B.cols()));
}

inline Matrix scalar(double v) { return Matrix::Constant(1, 1, v); }

}  // namespace testing
