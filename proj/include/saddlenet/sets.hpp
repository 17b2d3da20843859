#pragma once

#include <cstdint>
#include <memory>
#include <variant>
#include <vector>

#include "saddlenet/common.hpp"
#include "saddlenet/rng.hpp"

namespace saddlenet {

/// Default absolute tolerance for membership tests.
inline constexpr double kMembershipTol = 1e-12;

/// Closed convex set with an exact Euclidean projection.
///
/// Four variants are supported: the whole space, an axis-aligned box, a
/// Euclidean ball, and a Cartesian product of other sets. Values are
/// immutable once built; all member functions are safe to call concurrently.
class ConvexSet {
 public:
  struct WholeSpace {
    Eigen::Index dim;
  };
  struct Box {
    Vector lower;
    Vector upper;
  };
  struct Ball {
    Vector center;
    double radius;
  };
  struct Product {
    std::vector<ConvexSet> factors;
    Eigen::Index dim;
  };

  static ConvexSet whole_space(Eigen::Index dim);
  /// Throws ValidationError when lower[i] > upper[i] for some i.
  static ConvexSet box(Vector lower, Vector upper);
  /// Same bounds [lo, hi] on every one of `dim` coordinates.
  static ConvexSet uniform_box(Eigen::Index dim, double lo, double hi);
  static ConvexSet ball(Vector center, double radius);
  static ConvexSet product(std::vector<ConvexSet> factors);

  Eigen::Index dim() const;

  Vector project(const Vector& p) const;
  bool contains(const Vector& p, double tol = kMembershipTol) const;

  /// True when every factor is a box or ball (no unbounded direction).
  bool bounded() const;

  /// Axis-aligned bounding region used for sampling. Unbounded coordinates get
  /// [center - half_width, center + half_width] with center 0.
  std::pair<Vector, Vector> sampling_bounds(double half_width = 10.0) const;

  /// Uniform draw from the sampling bounds, projected into the set.
  Vector sample(Rng& rng, double half_width = 10.0) const;

  const auto& variant() const { return impl_->v; }

  bool is_whole_space() const { return std::holds_alternative<WholeSpace>(impl_->v); }
  bool is_box() const { return std::holds_alternative<Box>(impl_->v); }
  bool is_ball() const { return std::holds_alternative<Ball>(impl_->v); }
  bool is_product() const { return std::holds_alternative<Product>(impl_->v); }

 private:
  struct Impl {
    std::variant<WholeSpace, Box, Ball, Product> v;
  };
  explicit ConvexSet(std::variant<WholeSpace, Box, Ball, Product> v);

  std::shared_ptr<const Impl> impl_;
};

/// min over sampled q in `set` of g^T (q - p).
///
/// A value >= -tol certifies (approximately) the variational inequality
/// g^T (q - p) >= 0 for all q in the set. The probes are random points of the
/// sampling region (enlarged so that projections land on the boundary with
/// positive probability), plus the steepest-descent probes P(p - t g) for a
/// ladder of t, plus p itself. Throws ContractError when p is not in the set.
double normal_cone_residual(const ConvexSet& set, const Vector& p, const Vector& g, int probe_count,
                            std::uint64_t seed = 0x5eed);

}  // namespace saddlenet
