#include "saddlenet/sets.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace saddlenet {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

void check_dim(const ConvexSet& set, const Vector& p) {
  if (p.size() != set.dim()) {
    throw ContractError("dimension mismatch: set has dim " + std::to_string(set.dim()) + ", point has " +
                        std::to_string(p.size()));
  }
}

}  // namespace

ConvexSet::ConvexSet(std::variant<WholeSpace, Box, Ball, Product> v)
    : impl_(std::make_shared<const Impl>(Impl{std::move(v)})) {}

ConvexSet ConvexSet::whole_space(Eigen::Index dim) {
  require(dim >= 0, "whole_space: negative dimension");
  return ConvexSet(WholeSpace{dim});
}

ConvexSet ConvexSet::box(Vector lower, Vector upper) {
  if (lower.size() != upper.size()) throw ValidationError("box: lower/upper sizes differ");
  for (Eigen::Index i = 0; i < lower.size(); ++i) {
    if (!(lower[i] <= upper[i])) {
      throw ValidationError("box: lower[" + std::to_string(i) + "] = " + std::to_string(lower[i]) +
                            " exceeds upper = " + std::to_string(upper[i]));
    }
  }
  return ConvexSet(Box{std::move(lower), std::move(upper)});
}

ConvexSet ConvexSet::uniform_box(Eigen::Index dim, double lo, double hi) {
  return box(Vector::Constant(dim, lo), Vector::Constant(dim, hi));
}

ConvexSet ConvexSet::ball(Vector center, double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw ValidationError("ball: radius must be finite and >= 0");
  return ConvexSet(Ball{std::move(center), radius});
}

ConvexSet ConvexSet::product(std::vector<ConvexSet> factors) {
  Eigen::Index dim = 0;
  for (const auto& f : factors) dim += f.dim();
  return ConvexSet(Product{std::move(factors), dim});
}

Eigen::Index ConvexSet::dim() const {
  return std::visit(overloaded{
                        [](const WholeSpace& s) { return s.dim; },
                        [](const Box& s) { return s.lower.size(); },
                        [](const Ball& s) { return s.center.size(); },
                        [](const Product& s) { return s.dim; },
                    },
                    impl_->v);
}

Vector ConvexSet::project(const Vector& p) const {
  check_dim(*this, p);
  return std::visit(overloaded{
                        [&](const WholeSpace&) -> Vector { return p; },
                        [&](const Box& s) -> Vector { return p.cwiseMax(s.lower).cwiseMin(s.upper); },
                        [&](const Ball& s) -> Vector {
                          const Vector offset = p - s.center;
                          const double r = offset.norm();
                          if (r <= s.radius) return p;
                          return s.center + (s.radius / r) * offset;
                        },
                        [&](const Product& s) -> Vector {
                          Vector out(p.size());
                          Eigen::Index at = 0;
                          for (const auto& f : s.factors) {
                            const auto n = f.dim();
                            out.segment(at, n) = f.project(p.segment(at, n));
                            at += n;
                          }
                          return out;
                        },
                    },
                    impl_->v);
}

bool ConvexSet::contains(const Vector& p, double tol) const {
  check_dim(*this, p);
  require(tol >= 0.0, "contains: negative tolerance");
  return std::visit(overloaded{
                        [&](const WholeSpace&) { return p.allFinite(); },
                        [&](const Box& s) {
                          for (Eigen::Index i = 0; i < p.size(); ++i) {
                            if (!(p[i] >= s.lower[i] - tol && p[i] <= s.upper[i] + tol)) return false;
                          }
                          return true;
                        },
                        [&](const Ball& s) { return (p - s.center).norm() <= s.radius + tol; },
                        [&](const Product& s) {
                          Eigen::Index at = 0;
                          for (const auto& f : s.factors) {
                            const auto n = f.dim();
                            if (!f.contains(p.segment(at, n), tol)) return false;
                            at += n;
                          }
                          return true;
                        },
                    },
                    impl_->v);
}

bool ConvexSet::bounded() const {
  return std::visit(overloaded{
                        [](const WholeSpace& s) { return s.dim == 0; },
                        [](const Box& s) { return s.lower.allFinite() && s.upper.allFinite(); },
                        [](const Ball&) { return true; },
                        [](const Product& s) {
                          return std::all_of(s.factors.begin(), s.factors.end(),
                                             [](const ConvexSet& f) { return f.bounded(); });
                        },
                    },
                    impl_->v);
}

std::pair<Vector, Vector> ConvexSet::sampling_bounds(double half_width) const {
  return std::visit(
      overloaded{
          [&](const WholeSpace& s) -> std::pair<Vector, Vector> {
            return {Vector::Constant(s.dim, -half_width), Vector::Constant(s.dim, half_width)};
          },
          [&](const Box& s) -> std::pair<Vector, Vector> {
            Vector lo = s.lower, hi = s.upper;
            for (Eigen::Index i = 0; i < lo.size(); ++i) {
              if (!std::isfinite(lo[i])) lo[i] = std::isfinite(hi[i]) ? hi[i] - 2 * half_width : -half_width;
              if (!std::isfinite(hi[i])) hi[i] = lo[i] + 2 * half_width;
            }
            return {lo, hi};
          },
          [&](const Ball& s) -> std::pair<Vector, Vector> {
            return {s.center.array() - s.radius, s.center.array() + s.radius};
          },
          [&](const Product& s) -> std::pair<Vector, Vector> {
            Vector lo(s.dim), hi(s.dim);
            Eigen::Index at = 0;
            for (const auto& f : s.factors) {
              auto [flo, fhi] = f.sampling_bounds(half_width);
              lo.segment(at, f.dim()) = flo;
              hi.segment(at, f.dim()) = fhi;
              at += f.dim();
            }
            return {lo, hi};
          },
      },
      impl_->v);
}

Vector ConvexSet::sample(Rng& rng, double half_width) const {
  auto [lo, hi] = sampling_bounds(half_width);
  Vector p(lo.size());
  for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = rng.uniform(lo[i], hi[i]);
  return project(p);
}

double normal_cone_residual(const ConvexSet& set, const Vector& p, const Vector& g, int probe_count,
                            std::uint64_t seed) {
  require(g.size() == p.size(), "normal_cone_residual: gradient dimension mismatch");
  if (!set.contains(p)) throw ContractError("normal_cone_residual: point is not in the set");
  require(probe_count >= 0, "normal_cone_residual: negative probe count");

  double best = 0.0;  // q = p
  auto consider = [&](const Vector& q) { best = std::min(best, g.dot(q - p)); };

  // Steepest-descent probes.
  const double gnorm = g.norm();
  if (gnorm > 0.0) {
    for (int e = -6; e <= 6; ++e) consider(set.project(p - std::pow(10.0, e) / gnorm * g));
  }

  // Random probes drawn from an enlarged sampling box, so a fixed fraction of
  // them is clamped onto the boundary by the projection.
  auto [lo, hi] = set.sampling_bounds();
  const Vector mid = 0.5 * (lo + hi);
  const Vector half = (0.5 * (hi - lo)).cwiseMax(1e-300);
  Rng rng(seed);
  Vector q(p.size());
  for (int k = 0; k < probe_count; ++k) {
    for (Eigen::Index i = 0; i < q.size(); ++i) q[i] = mid[i] + 2.0 * half[i] * rng.uniform(-1.0, 1.0);
    consider(set.project(q));
  }
  return best;
}

}  // namespace saddlenet
