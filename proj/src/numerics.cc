#include "protaugment/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace protaugment {
namespace {

void require_same_dim(std::span<const double> a, std::span<const double> b, const char* op) {
  if (a.size() != b.size()) {
    throw std::invalid_argument(std::string(op) + ": dimension mismatch (" +
                                std::to_string(a.size()) + " vs " + std::to_string(b.size()) + ")");
  }
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double squared_euclidean(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b, "squared_euclidean");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    const double diff = a[i] - b[i];
    s += diff * diff;
  }
  return s;
}

double cosine_distance(std::span<const double> a, std::span<const double> b) {
  require_same_dim(a, b, "cosine_distance");
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine_distance: zero-norm input");
  const double cos = std::clamp(dot(a, b) / (na * nb), -1.0, 1.0);
  return 1.0 - cos;
}

double distance(DistanceKind kind, std::span<const double> a, std::span<const double> b) {
  return kind == DistanceKind::kCosine ? cosine_distance(a, b) : squared_euclidean(a, b);
}

void distance_backward(DistanceKind kind, std::span<const double> a, std::span<const double> b,
                       double upstream, std::span<double> grad_a, std::span<double> grad_b) {
  require_same_dim(a, b, "distance_backward");
  if (grad_a.size() != a.size() || grad_b.size() != b.size()) {
    throw std::invalid_argument("distance_backward: gradient buffer mismatch");
  }
  if (kind == DistanceKind::kSquaredEuclidean) {
    for (std::size_t i = 0; i < a.size(); ++i) {
      const double g = 2.0 * (a[i] - b[i]) * upstream;
      grad_a[i] += g;
      grad_b[i] -= g;
    }
    return;
  }
  const double na = std::sqrt(dot(a, a));
  const double nb = std::sqrt(dot(b, b));
  if (na == 0.0 || nb == 0.0) throw std::invalid_argument("cosine_distance: zero-norm input");
  const double ab = dot(a, b);
  const double inv = 1.0 / (na * nb);
  // d(1 - ab/(na nb))/da = -(b/(na nb) - ab a/(na^3 nb))
  for (std::size_t i = 0; i < a.size(); ++i) {
    grad_a[i] -= upstream * (b[i] * inv - ab * a[i] * inv / (na * na));
    grad_b[i] -= upstream * (a[i] * inv - ab * b[i] * inv / (nb * nb));
  }
}

Vector softmax_over_neg_distances(std::span<const double> dists) {
  if (dists.empty()) throw std::invalid_argument("softmax_over_neg_distances: empty input");
  double max_logit = -dists[0];
  for (double d : dists) {
    if (!std::isfinite(d)) throw std::invalid_argument("softmax_over_neg_distances: non-finite distance");
    max_logit = std::max(max_logit, -d);
  }
  Vector out(dists.size());
  double total = 0.0;
  for (std::size_t i = 0; i < dists.size(); ++i) {
    out[i] = std::exp(-dists[i] - max_logit);
    total += out[i];
  }
  for (double& p : out) p /= total;
  return out;
}

double cross_entropy(std::span<const double> probs, std::size_t target) {
  if (target >= probs.size()) throw std::out_of_range("cross_entropy: target out of range");
  return -std::log(std::max(probs[target], kProbabilityFloor));
}

Vector cross_entropy_grad_wrt_distances(std::span<const double> probs, std::size_t target) {
  if (target >= probs.size()) throw std::out_of_range("cross_entropy: target out of range");
  Vector grad(probs.size(), 0.0);
  if (probs[target] < kProbabilityFloor) return grad;
  // L = d_t + log sum_c exp(-d_c)
  for (std::size_t c = 0; c < probs.size(); ++c) grad[c] = (c == target ? 1.0 : 0.0) - probs[c];
  return grad;
}

Vector finite_difference_gradient(const ScalarFunction& loss_fn, std::span<const double> params,
                                  double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("finite_difference_gradient: eps must be positive");
  Vector probe(params.begin(), params.end());
  Vector grad(params.size());
  for (std::size_t i = 0; i < probe.size(); ++i) {
    const double saved = probe[i];
    probe[i] = saved + eps;
    const double plus = loss_fn(probe);
    probe[i] = saved - eps;
    const double minus = loss_fn(probe);
    probe[i] = saved;
    if (!std::isfinite(plus) || !std::isfinite(minus)) {
      throw std::runtime_error("finite_difference_gradient: non-finite loss at parameter " +
                               std::to_string(i));
    }
    grad[i] = (plus - minus) / (2.0 * eps);
  }
  return grad;
}

GradCheckReport compare_gradients(std::span<const double> analytic, std::span<const double> numeric) {
  require_same_dim(analytic, numeric, "compare_gradients");
  GradCheckReport report;
  report.per_parameter_errors.reserve(analytic.size());
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    const double scale = std::max({std::abs(analytic[i]), std::abs(numeric[i]), kGradCheckFloor});
    const double err = std::abs(analytic[i] - numeric[i]) / scale;
    report.per_parameter_errors.push_back(err);
    report.max_relative_error = std::max(report.max_relative_error, err);
  }
  return report;
}

}  // namespace protaugment
