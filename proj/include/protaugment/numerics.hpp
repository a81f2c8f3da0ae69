#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

namespace protaugment {

using Vector = std::vector<double>;

enum class DistanceKind { kSquaredEuclidean, kCosine };

/// Sum of squared coordinate differences. Throws on dimension mismatch.
double squared_euclidean(std::span<const double> a, std::span<const double> b);

/// 1 - cos(a, b), in [0, 2]. Throws when either input has zero norm.
double cosine_distance(std::span<const double> a, std::span<const double> b);

double distance(DistanceKind kind, std::span<const double> a, std::span<const double> b);

/// Accumulates upstream * d(distance)/da into grad_a and upstream * d(distance)/db into grad_b.
void distance_backward(DistanceKind kind, std::span<const double> a, std::span<const double> b,
                       double upstream, std::span<double> grad_a, std::span<double> grad_b);

/// softmax(-dists), stabilised by subtracting the largest logit.
Vector softmax_over_neg_distances(std::span<const double> dists);

inline constexpr double kProbabilityFloor = 1e-12;

/// -log(probs[target]) with probs clamped at kProbabilityFloor.
double cross_entropy(std::span<const double> probs, std::size_t target);

/// Gradient of cross_entropy(softmax(-dists), target) with respect to dists.
/// Zero when the target probability sits on the clamp.
Vector cross_entropy_grad_wrt_distances(std::span<const double> probs, std::size_t target);

using ScalarFunction = std::function<double(std::span<const double>)>;

/// Central differences (L(x + eps e_i) - L(x - eps e_i)) / (2 eps) for every coordinate.
Vector finite_difference_gradient(const ScalarFunction& loss_fn, std::span<const double> params,
                                  double eps);

struct GradCheckReport {
  double max_relative_error = 0.0;
  std::vector<double> per_parameter_errors;
};

// |a - n| / max(|a|, |n|, floor)
inline constexpr double kGradCheckFloor = 1e-6;

GradCheckReport compare_gradients(std::span<const double> analytic, std::span<const double> numeric);

}  // namespace protaugment
