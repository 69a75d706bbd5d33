#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "itemgrad/rnn.hpp"

namespace itemgrad {

/// Gradients of a batch's total loss with respect to each weight matrix.
struct GradientSet {
  Matrix dU;
  Matrix dW;
  Matrix dV;

  static GradientSet zeros_like(const ModelParams& params);
  bool all_finite() const { return dU.allFinite() && dW.allFinite() && dV.allFinite(); }
};

/// The dW contribution of every (loss origin t, step j) pair with
/// j <= t and t - j <= horizon. Indices are 0-based batch positions.
///
/// Entries are addressed either by (t, j) or by (t, d) with distance
/// d = t - j; the by-distance layout is what gets serialized.
class ItemizedGradients {
 public:
  ItemizedGradients(std::size_t length, std::size_t horizon);

  std::size_t length() const noexcept { return length_; }
  std::size_t horizon() const noexcept { return horizon_; }

  /// Number of recorded steps for origin t: min(horizon, t) + 1.
  std::size_t steps_for(std::size_t origin) const;
  bool contains(std::size_t origin, std::size_t step) const noexcept;

  const Matrix& contrib(std::size_t origin, std::size_t step) const;
  double magnitude(std::size_t origin, std::size_t step) const;

  /// Magnitudes for origin t indexed by distance d = t - j.
  std::span<const double> magnitudes_by_distance(std::size_t origin) const;
  const std::vector<std::vector<double>>& magnitude_table() const noexcept { return magnitudes_; }

  /// Sum of all recorded contributions, origin-major, nearest step first.
  Matrix sum() const;

 private:
  friend class ItemizedBuilder;
  void check_origin(std::size_t origin) const;

  std::size_t length_;
  std::size_t horizon_;
  std::vector<std::vector<Matrix>> contribs_;  // [t][d]
  std::vector<std::vector<double>> magnitudes_;  // [t][d]
};

struct ItemizedResult {
  GradientSet gradients;
  ItemizedGradients itemized;
};

/// delta_t = V^T (p_t - onehot(target_t)) for every step: the gradient of
/// L_t with respect to h_t.
std::vector<Vector> loss_head_gradients(const ForwardTrace& trace, const ModelParams& params);

/// Single-pass BPTT. O(n H (H + C)).
GradientSet bptt_standard(const ForwardTrace& trace, const ModelParams& params);

/// Itemized BPTT. For each origin t the loss-head gradient is walked back
/// at most `horizon` steps; each visited step j yields the outer product
/// (d_j * tanh'(a_j)) h_{j-1}^T. The returned dW is the sum of those
/// contributions, so it equals bptt_standard's dW when horizon >= n - 1.
/// dU and dV are always the untruncated single-pass values.
/// Throws ConfigError for a negative horizon.
ItemizedResult bptt_itemized(const ForwardTrace& trace, const ModelParams& params, int horizon);

/// Mean absolute entry.
double aggregate_magnitude(const Matrix& m);

/// Ratios m[d] / m[d-1] for d = 1..size-1, i.e. magnitude(t, j) / magnitude(t, j+1)
/// walking back from the origin. x/0 is +inf for x > 0 and 1 for x = 0.
std::vector<double> decay_ratios(std::span<const double> by_distance);
std::vector<double> decay_ratios(const ItemizedGradients& item, std::size_t origin);

/// Count of leading magnitudes (nearest step first) that are >= epsilon.
std::size_t gradient_horizon(std::span<const double> by_distance, double epsilon);
std::size_t gradient_horizon(const ItemizedGradients& item, std::size_t origin, double epsilon);

}  // namespace itemgrad
