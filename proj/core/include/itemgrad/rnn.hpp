#pragma once

#include <Eigen/Dense>
#include <cstddef>
#include <span>
#include <vector>

#include "itemgrad/vocab.hpp"

namespace itemgrad {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Weights of a single-layer tanh RNN with softmax output.
///
///   a_t = U x_t + W h_{t-1}
///   h_t = tanh(a_t)
///   p_t = softmax(V h_t)
///
/// x_t is one-hot, so U x_t is column x_t of U.
struct ModelParams {
  Matrix U;  ///< H x C input projection
  Matrix W;  ///< H x H recurrent weights
  Matrix V;  ///< C x H output projection

  static ModelParams zeros(std::size_t hidden_size, std::size_t vocab_size);

  std::size_t hidden_size() const noexcept { return static_cast<std::size_t>(W.rows()); }
  std::size_t vocab_size() const noexcept { return static_cast<std::size_t>(V.rows()); }

  /// Throws ShapeError if U, W, V disagree on H or C.
  void check_shapes() const;
  /// Throws NumericError naming the first matrix holding NaN or Inf.
  void check_finite() const;
};

struct StepRecord {
  SymbolIndex input = 0;
  Vector pre_activation;  ///< a_t
  Vector hidden;          ///< h_t = tanh(a_t)
  Vector probs;           ///< p_t
  double loss = 0.0;      ///< -ln p_t[target]; 0 until a target is scored
  SymbolIndex predicted = 0;
};

struct ForwardTrace {
  Vector h0;
  std::vector<StepRecord> steps;
  std::vector<SymbolIndex> targets;
  double total_loss = 0.0;

  std::size_t length() const noexcept { return steps.size(); }
  /// h_{t-1} for 0-based step t; h0 for t = 0.
  const Vector& hidden_before(std::size_t t) const { return t == 0 ? h0 : steps[t - 1].hidden; }
  const Vector& final_hidden() const { return steps.empty() ? h0 : steps.back().hidden; }
};

/// Throws BoundsError unless index < size.
Vector one_hot(SymbolIndex index, std::size_t size);

/// Numerically stable softmax (max logit subtracted).
Vector softmax(const Vector& logits);

StepRecord forward_step(const ModelParams& params, const Vector& h_prev, SymbolIndex input);

/// Runs the recurrence over `inputs`, scoring each step against `targets`.
/// Throws ShapeError on empty or mismatched batches.
ForwardTrace forward_batch(const ModelParams& params, const Vector& h0, std::span<const SymbolIndex> inputs,
                           std::span<const SymbolIndex> targets);

}  // namespace itemgrad
