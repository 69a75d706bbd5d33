#include "itemgrad/backprop.hpp"

#include <algorithm>
#include <limits>
#include <string>

#include "itemgrad/errors.hpp"

namespace itemgrad {

class ItemizedBuilder {
 public:
  static void put(ItemizedGradients& item, std::size_t origin, Matrix contrib) {
    item.magnitudes_[origin].push_back(aggregate_magnitude(contrib));
    item.contribs_[origin].push_back(std::move(contrib));
  }
};

namespace {

void check_trace(const ForwardTrace& trace, const ModelParams& params) {
  params.check_shapes();
  const auto h = static_cast<Eigen::Index>(params.hidden_size());
  const auto c = static_cast<Eigen::Index>(params.vocab_size());
  if (trace.steps.empty()) throw ShapeError("empty trace");
  if (trace.targets.size() != trace.steps.size()) throw ShapeError("trace has mismatched targets");
  if (trace.h0.size() != h) throw ShapeError("trace h0 does not match hidden size");
  for (const auto& step : trace.steps) {
    if (step.hidden.size() != h || step.pre_activation.size() != h || step.probs.size() != c) {
      throw ShapeError("trace step dimensions do not match parameters");
    }
    if (step.input >= params.vocab_size()) throw ShapeError("trace input outside vocabulary");
  }
  for (auto target : trace.targets) {
    if (target >= params.vocab_size()) throw ShapeError("trace target outside vocabulary");
  }
}

Vector output_error(const ForwardTrace& trace, std::size_t t) {
  Vector err = trace.steps[t].probs;
  err[static_cast<Eigen::Index>(trace.targets[t])] -= 1.0;
  return err;
}

Vector tanh_derivative(const Vector& hidden) { return (1.0 - hidden.array().square()).matrix(); }

// Reverse sweep with a running accumulator N_t = delta_t + W^T g_{t+1}.
// When include_dw is false dW is left at zero.
GradientSet single_pass(const ForwardTrace& trace, const ModelParams& params, bool include_dw) {
  GradientSet grads = GradientSet::zeros_like(params);
  const std::size_t n = trace.length();
  Vector carry = Vector::Zero(static_cast<Eigen::Index>(params.hidden_size()));
  for (std::size_t t = n; t-- > 0;) {
    const StepRecord& step = trace.steps[t];
    const Vector err = output_error(trace, t);
    grads.dV.noalias() += err * step.hidden.transpose();
    const Vector accum = params.V.transpose() * err + carry;
    const Vector g = accum.cwiseProduct(tanh_derivative(step.hidden));
    if (include_dw) grads.dW.noalias() += g * trace.hidden_before(t).transpose();
    grads.dU.col(static_cast<Eigen::Index>(step.input)) += g;
    carry.noalias() = params.W.transpose() * g;
  }
  return grads;
}

void check_origin_has_pair(std::size_t steps, std::size_t origin) {
  if (steps < 2) {
    throw BoundsError("origin " + std::to_string(origin) + " has " + std::to_string(steps) +
                      " recorded step(s); decay ratios need at least 2");
  }
}

}  // namespace

GradientSet GradientSet::zeros_like(const ModelParams& params) {
  return {Matrix::Zero(params.U.rows(), params.U.cols()), Matrix::Zero(params.W.rows(), params.W.cols()),
          Matrix::Zero(params.V.rows(), params.V.cols())};
}

ItemizedGradients::ItemizedGradients(std::size_t length, std::size_t horizon)
    : length_(length), horizon_(horizon), contribs_(length), magnitudes_(length) {}

std::size_t ItemizedGradients::steps_for(std::size_t origin) const {
  check_origin(origin);
  return std::min(horizon_, origin) + 1;
}

bool ItemizedGradients::contains(std::size_t origin, std::size_t step) const noexcept {
  return origin < length_ && step <= origin && origin - step <= horizon_;
}

const Matrix& ItemizedGradients::contrib(std::size_t origin, std::size_t step) const {
  if (!contains(origin, step)) {
    throw BoundsError("(t=" + std::to_string(origin) + ", j=" + std::to_string(step) +
                      ") outside the itemized domain");
  }
  return contribs_[origin][origin - step];
}

double ItemizedGradients::magnitude(std::size_t origin, std::size_t step) const {
  if (!contains(origin, step)) {
    throw BoundsError("(t=" + std::to_string(origin) + ", j=" + std::to_string(step) +
                      ") outside the itemized domain");
  }
  return magnitudes_[origin][origin - step];
}

std::span<const double> ItemizedGradients::magnitudes_by_distance(std::size_t origin) const {
  check_origin(origin);
  return magnitudes_[origin];
}

Matrix ItemizedGradients::sum() const {
  Matrix total;
  for (const auto& row : contribs_) {
    for (const auto& m : row) {
      if (total.size() == 0) {
        total = m;
      } else {
        total += m;
      }
    }
  }
  return total;
}

void ItemizedGradients::check_origin(std::size_t origin) const {
  if (origin >= length_) {
    throw BoundsError("origin " + std::to_string(origin) + " out of range [0, " + std::to_string(length_) + ")");
  }
}

std::vector<Vector> loss_head_gradients(const ForwardTrace& trace, const ModelParams& params) {
  check_trace(trace, params);
  std::vector<Vector> deltas;
  deltas.reserve(trace.length());
  for (std::size_t t = 0; t < trace.length(); ++t) deltas.push_back(params.V.transpose() * output_error(trace, t));
  return deltas;
}

GradientSet bptt_standard(const ForwardTrace& trace, const ModelParams& params) {
  check_trace(trace, params);
  return single_pass(trace, params, true);
}

ItemizedResult bptt_itemized(const ForwardTrace& trace, const ModelParams& params, int horizon) {
  if (horizon < 0) throw ConfigError("horizon must be >= 0, got " + std::to_string(horizon));
  check_trace(trace, params);

  const std::size_t n = trace.length();
  const auto k = static_cast<std::size_t>(horizon);
  ItemizedResult result{single_pass(trace, params, false), ItemizedGradients(n, k)};

  const std::vector<Vector> deltas = loss_head_gradients(trace, params);
  std::vector<Vector> tanh_prime;
  tanh_prime.reserve(n);
  for (const auto& step : trace.steps) tanh_prime.push_back(tanh_derivative(step.hidden));

  Matrix& dW = result.gradients.dW;
  Vector d;
  Vector g;
  for (std::size_t t = 0; t < n; ++t) {
    d = deltas[t];
    const std::size_t stop = t >= k ? t - k : 0;
    for (std::size_t j = t + 1; j-- > stop;) {
      g = d.cwiseProduct(tanh_prime[j]);
      Matrix contrib = g * trace.hidden_before(j).transpose();
      dW += contrib;
      ItemizedBuilder::put(result.itemized, t, std::move(contrib));
      if (j > stop) d.noalias() = params.W.transpose() * g;
    }
  }
  return result;
}

double aggregate_magnitude(const Matrix& m) {
  if (m.size() == 0) return 0.0;
  return m.cwiseAbs().mean();
}

std::vector<double> decay_ratios(std::span<const double> by_distance) {
  std::vector<double> ratios;
  if (by_distance.size() < 2) return ratios;
  ratios.reserve(by_distance.size() - 1);
  for (std::size_t d = 1; d < by_distance.size(); ++d) {
    const double num = by_distance[d];
    const double den = by_distance[d - 1];
    if (den == 0.0) {
      ratios.push_back(num > 0.0 ? std::numeric_limits<double>::infinity() : 1.0);
    } else {
      ratios.push_back(num / den);
    }
  }
  return ratios;
}

std::vector<double> decay_ratios(const ItemizedGradients& item, std::size_t origin) {
  const auto mags = item.magnitudes_by_distance(origin);
  check_origin_has_pair(mags.size(), origin);
  return decay_ratios(mags);
}

std::size_t gradient_horizon(std::span<const double> by_distance, double epsilon) {
  if (!(epsilon > 0.0)) throw ConfigError("epsilon must be > 0");
  std::size_t count = 0;
  while (count < by_distance.size() && by_distance[count] >= epsilon) ++count;
  return count;
}

std::size_t gradient_horizon(const ItemizedGradients& item, std::size_t origin, double epsilon) {
  return gradient_horizon(item.magnitudes_by_distance(origin), epsilon);
}

}  // namespace itemgrad
