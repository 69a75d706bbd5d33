#include "itemgrad/rnn.hpp"

#include <cmath>
#include <string>

#include "itemgrad/errors.hpp"

namespace itemgrad {

namespace {

std::string dims(const Matrix& m) { return std::to_string(m.rows()) + "x" + std::to_string(m.cols()); }

void check_step_inputs(const ModelParams& params, const Vector& h_prev, SymbolIndex input) {
  if (static_cast<std::size_t>(h_prev.size()) != params.hidden_size()) {
    throw ShapeError("hidden state has length " + std::to_string(h_prev.size()) + ", expected " +
                     std::to_string(params.hidden_size()));
  }
  if (input >= params.vocab_size()) {
    throw BoundsError("input symbol " + std::to_string(input) + " out of range [0, " +
                      std::to_string(params.vocab_size()) + ")");
  }
}

StepRecord step_unchecked(const ModelParams& params, const Vector& h_prev, SymbolIndex input, Vector& logits) {
  StepRecord rec;
  rec.input = input;
  rec.pre_activation = params.U.col(static_cast<Eigen::Index>(input)) + params.W * h_prev;
  rec.hidden = rec.pre_activation.array().tanh().matrix();
  logits = params.V * rec.hidden;
  rec.probs = softmax(logits);
  Eigen::Index best = 0;
  rec.probs.maxCoeff(&best);
  rec.predicted = static_cast<SymbolIndex>(best);
  return rec;
}

// -ln softmax(logits)[target], computed in log space so tiny probabilities
// do not underflow to an infinite loss.
double cross_entropy(const Vector& logits, SymbolIndex target) {
  const double top = logits.maxCoeff();
  const double log_norm = std::log((logits.array() - top).exp().sum());
  return -(logits[static_cast<Eigen::Index>(target)] - top - log_norm);
}

}  // namespace

ModelParams ModelParams::zeros(std::size_t hidden_size, std::size_t vocab_size) {
  const auto h = static_cast<Eigen::Index>(hidden_size);
  const auto c = static_cast<Eigen::Index>(vocab_size);
  return {Matrix::Zero(h, c), Matrix::Zero(h, h), Matrix::Zero(c, h)};
}

void ModelParams::check_shapes() const {
  const auto h = W.rows();
  const auto c = V.rows();
  if (W.cols() != h || U.rows() != h || U.cols() != c || V.cols() != h) {
    throw ShapeError("inconsistent parameter shapes: U " + dims(U) + ", W " + dims(W) + ", V " + dims(V));
  }
}

void ModelParams::check_finite() const {
  if (!U.allFinite()) throw NumericError("non-finite entry in U");
  if (!W.allFinite()) throw NumericError("non-finite entry in W");
  if (!V.allFinite()) throw NumericError("non-finite entry in V");
}

Vector one_hot(SymbolIndex index, std::size_t size) {
  if (index >= size) {
    throw BoundsError("one-hot index " + std::to_string(index) + " out of range [0, " + std::to_string(size) + ")");
  }
  Vector v = Vector::Zero(static_cast<Eigen::Index>(size));
  v[static_cast<Eigen::Index>(index)] = 1.0;
  return v;
}

Vector softmax(const Vector& logits) {
  Vector e = (logits.array() - logits.maxCoeff()).exp().matrix();
  return e / e.sum();
}

StepRecord forward_step(const ModelParams& params, const Vector& h_prev, SymbolIndex input) {
  params.check_shapes();
  params.check_finite();
  check_step_inputs(params, h_prev, input);
  Vector logits;
  return step_unchecked(params, h_prev, input, logits);
}

ForwardTrace forward_batch(const ModelParams& params, const Vector& h0, std::span<const SymbolIndex> inputs,
                           std::span<const SymbolIndex> targets) {
  if (inputs.empty()) throw ShapeError("empty batch");
  if (inputs.size() != targets.size()) {
    throw ShapeError("batch has " + std::to_string(inputs.size()) + " inputs but " +
                     std::to_string(targets.size()) + " targets");
  }
  params.check_shapes();
  params.check_finite();

  ForwardTrace trace;
  trace.h0 = h0;
  trace.targets.assign(targets.begin(), targets.end());
  trace.steps.reserve(inputs.size());
  Vector logits;
  for (std::size_t t = 0; t < inputs.size(); ++t) {
    const Vector& h_prev = trace.hidden_before(t);
    check_step_inputs(params, h_prev, inputs[t]);
    if (targets[t] >= params.vocab_size()) {
      throw BoundsError("target symbol " + std::to_string(targets[t]) + " out of range");
    }
    StepRecord rec = step_unchecked(params, h_prev, inputs[t], logits);
    rec.loss = cross_entropy(logits, targets[t]);
    trace.total_loss += rec.loss;
    trace.steps.push_back(std::move(rec));
  }
  return trace;
}

}  // namespace itemgrad
