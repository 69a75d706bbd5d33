#include "itemgrad/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "itemgrad/errors.hpp"

namespace itemgrad {

namespace {

void require(bool ok, const std::string& message) {
  if (!ok) throw ConfigError(message);
}

// Returns the updated matrix, or throws if any entry is non-finite.
Matrix step_matrix(const Matrix& theta, const Matrix& grad, const TrainingConfig& cfg, Matrix& acc, const char* name,
                   std::size_t batch_index) {
  const auto fail = [&](const char* what) {
    throw NumericError(std::string("non-finite ") + what + " for " + name + " at batch " +
                       std::to_string(batch_index));
  };
  if (!grad.allFinite()) fail("gradient");
  if (cfg.optimizer == OptimizerKind::sgd) {
    Matrix next = theta - cfg.learning_rate * grad;
    if (!next.allFinite()) fail("update");
    return next;
  }
  if (acc.size() == 0) acc = Matrix::Zero(grad.rows(), grad.cols());
  Matrix next_acc = acc + grad.cwiseAbs2();
  Matrix next = theta - (cfg.learning_rate * grad.array() / (next_acc.array() + cfg.epsilon_adagrad).sqrt()).matrix();
  if (!next.allFinite() || !next_acc.allFinite()) fail("update");
  acc = std::move(next_acc);
  return next;
}

}  // namespace

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::sgd ? "sgd" : "adagrad"; }

OptimizerKind parse_optimizer(std::string_view name) {
  if (name == "sgd") return OptimizerKind::sgd;
  if (name == "adagrad") return OptimizerKind::adagrad;
  throw ConfigError("unknown optimizer \"" + std::string(name) + "\" (expected sgd or adagrad)");
}

void TrainingConfig::validate() const {
  require(batch_size >= 2, "batch_size must be >= 2");
  require(hidden_size >= 1, "hidden_size must be >= 1");
  require(record_interval >= 1, "record_interval must be >= 1");
  require(max_batches >= 1, "max_batches must be >= 1");
  require(std::isfinite(learning_rate) && learning_rate > 0.0, "learning_rate must be > 0");
  require(std::isfinite(clip_threshold) && clip_threshold > 0.0, "clip_threshold must be > 0");
  require(std::isfinite(init_scale) && init_scale >= 0.0, "init_scale must be >= 0");
  require(std::isfinite(epsilon_adagrad) && epsilon_adagrad > 0.0, "epsilon_adagrad must be > 0");
  require(initial_hidden > -1.0 && initial_hidden < 1.0, "initial_hidden must lie in (-1, 1)");
  require(horizon <= static_cast<std::size_t>(std::numeric_limits<int>::max()), "horizon too large");
}

std::vector<BatchWindow> make_batches(std::span<const SymbolIndex> corpus, std::size_t batch_size) {
  if (batch_size == 0) throw ConfigError("batch size must be >= 1");
  if (corpus.size() < batch_size + 1) {
    throw CorpusError("corpus of " + std::to_string(corpus.size()) + " symbols is too short for batch size " +
                      std::to_string(batch_size) + " (need at least " + std::to_string(batch_size + 1) + ")");
  }
  const std::size_t count = (corpus.size() - 1) / batch_size;
  std::vector<BatchWindow> windows;
  windows.reserve(count);
  for (std::size_t b = 0; b < count; ++b) {
    const std::size_t offset = b * batch_size;
    windows.push_back({offset, corpus.subspan(offset, batch_size), corpus.subspan(offset + 1, batch_size)});
  }
  return windows;
}

GradientSet clip_gradients(const GradientSet& grads, double threshold) {
  if (!(threshold > 0.0)) throw ConfigError("clip threshold must be > 0");
  const auto clip = [threshold](const Matrix& m) -> Matrix { return m.cwiseMax(-threshold).cwiseMin(threshold); };
  return {clip(grads.dU), clip(grads.dW), clip(grads.dV)};
}

void apply_update(ModelParams& params, const GradientSet& grads, const TrainingConfig& cfg, OptimizerState& state,
                  std::size_t batch_index) {
  if (grads.dU.rows() != params.U.rows() || grads.dU.cols() != params.U.cols() ||
      grads.dW.rows() != params.W.rows() || grads.dW.cols() != params.W.cols() ||
      grads.dV.rows() != params.V.rows() || grads.dV.cols() != params.V.cols()) {
    throw ShapeError("gradient shapes do not match parameters");
  }
  OptimizerState next_state = state;
  Matrix U = step_matrix(params.U, grads.dU, cfg, next_state.accU, "U", batch_index);
  Matrix W = step_matrix(params.W, grads.dW, cfg, next_state.accW, "W", batch_index);
  Matrix V = step_matrix(params.V, grads.dV, cfg, next_state.accV, "V", batch_index);
  params.U = std::move(U);
  params.W = std::move(W);
  params.V = std::move(V);
  state = std::move(next_state);
}

ModelParams init_params(std::size_t hidden_size, std::size_t vocab_size, double init_scale, std::uint64_t seed) {
  ModelParams params = ModelParams::zeros(hidden_size, vocab_size);
  if (init_scale == 0.0) return params;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal(0.0, init_scale);
  for (Matrix* m : {&params.U, &params.W, &params.V}) {
    for (Eigen::Index i = 0; i < m->size(); ++i) m->data()[i] = normal(rng);
  }
  return params;
}

BatchRecord make_record(std::size_t batch_index, std::size_t char_offset, const ForwardTrace& trace,
                        const ItemizedGradients& itemized, const Vocabulary& vocab) {
  BatchRecord rec;
  rec.batch_index = batch_index;
  rec.char_offset = char_offset;
  rec.true_labels.reserve(trace.length());
  rec.predicted_labels.reserve(trace.length());
  for (std::size_t t = 0; t < trace.length(); ++t) {
    rec.true_labels.push_back(vocab.symbol(trace.targets[t]));
    rec.predicted_labels.push_back(vocab.symbol(trace.steps[t].predicted));
  }
  rec.magnitudes = itemized.magnitude_table();
  rec.max_gradient = max_magnitude(rec.magnitudes);
  rec.batch_loss = trace.total_loss;
  return rec;
}

TrainResult train(std::u32string_view corpus, const TrainingConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  Vocabulary vocab = build_vocab(corpus);
  const std::vector<SymbolIndex> encoded = vocab.encode(corpus);
  const std::vector<BatchWindow> windows = make_batches(encoded, cfg.batch_size);

  RunMeta meta;
  meta.hidden_size = cfg.hidden_size;
  meta.batch_size = cfg.batch_size;
  meta.horizon = cfg.horizon;
  meta.record_interval = cfg.record_interval;
  meta.vocab = vocab.symbols();
  meta.optimizer = to_string(cfg.optimizer);
  meta.learning_rate = cfg.learning_rate;
  meta.init_scale = cfg.init_scale;
  meta.seed = cfg.seed;
  meta.corpus_id = options.corpus_id;

  TrainResult result{vocab, init_params(cfg.hidden_size, vocab.size(), cfg.init_scale, cfg.seed),
                     GradientLog(std::move(meta)), {}};
  result.batch_losses.reserve(cfg.max_batches);

  const Vector h_reset = Vector::Constant(static_cast<Eigen::Index>(cfg.hidden_size), cfg.initial_hidden);
  Vector h = h_reset;
  OptimizerState opt;
  ModelParams& params = result.params;

  for (std::size_t b = 0; b < cfg.max_batches; ++b) {
    const std::size_t w = b % windows.size();
    if (w == 0) h = h_reset;
    const BatchWindow& window = windows[w];
    const ForwardTrace trace = forward_batch(params, h, window.inputs, window.targets);

    GradientSet grads;
    const BatchRecord* record = nullptr;
    if (b % cfg.record_interval == 0) {
      ItemizedResult itemized = bptt_itemized(trace, params, static_cast<int>(cfg.horizon));
      result.log.append(make_record(b, window.offset, trace, itemized.itemized, vocab));
      record = &result.log.records().back();
      grads = std::move(itemized.gradients);
    } else {
      grads = bptt_standard(trace, params);
    }
    if (options.observer) options.observer(BatchContext{b, window, params, trace, record});

    apply_update(params, clip_gradients(grads, cfg.clip_threshold), cfg, opt, b);
    h = trace.final_hidden();
    result.batch_losses.push_back(trace.total_loss / static_cast<double>(trace.length()));
  }
  return result;
}

double smoothed_loss(std::span<const double> losses, std::size_t end, std::size_t window) {
  end = std::min(end, losses.size());
  const std::size_t begin = end > window ? end - window : 0;
  if (begin == end) return 0.0;
  double sum = 0.0;
  for (std::size_t i = begin; i < end; ++i) sum += losses[i];
  return sum / static_cast<double>(end - begin);
}

SampleMode parse_sample_mode(std::string_view name) {
  if (name == "argmax") return SampleMode::argmax;
  if (name == "sample") return SampleMode::sample;
  throw ConfigError("unknown mode \"" + std::string(name) + "\" (expected argmax or sample)");
}

std::u32string generate(const ModelParams& params, const Vocabulary& vocab, char32_t seed_symbol,
                        std::size_t length, SampleMode mode, std::uint64_t seed) {
  if (length < 1) throw ConfigError("length must be >= 1");
  if (params.vocab_size() != vocab.size()) throw ShapeError("model and vocabulary sizes differ");
  const auto first = vocab.find(seed_symbol);
  if (!first) throw BoundsError("seed symbol is not in the vocabulary");

  std::mt19937_64 rng(seed);
  std::u32string out;
  out.reserve(length);
  Vector h = Vector::Zero(static_cast<Eigen::Index>(params.hidden_size()));
  SymbolIndex input = *first;
  for (std::size_t i = 0; i < length; ++i) {
    StepRecord step = forward_step(params, h, input);
    if (mode == SampleMode::argmax) {
      input = step.predicted;
    } else {
      std::discrete_distribution<SymbolIndex> pick(step.probs.data(), step.probs.data() + step.probs.size());
      input = pick(rng);
    }
    out.push_back(vocab.symbol(input));
    h = std::move(step.hidden);
  }
  return out;
}

}  // namespace itemgrad
