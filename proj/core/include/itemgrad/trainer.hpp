#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "itemgrad/backprop.hpp"
#include "itemgrad/gradlog.hpp"
#include "itemgrad/rnn.hpp"
#include "itemgrad/vocab.hpp"

namespace itemgrad {

enum class OptimizerKind { sgd, adagrad };

std::string to_string(OptimizerKind kind);
/// Throws ConfigError for anything other than "sgd" or "adagrad".
OptimizerKind parse_optimizer(std::string_view name);

struct TrainingConfig {
  std::size_t batch_size = 25;
  std::size_t hidden_size = 100;
  double learning_rate = 0.1;
  OptimizerKind optimizer = OptimizerKind::adagrad;
  double clip_threshold = 5.0;
  std::size_t record_interval = 100;
  std::size_t horizon = 5;
  std::size_t max_batches = 5000;
  double init_scale = 0.01;
  std::uint64_t seed = 0;
  double epsilon_adagrad = 1e-8;
  /// Fill value for h0, used at the start and at every corpus wrap.
  double initial_hidden = 0.0;

  /// Throws ConfigError naming the first invalid field.
  void validate() const;
};

/// Squared-gradient accumulators; empty until the first adagrad step.
struct OptimizerState {
  Matrix accU;
  Matrix accW;
  Matrix accV;
};

/// Inputs corpus[offset, offset + n) and targets shifted by one.
struct BatchWindow {
  std::size_t offset = 0;
  std::span<const SymbolIndex> inputs;
  std::span<const SymbolIndex> targets;
};

/// floor((len - 1) / n) consecutive non-overlapping windows; a trailing
/// remainder shorter than n is dropped. Throws CorpusError when
/// len < n + 1 and ConfigError when n == 0.
std::vector<BatchWindow> make_batches(std::span<const SymbolIndex> corpus, std::size_t batch_size);

/// Clamps every entry to [-threshold, threshold]. Throws ConfigError unless threshold > 0.
GradientSet clip_gradients(const GradientSet& grads, double threshold);

/// One optimizer step. Parameters and state are left untouched and a
/// NumericError naming the matrix and batch is thrown if the step would
/// produce a non-finite value.
void apply_update(ModelParams& params, const GradientSet& grads, const TrainingConfig& cfg, OptimizerState& state,
                  std::size_t batch_index);

/// Seeded N(0, init_scale^2) entries for U, W, V, in that order.
ModelParams init_params(std::size_t hidden_size, std::size_t vocab_size, double init_scale, std::uint64_t seed);

/// Everything the training loop knows about one batch before the update.
struct BatchContext {
  std::size_t batch_index;
  const BatchWindow& window;
  const ModelParams& params;
  const ForwardTrace& trace;
  const BatchRecord* record;  ///< non-null on recorded batches
};

using BatchObserver = std::function<void(const BatchContext&)>;

struct TrainOptions {
  std::string corpus_id;
  BatchObserver observer;
};

struct TrainResult {
  Vocabulary vocab;
  ModelParams params;
  GradientLog log;
  std::vector<double> batch_losses;  ///< mean per-character loss of every batch
};

/// Trains on consecutive batches of `corpus`, wrapping around as needed.
/// Batch b is itemized and logged when b % record_interval == 0; all other
/// batches use single-pass BPTT.
TrainResult train(std::u32string_view corpus, const TrainingConfig& cfg, const TrainOptions& options = {});

/// Mean of losses[end - window, end), clipped at the front.
double smoothed_loss(std::span<const double> losses, std::size_t end, std::size_t window = 100);

BatchRecord make_record(std::size_t batch_index, std::size_t char_offset, const ForwardTrace& trace,
                        const ItemizedGradients& itemized, const Vocabulary& vocab);

enum class SampleMode { argmax, sample };

SampleMode parse_sample_mode(std::string_view name);

/// Emits `length` symbols starting from h = 0 with `seed_symbol` as the
/// first input, feeding each emitted symbol back in. The seed symbol itself
/// is not part of the output.
std::u32string generate(const ModelParams& params, const Vocabulary& vocab, char32_t seed_symbol,
                        std::size_t length, SampleMode mode, std::uint64_t seed);

}  // namespace itemgrad
