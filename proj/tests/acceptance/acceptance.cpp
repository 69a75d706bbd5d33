// Acceptance suite: one PASS/FAIL line per criterion. Exit status is
// nonzero when a gating criterion fails; the horizon-shift check reproduces a
// qualitative observation and is reported without gating.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "itemgrad/backprop.hpp"
#include "itemgrad/errors.hpp"
#include "itemgrad/gradlog.hpp"
#include "itemgrad/io.hpp"
#include "itemgrad/trainer.hpp"
#include "itemgrad/utf8.hpp"
#include "json_fields.hpp"
#include "oracle.hpp"

namespace {

using namespace itemgrad;
using testing::finite_difference;
using testing::max_relative_error;
using testing::random_instance;
using testing::relative_frobenius;
using testing::Which;

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

int gating_failures = 0;

void report(const char* name, bool pass, const std::string& detail, bool gating = true) {
  std::printf("%s %-26s %s%s\n", pass ? "PASS" : "FAIL", name, detail.c_str(),
              !pass && !gating ? "  [reported, non-gating]" : "");
  std::fflush(stdout);
  if (!pass && gating) ++gating_failures;
}

std::string fmt(const char* format, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, format, args...);
  return buf;
}

ForwardTrace trace_of(const testing::Instance& inst) {
  return forward_batch(inst.params, inst.h0, inst.inputs, inst.targets);
}

void oracle_equivalence() {
  const auto start = Clock::now();
  std::mt19937_64 rng(1);
  double worst = 0.0;
  const int instances = 120;
  for (int i = 0; i < instances; ++i) {
    const std::size_t hidden = 1 + rng() % 16;
    const std::size_t vocab = 2 + rng() % 19;
    const std::size_t n = 1 + rng() % 12;
    const auto inst = random_instance(1000 + static_cast<std::uint64_t>(i), hidden, vocab, n);
    const ForwardTrace tr = trace_of(inst);
    const Matrix reference = bptt_standard(tr, inst.params).dW;
    const Matrix itemized = bptt_itemized(tr, inst.params, static_cast<int>(n)).gradients.dW;
    worst = std::max(worst, relative_frobenius(itemized, reference));
  }
  const double elapsed = seconds_since(start);
  report("oracle-equivalence", worst < 1e-8 && elapsed < 10.0,
         fmt("%d instances, max rel frobenius %.3e (< 1e-8), %.2f s (< 10 s)", instances, worst, elapsed));
}

void gradient_soundness() {
  const auto start = Clock::now();
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto inst = random_instance(2000 + seed, 8, 12, 6);
    const GradientSet g = bptt_standard(trace_of(inst), inst.params);
    worst = std::max({worst, max_relative_error(g.dU, finite_difference(inst, Which::U)),
                      max_relative_error(g.dW, finite_difference(inst, Which::W)),
                      max_relative_error(g.dV, finite_difference(inst, Which::V))});
  }
  const double elapsed = seconds_since(start);
  report("gradient-soundness", worst < 1e-5 && elapsed < 60.0,
         fmt("10 instances H=8 C=12 n=6, max rel err %.3e (< 1e-5), %.2f s (< 60 s)", worst, elapsed));
}

void per_origin_soundness() {
  const std::size_t n = 6;
  // 1-based origins 1, ceil(n/2), n.
  const std::vector<std::size_t> origins{0, (n + 1) / 2 - 1, n - 1};
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const auto inst = random_instance(3000 + seed, 8, 12, n);
    const ItemizedResult r = bptt_itemized(trace_of(inst), inst.params, static_cast<int>(n));
    for (std::size_t t : origins) {
      Matrix per_origin = Matrix::Zero(8, 8);
      for (std::size_t j = 0; j <= t; ++j) per_origin += r.itemized.contrib(t, j);
      const Matrix fd = finite_difference(inst, Which::W, 1e-5L, static_cast<long>(t));
      worst = std::max(worst, max_relative_error(per_origin, fd));
    }
  }
  report("per-origin-soundness", worst < 1e-5,
         fmt("5 instances, origins t=1,%zu,%zu, max rel err %.3e (< 1e-5)", (n + 1) / 2, n, worst));
}

struct LearningRun {
  TrainResult result;
  double seconds;
  std::size_t corpus_bytes;
};

// Mean over all origins of every record in [first, last) of magnitude at distance d.
std::vector<double> mean_by_distance(const GradientLog& log, std::size_t first, std::size_t last,
                                     std::size_t horizon) {
  std::vector<double> sum(horizon + 1, 0.0);
  std::vector<std::size_t> count(horizon + 1, 0);
  for (std::size_t i = first; i < last; ++i) {
    for (const auto& row : log.records()[i].magnitudes) {
      for (std::size_t d = 0; d < row.size(); ++d) {
        sum[d] += row[d];
        ++count[d];
      }
    }
  }
  for (std::size_t d = 0; d <= horizon; ++d) sum[d] /= static_cast<double>(count[d]);
  return sum;
}

double distance_weighted_mass(const std::vector<double>& g) {
  double num = 0.0;
  double den = 0.0;
  for (std::size_t d = 0; d < g.size(); ++d) {
    num += static_cast<double>(d) * g[d];
    den += g[d];
  }
  return num / den;
}

void learning_criteria(const LearningRun& run, const TrainingConfig& cfg) {
  const auto& losses = run.result.batch_losses;
  const double ln_c = std::log(static_cast<double>(run.result.vocab.size()));

  const double first = losses.front();
  const double rel = std::abs(first - ln_c) / ln_c;
  report("untrained-baseline", rel < 0.01,
         fmt("batch-0 loss %.5f vs ln C %.5f, rel diff %.2e (< 1e-2)", first, ln_c, rel));

  const double at2k = smoothed_loss(losses, 2000);
  const double at10k = smoothed_loss(losses, 10000);
  report("learning", at2k < 0.9 * ln_c && at10k < 0.7 * ln_c,
         fmt("%zu B corpus, C=%zu, smoothed loss %.4f @2000 (< %.4f), %.4f @10000 (< %.4f), %zu batches in %.1f s",
             run.corpus_bytes, run.result.vocab.size(), at2k, 0.9 * ln_c, at10k, 0.7 * ln_c, losses.size(),
             run.seconds));

  const GradientLog& log = run.result.log;
  const std::size_t k = cfg.horizon;
  const auto early = mean_by_distance(log, 0, 10, k);
  bool decreasing = true;
  for (std::size_t d = 1; d <= k; ++d) decreasing = decreasing && early[d] < early[d - 1];
  std::size_t eligible = 0;
  std::size_t decayed = 0;
  for (std::size_t i = 0; i < 10; ++i) {
    for (const auto& row : log.records()[i].magnitudes) {
      if (row.size() <= k) continue;
      ++eligible;
      if (row[k] < row[0]) ++decayed;
    }
  }
  const double share = static_cast<double>(decayed) / static_cast<double>(eligible);
  std::string curve;
  for (double v : early) curve += fmt("%s%.3e", curve.empty() ? "" : " ", v);
  report("vanishing-gradient", decreasing && share >= 0.9,
         fmt("mean by distance [%s] %s; %.1f%% of origins decay over %zu steps (>= 90%%)", curve.c_str(),
             decreasing ? "strictly decreasing" : "NOT strictly decreasing", 100.0 * share, k));

  const std::size_t records = log.records().size();
  const double early_mass = distance_weighted_mass(early);
  const double late_mass = distance_weighted_mass(mean_by_distance(log, records - 10, records, k));
  report("horizon-shift", early_mass < late_mass,
         fmt("seed %llu, distance-weighted mass early %.4f vs late %.4f over %zu records",
             static_cast<unsigned long long>(cfg.seed), early_mass, late_mass, records),
         /*gating=*/false);
}

void log_integrity(const GradientLog& log) {
  const std::string first = serialize(log);
  const std::string second = serialize(deserialize(first));
  const std::string third = serialize(deserialize(second));
  const bool stable = first == second && second == third;

  bool redundant = true;
  for (const auto& r : log.records()) redundant = redundant && r.max_gradient == max_magnitude(r.magnitudes);

  // Single-field mutations of a parsed log; every outcome must be either a
  // clean parse or a FormatError.
  using detail::Json;
  const Json base = Json::parse(first);
  const Json flat = base.flatten();
  std::vector<std::string> leaves;
  for (auto it = flat.begin(); it != flat.end(); ++it) leaves.push_back(it.key());
  const std::vector<Json> replacements{nullptr, true, false, -1, 0, 1, 7, 1e308, -1e-300, -0.5, 3.5, "", "x",
                                       "\xC3\xA9", "ab", Json::array(), Json::object(), 18446744073709551615ull};
  std::mt19937_64 rng(4242);
  int crashes = 0;
  int rejected = 0;
  const int mutations = 1000;
  for (int i = 0; i < mutations; ++i) {
    Json doc = base;
    const Json::json_pointer ptr(leaves[rng() % leaves.size()]);
    if (rng() % 5 == 0 && doc[ptr.parent_pointer()].is_object()) {
      doc[ptr.parent_pointer()].erase(ptr.back());
    } else {
      doc[ptr] = replacements[rng() % replacements.size()];
    }
    try {
      deserialize(doc.dump());
    } catch (const FormatError&) {
      ++rejected;
    } catch (...) {
      ++crashes;
    }
  }
  report("log-integrity", stable && redundant && crashes == 0,
         fmt("round trip %s, max_gradient redundancy %s over %zu records, %d/%d mutations rejected, %d crashes",
             stable ? "byte-stable" : "UNSTABLE", redundant ? "holds" : "VIOLATED", log.records().size(), rejected,
             mutations, crashes));
}

void determinism(const std::u32string& corpus, TrainingConfig cfg) {
  cfg.max_batches = 1000;
  const std::string a = serialize(train(corpus, cfg, {"c_headers.txt", {}}).log);
  const std::string b = serialize(train(corpus, cfg, {"c_headers.txt", {}}).log);
  report("determinism", a == b, fmt("two seeded %zu-batch runs, %zu-byte logs %s", cfg.max_batches, a.size(),
                                    a == b ? "identical" : "DIFFER"));
}

}  // namespace

int main() {
  oracle_equivalence();
  gradient_soundness();
  per_origin_soundness();

  const std::filesystem::path corpus_path = std::filesystem::path(ITEMGRAD_TEST_DATA_DIR) / "c_headers.txt";
  const std::string bytes = read_file(corpus_path);
  const std::u32string corpus = utf8::decode(bytes);

  TrainingConfig cfg;  // defaults: n=25, H=100, k=5, R=100, adagrad, seed 0
  cfg.max_batches = 30000;
  const auto start = Clock::now();
  LearningRun run{train(corpus, cfg, {"c_headers.txt", {}}), 0.0, bytes.size()};
  run.seconds = seconds_since(start);

  learning_criteria(run, cfg);
  log_integrity(run.result.log);
  determinism(corpus, cfg);

  std::printf("%s: %d gating failure(s)\n", gating_failures == 0 ? "OK" : "FAILED", gating_failures);
  return gating_failures == 0 ? 0 : 1;
}
