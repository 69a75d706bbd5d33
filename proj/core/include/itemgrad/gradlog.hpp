#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace itemgrad {

inline constexpr int kLogSchemaVersion = 1;

struct RunMeta {
  std::size_t hidden_size = 0;
  std::size_t batch_size = 0;
  std::size_t horizon = 0;
  std::size_t record_interval = 0;
  std::vector<char32_t> vocab;
  std::string optimizer;
  double learning_rate = 0.0;
  double init_scale = 0.0;
  std::uint64_t seed = 0;
  std::string corpus_id;
  int schema_version = kLogSchemaVersion;

  friend bool operator==(const RunMeta&, const RunMeta&) = default;
};

/// One itemized batch. `magnitudes[t][d]` is the magnitude of the dW
/// contribution from loss origin t at step j = t - d (0-based); row t has
/// min(horizon, t) + 1 entries.
struct BatchRecord {
  std::size_t batch_index = 0;
  std::size_t char_offset = 0;
  std::u32string true_labels;
  std::u32string predicted_labels;
  std::vector<std::vector<double>> magnitudes;
  double max_gradient = 0.0;
  double batch_loss = 0.0;  ///< total (summed) cross-entropy over the batch

  std::vector<bool> correct() const;
  double accuracy() const;

  friend bool operator==(const BatchRecord&, const BatchRecord&) = default;
};

/// Largest entry of a ragged magnitude table, 0 when empty.
double max_magnitude(const std::vector<std::vector<double>>& magnitudes);

/// Append-only run artifact: metadata plus records in ascending batch order.
class GradientLog {
 public:
  GradientLog() = default;
  /// Throws FormatError if `meta` is invalid.
  explicit GradientLog(RunMeta meta);

  const RunMeta& meta() const noexcept { return meta_; }
  const std::vector<BatchRecord>& records() const noexcept { return records_; }
  bool empty() const noexcept { return records_.empty(); }

  /// Throws FormatError when the record breaks ordering or shape invariants.
  void append(BatchRecord record);

  /// Index into records() of the record with the given batch_index, or npos.
  std::size_t find_batch(std::size_t batch_index) const noexcept;
  static constexpr std::size_t npos = static_cast<std::size_t>(-1);

  friend bool operator==(const GradientLog&, const GradientLog&) = default;

 private:
  RunMeta meta_;
  std::vector<BatchRecord> records_;
};

void validate_meta(const RunMeta& meta);
/// `path` prefixes error locations, e.g. "records[2]".
void validate_record(const RunMeta& meta, const BatchRecord& record, const std::string& path);

std::string serialize(const GradientLog& log);
/// Throws FormatError naming the offending field for any schema or
/// invariant violation.
GradientLog deserialize(std::string_view bytes);

GradientLog read_log(const std::filesystem::path& path);
void write_log(const std::filesystem::path& path, const GradientLog& log);

struct LogSummary {
  std::size_t record_count = 0;
  double global_max_gradient = 0.0;
  std::vector<double> per_record_max;
  std::vector<double> accuracy_per_record;
};

/// Throws FormatError for an empty log.
LogSummary summarize(const GradientLog& log);

}  // namespace itemgrad
