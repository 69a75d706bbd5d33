#include "itemgrad/gradlog.hpp"

#include <algorithm>
#include <cmath>

#include "itemgrad/errors.hpp"
#include "itemgrad/io.hpp"
#include "itemgrad/utf8.hpp"
#include "json_fields.hpp"

namespace itemgrad {

using detail::Json;

namespace {

bool is_scalar_value(char32_t c) { return c <= 0x10FFFF && (c < 0xD800 || c > 0xDFFF); }

void check_labels(const RunMeta& meta, const std::u32string& labels, const std::string& path) {
  if (labels.size() != meta.batch_size) {
    throw FormatError(path, "has " + std::to_string(labels.size()) + " characters, expected batch_size " +
                                std::to_string(meta.batch_size));
  }
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::binary_search(meta.vocab.begin(), meta.vocab.end(), labels[i])) {
      throw FormatError(detail::index_path(path, i), "character not in vocab");
    }
  }
}

Json meta_to_json(const RunMeta& meta) {
  Json vocab = Json::array();
  for (char32_t c : meta.vocab) vocab.push_back(utf8::encode(c));
  return Json{{"hidden_size", meta.hidden_size},
              {"batch_size", meta.batch_size},
              {"horizon", meta.horizon},
              {"record_interval", meta.record_interval},
              {"vocab", std::move(vocab)},
              {"optimizer", meta.optimizer},
              {"learning_rate", meta.learning_rate},
              {"init_scale", meta.init_scale},
              {"seed", meta.seed},
              {"corpus_id", meta.corpus_id}};
}

Json record_to_json(const BatchRecord& rec) {
  return Json{{"batch_index", rec.batch_index},
              {"char_offset", rec.char_offset},
              {"true_labels", utf8::encode(rec.true_labels)},
              {"predicted_labels", utf8::encode(rec.predicted_labels)},
              {"magnitudes", rec.magnitudes},
              {"max_gradient", rec.max_gradient},
              {"batch_loss", rec.batch_loss}};
}

RunMeta meta_from_json(const Json& j, int schema_version) {
  const std::string path = "meta";
  detail::require_object(j, path);
  RunMeta meta;
  meta.schema_version = schema_version;
  meta.hidden_size = detail::as_size(detail::field(j, "hidden_size", path), "meta.hidden_size");
  meta.batch_size = detail::as_size(detail::field(j, "batch_size", path), "meta.batch_size");
  meta.horizon = detail::as_size(detail::field(j, "horizon", path), "meta.horizon");
  meta.record_interval = detail::as_size(detail::field(j, "record_interval", path), "meta.record_interval");
  const Json& vocab = detail::require_array(detail::field(j, "vocab", path), "meta.vocab");
  for (std::size_t i = 0; i < vocab.size(); ++i) {
    const std::string item = detail::index_path("meta.vocab", i);
    const std::u32string symbol = detail::as_text(vocab[i], item);
    if (symbol.size() != 1) throw FormatError(item, "expected exactly one character");
    meta.vocab.push_back(symbol.front());
  }
  meta.optimizer = detail::as_string(detail::field(j, "optimizer", path), "meta.optimizer");
  meta.learning_rate = detail::as_finite(detail::field(j, "learning_rate", path), "meta.learning_rate");
  meta.init_scale = detail::as_finite(detail::field(j, "init_scale", path), "meta.init_scale");
  meta.seed = detail::as_uint(detail::field(j, "seed", path), "meta.seed");
  meta.corpus_id = detail::as_string(detail::field(j, "corpus_id", path), "meta.corpus_id");
  return meta;
}

BatchRecord record_from_json(const Json& j, const std::string& path) {
  detail::require_object(j, path);
  BatchRecord rec;
  rec.batch_index = detail::as_size(detail::field(j, "batch_index", path), detail::join(path, "batch_index"));
  rec.char_offset = detail::as_size(detail::field(j, "char_offset", path), detail::join(path, "char_offset"));
  rec.true_labels = detail::as_text(detail::field(j, "true_labels", path), detail::join(path, "true_labels"));
  rec.predicted_labels =
      detail::as_text(detail::field(j, "predicted_labels", path), detail::join(path, "predicted_labels"));
  const std::string mpath = detail::join(path, "magnitudes");
  const Json& rows = detail::require_array(detail::field(j, "magnitudes", path), mpath);
  rec.magnitudes.reserve(rows.size());
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const std::string rpath = detail::index_path(mpath, t);
    const Json& row = detail::require_array(rows[t], rpath);
    std::vector<double> values;
    values.reserve(row.size());
    for (std::size_t d = 0; d < row.size(); ++d) values.push_back(detail::as_finite(row[d], detail::index_path(rpath, d)));
    rec.magnitudes.push_back(std::move(values));
  }
  rec.max_gradient = detail::as_finite(detail::field(j, "max_gradient", path), detail::join(path, "max_gradient"));
  rec.batch_loss = detail::as_finite(detail::field(j, "batch_loss", path), detail::join(path, "batch_loss"));
  return rec;
}

}  // namespace

std::vector<bool> BatchRecord::correct() const {
  std::vector<bool> out(std::min(true_labels.size(), predicted_labels.size()));
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = true_labels[i] == predicted_labels[i];
  return out;
}

double BatchRecord::accuracy() const {
  const auto flags = correct();
  if (flags.empty()) return 0.0;
  return static_cast<double>(std::count(flags.begin(), flags.end(), true)) / static_cast<double>(flags.size());
}

double max_magnitude(const std::vector<std::vector<double>>& magnitudes) {
  double best = 0.0;
  for (const auto& row : magnitudes) {
    for (double v : row) best = std::max(best, v);
  }
  return best;
}

void validate_meta(const RunMeta& meta) {
  if (meta.schema_version != kLogSchemaVersion) {
    throw FormatError("schema_version", "unsupported version " + std::to_string(meta.schema_version) +
                                            ", expected " + std::to_string(kLogSchemaVersion));
  }
  if (meta.hidden_size < 1) throw FormatError("meta.hidden_size", "must be >= 1");
  if (meta.batch_size < 1) throw FormatError("meta.batch_size", "must be >= 1");
  if (meta.record_interval < 1) throw FormatError("meta.record_interval", "must be >= 1");
  if (meta.vocab.size() < 2) throw FormatError("meta.vocab", "needs at least 2 symbols");
  for (std::size_t i = 0; i < meta.vocab.size(); ++i) {
    if (!is_scalar_value(meta.vocab[i])) throw FormatError(detail::index_path("meta.vocab", i), "not a scalar value");
    if (i > 0 && meta.vocab[i - 1] >= meta.vocab[i]) {
      throw FormatError(detail::index_path("meta.vocab", i), "symbols must be distinct and ascending");
    }
  }
  if (meta.optimizer != "sgd" && meta.optimizer != "adagrad") {
    throw FormatError("meta.optimizer", "expected \"sgd\" or \"adagrad\", got \"" + meta.optimizer + "\"");
  }
  if (!std::isfinite(meta.learning_rate) || meta.learning_rate <= 0.0) {
    throw FormatError("meta.learning_rate", "must be finite and > 0");
  }
  if (!std::isfinite(meta.init_scale) || meta.init_scale < 0.0) {
    throw FormatError("meta.init_scale", "must be finite and >= 0");
  }
}

void validate_record(const RunMeta& meta, const BatchRecord& rec, const std::string& path) {
  check_labels(meta, rec.true_labels, detail::join(path, "true_labels"));
  check_labels(meta, rec.predicted_labels, detail::join(path, "predicted_labels"));
  const std::string mpath = detail::join(path, "magnitudes");
  if (rec.magnitudes.size() != meta.batch_size) {
    throw FormatError(mpath, "has " + std::to_string(rec.magnitudes.size()) + " origins, expected batch_size " +
                                 std::to_string(meta.batch_size));
  }
  for (std::size_t t = 0; t < rec.magnitudes.size(); ++t) {
    const auto& row = rec.magnitudes[t];
    const std::size_t expected = std::min(meta.horizon, t) + 1;
    const std::string rpath = detail::index_path(mpath, t);
    if (row.size() != expected) {
      throw FormatError(rpath, "has " + std::to_string(row.size()) + " entries, expected " + std::to_string(expected));
    }
    for (std::size_t d = 0; d < row.size(); ++d) {
      if (!std::isfinite(row[d]) || row[d] < 0.0) {
        throw FormatError(detail::index_path(rpath, d), "magnitude must be finite and >= 0");
      }
    }
  }
  if (rec.max_gradient != max_magnitude(rec.magnitudes)) {
    throw FormatError(detail::join(path, "max_gradient"), "does not equal the maximum stored magnitude");
  }
  if (!std::isfinite(rec.batch_loss) || rec.batch_loss < 0.0) {
    throw FormatError(detail::join(path, "batch_loss"), "must be finite and >= 0");
  }
}

GradientLog::GradientLog(RunMeta meta) : meta_(std::move(meta)) { validate_meta(meta_); }

void GradientLog::append(BatchRecord record) {
  const std::string path = detail::index_path("records", records_.size());
  if (!records_.empty() && record.batch_index <= records_.back().batch_index) {
    throw FormatError(detail::join(path, "batch_index"),
                      "batch_index " + std::to_string(record.batch_index) + " does not follow " +
                          std::to_string(records_.back().batch_index));
  }
  validate_record(meta_, record, path);
  records_.push_back(std::move(record));
}

std::size_t GradientLog::find_batch(std::size_t batch_index) const noexcept {
  const auto it = std::lower_bound(records_.begin(), records_.end(), batch_index,
                                   [](const BatchRecord& r, std::size_t b) { return r.batch_index < b; });
  if (it == records_.end() || it->batch_index != batch_index) return npos;
  return static_cast<std::size_t>(it - records_.begin());
}

std::string serialize(const GradientLog& log) {
  Json records = Json::array();
  for (const auto& rec : log.records()) records.push_back(record_to_json(rec));
  const Json doc{{"schema_version", log.meta().schema_version},
                 {"meta", meta_to_json(log.meta())},
                 {"records", std::move(records)}};
  return detail::dump_json(doc);
}

GradientLog deserialize(std::string_view bytes) {
  const Json doc = detail::parse_json(bytes);
  detail::require_object(doc, "");
  const Json& version = detail::field(doc, "schema_version", "");
  if (!version.is_number_integer()) throw FormatError("schema_version", "expected an integer");
  if (version != kLogSchemaVersion) {
    throw FormatError("schema_version",
                      "unsupported version " + version.dump() + ", expected " + std::to_string(kLogSchemaVersion));
  }
  GradientLog log(meta_from_json(detail::field(doc, "meta", ""), kLogSchemaVersion));
  const Json& records = detail::require_array(detail::field(doc, "records", ""), "records");
  for (std::size_t i = 0; i < records.size(); ++i) {
    log.append(record_from_json(records[i], detail::index_path("records", i)));
  }
  return log;
}

GradientLog read_log(const std::filesystem::path& path) { return deserialize(read_file(path)); }

void write_log(const std::filesystem::path& path, const GradientLog& log) { write_file(path, serialize(log)); }

LogSummary summarize(const GradientLog& log) {
  if (log.empty()) throw FormatError("records", "log has no records");
  LogSummary s;
  s.record_count = log.records().size();
  for (const auto& rec : log.records()) {
    s.per_record_max.push_back(rec.max_gradient);
    s.accuracy_per_record.push_back(rec.accuracy());
  }
  s.global_max_gradient = *std::max_element(s.per_record_max.begin(), s.per_record_max.end());
  return s;
}

}  // namespace itemgrad
