#include "itemgrad/model_io.hpp"

#include "itemgrad/errors.hpp"
#include "itemgrad/io.hpp"
#include "itemgrad/utf8.hpp"
#include "json_fields.hpp"

namespace itemgrad {

using detail::Json;

namespace {

Json matrix_to_json(const Matrix& m) {
  Json rows = Json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    Json row = Json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    rows.push_back(std::move(row));
  }
  return rows;
}

Matrix matrix_from_json(const Json& j, std::size_t rows, std::size_t cols, const std::string& path) {
  detail::require_array(j, path);
  if (j.size() != rows) {
    throw FormatError(path, "has " + std::to_string(j.size()) + " rows, expected " + std::to_string(rows));
  }
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t r = 0; r < rows; ++r) {
    const std::string rpath = detail::index_path(path, r);
    const Json& row = detail::require_array(j[r], rpath);
    if (row.size() != cols) {
      throw FormatError(rpath, "has " + std::to_string(row.size()) + " columns, expected " + std::to_string(cols));
    }
    for (std::size_t c = 0; c < cols; ++c) {
      m(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) =
          detail::as_finite(row[c], detail::index_path(rpath, c));
    }
  }
  return m;
}

}  // namespace

std::string serialize_model(const Model& model) {
  model.params.check_shapes();
  if (model.params.vocab_size() != model.vocab.size()) throw ShapeError("model and vocabulary sizes differ");
  Json vocab = Json::array();
  for (char32_t c : model.vocab.symbols()) vocab.push_back(utf8::encode(c));
  const Json doc{{"schema_version", kModelSchemaVersion},
                 {"hidden_size", model.params.hidden_size()},
                 {"vocab_size", model.params.vocab_size()},
                 {"vocab", std::move(vocab)},
                 {"U", matrix_to_json(model.params.U)},
                 {"W", matrix_to_json(model.params.W)},
                 {"V", matrix_to_json(model.params.V)}};
  return detail::dump_json(doc);
}

Model deserialize_model(std::string_view bytes) {
  const Json doc = detail::parse_json(bytes);
  detail::require_object(doc, "");
  const Json& version = detail::field(doc, "schema_version", "");
  if (!version.is_number_integer() || version != kModelSchemaVersion) {
    throw FormatError("schema_version", "unsupported model version " + version.dump());
  }
  const std::size_t h = detail::as_size(detail::field(doc, "hidden_size", ""), "hidden_size");
  const std::size_t c = detail::as_size(detail::field(doc, "vocab_size", ""), "vocab_size");
  if (h < 1) throw FormatError("hidden_size", "must be >= 1");

  const Json& vocab_json = detail::require_array(detail::field(doc, "vocab", ""), "vocab");
  if (vocab_json.size() != c) throw FormatError("vocab", "length does not match vocab_size");
  std::vector<char32_t> symbols;
  for (std::size_t i = 0; i < vocab_json.size(); ++i) {
    const std::string path = detail::index_path("vocab", i);
    const std::u32string s = detail::as_text(vocab_json[i], path);
    if (s.size() != 1) throw FormatError(path, "expected exactly one character");
    symbols.push_back(s.front());
  }
  std::optional<Vocabulary> vocab;
  try {
    vocab.emplace(std::move(symbols));
  } catch (const CorpusError& e) {
    throw FormatError("vocab", e.what());
  }

  ModelParams params{matrix_from_json(detail::field(doc, "U", ""), h, c, "U"),
                     matrix_from_json(detail::field(doc, "W", ""), h, h, "W"),
                     matrix_from_json(detail::field(doc, "V", ""), c, h, "V")};
  return Model{std::move(*vocab), std::move(params)};
}

Model read_model(const std::filesystem::path& path) { return deserialize_model(read_file(path)); }

void write_model(const std::filesystem::path& path, const Model& model) { write_file(path, serialize_model(model)); }

}  // namespace itemgrad
