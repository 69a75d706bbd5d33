#pragma once

#include <filesystem>
#include <string>
#include <string_view>

#include "itemgrad/rnn.hpp"
#include "itemgrad/vocab.hpp"

namespace itemgrad {

inline constexpr int kModelSchemaVersion = 1;

struct Model {
  Vocabulary vocab;
  ModelParams params;
};

/// JSON with dimensions, vocab, and row-major nested arrays for U, W, V.
std::string serialize_model(const Model& model);
/// Throws FormatError locating the first bad field.
Model deserialize_model(std::string_view bytes);

Model read_model(const std::filesystem::path& path);
void write_model(const std::filesystem::path& path, const Model& model);

}  // namespace itemgrad
