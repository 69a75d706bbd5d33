#include "itemgrad/vocab.hpp"

#include <algorithm>
#include <cstdio>

#include "itemgrad/errors.hpp"

namespace itemgrad {

Vocabulary::Vocabulary(std::vector<char32_t> symbols) : symbols_(std::move(symbols)) {
  if (symbols_.size() < 2) {
    throw CorpusError("vocabulary needs at least 2 distinct symbols, got " + std::to_string(symbols_.size()));
  }
  if (std::adjacent_find(symbols_.begin(), symbols_.end(), std::greater_equal<>()) != symbols_.end()) {
    throw CorpusError("vocabulary symbols must be distinct and sorted by code point");
  }
  index_.reserve(symbols_.size());
  for (SymbolIndex i = 0; i < symbols_.size(); ++i) index_.emplace(symbols_[i], i);
}

char32_t Vocabulary::symbol(SymbolIndex index) const {
  if (index >= symbols_.size()) {
    throw BoundsError("symbol index " + std::to_string(index) + " out of range [0, " +
                      std::to_string(symbols_.size()) + ")");
  }
  return symbols_[index];
}

std::optional<SymbolIndex> Vocabulary::find(char32_t symbol) const {
  const auto it = index_.find(symbol);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

SymbolIndex Vocabulary::index_of(char32_t symbol) const {
  if (auto found = find(symbol)) return *found;
  char code[16];
  std::snprintf(code, sizeof code, "U+%04X", static_cast<unsigned>(symbol));
  throw BoundsError(std::string("symbol ") + code + " not in vocabulary");
}

std::vector<SymbolIndex> Vocabulary::encode(std::u32string_view text) const {
  std::vector<SymbolIndex> out;
  out.reserve(text.size());
  for (char32_t c : text) out.push_back(index_of(c));
  return out;
}

std::u32string Vocabulary::decode(const std::vector<SymbolIndex>& indices) const {
  std::u32string out;
  out.reserve(indices.size());
  for (SymbolIndex i : indices) out.push_back(symbol(i));
  return out;
}

Vocabulary build_vocab(std::u32string_view corpus) {
  std::vector<char32_t> symbols(corpus.begin(), corpus.end());
  std::sort(symbols.begin(), symbols.end());
  symbols.erase(std::unique(symbols.begin(), symbols.end()), symbols.end());
  if (symbols.size() < 2) {
    throw CorpusError("degenerate corpus: " + std::to_string(symbols.size()) +
                      " distinct symbol(s), need at least 2");
  }
  return Vocabulary(std::move(symbols));
}

}  // namespace itemgrad
