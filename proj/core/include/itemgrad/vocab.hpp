#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace itemgrad {

using SymbolIndex = std::size_t;

/// Bijection between the distinct Unicode scalar values of a corpus and
/// [0, size()). Symbols are kept sorted by code point.
class Vocabulary {
 public:
  /// Throws CorpusError unless `symbols` holds at least two distinct values
  /// in strictly ascending order.
  explicit Vocabulary(std::vector<char32_t> symbols);

  std::size_t size() const noexcept { return symbols_.size(); }
  const std::vector<char32_t>& symbols() const noexcept { return symbols_; }
  char32_t symbol(SymbolIndex index) const;

  std::optional<SymbolIndex> find(char32_t symbol) const;
  /// Throws BoundsError for symbols outside the vocabulary.
  SymbolIndex index_of(char32_t symbol) const;

  std::vector<SymbolIndex> encode(std::u32string_view text) const;
  std::u32string decode(const std::vector<SymbolIndex>& indices) const;

  friend bool operator==(const Vocabulary& a, const Vocabulary& b) { return a.symbols_ == b.symbols_; }

 private:
  std::vector<char32_t> symbols_;
  std::unordered_map<char32_t, SymbolIndex> index_;
};

/// Distinct symbols of `corpus`, sorted by code point.
Vocabulary build_vocab(std::u32string_view corpus);

}  // namespace itemgrad
