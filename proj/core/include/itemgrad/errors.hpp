#pragma once

#include <stdexcept>
#include <string>

namespace itemgrad {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Corpus has too few distinct symbols to train on, or is too short to batch.
class CorpusError : public Error {
 public:
  using Error::Error;
};

/// Index outside its valid range (symbol index, origin, batch index).
class BoundsError : public Error {
 public:
  using Error::Error;
};

/// Dimension mismatch between matrices, traces, or batches.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// NaN or Inf where a finite value is required.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Invalid hyperparameter or command option.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// File could not be read or written.
class IoError : public Error {
 public:
  using Error::Error;
};

/// A serialized log or model failed validation. `path()` locates the
/// offending field, e.g. `records[3].max_gradient`.
class FormatError : public Error {
 public:
  FormatError(std::string path, const std::string& what)
      : Error(path.empty() ? what : path + ": " + what), path_(std::move(path)) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace itemgrad
