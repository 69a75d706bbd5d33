#pragma once

// Subcommand implementations for the `itemgrad` executable. Each run_*
// function returns the process exit code and never throws for bad input:
//   0 success, 1 I/O failure, 2 invalid configuration or input file,
//   3 numeric abort during training.

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <ostream>
#include <string>

#include "itemgrad/gradlog.hpp"
#include "itemgrad/trainer.hpp"

namespace itemgrad::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitIo = 1;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumeric = 3;

struct TrainCommand {
  std::filesystem::path corpus;
  std::filesystem::path out;
  std::filesystem::path model_out;
  TrainingConfig config;
};

struct GenerateCommand {
  std::filesystem::path model;
  std::size_t length = 200;
  std::optional<std::string> seed_char;  ///< defaults to the first vocabulary symbol
  std::string mode = "sample";
  std::uint64_t seed = 0;
};

struct InspectCommand {
  std::filesystem::path log;
  std::optional<std::size_t> batch;
  double epsilon = 3e-3;
};

struct ServeCommand {
  std::filesystem::path log;
  std::string host = "127.0.0.1";
  int port = 8080;
  std::filesystem::path static_dir;
};

int run_train(const TrainCommand& cmd, std::ostream& out, std::ostream& err);
int run_generate(const GenerateCommand& cmd, std::ostream& out, std::ostream& err);
int run_inspect(const InspectCommand& cmd, std::ostream& out, std::ostream& err);
/// Blocks until SIGINT or SIGTERM.
int run_serve(const ServeCommand& cmd, std::ostream& out, std::ostream& err);

/// Renders whitespace and control characters as visible glyphs.
std::string visible(char32_t c);

/// HTTP front end for one gradient log: GET /api/log, GET /api/health, and
/// static assets under / (a built-in placeholder page when no asset
/// directory is available).
class LogServer {
 public:
  LogServer(const GradientLog& log, const std::filesystem::path& static_dir);
  ~LogServer();
  LogServer(const LogServer&) = delete;
  LogServer& operator=(const LogServer&) = delete;

  /// Port 0 binds any free port. Returns false when the port is unavailable.
  bool bind(const std::string& host, int port);
  int port() const noexcept { return port_; }
  /// Serves until stop(); call after a successful bind().
  bool listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int port_ = -1;
};

}  // namespace itemgrad::cli
