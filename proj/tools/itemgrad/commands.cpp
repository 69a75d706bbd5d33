#include "commands.hpp"

#include <httplib.h>
#include <pthread.h>
#include <signal.h>
#include <unistd.h>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iomanip>
#include <sstream>
#include <thread>

#include "itemgrad/backprop.hpp"
#include "itemgrad/errors.hpp"
#include "itemgrad/io.hpp"
#include "itemgrad/model_io.hpp"
#include "itemgrad/utf8.hpp"

namespace itemgrad::cli {

namespace {

int guarded(std::ostream& err, const std::function<int()>& body) {
  try {
    return body();
  } catch (const IoError& e) {
    err << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << '\n';
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return kExitConfig;
  }
}

std::string fixed(double v, int precision) {
  std::ostringstream s;
  s << std::fixed << std::setprecision(precision) << v;
  return s.str();
}

std::string sci(double v) {
  std::ostringstream s;
  s << std::scientific << std::setprecision(3) << v;
  return s.str();
}

std::string visible_text(const std::u32string& text) {
  std::string out;
  for (char32_t c : text) out += visible(c);
  return out;
}

// setw counts bytes, so pad multi-byte glyphs by hand.
std::string glyph_cell(char32_t c, std::size_t width) { return visible(c) + std::string(width - 1, ' '); }

void print_summary(const GradientLog& log, std::ostream& out) {
  out << "records: " << log.records().size() << "  batch_size: " << log.meta().batch_size
      << "  horizon: " << log.meta().horizon << "  record_interval: " << log.meta().record_interval << '\n';
  if (log.empty()) return;
  const LogSummary s = summarize(log);
  out << "global max gradient: " << sci(s.global_max_gradient) << "\n\n";
  out << std::left << std::setw(8) << "record" << std::setw(13) << "batch_index" << std::setw(14) << "max_gradient"
      << "accuracy\n";
  for (std::size_t i = 0; i < s.record_count; ++i) {
    out << std::setw(8) << i << std::setw(13) << log.records()[i].batch_index << std::setw(14)
        << sci(s.per_record_max[i]) << fixed(s.accuracy_per_record[i], 3) << '\n';
  }
}

void print_record(const GradientLog& log, const BatchRecord& rec, double epsilon, std::ostream& out) {
  const std::size_t n = log.meta().batch_size;
  out << "batch " << rec.batch_index << "  chars " << rec.char_offset << "-" << rec.char_offset + n
      << "  max gradient " << sci(rec.max_gradient) << "  loss " << fixed(rec.batch_loss, 4) << "  accuracy "
      << fixed(rec.accuracy(), 3) << '\n';
  out << "true: " << visible_text(rec.true_labels) << '\n';
  out << "pred: " << visible_text(rec.predicted_labels) << '\n';
  const auto flags = rec.correct();
  out << "      ";
  for (bool ok : flags) out << (ok ? '+' : '.');
  out << "\n\n";

  const std::size_t k = log.meta().horizon;
  out << std::left << std::setw(5) << "t" << std::setw(6) << "true" << std::setw(6) << "pred";
  for (std::size_t d = 0; d <= k; ++d) out << std::setw(11) << ("d=" + std::to_string(d));
  out << "horizon(eps=" << sci(epsilon) << ")\n";
  for (std::size_t t = 0; t < rec.magnitudes.size(); ++t) {
    const auto& row = rec.magnitudes[t];
    out << std::setw(5) << t << glyph_cell(rec.true_labels[t], 6) << glyph_cell(rec.predicted_labels[t], 6);
    for (std::size_t d = 0; d <= k; ++d) out << std::setw(11) << (d < row.size() ? sci(row[d]) : "-");
    out << gradient_horizon(row, epsilon) << '\n';
  }
}

constexpr const char* kPlaceholderPage = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>itemgrad</title></head>
<body>
<h1>itemgrad log server</h1>
<p>The web explorer assets were not found. The gradient log is available at
<a href="/api/log">/api/log</a>.</p>
</body></html>
)";

}  // namespace

std::string visible(char32_t c) {
  switch (c) {
    case U' ': return "␣";
    case U'\n': return "↵";
    case U'\t': return "→";
    case U'\r': return "␍";
    default: break;
  }
  if (c < 0x20) return utf8::encode(static_cast<char32_t>(0x2400 + c));
  if (c == 0x7F) return "␡";
  return utf8::encode(c);
}

int run_train(const TrainCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    cmd.config.validate();
    const std::u32string corpus = utf8::decode(read_file(cmd.corpus));
    const std::size_t interval = cmd.config.record_interval;
    std::vector<double> losses;
    losses.reserve(cmd.config.max_batches);

    TrainOptions options;
    options.corpus_id = cmd.corpus.filename().string();
    options.observer = [&](const BatchContext& ctx) {
      losses.push_back(ctx.trace.total_loss / static_cast<double>(ctx.trace.length()));
      if (ctx.batch_index % interval == 0) {
        out << "batch " << ctx.batch_index << "  smoothed loss " << fixed(smoothed_loss(losses, losses.size()), 4)
            << '\n';
      }
    };
    const TrainResult result = train(corpus, cmd.config, options);
    write_log(cmd.out, result.log);
    if (!cmd.model_out.empty()) write_model(cmd.model_out, Model{result.vocab, result.params});
    out << "final smoothed loss " << fixed(smoothed_loss(result.batch_losses, result.batch_losses.size()), 4)
        << " (ln C = " << fixed(std::log(static_cast<double>(result.vocab.size())), 4) << ")\n";
    out << "wrote " << result.log.records().size() << " records to " << cmd.out.string() << '\n';
    return kExitOk;
  });
}

int run_generate(const GenerateCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (cmd.length < 1) throw ConfigError("--length must be >= 1");
    const SampleMode mode = parse_sample_mode(cmd.mode);
    const Model model = read_model(cmd.model);
    char32_t seed_symbol = model.vocab.symbol(0);
    if (cmd.seed_char) {
      const std::u32string s = utf8::decode(*cmd.seed_char);
      if (s.size() != 1) throw ConfigError("--seed-char must be exactly one character");
      if (!model.vocab.find(s.front())) throw ConfigError("--seed-char is not in the model vocabulary");
      seed_symbol = s.front();
    }
    out << utf8::encode(generate(model.params, model.vocab, seed_symbol, cmd.length, mode, cmd.seed)) << '\n';
    return kExitOk;
  });
}

int run_inspect(const InspectCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    if (!(cmd.epsilon > 0.0)) throw ConfigError("--epsilon must be > 0");
    const GradientLog log = read_log(cmd.log);
    if (!cmd.batch) {
      print_summary(log, out);
      return kExitOk;
    }
    const std::size_t idx = log.find_batch(*cmd.batch);
    if (idx == GradientLog::npos) {
      err << "error: no record for batch " << *cmd.batch << "; available batch indices:";
      for (const auto& rec : log.records()) err << ' ' << rec.batch_index;
      err << '\n';
      return kExitConfig;
    }
    print_record(log, log.records()[idx], cmd.epsilon, out);
    return kExitOk;
  });
}

struct LogServer::Impl {
  httplib::Server server;
  std::string body;
};

LogServer::LogServer(const GradientLog& log, const std::filesystem::path& static_dir)
    : impl_(std::make_unique<Impl>()) {
  impl_->body = serialize(log);
  auto& svr = impl_->server;
  // httplib defaults to SO_REUSEPORT, which would let a second server share
  // a busy port instead of failing to bind.
  svr.set_socket_options([](socket_t sock) {
    int yes = 1;
    setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  svr.Get("/api/log", [this](const httplib::Request&, httplib::Response& res) {
    res.set_content(impl_->body, "application/json");
  });
  svr.Get("/api/health", [](const httplib::Request&, httplib::Response& res) {
    res.set_content(R"({"status":"ok"})", "application/json");
  });
  std::error_code ec;
  const bool have_assets = !static_dir.empty() && std::filesystem::is_directory(static_dir, ec) &&
                           svr.set_mount_point("/", static_dir.string());
  if (!have_assets) {
    svr.Get("/", [](const httplib::Request&, httplib::Response& res) {
      res.set_content(kPlaceholderPage, "text/html; charset=utf-8");
    });
  }
}

LogServer::~LogServer() { stop(); }

bool LogServer::bind(const std::string& host, int port) {
  auto& svr = impl_->server;
  if (port == 0) {
    port_ = svr.bind_to_any_port(host);
    return port_ > 0;
  }
  if (!svr.bind_to_port(host, port)) return false;
  port_ = port;
  return true;
}

bool LogServer::listen() { return impl_->server.listen_after_bind(); }

void LogServer::stop() {
  if (impl_) impl_->server.stop();
}

int run_serve(const ServeCommand& cmd, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] {
    const GradientLog log = read_log(cmd.log);

    // Route SIGINT/SIGTERM to sigwait below instead of default termination;
    // the mask is inherited by the server's worker threads.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    LogServer server(log, cmd.static_dir);
    if (!server.bind(cmd.host, cmd.port)) {
      err << "error: cannot bind " << cmd.host << ":" << cmd.port << " (port in use?)\n";
      return kExitIo;
    }
    out << "serving " << cmd.log.string() << " on http://" << cmd.host << ":" << server.port() << "/" << std::endl;
    std::atomic<bool> stopping{false};
    std::thread worker([&] {
      server.listen();
      if (!stopping) kill(getpid(), SIGTERM);  // wake sigwait if the server exits on its own
    });
    int received = 0;
    sigwait(&signals, &received);
    stopping = true;
    server.stop();
    worker.join();
    out << "shutting down\n";
    return kExitOk;
  });
}

}  // namespace itemgrad::cli
