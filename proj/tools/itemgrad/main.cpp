#include <CLI11.hpp>
#include <iostream>

#include "commands.hpp"
#include "itemgrad/errors.hpp"

namespace {

using itemgrad::cli::kExitConfig;

void add_training_flags(CLI::App& app, itemgrad::TrainingConfig& cfg, std::string& optimizer) {
  app.add_option("--batch-size", cfg.batch_size, "Characters per batch (unroll length)")->capture_default_str();
  app.add_option("--hidden-size", cfg.hidden_size, "Hidden units")->capture_default_str();
  app.add_option("--learning-rate", cfg.learning_rate, "Step size")->capture_default_str();
  app.add_option("--optimizer", optimizer, "sgd or adagrad")->capture_default_str();
  app.add_option("--clip-threshold", cfg.clip_threshold, "Entrywise gradient clamp")->capture_default_str();
  app.add_option("--record-interval", cfg.record_interval, "Itemize and log every N batches")->capture_default_str();
  app.add_option("--horizon", cfg.horizon, "Steps back to itemize per loss origin")->capture_default_str();
  app.add_option("--max-batches", cfg.max_batches, "Batches to train")->capture_default_str();
  app.add_option("--init-scale", cfg.init_scale, "Std of Gaussian weight init")->capture_default_str();
  app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
  app.add_option("--epsilon-adagrad", cfg.epsilon_adagrad, "Adagrad denominator offset")->capture_default_str();
  app.add_option("--initial-hidden", cfg.initial_hidden, "Fill value of the initial hidden state")
      ->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Character-level RNN trainer with itemized gradient logging"};
  app.require_subcommand(1);

  itemgrad::cli::TrainCommand train;
  std::string optimizer = "adagrad";
  auto* train_cmd = app.add_subcommand("train", "Train on a UTF-8 corpus and write the gradient log");
  train_cmd->add_option("--corpus", train.corpus, "UTF-8 text file")->required();
  train_cmd->add_option("--out", train.out, "Gradient log output (JSON)")->required();
  train_cmd->add_option("--model-out", train.model_out, "Trained model output (JSON)");
  add_training_flags(*train_cmd, train.config, optimizer);

  itemgrad::cli::GenerateCommand gen;
  std::string seed_char;
  auto* gen_cmd = app.add_subcommand("generate", "Generate text from a trained model");
  gen_cmd->add_option("--model", gen.model, "Model file written by train --model-out")->required();
  gen_cmd->add_option("--length", gen.length, "Characters to emit")->capture_default_str();
  gen_cmd->add_option("--seed-char", seed_char, "First input character (default: first vocabulary symbol)");
  gen_cmd->add_option("--mode", gen.mode, "argmax or sample")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Sampling seed")->capture_default_str();

  itemgrad::cli::InspectCommand inspect;
  std::size_t batch = 0;
  auto* inspect_cmd = app.add_subcommand("inspect", "Print a summary of a gradient log or one batch");
  inspect_cmd->add_option("--log", inspect.log, "Gradient log")->required();
  auto* batch_opt = inspect_cmd->add_option("--batch", batch, "Batch index to show in detail");
  inspect_cmd->add_option("--epsilon", inspect.epsilon, "Threshold for the per-origin gradient horizon")
      ->capture_default_str();

  itemgrad::cli::ServeCommand serve;
  serve.static_dir = ITEMGRAD_WEBUI_DIR;
  auto* serve_cmd = app.add_subcommand("serve", "Serve a gradient log and the web explorer over HTTP");
  serve_cmd->add_option("--log", serve.log, "Gradient log")->required();
  serve_cmd->add_option("--port", serve.port, "TCP port")->capture_default_str();
  serve_cmd->add_option("--host", serve.host, "Bind address")->capture_default_str();
  serve_cmd->add_option("--static-dir", serve.static_dir, "Directory of web explorer assets")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitConfig;
  }

  if (*train_cmd) {
    try {
      train.config.optimizer = itemgrad::parse_optimizer(optimizer);
    } catch (const itemgrad::ConfigError& e) {
      std::cerr << "error: " << e.what() << '\n';
      return kExitConfig;
    }
    return itemgrad::cli::run_train(train, std::cout, std::cerr);
  }
  if (*gen_cmd) {
    if (!seed_char.empty()) gen.seed_char = seed_char;
    return itemgrad::cli::run_generate(gen, std::cout, std::cerr);
  }
  if (*inspect_cmd) {
    if (batch_opt->count() > 0) inspect.batch = batch;
    return itemgrad::cli::run_inspect(inspect, std::cout, std::cerr);
  }
  return itemgrad::cli::run_serve(serve, std::cout, std::cerr);
}
