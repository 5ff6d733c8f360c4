// Copyright 2026 The cdnrec Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <cdnrec/app/commands.hpp>
#include <cdnrec/errors.hpp>

#include <CLI11.hpp>

#include <iostream>

int main(int argc, char** argv) {
  using namespace cdnrec;
  CLI::App cli{"Long-tail two-tower recommender experiments"};
  cli.require_subcommand(1);

  std::string config_path;
  auto add_config = [&](CLI::App* sub) {
    sub->add_option("-c,--config", config_path, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  };

  auto* prepare = cli.add_subcommand("prepare", "build the dataset cache and print long-tail statistics");
  add_config(prepare);

  app::TrainOptions train_opts;
  int trials = 0;
  int stop_after = -1;
  auto* train = cli.add_subcommand("train", "train seeded runs and evaluate them on the test split");
  add_config(train);
  train->add_option("--trials", trials, "number of seeded runs (overrides eval.trials)")->check(CLI::PositiveNumber);
  train->add_flag("--resume", train_opts.resume, "continue each run from its last checkpoint");
  train->add_option("--stop-after", stop_after, "stop each run after this many epochs")->check(CLI::NonNegativeNumber);

  app::EvaluateOptions eval_opts;
  auto* evaluate = cli.add_subcommand("evaluate", "evaluate a checkpoint on the test split");
  add_config(evaluate);
  evaluate->add_option("--checkpoint", eval_opts.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  evaluate->add_option("--out", eval_opts.out_dir, "output directory (default: the checkpoint's directory)");
  evaluate->add_flag("--gates", eval_opts.gates, "also write the gate analysis");

  std::filesystem::path gates_ckpt, gates_out;
  auto* gates = cli.add_subcommand("gates", "mean memorization / generalization gate mass per item slice");
  add_config(gates);
  gates->add_option("--checkpoint", gates_ckpt, "checkpoint file")->required()->check(CLI::ExistingFile);
  gates->add_option("--out", gates_out, "output JSON (default: gates.json next to the checkpoint)");

  app::ExportOptions export_opts;
  std::size_t limit = 0;
  auto* exporter = cli.add_subcommand("export-embeddings", "write item embeddings as TSV");
  add_config(exporter);
  exporter->add_option("--checkpoint", export_opts.checkpoint, "checkpoint file")->required()->check(CLI::ExistingFile);
  exporter->add_option("--out", export_opts.out_path, "output TSV")->required();
  exporter->add_option("--subset", export_opts.subset, "all | head | tail")->capture_default_str();
  exporter->add_option("--limit", limit, "export at most this many items, most frequent first");
  exporter->add_option("--label-field", export_opts.label_field, "item feature used as the label")->capture_default_str();

  std::vector<double> gammas;
  std::filesystem::path sweep_out;
  auto* sweep = cli.add_subcommand("sweep-gamma", "train one CDN per gamma and tabulate NDCG/HR per slice");
  add_config(sweep);
  sweep->add_option("--gammas", gammas, "gamma values, each > 1")->required()->delimiter(',');
  sweep->add_option("--out", sweep_out, "output CSV (default: <run_dir>/gamma_sweep.csv)");

  try {
    cli.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return cli.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return cli.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << "error[config]: " << e.what() << "\n";
    return app::exit_code(ErrorCategory::Config);
  }

  try {
    app::ExperimentConfig cfg = app::load_experiment(config_path);
    if (*prepare) {
      app::cmd_prepare(cfg, std::cout);
    } else if (*train) {
      if (trials > 0) train_opts.trials = trials;
      if (stop_after >= 0) cfg.train.stop_after = stop_after;
      app::cmd_train(cfg, train_opts, std::cout);
    } else if (*evaluate) {
      app::cmd_evaluate(cfg, eval_opts, std::cout);
    } else if (*gates) {
      app::cmd_gates(cfg, gates_ckpt, gates_out, std::cout);
    } else if (*exporter) {
      if (limit > 0) export_opts.limit = limit;
      app::cmd_export_embeddings(cfg, export_opts, std::cout);
    } else if (*sweep) {
      app::cmd_sweep_gamma(cfg, gammas, sweep_out, std::cout);
    }
  } catch (const Error& e) {
    std::cerr << "error[" << to_string(e.category()) << "]: " << e.what() << "\n";
    return app::exit_code(e.category());
  } catch (const std::filesystem::filesystem_error& e) {
    std::cerr << "error[io]: " << e.what() << "\n";
    return app::exit_code(ErrorCategory::Io);
  } catch (const std::exception& e) {
    std::cerr << "error[internal]: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
