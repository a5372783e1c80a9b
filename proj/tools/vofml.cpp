#include <CLI11.hpp>

#include <iostream>

#include "vofml/cli.hpp"

namespace cli = vofml::cli;

int main(int argc, char** argv) {
  CLI::App app{"Neural volume-of-fluid flux: dataset generation, training and advection tests"};
  app.require_subcommand(1);

  cli::GenDatasetOptions gen;
  std::string counts = "3000,6000,9000,6000";
  auto* gen_cmd = app.add_subcommand("gen-dataset", "Generate the synthetic stencil dataset");
  gen_cmd->add_option("--counts", counts, "Base configurations per family: one_plane,two_planes,three_planes,ellipsoid")
      ->capture_default_str();
  gen_cmd->add_option("--beta-max", gen.beta_max, "Largest Courant number")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed, "Random seed")->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output CSV")->required();
  gen_cmd->add_flag("!--no-augment", gen.augment, "Skip the six symmetry augmentations");

  cli::TrainOptions tr;
  std::string target = "raw";
  auto* train_cmd = app.add_subcommand("train", "Train the flux network (ADAM, then quasi-Newton)");
  train_cmd->add_option("--dataset", tr.dataset, "Dataset CSV")->required()->check(CLI::ExistingFile);
  train_cmd->add_option("--epochs-adam", tr.adam_epochs, "ADAM epochs")->capture_default_str();
  train_cmd->add_option("--steps-lbfgs", tr.qn_steps, "Quasi-Newton steps")->capture_default_str();
  train_cmd->add_flag("--full-bfgs", tr.full_bfgs, "Dense BFGS instead of L-BFGS");
  train_cmd->add_option("--batch-size", tr.batch_size, "ADAM mini-batch size (0: full batch)")->capture_default_str();
  train_cmd->add_option("--lr", tr.learning_rate, "ADAM learning rate")->capture_default_str();
  train_cmd->add_option("--target", target, "Loss on the raw or the symmetrized network (raw|wrapped)")
      ->capture_default_str();
  train_cmd->add_option("--report-every", tr.report_every, "Progress interval (0: silent)")->capture_default_str();
  train_cmd->add_option("--seed", tr.seed, "Seed for initialization, split and batching")->capture_default_str();
  train_cmd->add_option("--out", tr.out, "Weights file")->required();

  cli::EvalOptions ev;
  std::uint64_t split_seed = 0;
  auto* eval_cmd = app.add_subcommand("eval-net", "Report MSE/MAE of UW, LD and the network on a dataset");
  eval_cmd->add_option("--weights", ev.weights, "Weights file")->required()->check(CLI::ExistingFile);
  eval_cmd->add_option("--dataset", ev.dataset, "Dataset CSV")->required()->check(CLI::ExistingFile);
  auto* split_opt = eval_cmd->add_option("--split-seed", split_seed, "Score only the test partition of this split");

  cli::RunTestOptions rt;
  std::string scheme = "ld", nh = "10,14,20,27,38";
  auto* run_cmd = app.add_subcommand("run-test", "Run an advection test on a list of meshes");
  run_cmd->add_option("--test", rt.test, "Test case")->required()->check(CLI::Range(1, 3));
  run_cmd->add_option("--scheme", scheme, "uw, ld or vofml")->required();
  run_cmd->add_option("--nh", nh, "Comma-separated cells per direction")->capture_default_str();
  run_cmd->add_option("--weights", rt.weights, "Weights file (vofml only)")->check(CLI::ExistingFile);
  run_cmd->add_option("--out", rt.out, "Output directory")->required();
  run_cmd->add_flag("--full", rt.full, "Use the full mesh list up to 105 cells");

  std::string conv_dir;
  auto* conv_cmd = app.add_subcommand("convergence", "Fit convergence rates from run-test summaries");
  conv_cmd->add_option("--in", conv_dir, "Directory with summary CSVs")->required()->check(CLI::ExistingDirectory);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) {
      gen.counts = cli::parse_counts(counts);
      return cli::gen_dataset(gen, std::cout);
    }
    if (*train_cmd) {
      tr.target = cli::parse_target(target);
      return cli::train_network(tr, std::cout);
    }
    if (*eval_cmd) {
      if (*split_opt) ev.split_seed = split_seed;
      return cli::eval_net(ev, std::cout);
    }
    if (*run_cmd) {
      rt.scheme = cli::parse_scheme(scheme);
      rt.nh = cli::parse_mesh_list(nh);
      cli::run_test(rt, std::cout);
      return 0;
    }
    if (*conv_cmd) return cli::convergence_report(conv_dir, std::cout);
  } catch (const cli::UsageError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
