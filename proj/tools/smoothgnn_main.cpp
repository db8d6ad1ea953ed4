// smoothgnn: smoothness metrics, CS-GNN and baseline training, smoothness
// sweeps, noise-power and correlation verification, and synthetic SBM generation.
//
// Exit codes: 0 ok, 2 load/parse failure, 3 validation failure,
// 4 training divergence, 5 verification failure.

#include <functional>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "smoothgnn/config.hpp"
#include "smoothgnn/errors.hpp"
#include "smoothgnn/experiments.hpp"
#include "smoothgnn/models.hpp"

namespace {

struct CliOptions {
  std::string config_path;
  std::string model;
  std::string out_dir;
  int64_t seed = -1;
  bool all_models = false;
};

sg::RunConfig build_run_config(const CliOptions& opts) {
  sg::Config cfg;
  if (!opts.config_path.empty()) cfg = sg::Config::parse_file(opts.config_path);
  sg::RunConfig rc = sg::parse_run_config(cfg);
  if (!opts.model.empty()) {
    rc.model.family = sg::parse_family(opts.model);
    rc.model_list.clear();
  }
  if (opts.all_models) {
    rc.model_list.clear();
    for (sg::ModelFamily f : sg::all_families()) rc.model_list.push_back(sg::family_name(f));
  }
  if (opts.seed >= 0) {
    rc.train.seed = static_cast<uint64_t>(opts.seed);
    rc.seeds.clear();
  }
  if (!opts.out_dir.empty()) rc.out_dir = opts.out_dir;
  return rc;
}

int run_guarded(const std::function<int()>& fn) {
  try {
    return fn();
  } catch (const sg::ParseError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const sg::ValidationError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  } catch (const sg::DivergenceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 4;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"smoothness-aware GNN toolkit"};
  app.require_subcommand(1);

  CliOptions opts;
  int rc_code = 0;

  auto add_common = [&](CLI::App* sub, bool with_model) {
    sub->add_option("--config", opts.config_path, "run config file");
    sub->add_option("--out", opts.out_dir, "output directory");
    if (with_model) {
      sub->add_option("--model", opts.model,
                      "model family (csgnn|gcn|sage-mean|sage-maxpool|gat|mlp|logistic|labelprop)");
      sub->add_option("--seed", opts.seed, "training seed");
    }
  };

  auto* metrics = app.add_subcommand("metrics", "smoothness / information-gain report");
  add_common(metrics, false);
  metrics->callback([&] {
    rc_code = run_guarded([&] { return sg::cmd_metrics(build_run_config(opts), std::cout); });
  });

  auto* train = app.add_subcommand("train", "train one model (or --all-models)");
  add_common(train, true);
  train->add_flag("--all-models", opts.all_models, "train every model family");
  train->callback([&] {
    rc_code = run_guarded([&] { return sg::cmd_train(build_run_config(opts), std::cout); });
  });

  auto* sweep_b = app.add_subcommand("sweep-broadcast", "broadcast-smoothing sweep");
  add_common(sweep_b, true);
  sweep_b->callback([&] {
    rc_code =
        run_guarded([&] { return sg::cmd_sweep_broadcast(build_run_config(opts), std::cout); });
  });

  auto* sweep_e = app.add_subcommand("sweep-edgedrop", "cross-label edge-dropping sweep");
  add_common(sweep_e, true);
  sweep_e->callback([&] {
    rc_code =
        run_guarded([&] { return sg::cmd_sweep_edgedrop(build_run_config(opts), std::cout); });
  });

  auto* verify = app.add_subcommand("verify", "noise-power and smoothness-correlation checks");
  add_common(verify, false);
  verify->callback([&] {
    rc_code = run_guarded([&] { return sg::cmd_verify(build_run_config(opts), std::cout); });
  });

  auto* gen = app.add_subcommand("gen-sbm", "write a synthetic SBM dataset");
  add_common(gen, false);
  gen->callback([&] {
    rc_code = run_guarded([&] { return sg::cmd_gen_sbm(build_run_config(opts), std::cout); });
  });

  CLI11_PARSE(app, argc, argv);
  return rc_code;
}
