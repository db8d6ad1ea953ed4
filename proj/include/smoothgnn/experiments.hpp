#pragma once

// Experiment runner behind the CLI: metric reports, training runs, the
// broadcast-smoothing and edge-dropping sweeps, verification checks, and
// the built-in SBM generator. Commands return process exit codes.

#include <iosfwd>
#include <string>
#include <vector>

#include "smoothgnn/config.hpp"
#include "smoothgnn/dataset.hpp"
#include "smoothgnn/models.hpp"
#include "smoothgnn/sbm.hpp"
#include "smoothgnn/topo_features.hpp"
#include "smoothgnn/train.hpp"

namespace sg {

struct RunConfig {
  std::string out_dir = ".";
  std::string dataset_name = "sbm";

  // file-backed dataset ("source = files")
  std::string edges, features, labels, split_file;
  double train_ratio = 0.7, val_ratio = 0.1, test_ratio = 0.2;
  uint64_t split_seed = 7;

  // generator-backed dataset ("source = sbm", the default)
  bool use_sbm = true;
  SbmConfig sbm;

  ModelSpec model;
  TrainConfig train;
  TopoConfig topo;

  std::vector<std::string> model_list;      // sweeps / --all-models
  std::vector<int64_t> broadcast_rounds;    // default 0,1,2,4,...,64
  std::vector<double> drop_fractions;       // default 0,0.5,1
  std::vector<uint64_t> seeds;              // default {train.seed}
  int histogram_bins = 32;
  double epsilon = 0.5;
  bool report_raw_lambda_f = false;  // diagnostics on unnormalized features
  std::string topo_cache;            // reuse topology features across runs
};

RunConfig parse_run_config(const Config& cfg);

// Raw dataset (features not yet normalized) with splits attached.
Dataset load_run_dataset(const RunConfig& rc);

int cmd_metrics(const RunConfig& rc, std::ostream& out);
int cmd_train(const RunConfig& rc, std::ostream& out);
int cmd_sweep_broadcast(const RunConfig& rc, std::ostream& out);
int cmd_sweep_edgedrop(const RunConfig& rc, std::ostream& out);
int cmd_verify(const RunConfig& rc, std::ostream& out);
int cmd_gen_sbm(const RunConfig& rc, std::ostream& out);

// Shared by cmd_verify and the acceptance suite: cumulative broadcast
// rounds paired with (lambda_f, marginal-average KL) on a normalized copy.
struct SweepPoint {
  int64_t rounds;
  double lambda_f;
  double kl_bits;
};
std::vector<SweepPoint> broadcast_metric_sweep(const Dataset& normalized,
                                               const std::vector<int64_t>& rounds, int bins,
                                               double epsilon);

}  // namespace sg
