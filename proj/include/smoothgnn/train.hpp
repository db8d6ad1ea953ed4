#pragma once

// Full-batch training with Adam, val-F1 early stopping, best-checkpoint
// restore, and F1-Micro evaluation.

#include <cstdint>
#include <memory>
#include <utility>
#include <vector>

#include "smoothgnn/dataset.hpp"
#include "smoothgnn/models.hpp"
#include "smoothgnn/topo_features.hpp"

namespace sg {

struct TrainConfig {
  double lr = 0.01;
  double weight_decay = 0.0;
  int patience = 100;
  int max_epochs = 2000;
  uint64_t seed = 1;
};

struct RunResult {
  double best_val_f1 = 0.0;
  double test_f1 = 0.0;
  double train_f1 = 0.0;       // at the restored best-val state
  double best_train_f1 = 0.0;  // max over epochs
  int epochs_run = 0;
  int best_epoch = 0;
  std::vector<std::pair<double, double>> history;  // (train loss, val F1)
};

struct TrainOutcome {
  RunResult result;
  std::shared_ptr<Model> model;          // null for label propagation
  std::vector<int32_t> predictions;      // all nodes, at the restored best state
  double lambda_f = 0.0;
  double lambda_l = 0.0;
};

// Micro-averaged F1 over the masked nodes (equals accuracy for single-label
// multiclass). Throws on an empty mask or an unlabeled masked node.
double f1_micro(const std::vector<int32_t>& pred, const std::vector<int32_t>& truth,
                const std::vector<NodeId>& mask);

// Trains one model on a dataset whose features are already normalized.
// Smoothness values are computed here and fed to CS-GNN; topology features
// are computed when the model spec enables them (or taken from `topo`).
TrainOutcome train_model(const Dataset& ds, const ModelSpec& spec, const TrainConfig& cfg,
                         const TopoFeatureMatrix* topo = nullptr);

}  // namespace sg
