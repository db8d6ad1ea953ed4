#include "smoothgnn/train.hpp"

#include <cmath>

#include "smoothgnn/adam.hpp"
#include "smoothgnn/errors.hpp"
#include "smoothgnn/smoothness.hpp"

namespace sg {

double f1_micro(const std::vector<int32_t>& pred, const std::vector<int32_t>& truth,
                const std::vector<NodeId>& mask) {
  if (mask.empty()) throw ValidationError("f1_micro: empty mask");
  int64_t correct = 0;
  for (NodeId v : mask) {
    if (truth[v] == kUnlabeled) throw ValidationError("f1_micro: masked node is unlabeled");
    if (pred[v] == truth[v]) ++correct;
  }
  // single-label multiclass: micro F1 reduces to accuracy
  return static_cast<double>(correct) / static_cast<double>(mask.size());
}

namespace {

TrainOutcome run_label_propagation(const Dataset& ds, double lambda_f, double lambda_l) {
  TrainOutcome out;
  out.lambda_f = lambda_f;
  out.lambda_l = lambda_l;
  LabelPropResult lp = label_propagation(ds);
  out.predictions = lp.predictions;
  out.result.epochs_run = lp.iterations;
  const auto val = ds.split_nodes(Split::Val);
  const auto test = ds.split_nodes(Split::Test);
  const auto train = ds.split_nodes(Split::Train);
  if (!val.empty()) out.result.best_val_f1 = f1_micro(lp.predictions, ds.labels, val);
  if (!test.empty()) out.result.test_f1 = f1_micro(lp.predictions, ds.labels, test);
  if (!train.empty()) {
    out.result.train_f1 = f1_micro(lp.predictions, ds.labels, train);
    out.result.best_train_f1 = out.result.train_f1;
  }
  return out;
}

}  // namespace

TrainOutcome train_model(const Dataset& ds, const ModelSpec& spec, const TrainConfig& cfg,
                         const TopoFeatureMatrix* topo) {
  if (cfg.lr <= 0.0) throw ValidationError("train: learning rate must be > 0");
  if (cfg.patience < 1) throw ValidationError("train: patience must be >= 1");

  const double lambda_f = feature_smoothness(ds);
  int64_t labeled_edges = 0;
  const double lambda_l = label_smoothness(ds, &labeled_edges);

  if (spec.family == ModelFamily::LabelProp) {
    return run_label_propagation(ds, lambda_f, lambda_l);
  }

  const auto train_nodes = ds.split_nodes(Split::Train);
  const auto val_nodes = ds.split_nodes(Split::Val);
  const auto test_nodes = ds.split_nodes(Split::Test);
  if (static_cast<int64_t>(train_nodes.size()) < ds.num_classes) {
    throw ValidationError("train: need at least num_classes labeled train nodes");
  }

  TopoFeatureMatrix local_topo;
  const TopoFeatureMatrix* topo_ptr = nullptr;
  if (spec.family == ModelFamily::CsGnn && spec.use_topo) {
    if (topo) {
      topo_ptr = topo;
    } else {
      local_topo = all_topo_features(ds, TopoConfig{});
      topo_ptr = &local_topo;
    }
  }

  GraphContext ctx = build_graph_context(ds, lambda_f, lambda_l, topo_ptr);
  auto model = std::make_shared<Model>(spec, ctx, cfg.seed);
  Adam adam({cfg.lr, 0.9, 0.999, 1e-8});
  Rng rng(cfg.seed ^ 0x7a11edULL);

  TrainOutcome out;
  out.model = model;
  out.lambda_f = lambda_f;
  out.lambda_l = lambda_l;
  RunResult& res = out.result;

  double best_val = -1.0;
  int since_improved = 0;
  std::vector<std::vector<double>> best_params = model->params().snapshot();
  int best_epoch = 0;

  for (int epoch = 1; epoch <= cfg.max_epochs; ++epoch) {
    Tape tape;
    TensorPtr logits = model->forward(tape, ctx, true, rng);
    TensorPtr loss = softmax_cross_entropy(tape, logits, ds.labels, train_nodes);
    if (cfg.weight_decay > 0.0) {
      loss = add(tape, loss, scale(tape, l2_penalty(tape, model->params().tensors()),
                                   cfg.weight_decay));
    }
    const double loss_val = loss->v[0];
    if (!std::isfinite(loss_val)) {
      throw DivergenceError("training diverged at epoch " + std::to_string(epoch) +
                            " (loss is not finite)");
    }
    model->params().zero_grad();
    tape.backward(loss);
    adam.step(model->params());

    // evaluation pass, dropout off
    Tape eval_tape;
    Rng eval_rng(0);
    TensorPtr eval_logits = model->forward(eval_tape, ctx, false, eval_rng);
    const auto pred = predict_labels(eval_logits);
    const double val_f1 = val_nodes.empty() ? 0.0 : f1_micro(pred, ds.labels, val_nodes);
    res.best_train_f1 = std::max(res.best_train_f1, f1_micro(pred, ds.labels, train_nodes));
    res.history.emplace_back(loss_val, val_f1);
    res.epochs_run = epoch;

    if (val_f1 > best_val) {  // ties resolve toward the earlier epoch
      best_val = val_f1;
      best_epoch = epoch;
      best_params = model->params().snapshot();
      since_improved = 0;
    } else {
      ++since_improved;
      if (since_improved >= cfg.patience) break;
    }
  }

  model->params().restore(best_params);
  res.best_val_f1 = std::max(best_val, 0.0);
  res.best_epoch = best_epoch;

  Tape final_tape;
  Rng final_rng(0);
  TensorPtr final_logits = model->forward(final_tape, ctx, false, final_rng);
  out.predictions = predict_labels(final_logits);
  if (!test_nodes.empty()) res.test_f1 = f1_micro(out.predictions, ds.labels, test_nodes);
  if (!train_nodes.empty()) res.train_f1 = f1_micro(out.predictions, ds.labels, train_nodes);
  return out;
}

}  // namespace sg
