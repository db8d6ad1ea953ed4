#include "smoothgnn/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <ostream>

#include "smoothgnn/checkpoint.hpp"
#include "smoothgnn/csv.hpp"
#include "smoothgnn/errors.hpp"
#include "smoothgnn/info_gain.hpp"
#include "smoothgnn/smoothness.hpp"
#include "smoothgnn/util.hpp"

namespace sg {

namespace fs = std::filesystem;

namespace {

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : s) {
    if (c == ',' || c == ' ' || c == '\t') {
      if (!cur.empty()) out.push_back(cur);
      cur.clear();
    } else {
      cur += c;
    }
  }
  if (!cur.empty()) out.push_back(cur);
  return out;
}

std::string fmt(double x) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double std_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double acc = 0.0;
  for (double x : xs) acc += (x - m) * (x - m);
  return std::sqrt(acc / static_cast<double>(xs.size() - 1));
}

std::vector<std::string> models_to_run(const RunConfig& rc) {
  if (!rc.model_list.empty()) return rc.model_list;
  return {family_name(rc.model.family)};
}

std::vector<uint64_t> seeds_to_run(const RunConfig& rc) {
  if (!rc.seeds.empty()) return rc.seeds;
  return {rc.train.seed};
}

std::ofstream open_plot(const std::string& path, const std::string& header) {
  const auto parent = fs::path(path).parent_path();
  if (!parent.empty()) fs::create_directories(parent);
  std::ofstream out(path);
  if (!out) throw ParseError("cannot write plot data: " + path);
  out << "# smoothgnn-plot v1\n" << header << "\n";
  return out;
}

}  // namespace

RunConfig parse_run_config(const Config& cfg) {
  RunConfig rc;
  rc.dataset_name = cfg.str("dataset.name", rc.dataset_name);
  rc.edges = cfg.str("dataset.edges");
  rc.features = cfg.str("dataset.features");
  rc.labels = cfg.str("dataset.labels");
  rc.split_file = cfg.str("dataset.splits");
  rc.train_ratio = cfg.real("dataset.train_ratio", rc.train_ratio);
  rc.val_ratio = cfg.real("dataset.val_ratio", rc.val_ratio);
  rc.test_ratio = cfg.real("dataset.test_ratio", rc.test_ratio);
  rc.split_seed = static_cast<uint64_t>(cfg.integer("dataset.split_seed", 7));
  const std::string source = cfg.str("dataset.source", rc.edges.empty() ? "sbm" : "files");
  if (source == "sbm") {
    rc.use_sbm = true;
  } else if (source == "files") {
    rc.use_sbm = false;
    if (rc.edges.empty() || rc.features.empty() || rc.labels.empty()) {
      throw ValidationError("dataset.source = files needs edges/features/labels paths");
    }
  } else {
    throw ValidationError("dataset.source must be files or sbm, got " + source);
  }

  rc.sbm.nodes = cfg.integer("sbm.nodes", rc.sbm.nodes);
  rc.sbm.blocks = static_cast<int>(cfg.integer("sbm.blocks", rc.sbm.blocks));
  rc.sbm.p_intra = cfg.real("sbm.p_intra", rc.sbm.p_intra);
  rc.sbm.p_inter = cfg.real("sbm.p_inter", rc.sbm.p_inter);
  rc.sbm.feature_dim = cfg.integer("sbm.feature_dim", rc.sbm.feature_dim);
  rc.sbm.feature_separation = cfg.real("sbm.feature_separation", rc.sbm.feature_separation);
  rc.sbm.feature_noise = cfg.real("sbm.feature_noise", rc.sbm.feature_noise);
  rc.sbm.label_noise = cfg.real("sbm.label_noise", rc.sbm.label_noise);
  rc.sbm.seed = static_cast<uint64_t>(cfg.integer("sbm.seed", 1));

  rc.model.family = parse_family(cfg.str("model.family", "csgnn"));
  rc.model.rounds = static_cast<int>(cfg.integer("model.rounds", rc.model.rounds));
  rc.model.hidden = static_cast<int>(cfg.integer("model.hidden", rc.model.hidden));
  rc.model.dropout = cfg.real("model.dropout", rc.model.dropout);
  rc.model.attention_dropout = cfg.real("model.attention_dropout", rc.model.dropout);
  rc.model.use_topo = cfg.flag("model.use_topo", rc.model.use_topo);
  rc.model.residual = cfg.flag("model.residual", rc.model.residual);
  rc.model.renormalize_after_drop =
      cfg.flag("model.renormalize_after_drop", rc.model.renormalize_after_drop);

  rc.train.lr = cfg.real("train.lr", rc.train.lr);
  rc.train.weight_decay = cfg.real("train.weight_decay", rc.train.weight_decay);
  rc.train.patience = static_cast<int>(cfg.integer("train.patience", rc.train.patience));
  rc.train.max_epochs = static_cast<int>(cfg.integer("train.max_epochs", rc.train.max_epochs));
  rc.train.seed = static_cast<uint64_t>(cfg.integer("train.seed", 1));

  rc.topo.hops = static_cast<int>(cfg.integer("topo.hops", rc.topo.hops));
  rc.topo.scale = cfg.real("topo.scale", rc.topo.scale);
  rc.topo.sample_points = static_cast<int>(cfg.integer("topo.sample_points", rc.topo.sample_points));
  rc.topo.max_t = cfg.real("topo.max_t", rc.topo.max_t);
  rc.topo.subgraph_cap = cfg.integer("topo.subgraph_cap", rc.topo.subgraph_cap);

  for (const auto& m : split_list(cfg.str("experiment.models"))) rc.model_list.push_back(m);
  rc.broadcast_rounds = cfg.integers("experiment.broadcast_rounds");
  rc.drop_fractions = cfg.reals("experiment.drop_fractions");
  for (int64_t s : cfg.integers("experiment.seeds")) rc.seeds.push_back(static_cast<uint64_t>(s));
  rc.histogram_bins = static_cast<int>(cfg.integer("experiment.histogram_bins", rc.histogram_bins));
  rc.epsilon = cfg.real("experiment.epsilon", rc.epsilon);
  rc.out_dir = cfg.str("experiment.out", rc.out_dir);
  rc.report_raw_lambda_f = cfg.flag("experiment.raw_lambda_f", rc.report_raw_lambda_f);
  rc.topo_cache = cfg.str("topo.cache", rc.topo_cache);

  if (rc.broadcast_rounds.empty()) rc.broadcast_rounds = {0, 1, 2, 4, 8, 16, 32, 64};
  if (rc.drop_fractions.empty()) rc.drop_fractions = {0.0, 0.5, 1.0};
  for (double f : rc.drop_fractions) {
    if (f < 0.0 || f > 1.0) throw ValidationError("drop fractions must lie in [0,1]");
  }
  return rc;
}

Dataset load_run_dataset(const RunConfig& rc) {
  if (rc.use_sbm) {
    Dataset ds = generate_sbm(rc.sbm);
    ds.splits = draw_splits(ds, rc.train_ratio, rc.val_ratio, rc.test_ratio, rc.split_seed);
    return ds;
  }
  SplitSpec split;
  split.path = rc.split_file;
  split.train = rc.train_ratio;
  split.val = rc.val_ratio;
  split.test = rc.test_ratio;
  split.seed = rc.split_seed;
  return load_dataset(rc.edges, rc.features, rc.labels, split);
}

std::vector<SweepPoint> broadcast_metric_sweep(const Dataset& normalized,
                                               const std::vector<int64_t>& rounds, int bins,
                                               double epsilon) {
  std::vector<int64_t> ts = rounds;
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  std::vector<SweepPoint> out;
  Dataset current = normalized;
  int64_t applied = 0;
  for (int64_t t : ts) {
    current = broadcast_smooth(current, static_cast<int>(t - applied));
    applied = t;
    const double lf = feature_smoothness(current);
    const double kl =
        kl_divergence(build_histograms(current, bins, HistogramMode::MarginalAverage), epsilon);
    out.push_back({t, lf, kl});
  }
  return out;
}

int cmd_metrics(const RunConfig& rc, std::ostream& out) {
  Dataset raw = load_run_dataset(rc);
  Dataset ds = normalize_features(raw);
  const SmoothnessReport rep = smoothness_report(ds);
  const HistogramPair hist =
      build_histograms(ds, rc.histogram_bins, HistogramMode::MarginalAverage);
  const double kl = kl_divergence(hist, rc.epsilon);
  const double chi2 = chi_square_kl_approx(hist, rc.epsilon);

  // Degree-averaged aggregator noise power at sigma^2 = 1 (mean and sum).
  double mean_noise = 0.0, sum_noise = 0.0;
  int64_t with_edges = 0;
  for (NodeId v = 0; v < ds.num_nodes; ++v) {
    const auto deg = static_cast<double>(ds.degree(v));
    if (deg == 0) continue;
    ++with_edges;
    mean_noise += 1.0 / deg;
    sum_noise += deg;
  }
  if (with_edges > 0) {
    mean_noise /= static_cast<double>(with_edges);
    sum_noise /= static_cast<double>(with_edges);
  }

  out << "dataset = " << rc.dataset_name << "\n"
      << "nodes = " << ds.num_nodes << "\n"
      << "edges = " << ds.num_edges << "\n"
      << "feature_dim = " << ds.feature_dim << "\n"
      << "classes = " << ds.num_classes << "\n"
      << "lambda_f = " << fmt(rep.feature_smoothness) << "\n"
      << "lambda_f_scope = all-nodes\n"  // unlabeled nodes included
      << "lambda_l = " << fmt(rep.label_smoothness) << "\n"
      << "labeled_edges = " << rep.labeled_edge_count << "\n"
      << "labeled_edge_coverage = "
      << fmt(static_cast<double>(rep.labeled_edge_count) / static_cast<double>(ds.num_edges))
      << "\n"
      << "lambda_l_is_estimate = " << (rep.label_estimate_partial ? "true" : "false") << "\n"
      << "attention_dim_h" << rc.model.hidden << " = " << rep.attention_dim(rc.model.hidden)
      << "\n"
      << "drop_count_r = " << rep.drop_count() << "\n"
      << "kl_bits = " << fmt(kl) << "\n"
      << "chi_square_approx = " << fmt(chi2) << "\n"
      << "noise_power_mean_aggregator = " << fmt(mean_noise) << "\n"
      << "noise_power_sum_aggregator = " << fmt(sum_noise) << "\n";
  if (rc.report_raw_lambda_f) {
    out << "lambda_f_raw = " << fmt(feature_smoothness(raw)) << "\n";
  }

  ResultsWriter writer((fs::path(rc.out_dir) / "results.csv").string());
  ResultsRow row;
  row.experiment = "metrics";
  row.dataset = rc.dataset_name;
  row.model = "-";
  row.seed = 0;
  row.lambda_f = rep.feature_smoothness;
  row.lambda_l = rep.label_smoothness;
  row.kl_bits = kl;
  row.f1_test = 0.0;
  row.wall_seconds = 0.0;
  writer.add_row(row);
  return 0;
}

namespace {

// Trains one (model, seed) on an already-normalized dataset and appends a
// results row. Returns the run result.
RunResult train_once(const RunConfig& rc, const Dataset& ds, const std::string& model_name,
                     uint64_t seed, const std::string& experiment, ResultsWriter& writer,
                     double kl_bits, const TopoFeatureMatrix* topo, std::ostream& out,
                     bool save_ckpt) {
  ModelSpec spec = rc.model;
  spec.family = parse_family(model_name);
  TrainConfig tc = rc.train;
  tc.seed = seed;
  WallTimer timer;
  TrainOutcome outcome = train_model(ds, spec, tc, topo);
  const double wall = timer.seconds();

  ResultsRow row;
  row.experiment = experiment;
  row.dataset = rc.dataset_name;
  row.model = model_name;
  row.seed = seed;
  row.lambda_f = outcome.lambda_f;
  row.lambda_l = outcome.lambda_l;
  row.kl_bits = kl_bits;
  row.f1_test = outcome.result.test_f1;
  row.wall_seconds = wall;
  writer.add_row(row);

  if (save_ckpt && outcome.model) {
    const std::string path =
        (fs::path(rc.out_dir) / ("ckpt_" + model_name + "_seed" + std::to_string(seed) + ".bin"))
            .string();
    save_checkpoint(path, outcome.model->params(), outcome.model->spec_hash());
  }

  out << experiment << " model=" << model_name << " seed=" << seed
      << " val_f1=" << fmt(outcome.result.best_val_f1)
      << " test_f1=" << fmt(outcome.result.test_f1) << " epochs=" << outcome.result.epochs_run
      << "\n";
  return outcome.result;
}

}  // namespace

int cmd_train(const RunConfig& rc, std::ostream& out) {
  Dataset ds = normalize_features(load_run_dataset(rc));
  const double kl =
      kl_divergence(build_histograms(ds, rc.histogram_bins, HistogramMode::MarginalAverage),
                    rc.epsilon);
  fs::create_directories(rc.out_dir);
  ResultsWriter writer((fs::path(rc.out_dir) / "results.csv").string());

  TopoFeatureMatrix topo;
  const TopoFeatureMatrix* topo_ptr = nullptr;
  const auto models = models_to_run(rc);
  const bool needs_topo =
      rc.model.use_topo &&
      std::any_of(models.begin(), models.end(), [](const std::string& m) { return m == "csgnn"; });
  if (needs_topo) {
    if (!rc.topo_cache.empty() && fs::exists(rc.topo_cache)) {
      topo = load_topo_cache(rc.topo_cache);
      if (topo.num_nodes != ds.num_nodes) {
        throw ValidationError("topo cache " + rc.topo_cache + " was built for a different graph");
      }
    } else {
      topo = all_topo_features(ds, rc.topo);
      if (!rc.topo_cache.empty()) save_topo_cache(topo, rc.topo_cache);
    }
    topo_ptr = &topo;
  }

  for (const auto& model_name : models) {
    for (uint64_t seed : seeds_to_run(rc)) {
      train_once(rc, ds, model_name, seed, "train", writer, kl, topo_ptr, out, true);
    }
  }
  return 0;
}

int cmd_sweep_broadcast(const RunConfig& rc, std::ostream& out) {
  Dataset base = normalize_features(load_run_dataset(rc));
  std::vector<int64_t> ts = rc.broadcast_rounds;
  std::sort(ts.begin(), ts.end());
  ts.erase(std::unique(ts.begin(), ts.end()), ts.end());
  if (ts.empty()) throw ValidationError("sweep-broadcast: empty rounds list");

  fs::create_directories(rc.out_dir);
  ResultsWriter writer((fs::path(rc.out_dir) / "results.csv").string());
  std::ofstream plot = open_plot((fs::path(rc.out_dir) / "plot_broadcast.csv").string(),
                                 "model,rounds,lambda_f,kl_bits,f1_mean,f1_std");

  const auto models = models_to_run(rc);
  const auto seeds = seeds_to_run(rc);
  Dataset current = base;
  int64_t applied = 0;
  for (int64_t t : ts) {
    current = broadcast_smooth(current, static_cast<int>(t - applied));
    applied = t;
    const double lf = feature_smoothness(current);
    const double kl = kl_divergence(
        build_histograms(current, rc.histogram_bins, HistogramMode::MarginalAverage), rc.epsilon);
    const std::string experiment = "sweep-broadcast:t=" + std::to_string(t);
    for (const auto& model_name : models) {
      std::vector<double> f1s;
      for (uint64_t seed : seeds) {
        const RunResult r =
            train_once(rc, current, model_name, seed, experiment, writer, kl, nullptr, out, false);
        f1s.push_back(r.test_f1);
      }
      plot << model_name << ',' << t << ',' << fmt(lf) << ',' << fmt(kl) << ','
           << fmt(mean_of(f1s)) << ',' << fmt(std_of(f1s)) << "\n";
    }
  }
  return 0;
}

int cmd_sweep_edgedrop(const RunConfig& rc, std::ostream& out) {
  Dataset base = normalize_features(load_run_dataset(rc));
  if (rc.drop_fractions.empty()) throw ValidationError("sweep-edgedrop: empty fraction list");

  fs::create_directories(rc.out_dir);
  ResultsWriter writer((fs::path(rc.out_dir) / "results.csv").string());
  std::ofstream plot = open_plot((fs::path(rc.out_dir) / "plot_edgedrop.csv").string(),
                                 "model,fraction,lambda_l,f1_mean,f1_std");

  const auto models = models_to_run(rc);
  const auto seeds = seeds_to_run(rc);
  for (double fraction : rc.drop_fractions) {
    const std::string experiment = "sweep-edgedrop:f=" + fmt(fraction);
    // fresh drop per replicate seed
    std::vector<Dataset> replicates;
    std::vector<double> lls, kls;
    for (uint64_t seed : seeds) {
      replicates.push_back(drop_cross_label_edges(base, fraction, seed ^ 0xd20bULL));
      lls.push_back(label_smoothness(replicates.back()));
      kls.push_back(kl_divergence(
          build_histograms(replicates.back(), rc.histogram_bins, HistogramMode::MarginalAverage),
          rc.epsilon));
    }
    for (const auto& model_name : models) {
      std::vector<double> f1s;
      for (size_t i = 0; i < seeds.size(); ++i) {
        const RunResult r = train_once(rc, replicates[i], model_name, seeds[i], experiment, writer,
                                       kls[i], nullptr, out, false);
        f1s.push_back(r.test_f1);
      }
      plot << model_name << ',' << fmt(fraction) << ',' << fmt(mean_of(lls)) << ','
           << fmt(mean_of(f1s)) << ',' << fmt(std_of(f1s)) << "\n";
    }
  }
  return 0;
}

int cmd_verify(const RunConfig& rc, std::ostream& out) {
  bool all_pass = true;
  auto report = [&](const std::string& name, double measured, const std::string& cmp,
                    double threshold, bool pass) {
    all_pass = all_pass && pass;
    out << (pass ? "[PASS] " : "[FAIL] ") << name << ": measured=" << fmt(measured) << " " << cmp
        << " " << fmt(threshold) << "\n";
  };

  // noise-power law: Monte-Carlo sample variance vs sigma^2 * sum a^2
  struct NoiseCase {
    const char* name;
    NoiseModel model;
  };
  const std::vector<NoiseCase> cases = {
      {"noise-mean-4", {1.0, {0.25, 0.25, 0.25, 0.25}}},
      {"noise-sum-3-sigma2", {2.0, {1.0, 1.0, 1.0}}},
      {"noise-weighted", {1.0, {0.5, 0.3, 0.2}}},
  };
  for (const auto& c : cases) {
    const double expected = aggregated_noise_power(c.model);
    const double measured = monte_carlo_noise_check(c.model, 1000000, 99);
    const double rel = std::abs(measured - expected) / expected;
    report(std::string(c.name) + " (rel err vs " + fmt(expected) + ")", rel, "<", 0.05,
           rel < 0.05);
  }

  // boundary case: lambda_f = 0 forces KL = 0 exactly
  {
    std::vector<double> flat(8 * 2, 0.5);
    Dataset uniform = make_dataset(
        8, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {5, 6}, {6, 7}, {7, 0}}, 2, flat, {});
    const double lf = feature_smoothness(uniform);
    const double kl = kl_divergence(
        build_histograms(uniform, rc.histogram_bins, HistogramMode::MarginalAverage), rc.epsilon);
    report("kl-at-lambda_f-zero (lambda_f=" + fmt(lf) + ")", kl, "==", 0.0, kl == 0.0);
  }

  // trend: Spearman(lambda_f, KL) over the broadcast sweep
  {
    Dataset ds = normalize_features(load_run_dataset(rc));
    const auto points =
        broadcast_metric_sweep(ds, rc.broadcast_rounds, rc.histogram_bins, rc.epsilon);
    std::vector<double> lfs, kls;
    for (const auto& p : points) {
      lfs.push_back(p.lambda_f);
      kls.push_back(p.kl_bits);
      out << "  rounds=" << p.rounds << " lambda_f=" << fmt(p.lambda_f)
          << " kl_bits=" << fmt(p.kl_bits) << "\n";
    }
    const double rho = spearman_correlation(lfs, kls);
    report("spearman-lambda_f-vs-kl", rho, ">", 0.9, rho > 0.9);
  }

  out << (all_pass ? "VERIFY OK" : "VERIFY FAILED") << "\n";
  return all_pass ? 0 : 5;
}

int cmd_gen_sbm(const RunConfig& rc, std::ostream& out) {
  Dataset ds = generate_sbm(rc.sbm);
  ds.splits = draw_splits(ds, rc.train_ratio, rc.val_ratio, rc.test_ratio, rc.split_seed);
  save_dataset(ds, rc.out_dir, rc.dataset_name);
  const std::string base = (fs::path(rc.out_dir) / rc.dataset_name).string();
  out << "wrote " << base << "_edges.txt (" << ds.num_edges << " edges)\n"
      << "wrote " << base << "_features.txt (" << ds.num_nodes << " x " << ds.feature_dim << ")\n"
      << "wrote " << base << "_labels.txt\n"
      << "wrote " << base << "_splits.txt\n";
  return 0;
}

}  // namespace sg
