#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "smoothgnn/config.hpp"
#include "smoothgnn/csv.hpp"
#include "smoothgnn/errors.hpp"
#include "smoothgnn/experiments.hpp"

using namespace sg;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("sgexp_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name, const std::string& content) const {
    const auto p = path / name;
    std::ofstream out(p);
    out << content;
    return p.string();
  }
};

// small, fast run configuration around the built-in SBM
RunConfig tiny_run(const TempDir& dir) {
  Config cfg = Config::parse_string(R"(
[sbm]
nodes = 80
blocks = 2
p_intra = 0.2
p_inter = 0.04
feature_dim = 8
feature_separation = 2.0
feature_noise = 0.3
[model]
family = logistic
hidden = 8
[train]
lr = 0.01
patience = 20
max_epochs = 120
)");
  RunConfig rc = parse_run_config(cfg);
  rc.out_dir = dir.path.string();
  return rc;
}

#ifdef SMOOTHGNN_CLI_PATH
int run_cli(const std::string& args) {
  const std::string cmd = std::string(SMOOTHGNN_CLI_PATH) + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}
#endif

}  // namespace

TEST_CASE("config parsing") {
  Config cfg = Config::parse_string(R"(
# comment
[dataset]
name = demo
train_ratio = 0.6   # inline comment
[experiment]
seeds = 1, 2, 3
models = gcn gat
flag_on = true
)");
  CHECK(cfg.str("dataset.name") == "demo");
  CHECK(cfg.real("dataset.train_ratio", 0) == doctest::Approx(0.6));
  CHECK(cfg.integers("experiment.seeds") == std::vector<int64_t>{1, 2, 3});
  CHECK(cfg.flag("experiment.flag_on", false));
  CHECK(cfg.integer("missing.key", 11) == 11);
  CHECK_THROWS_AS(Config::parse_string("key_without_equals\n"), ParseError);
  CHECK_THROWS_AS(Config::parse_string("[unterminated\n"), ParseError);
  Config bad = Config::parse_string("[a]\nx = notanumber\n");
  CHECK_THROWS_AS(bad.real("a.x", 0.0), ParseError);
}

TEST_CASE("run config validation") {
  Config cfg = Config::parse_string("[dataset]\nsource = files\n");
  CHECK_THROWS_AS(parse_run_config(cfg), ValidationError);
  Config bad_frac = Config::parse_string("[experiment]\ndrop_fractions = 0 2\n");
  CHECK_THROWS_AS(parse_run_config(bad_frac), ValidationError);
}

TEST_CASE("metrics on the triangle toy files reports the hand values") {
  TempDir dir;
  dir.file("edges.txt", "0 1\n1 2\n0 2\n");
  dir.file("features.txt", "3 1\n0\n1\n0\n");
  dir.file("labels.txt", "0 0\n1 0\n2 1\n");
  Config cfg = Config::parse_string(
      "[dataset]\nsource = files\nedges = " + (dir.path / "edges.txt").string() +
      "\nfeatures = " + (dir.path / "features.txt").string() +
      "\nlabels = " + (dir.path / "labels.txt").string() + "\ntrain_ratio = 1\nval_ratio = 0\ntest_ratio = 0\n");
  RunConfig rc = parse_run_config(cfg);
  rc.out_dir = dir.path.string();
  std::ostringstream out;
  CHECK(cmd_metrics(rc, out) == 0);
  CHECK(out.str().find("lambda_l = 0.666667") != std::string::npos);
  // per-node terms 1, 4, 1 over |E| = 3 and d = 1
  CHECK(out.str().find("lambda_f = 2") != std::string::npos);
}

TEST_CASE("train command writes checkpoints and deterministic CSV rows") {
  TempDir dir;
  RunConfig rc = tiny_run(dir);
  rc.seeds = {5};
  std::ostringstream out;
  CHECK(cmd_train(rc, out) == 0);
  const std::string csv = (dir.path / "results.csv").string();
  auto rows = read_results(csv);
  REQUIRE(rows.size() == 1);
  CHECK(rows[0].model == "logistic");
  CHECK(rows[0].f1_test > 0.5);
  CHECK(fs::exists(dir.path / "ckpt_logistic_seed5.bin"));

  // rerun into a fresh directory: identical payloads
  TempDir dir2;
  RunConfig rc2 = tiny_run(dir2);
  rc2.seeds = {5};
  std::ostringstream out2;
  CHECK(cmd_train(rc2, out2) == 0);
  auto rows2 = read_results((dir2.path / "results.csv").string());
  REQUIRE(rows2.size() == 1);
  CHECK(rows[0].payload() == rows2[0].payload());
}

TEST_CASE("train with a model list emits one row per family") {
  TempDir dir;
  RunConfig rc = tiny_run(dir);
  rc.model_list = {"csgnn", "gcn",      "sage-mean", "sage-maxpool",
                   "gat",   "mlp",      "logistic",  "labelprop"};
  rc.train.max_epochs = 40;
  rc.train.patience = 10;
  std::ostringstream out;
  CHECK(cmd_train(rc, out) == 0);
  auto rows = read_results((dir.path / "results.csv").string());
  CHECK(rows.size() == 8);
}

TEST_CASE("topology feature cache is written once and reused") {
  TempDir dir;
  RunConfig rc = tiny_run(dir);
  rc.model.family = ModelFamily::CsGnn;
  rc.model.use_topo = true;
  rc.model_list = {"csgnn"};
  rc.seeds = {2};
  rc.train.max_epochs = 30;
  rc.train.patience = 10;
  rc.topo.sample_points = 4;
  rc.topo_cache = (dir.path / "topo.bin").string();
  std::ostringstream out;
  CHECK(cmd_train(rc, out) == 0);
  REQUIRE(fs::exists(rc.topo_cache));
  auto first = read_results((dir.path / "results.csv").string());

  // second run consumes the cache and reproduces the same row
  std::ostringstream out2;
  CHECK(cmd_train(rc, out2) == 0);
  auto rows = read_results((dir.path / "results.csv").string());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].payload() == rows[1].payload());
}

TEST_CASE("results reader rejects unknown schema versions") {
  TempDir dir;
  const auto p = dir.file("results.csv", "# smoothgnn-results v99\nwrong\n");
  CHECK_THROWS_AS(read_results(p), ParseError);
}

TEST_CASE("gen-sbm output loads back through the file path") {
  TempDir dir;
  RunConfig rc = tiny_run(dir);
  rc.dataset_name = "toy";
  std::ostringstream out;
  CHECK(cmd_gen_sbm(rc, out) == 0);
  SplitSpec split;
  split.path = (dir.path / "toy_splits.txt").string();
  Dataset ds = load_dataset((dir.path / "toy_edges.txt").string(),
                            (dir.path / "toy_features.txt").string(),
                            (dir.path / "toy_labels.txt").string(), split);
  CHECK(ds.num_nodes == 80);
  CHECK(ds.num_classes == 2);
  int64_t train = 0;
  for (NodeId v = 0; v < ds.num_nodes; ++v) train += ds.splits[v] == Split::Train;
  CHECK(train == 56);  // floor(0.7 * 80)
}

TEST_CASE("broadcast sweep emits plot data with non-increasing lambda_f") {
  TempDir dir;
  RunConfig rc = tiny_run(dir);
  rc.model_list = {"mlp"};
  rc.seeds = {1};
  rc.broadcast_rounds = {0, 1, 4};
  rc.train.max_epochs = 30;
  rc.train.patience = 10;
  std::ostringstream out;
  CHECK(cmd_sweep_broadcast(rc, out) == 0);
  std::ifstream plot(dir.path / "plot_broadcast.csv");
  REQUIRE(plot.good());
  std::string line;
  std::getline(plot, line);
  CHECK(line == "# smoothgnn-plot v1");
  std::getline(plot, line);  // header
  double prev_lf = 1e300;
  int rows = 0;
  while (std::getline(plot, line)) {
    ++rows;
    std::istringstream ss(line);
    std::string model, rounds, lf;
    std::getline(ss, model, ',');
    std::getline(ss, rounds, ',');
    std::getline(ss, lf, ',');
    CHECK(std::stod(lf) <= prev_lf + 1e-12);
    prev_lf = std::stod(lf);
  }
  CHECK(rows == 3);
}

TEST_CASE("edge-drop sweep holds feature-only models fixed") {
  TempDir dir;
  RunConfig rc = tiny_run(dir);
  rc.model_list = {"mlp"};
  rc.seeds = {3};
  rc.drop_fractions = {0.0, 1.0};
  rc.train.max_epochs = 30;
  rc.train.patience = 10;
  std::ostringstream out;
  CHECK(cmd_sweep_edgedrop(rc, out) == 0);
  auto rows = read_results((dir.path / "results.csv").string());
  REQUIRE(rows.size() == 2);
  CHECK(rows[0].f1_test == rows[1].f1_test);  // adjacency is invisible to the MLP
  CHECK(rows[0].lambda_l > rows[1].lambda_l);
  CHECK(rows[1].lambda_l == 0.0);
}

TEST_CASE("fraction zero sweep row equals a direct training run") {
  TempDir dir;
  RunConfig rc = tiny_run(dir);
  rc.model_list = {"gcn"};
  rc.seeds = {9};
  rc.drop_fractions = {0.0};
  rc.train.max_epochs = 40;
  rc.train.patience = 10;
  std::ostringstream sweep_out;
  CHECK(cmd_sweep_edgedrop(rc, sweep_out) == 0);
  auto sweep_rows = read_results((dir.path / "results.csv").string());

  TempDir dir2;
  RunConfig rc2 = tiny_run(dir2);
  rc2.model_list = {"gcn"};
  rc2.seeds = {9};
  rc2.train.max_epochs = 40;
  rc2.train.patience = 10;
  std::ostringstream train_out;
  CHECK(cmd_train(rc2, train_out) == 0);
  auto train_rows = read_results((dir2.path / "results.csv").string());
  REQUIRE(sweep_rows.size() == 1);
  REQUIRE(train_rows.size() == 1);
  CHECK(sweep_rows[0].f1_test == train_rows[0].f1_test);
  CHECK(sweep_rows[0].lambda_l == train_rows[0].lambda_l);
}

TEST_CASE("verify command passes on the default synthetic setup") {
  TempDir dir;
  Config cfg = Config::parse_string(R"(
[sbm]
nodes = 600
blocks = 4
p_intra = 0.03
p_inter = 0.008
feature_dim = 8
feature_separation = 1.5
feature_noise = 0.4
[experiment]
broadcast_rounds = 0 1 2 4 8 16 32 64
)");
  RunConfig rc = parse_run_config(cfg);
  rc.out_dir = dir.path.string();
  std::ostringstream out;
  CHECK(cmd_verify(rc, out) == 0);
  CHECK(out.str().find("[FAIL]") == std::string::npos);
  CHECK(out.str().find("VERIFY OK") != std::string::npos);
}

#ifdef SMOOTHGNN_CLI_PATH

TEST_CASE("cli exit codes") {
  TempDir dir;
  SUBCASE("missing label file exits 2") {
    dir.file("e.txt", "0 1\n");
    dir.file("f.txt", "2 1\n0\n1\n");
    const auto cfgp = dir.file("run.cfg", "[dataset]\nsource = files\nedges = " +
                                              (dir.path / "e.txt").string() +
                                              "\nfeatures = " + (dir.path / "f.txt").string() +
                                              "\nlabels = " + (dir.path / "missing.txt").string() +
                                              "\n");
    CHECK(run_cli("metrics --config " + cfgp) == 2);
  }
  SUBCASE("bad model family exits 3") {
    const auto cfgp = dir.file("run.cfg", "[model]\nfamily = transformer\n");
    CHECK(run_cli("metrics --config " + cfgp) == 3);
  }
  SUBCASE("verify exits 0 on the small default") {
    const auto cfgp = dir.file("run.cfg",
                               "[sbm]\nnodes = 300\nblocks = 3\np_intra = 0.05\np_inter = "
                               "0.01\nfeature_dim = 6\n[experiment]\nbroadcast_rounds = 0 2 8 32\n");
    CHECK(run_cli("verify --config " + cfgp) == 0);
  }
  SUBCASE("metrics with defaults exits 0") {
    CHECK(run_cli("metrics --out " + dir.path.string()) == 0);
  }
  SUBCASE("training divergence exits 4") {
    const auto cfgp = dir.file("run.cfg",
                               "[sbm]\nnodes = 60\nblocks = 2\np_intra = 0.2\np_inter = "
                               "0.05\nfeature_dim = 6\n[model]\nfamily = mlp\n[train]\nlr = "
                               "1e154\nmax_epochs = 20\npatience = 10\n");
    CHECK(run_cli("train --config " + cfgp + " --out " + dir.path.string()) == 4);
  }
  SUBCASE("verification failure exits 5") {
    // constant features keep every sweep point identical, so the
    // correlation check cannot reach its threshold
    const auto cfgp = dir.file("run.cfg",
                               "[sbm]\nnodes = 120\nblocks = 2\np_intra = 0.2\np_inter = "
                               "0.05\nfeature_dim = 4\nfeature_separation = 0\nfeature_noise = "
                               "0\n[experiment]\nbroadcast_rounds = 0 2 4\n");
    CHECK(run_cli("verify --config " + cfgp) == 5);
  }
}

#endif
