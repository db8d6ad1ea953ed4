#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>

#include "smoothgnn/errors.hpp"
#include "smoothgnn/grad_check.hpp"
#include "smoothgnn/models.hpp"
#include "smoothgnn/sbm.hpp"
#include "testutil.hpp"

using namespace sg;

namespace {

GraphContext context_for(const Dataset& ds, double lf = 0.04, double ll = 0.0,
                         const TopoFeatureMatrix* topo = nullptr) {
  return build_graph_context(ds, lf, ll, topo);
}

// single-class toy graphs still need a two-class head
Dataset with_two_classes(Dataset ds) {
  ds.num_classes = std::max(ds.num_classes, 2);
  return ds;
}

}  // namespace

TEST_CASE("attention dimension rule") {
  CHECK(attention_dim(16, 0.04) == 4);  // ceil(16 * 0.2)
  CHECK(attention_dim(16, 0.0) == 1);   // floor at 1
  CHECK(attention_dim(8, 0.25) == 4);   // exact boundary 8 * 0.5
  CHECK(attention_dim(3, 1.0) == 3);
  CHECK(attention_dim(10, 0.5) == 8);   // ceil(7.07)
}

TEST_CASE("csgnn attention is uniform for identical neighbors") {
  // every node carries the same feature vector; all logits coincide
  Dataset ds = sgtest::uniform_features(6, 2, 0.5);
  GraphContext ctx = context_for(ds);
  Tape t;
  auto w_p = tensor_of({2, 2}, {0.3, -0.2, 0.7, 0.4});
  auto w_q = tensor_of({2, 2}, {0.5, 0.1, -0.3, 0.2});
  auto a = csgnn_attention(t, ctx.features, nullptr, w_p, w_q, ctx.neighbors);
  for (int64_t i = 0; i < ctx.neighbors.num_segments; ++i) {
    const int64_t lo = ctx.neighbors.seg_offsets[i], hi = ctx.neighbors.seg_offsets[i + 1];
    const double expected = 1.0 / static_cast<double>(hi - lo);
    for (int64_t e = lo; e < hi; ++e) CHECK(a->v[e] == doctest::Approx(expected).epsilon(1e-12));
  }
}

TEST_CASE("csgnn attention matches the scalar hand trace") {
  // center 0 with h=1, neighbors h=1 and h=3, scalar W_p = W_q = 1:
  // logits ELU(0) = 0 and ELU(-2) = e^-2 - 1
  Dataset ds = make_dataset(3, {{0, 1}, {0, 2}}, 1, {1.0, 1.0, 3.0}, {0, 0, 0});
  GraphContext ctx = context_for(ds);
  Tape t;
  auto w_p = tensor_of({1, 1}, {1.0});
  auto w_q = tensor_of({1, 1}, {1.0});
  auto a = csgnn_attention(t, ctx.features, nullptr, w_p, w_q, ctx.neighbors);
  const double z = std::exp(-2.0) - 1.0;
  const double denom = std::exp(0.0) + std::exp(z);
  // node 0's segment comes first (edges to 1 then 2)
  CHECK(a->v[0] == doctest::Approx(1.0 / denom).epsilon(1e-12));
  CHECK(a->v[1] == doctest::Approx(std::exp(z) / denom).epsilon(1e-12));
  CHECK(a->v[0] == doctest::Approx(0.7036).epsilon(1e-4));
  CHECK(a->v[1] == doctest::Approx(0.2964).epsilon(1e-4));
}

TEST_CASE("drop_low_attention order statistics") {
  SegmentIndex seg;
  seg.num_segments = 1;
  seg.seg_offsets = {0, 6};
  seg.src.assign(6, 0);
  seg.dst.assign(6, 0);

  SUBCASE("lambda_l = 0 is a no-op") {
    Tape t;
    auto a = tensor_of({6}, {0.05, 0.1, 0.15, 0.2, 0.25, 0.25});
    auto out = drop_low_attention(t, a, 0.0, seg);
    CHECK(out == a);
  }
  SUBCASE("hand-traced threshold with strict-below ties") {
    Tape t;
    auto a = tensor_of({6}, {0.05, 0.1, 0.15, 0.2, 0.25, 0.25});
    auto out = drop_low_attention(t, a, 0.5, seg);  // r = 3, threshold 0.15
    CHECK(out->v == std::vector<double>{0, 0, 0.15, 0.2, 0.25, 0.25});
  }
  SUBCASE("equal coefficients never drop") {
    Tape t;
    auto a = tensor_of({6}, std::vector<double>(6, 1.0 / 6.0));
    auto out = drop_low_attention(t, a, 0.9, seg);
    for (double v : out->v) CHECK(v == doctest::Approx(1.0 / 6.0));
  }
  SUBCASE("renormalization rescales survivors to sum 1") {
    Tape t;
    auto a = tensor_of({6}, {0.05, 0.1, 0.15, 0.2, 0.25, 0.25});
    auto out = drop_low_attention(t, a, 0.5, seg, true);
    double sum = 0.0;
    for (double v : out->v) sum += v;
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(out->v[0] == 0.0);
  }
}

TEST_CASE("survivors keep their exact values") {
  Rng rng(33);
  for (int trial = 0; trial < 50; ++trial) {
    const int64_t n = 5 + static_cast<int64_t>(rng.below(20));
    std::vector<double> coeffs(n);
    for (auto& c : coeffs) c = rng.uniform();
    const int64_t r = static_cast<int64_t>(rng.below(n + 1));
    const auto mask = drop_survivor_mask(coeffs, r);
    int64_t dropped = 0;
    for (size_t i = 0; i < mask.size(); ++i) {
      dropped += mask[i] == 0.0;
      CHECK((mask[i] == 0.0 || mask[i] == 1.0));
    }
    // distinct values with probability 1: exactly max(r-1, 0) fall strictly below
    CHECK(dropped == std::max<int64_t>(r - 1, 0));
  }
}

TEST_CASE("csgnn layer hand trace") {
  // one node with one neighbor, a = 1, h_i = [1], h_j = [3], W_l = [[1],[1]]
  Dataset ds = make_dataset(2, {{0, 1}}, 1, {1.0, 3.0}, {0, 0});
  GraphContext ctx = context_for(ds);
  Tape t;
  auto a = tensor_of({2}, {1.0, 1.0});
  auto agg = weighted_neighbor_sum(t, a, ctx.features, ctx.neighbors);
  CHECK(agg->v[0] == doctest::Approx(3.0));
  auto w_l = tensor_of({2, 1}, {1.0, 1.0});
  auto z = relu(t, matmul(t, concat_cols(t, ctx.features, agg), w_l));
  CHECK(z->v[0] == doctest::Approx(4.0));

  // zero W_l gives zero pre-activation
  auto zero_w = tensor_of({2, 1}, {0.0, 0.0});
  auto z0 = matmul(t, concat_cols(t, ctx.features, agg), zero_w);
  CHECK(z0->v[0] == 0.0);
}

TEST_CASE("isolated nodes aggregate a zero vector") {
  Dataset ds = make_dataset(3, {{0, 1}}, 2, {1, 2, 3, 4, 5, 6}, {0, 0, 0});
  GraphContext ctx = context_for(ds);
  Tape t;
  auto a = tensor_of({2}, {1.0, 1.0});
  auto agg = weighted_neighbor_sum(t, a, ctx.features, ctx.neighbors);
  CHECK(agg->v[2 * 2 + 0] == 0.0);
  CHECK(agg->v[2 * 2 + 1] == 0.0);
}

TEST_CASE("gcn layer matches the two-node hand evaluation") {
  Dataset ds = make_dataset(2, {{0, 1}}, 1, {1.0, 3.0}, {0, 0});
  GraphContext ctx = context_for(ds);
  Tape t;
  auto w = tensor_of({1, 1}, {1.0});
  auto hw = matmul(t, ctx.features, w);
  auto out = weighted_neighbor_sum(t, ctx.gcn_coeffs, hw, ctx.with_self);
  CHECK(out->v[0] == doctest::Approx(2.0));  // 0.5*1 + 0.5*3
  CHECK(out->v[1] == doctest::Approx(2.0));
}

TEST_CASE("gcn self coefficient is 1 for isolated nodes") {
  Dataset ds = make_dataset(2, {}, 1, {5.0, 7.0}, {0, 0});
  GraphContext ctx = context_for(ds);
  Tape t;
  auto w = tensor_of({1, 1}, {1.0});
  auto hw = matmul(t, ctx.features, w);
  auto out = weighted_neighbor_sum(t, ctx.gcn_coeffs, hw, ctx.with_self);
  CHECK(out->v[0] == doctest::Approx(5.0));
  CHECK(out->v[1] == doctest::Approx(7.0));
}

TEST_CASE("sage aggregators match hand evaluations") {
  Dataset ds = make_dataset(3, {{0, 1}, {0, 2}}, 1, {1.0, 3.0, 5.0}, {0, 0, 0});
  GraphContext ctx = context_for(ds);
  Tape t;
  SUBCASE("mean") {
    auto agg = weighted_neighbor_sum(t, ctx.mean_coeffs, ctx.features, ctx.neighbors);
    CHECK(agg->v[0] == doctest::Approx(4.0));  // mean(3,5)
    auto w = tensor_of({2, 1}, {1.0, 1.0});
    auto out = matmul(t, concat_cols(t, ctx.features, agg), w);
    CHECK(out->v[0] == doctest::Approx(5.0));  // 1 + 4
  }
  SUBCASE("maxpool with identity transform") {
    auto per_edge = row_gather(t, ctx.features, ctx.neighbors.src);
    auto agg = segment_max(t, per_edge, ctx.neighbors);
    CHECK(agg->v[0] == doctest::Approx(5.0));  // max(3,5)
  }
}

TEST_CASE("gat attention matches the scalar hand trace") {
  // h_i = 1 with one neighbor h_j = 2, W = 1, a = (1,1):
  // scores LeakyReLU(2) and LeakyReLU(3) -> softmax = (0.2689, 0.7311)
  Dataset ds = make_dataset(2, {{0, 1}}, 1, {1.0, 2.0}, {0, 0});
  GraphContext ctx = context_for(ds);
  Tape t;
  auto w = tensor_of({1, 1}, {1.0});
  auto a_dst = tensor_of({1}, {1.0});
  auto a_src = tensor_of({1}, {1.0});
  auto hw = matmul(t, ctx.features, w);
  auto sd = matvec(t, hw, a_dst);
  auto ss = matvec(t, hw, a_src);
  auto logits = leaky_relu(t,
                           add(t, row_gather(t, sd, ctx.with_self.dst),
                               row_gather(t, ss, ctx.with_self.src)),
                           0.2);
  auto coeffs = segment_softmax(t, logits, ctx.with_self);
  // node 0's segment: self (score 2) then neighbor 1 (score 3)
  const double e2 = std::exp(2.0), e3 = std::exp(3.0);
  CHECK(coeffs->v[0] == doctest::Approx(e2 / (e2 + e3)).epsilon(1e-12));
  CHECK(coeffs->v[1] == doctest::Approx(e3 / (e2 + e3)).epsilon(1e-12));
  CHECK(coeffs->v[0] == doctest::Approx(0.2689).epsilon(1e-3));
  CHECK(coeffs->v[1] == doctest::Approx(0.7311).epsilon(1e-3));
}

TEST_CASE("identical features give uniform gat coefficients including self") {
  Dataset ds = with_two_classes(sgtest::uniform_features(5, 2, 0.3));
  GraphContext ctx = context_for(ds);
  ModelSpec spec;
  spec.family = ModelFamily::Gat;
  Model model(spec, ctx, 3);
  Tape t;
  auto w = model.params().get("round0.W");
  auto hw = matmul(t, ctx.features, w);
  auto sd = matvec(t, hw, model.params().get("round0.a_dst"));
  auto ss = matvec(t, hw, model.params().get("round0.a_src"));
  auto logits = leaky_relu(t,
                           add(t, row_gather(t, sd, ctx.with_self.dst),
                               row_gather(t, ss, ctx.with_self.src)),
                           0.2);
  auto coeffs = segment_softmax(t, logits, ctx.with_self);
  for (int64_t i = 0; i < ctx.with_self.num_segments; ++i) {
    const int64_t lo = ctx.with_self.seg_offsets[i], hi = ctx.with_self.seg_offsets[i + 1];
    for (int64_t e = lo; e < hi; ++e) {
      CHECK(coeffs->v[e] == doctest::Approx(1.0 / static_cast<double>(hi - lo)).epsilon(1e-12));
    }
  }
}

TEST_CASE("model forward shapes and prediction tie-break") {
  SbmConfig cfg;
  cfg.nodes = 40;
  cfg.blocks = 2;
  cfg.p_intra = 0.3;
  cfg.p_inter = 0.05;
  cfg.feature_dim = 6;
  Dataset ds = normalize_features(generate_sbm(cfg));
  GraphContext ctx = context_for(ds, 0.1, 0.2);
  for (ModelFamily family :
       {ModelFamily::CsGnn, ModelFamily::Gcn, ModelFamily::SageMean, ModelFamily::SageMaxpool,
        ModelFamily::Gat, ModelFamily::Mlp, ModelFamily::Logistic}) {
    ModelSpec spec;
    spec.family = family;
    spec.hidden = 8;
    Model model(spec, ctx, 7);
    Tape t;
    Rng rng(1);
    auto logits = model.forward(t, ctx, false, rng);
    CHECK(logits->shape == std::vector<int64_t>{40, 2});
  }

  auto tied = tensor_of({2, 3}, {1.0, 1.0, 0.0, 0.5, 2.0, 2.0});
  const auto pred = predict_labels(tied);
  CHECK(pred[0] == 0);  // tie between classes 0 and 1
  CHECK(pred[1] == 1);  // tie between classes 1 and 2
}

TEST_CASE("csgnn coefficient pipeline equals plain softmax attention when lambda_l is 0") {
  Dataset ds = with_two_classes(normalize_features(sgtest::ring(10, 2)));
  GraphContext ctx = context_for(ds, 0.09, 0.0);
  ModelSpec spec;
  spec.family = ModelFamily::CsGnn;
  Model model(spec, ctx, 5);
  Tape t;
  auto a = csgnn_attention(t, ctx.features, nullptr, model.params().get("round0.W_p"),
                           model.params().get("round0.W_q"), ctx.neighbors);
  auto dropped = drop_low_attention(t, a, ctx.lambda_l, ctx.neighbors);
  CHECK(dropped == a);  // same tensor, nothing recorded for the drop
}

TEST_CASE("attention coefficients sum to one per segment before dropping") {
  SbmConfig cfg;
  cfg.nodes = 30;
  cfg.blocks = 3;
  cfg.p_intra = 0.4;
  cfg.p_inter = 0.1;
  cfg.feature_dim = 6;
  Dataset ds = normalize_features(generate_sbm(cfg));
  GraphContext ctx = context_for(ds, 0.2, 0.0);
  ModelSpec spec;
  spec.family = ModelFamily::CsGnn;
  Model model(spec, ctx, 11);
  Tape t;
  auto a = csgnn_attention(t, ctx.features, nullptr, model.params().get("round0.W_p"),
                           model.params().get("round0.W_q"), ctx.neighbors);
  for (int64_t i = 0; i < ctx.neighbors.num_segments; ++i) {
    const int64_t lo = ctx.neighbors.seg_offsets[i], hi = ctx.neighbors.seg_offsets[i + 1];
    if (lo == hi) continue;
    double sum = 0.0;
    for (int64_t e = lo; e < hi; ++e) {
      CHECK(a->v[e] >= 0.0);
      sum += a->v[e];
    }
    CHECK(std::abs(sum - 1.0) < 1e-12);
  }
}

TEST_CASE("layer output is invariant under neighbor permutation") {
  Dataset ds = make_dataset(4, {{0, 1}, {0, 2}, {0, 3}}, 2, {1, 2, 3, 4, 5, 6, 7, 8}, {0, 0, 0, 0});
  GraphContext ctx = context_for(ds);
  // same segment contents with node 0's entries reversed
  SegmentIndex shuffled = ctx.neighbors;
  std::reverse(shuffled.src.begin(), shuffled.src.begin() + 3);
  Tape t;
  auto a = tensor_of({6}, {0.2, 0.3, 0.5, 1, 1, 1});
  auto a_rev = tensor_of({6}, {0.5, 0.3, 0.2, 1, 1, 1});
  auto out1 = weighted_neighbor_sum(t, a, ctx.features, ctx.neighbors);
  auto out2 = weighted_neighbor_sum(t, a_rev, ctx.features, shuffled);
  for (int64_t j = 0; j < out1->size(); ++j) {
    CHECK(out1->v[j] == doctest::Approx(out2->v[j]).epsilon(1e-12));
  }
}

TEST_CASE("every layer family passes gradient checks") {
  SbmConfig cfg;
  cfg.nodes = 12;
  cfg.blocks = 2;
  cfg.p_intra = 0.5;
  cfg.p_inter = 0.2;
  cfg.feature_dim = 4;
  cfg.seed = 3;
  Dataset ds = normalize_features(generate_sbm(cfg));
  TopoConfig tcfg;
  tcfg.sample_points = 4;
  TopoFeatureMatrix topo = all_topo_features(ds, tcfg);
  std::vector<NodeId> mask;
  for (NodeId v = 0; v < ds.num_nodes; ++v) mask.push_back(v);

  auto check_family = [&](ModelFamily family, bool use_topo, bool renorm) {
    GraphContext ctx = build_graph_context(ds, 0.2, 0.3, use_topo ? &topo : nullptr);
    ModelSpec spec;
    spec.family = family;
    spec.hidden = 5;
    spec.use_topo = use_topo;
    spec.renormalize_after_drop = renorm;
    Model model(spec, ctx, 19);
    if (family == ModelFamily::SageMaxpool) {
      // keep every pooled pre-activation in relu's linear region so the
      // max has no ties at exactly zero
      for (int k = 0; k < spec.rounds; ++k) {
        auto b = model.params().get("round" + std::to_string(k) + ".b_pool");
        std::fill(b->v.begin(), b->v.end(), 5.0);
      }
    }
    Rng rng(0);
    auto loss_fn = [&](Tape& t) -> TensorPtr {
      auto logits = model.forward(t, ctx, false, rng);
      return softmax_cross_entropy(t, logits, ds.labels, mask);
    };
    return gradient_check(loss_fn, model.params());
  };

  CHECK(check_family(ModelFamily::CsGnn, false, false) < 1e-3);
  CHECK(check_family(ModelFamily::CsGnn, true, false) < 1e-3);
  CHECK(check_family(ModelFamily::CsGnn, false, true) < 1e-3);
  CHECK(check_family(ModelFamily::Gcn, false, false) < 1e-3);
  CHECK(check_family(ModelFamily::SageMean, false, false) < 1e-3);
  CHECK(check_family(ModelFamily::SageMaxpool, false, false) < 1e-3);
  CHECK(check_family(ModelFamily::Gat, false, false) < 1e-3);
  CHECK(check_family(ModelFamily::Mlp, false, false) < 1e-3);
  CHECK(check_family(ModelFamily::Logistic, false, false) < 1e-3);
}

TEST_CASE("label propagation") {
  SUBCASE("fully labeled, fully clamped graph returns the labels") {
    Dataset ds = sgtest::triangle_aab();
    ds.splits = {Split::Train, Split::Train, Split::Train};
    const auto res = label_propagation(ds);
    CHECK(res.predictions == std::vector<int32_t>{0, 0, 1});
    CHECK_FALSE(res.unreached);
  }
  SUBCASE("star center propagates to unlabeled leaves") {
    Dataset ds = make_dataset(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}}, 1, {0, 0, 0, 0, 0},
                              {0, kUnlabeled, kUnlabeled, kUnlabeled, kUnlabeled});
    ds.num_classes = 2;
    ds.splits = {Split::Train, Split::Test, Split::Test, Split::Test, Split::Test};
    const auto res = label_propagation(ds);
    for (int i = 1; i < 5; ++i) CHECK(res.predictions[i] == 0);
  }
  SUBCASE("symmetric tie resolves to the lowest class id") {
    Dataset ds = make_dataset(3, {{0, 1}, {1, 2}}, 1, {0, 0, 0}, {1, kUnlabeled, 0});
    ds.splits = {Split::Train, Split::Test, Split::Train};
    const auto res = label_propagation(ds);
    CHECK(res.predictions[1] == 0);  // 0.5 / 0.5 between classes 0 and 1
  }
  SUBCASE("unreachable components are flagged") {
    Dataset ds = make_dataset(4, {{0, 1}, {2, 3}}, 1, {0, 0, 0, 0},
                              {0, kUnlabeled, kUnlabeled, kUnlabeled});
    ds.num_classes = 2;
    ds.splits = {Split::Train, Split::Test, Split::Test, Split::Test};
    const auto res = label_propagation(ds);
    CHECK(res.unreached);
  }
  SUBCASE("needs at least one labeled train node") {
    Dataset ds = sgtest::triangle_aab();
    ds.splits = {Split::Test, Split::Test, Split::Test};
    CHECK_THROWS_AS(label_propagation(ds), ValidationError);
  }
}

TEST_CASE("csgnn uses topology features in both attention and the final layer") {
  Dataset ds = with_two_classes(normalize_features(sgtest::ring(8, 2)));
  TopoConfig tcfg;
  tcfg.sample_points = 3;
  TopoFeatureMatrix topo = all_topo_features(ds, tcfg);
  GraphContext ctx = build_graph_context(ds, 0.1, 0.0, &topo);
  ModelSpec spec;
  spec.family = ModelFamily::CsGnn;
  spec.use_topo = true;
  spec.hidden = 4;
  Model model(spec, ctx, 2);
  // W_p consumes features-plus-topo context, the head consumes hidden || topo
  CHECK(model.params().get("round0.W_p")->shape ==
        std::vector<int64_t>{2 + topo.dim, model.attention_dims()[0]});
  CHECK(model.params().get("out.W")->shape == std::vector<int64_t>{4 + topo.dim, 2});
  Tape t;
  Rng rng(0);
  CHECK(model.forward(t, ctx, false, rng)->shape == std::vector<int64_t>{8, 2});
}
