// SPDX-License-Identifier: Apache-2.0
#include <doctest.h>

#include <cmath>

#include "sdn/eval.hpp"
#include "sdn/model.hpp"
#include "test_util.hpp"

using namespace sdn;
using nn::Graph;
using nn::make_var;
using nn::Mechanism;

namespace {

nn::TensorF random_image_batch(int n, int s, Rng& rng) {
  nn::TensorF t({n, 3, s, s});
  for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<float>(rng.uniform());
  return t;
}

}  // namespace

TEST_CASE("build and forward: shapes, determinism, finite logits") {
  ArchConfig arch = ArchConfig::tiny(Mechanism::gca);
  Rng rng(1);
  Model model = Model::build(arch, rng);
  Rng rng2(1);
  Model model2 = Model::build(arch, rng2);
  REQUIRE(model.params().size() == model2.params().size());
  for (size_t i = 0; i < model.params().size(); ++i) {
    const auto& a = model.params()[i].second->value;
    const auto& b = model2.params()[i].second->value;
    REQUIRE(a.size() == b.size());
    for (int64_t e = 0; e < a.size(); ++e) REQUIRE(a[e] == b[e]);
  }

  Rng img_rng(2);
  nn::TensorF img = random_image_batch(1, 64, img_rng);
  Graph<float> g(false);
  auto logits = model.forward(g, make_var(img), make_var(img));
  CHECK(logits->value.shape() == std::vector<int>{1, 2, 64, 64});
  for (int64_t i = 0; i < logits->value.size(); ++i) CHECK(std::isfinite(logits->value[i]));
}

TEST_CASE("parameter counts: gca equals concat; msa adds projection parameters") {
  Rng rng(3);
  auto count = [&rng](Mechanism m) {
    ArchConfig arch = ArchConfig::tiny(m);
    Rng r(3);
    return Model::build(arch, r).param_count();
  };
  int64_t gca = count(Mechanism::gca);
  int64_t lca = count(Mechanism::lca);
  int64_t concat = count(Mechanism::concat_only);
  int64_t msa = count(Mechanism::gca_msa);
  CHECK(gca == concat);
  CHECK(gca == lca);
  // per attention level: 4 projections of width^2 each (1x1 convs, no bias)
  ArchConfig arch = ArchConfig::tiny(Mechanism::gca);
  int64_t expected_extra = 0;
  for (int r : arch.attention_resolutions)
    for (size_t i = 0; i < arch.encoder_widths.size(); ++i)
      if (arch.stage_resolution(static_cast<int>(i)) == r) {
        int64_t w = arch.encoder_widths[i];
        expected_extra += 4 * w * w;
      }
  CHECK(msa == gca + expected_extra);
  (void)rng;
}

TEST_CASE("batched forward equals per-pair forward (double precision)") {
  ArchConfig arch = ArchConfig::tiny(Mechanism::gca);
  Rng rng(5);
  ModelT<double> model = Model::build(arch, rng).cast<double>();
  Rng img_rng(6);
  const int n = 3, s = 64;
  nn::TensorF af = random_image_batch(n, s, img_rng);
  nn::TensorF bf = random_image_batch(n, s, img_rng);
  nn::TensorD a = af.cast<double>(), b = bf.cast<double>();
  Graph<double> g(false);
  auto batched = model.forward(g, make_var(a), make_var(b));
  const int64_t img = 3LL * s * s, out = 2LL * s * s;
  for (int i = 0; i < n; ++i) {
    nn::TensorD ai({1, 3, s, s}), bi({1, 3, s, s});
    std::copy_n(a.data() + i * img, img, ai.data());
    std::copy_n(b.data() + i * img, img, bi.data());
    auto single = model.forward(g, make_var(ai), make_var(bi));
    for (int64_t e = 0; e < out; ++e)
      CHECK(batched->value[i * out + e] ==
            doctest::Approx(single->value[e]).epsilon(1e-6).scale(1.0));
  }
}

TEST_CASE("siamese encoder: one weight set drives both paths") {
  ArchConfig arch = ArchConfig::tiny(Mechanism::gca);
  Rng rng(7);
  Model model = Model::build(arch, rng);
  Rng img_rng(8);
  nn::TensorF a = random_image_batch(1, 64, img_rng);
  nn::TensorF b = random_image_batch(1, 64, img_rng);

  ForwardTraceT<float> before;
  Graph<float> g0(false);
  model.forward(g0, make_var(a), make_var(b), &before);

  // nudge one encoder weight: both trace maps must change
  model.enc[0].w->value[0] += 0.25f;
  ForwardTraceT<float> after;
  Graph<float> g1(false);
  model.forward(g1, make_var(a), make_var(b), &after);
  REQUIRE(before.levels.size() == after.levels.size());
  double d1 = 0, d2 = 0;
  for (int64_t i = 0; i < before.levels[0].f1.size(); ++i)
    d1 = std::max<double>(d1, std::abs(before.levels[0].f1[i] - after.levels[0].f1[i]));
  for (int64_t i = 0; i < before.levels[0].f2.size(); ++i)
    d2 = std::max<double>(d2, std::abs(before.levels[0].f2[i] - after.levels[0].f2[i]));
  CHECK(d1 > 0);
  CHECK(d2 > 0);
  model.enc[0].w->value[0] -= 0.25f;

  // gradients accumulate from both paths: grad with (a,b) differs from the
  // sum structure of a single-path model, so at minimum it must be nonzero
  nn::TensorI target({1, 64, 64});
  Graph<float> g2;
  auto loss = nn::softmax_cross_entropy(g2, model.forward(g2, make_var(a), make_var(b)), target);
  g2.backward(loss);
  REQUIRE(model.enc[0].w->has_grad());
  double gsum = 0;
  for (int64_t i = 0; i < model.enc[0].w->grad.size(); ++i)
    gsum += std::abs(model.enc[0].w->grad[i]);
  CHECK(gsum > 0);
  model.zero_grads();
}

TEST_CASE("gca skip tensor is invariant to spatial permutation of sample features") {
  ArchConfig arch = ArchConfig::tiny(Mechanism::gca);
  Rng rng(9);
  Model model = Model::build(arch, rng);
  Rng img_rng(10);
  nn::TensorF a = random_image_batch(1, 64, img_rng);
  nn::TensorF b = random_image_batch(1, 64, img_rng);
  ForwardTraceT<float> trace;
  Graph<float> g(false);
  model.forward(g, make_var(a), make_var(b), &trace);
  REQUIRE(!trace.levels.empty());
  const auto& lvl = trace.levels[0];
  const int c = lvl.f1.dim(1), res = lvl.resolution, m = res * res;
  // permute f2 feature locations and recompute the fusion in double precision
  nn::TensorD f1 = lvl.f1.reshaped({c, res, res}).cast<double>();
  nn::TensorD f2 = lvl.f2.reshaped({c, res, res}).cast<double>();
  std::vector<int> perm(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) perm[static_cast<size_t>(i)] = i;
  Rng prng(11);
  for (int i = m; i > 1; --i)
    std::swap(perm[static_cast<size_t>(i - 1)], perm[static_cast<size_t>(prng.uniform_int(0, i - 1))]);
  nn::TensorD f2p({c, res, res});
  for (int cc = 0; cc < c; ++cc)
    for (int j = 0; j < m; ++j) f2p[static_cast<int64_t>(cc) * m + perm[static_cast<size_t>(j)]] =
        f2[static_cast<int64_t>(cc) * m + j];
  Graph<double> gd(false);
  auto skip_a = nn::global_cross_attention(gd, make_var(f1), make_var(f2));
  auto skip_b = nn::global_cross_attention(gd, make_var(f1), make_var(f2p));
  for (int cc = c; cc < 2 * c; ++cc)
    for (int j = 0; j < m; ++j)
      CHECK(skip_a->value[static_cast<int64_t>(cc) * m + j] ==
            doctest::Approx(skip_b->value[static_cast<int64_t>(cc) * m + j]).epsilon(1e-6));
}

TEST_CASE("checkpoint round-trip reproduces the forward pass bit-exactly") {
  ArchConfig arch = ArchConfig::tiny(Mechanism::lca);
  Rng rng(12);
  Model model = Model::build(arch, rng);
  auto dir = testutil::fresh_dir("ckpt");
  TrainConfig tc;
  save_checkpoint(dir / "m.ckpt", model, tc, 4, 99);

  CheckpointMeta meta;
  Model reloaded = load_checkpoint(dir / "m.ckpt", &meta);
  CHECK(meta.epoch == 4);
  CHECK(meta.rng_state == 99);
  CHECK(meta.arch.attention.mechanism == Mechanism::lca);

  Rng img_rng(13);
  nn::TensorF a = random_image_batch(2, 64, img_rng);
  nn::TensorF b = random_image_batch(2, 64, img_rng);
  Graph<float> g(false);
  auto l1 = model.forward(g, make_var(a), make_var(b));
  auto l2 = reloaded.forward(g, make_var(a), make_var(b));
  for (int64_t i = 0; i < l1->value.size(); ++i) REQUIRE(l1->value[i] == l2->value[i]);

  // corrupt the magic
  auto bytes = read_file((dir / "m.ckpt").string());
  bytes[0] ^= 0xFF;
  write_file((dir / "m.ckpt").string(), bytes);
  CHECK_THROWS_AS(load_checkpoint(dir / "m.ckpt"), ParseError);
  std::filesystem::remove_all(dir);
}

TEST_CASE("learning-rate schedule: warmup peak, cosine to zero") {
  TrainConfig cfg;
  cfg.epochs = 60;
  cfg.warmup_epochs = 5;
  cfg.peak_lr = 3e-4;
  CHECK(schedule_lr(cfg, 0.0) == 0.0);
  CHECK(schedule_lr(cfg, 5.0) == doctest::Approx(3e-4).epsilon(1e-12));
  CHECK(schedule_lr(cfg, 2.5) == doctest::Approx(1.5e-4).epsilon(1e-12));
  CHECK(schedule_lr(cfg, 60.0) <= 1e-3 * cfg.peak_lr);
  CHECK(schedule_lr(cfg, 59.999) <= 1e-3 * cfg.peak_lr * 10);
}

TEST_CASE("zero learning rate leaves parameters unchanged after an epoch") {
  auto records = testutil::make_micro_records(4, 0.0, 201);
  ArchConfig arch = ArchConfig::tiny(Mechanism::concat_only);
  Rng rng(14);
  Model model = Model::build(arch, rng);
  std::vector<nn::TensorF> before;
  for (const auto& [name, p] : model.params()) before.push_back(p->value);
  TrainConfig cfg;
  cfg.epochs = 1;
  cfg.warmup_epochs = 0;
  cfg.peak_lr = 0.0;
  cfg.batch_size = 2;
  cfg.augment = AugmentConfig::none();
  auto dir = testutil::fresh_dir("lr0");
  train_model(model, records, {}, cfg, dir, /*verbose=*/false);
  size_t i = 0;
  for (const auto& [name, p] : model.params()) {
    for (int64_t e = 0; e < p->value.size(); ++e) REQUIRE(p->value[e] == before[i][e]);
    ++i;
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("a few training steps reduce the loss on a fixed micro set") {
  auto records = testutil::make_micro_records(4, 0.0, 301);
  ArchConfig arch = ArchConfig::tiny(Mechanism::concat_only);
  Rng rng(15);
  Model model = Model::build(arch, rng);
  TrainConfig cfg;
  cfg.epochs = 10;
  cfg.warmup_epochs = 1;
  cfg.peak_lr = 2e-3;
  cfg.batch_size = 4;
  cfg.seed = 5;
  cfg.augment = AugmentConfig::none();
  auto dir = testutil::fresh_dir("microtrain");
  TrainResult res = train_model(model, records, records, cfg, dir, /*verbose=*/false);
  REQUIRE(res.log.size() == 10);
  CHECK(res.log.back().train_loss < res.log.front().train_loss);
  CHECK(std::filesystem::exists(res.last_checkpoint));
  CHECK(std::filesystem::exists(res.best_checkpoint));
  std::filesystem::remove_all(dir);
}

TEST_CASE("attention extraction") {
  auto records = testutil::make_micro_records(1, 0.0, 401);
  const PairRecord& rec = records[0];
  Rng rng(16);

  SUBCASE("weights sum to one; lca support bounded by the window") {
    ArchConfig arch = ArchConfig::tiny(Mechanism::lca);
    arch.attention.lca_windows = {5, 5, 3};
    Model model = Model::build(arch, rng);
    AttentionProbe probe = extract_attention(model, rec, 0, 32, 32);
    double sum = 0;
    int nonzero = 0;
    for (int64_t i = 0; i < probe.weights.size(); ++i) {
      sum += probe.weights[i];
      if (probe.weights[i] != 0) ++nonzero;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
    CHECK(nonzero <= 25);
    // heatmap normalized to [0, 1]
    float mx = 0;
    for (int64_t i = 0; i < probe.heatmap.size(); ++i) {
      CHECK(probe.heatmap[i] >= 0.0f);
      CHECK(probe.heatmap[i] <= 1.0f);
      mx = std::max(mx, probe.heatmap[i]);
    }
    CHECK(mx == 1.0f);
  }

  SUBCASE("gca weights sum to one at every level") {
    ArchConfig arch = ArchConfig::tiny(Mechanism::gca);
    Model model = Model::build(arch, rng);
    for (int level = 0; level < 3; ++level) {
      AttentionProbe probe = extract_attention(model, rec, level, 10, 50);
      double sum = 0;
      for (int64_t i = 0; i < probe.weights.size(); ++i) sum += probe.weights[i];
      CHECK(sum == doctest::Approx(1.0).epsilon(1e-5));
    }
  }

  SUBCASE("concat variant refuses extraction") {
    ArchConfig arch = ArchConfig::tiny(Mechanism::concat_only);
    Model model = Model::build(arch, rng);
    CHECK_THROWS_AS(extract_attention(model, rec, 0, 10, 10), UnsupportedMechanismError);
  }

  SUBCASE("out-of-range queries are rejected") {
    ArchConfig arch = ArchConfig::tiny(Mechanism::gca);
    Model model = Model::build(arch, rng);
    CHECK_THROWS_AS(extract_attention(model, rec, 0, -1, 10), InvalidArgument);
    CHECK_THROWS_AS(extract_attention(model, rec, 7, 10, 10), InvalidArgument);
  }
}

TEST_CASE("training diverges loudly on an absurd learning rate") {
  auto records = testutil::make_micro_records(2, 0.0, 501);
  ArchConfig arch = ArchConfig::tiny(Mechanism::concat_only);
  Rng rng(17);
  Model model = Model::build(arch, rng);
  TrainConfig cfg;
  cfg.epochs = 50;
  cfg.warmup_epochs = 0;
  cfg.peak_lr = 1e18;
  cfg.batch_size = 2;
  cfg.augment = AugmentConfig::none();
  auto dir = testutil::fresh_dir("diverge");
  CHECK_THROWS_AS(train_model(model, records, {}, cfg, dir, /*verbose=*/false), NumericalError);
  std::filesystem::remove_all(dir);
}
