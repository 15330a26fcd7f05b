// SPDX-License-Identifier: Apache-2.0
#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "sdn/dataset.hpp"
#include "sdn/digest.hpp"
#include "sdn/eval.hpp"
#include "sdn/gradcheck.hpp"
#include "sdn/model.hpp"
#include "sdn/oracles.hpp"
#include "sdn/png_io.hpp"

namespace fs = std::filesystem;

namespace {

struct CommonOpts {
  std::string catalog_path;
  uint64_t seed = 7;
  int jobs = sdn::default_jobs();
};

sdn::PartCatalog load_catalog_opt(const CommonOpts& o) {
  if (o.catalog_path.empty()) return sdn::default_catalog();
  return sdn::load_catalog_file(o.catalog_path);
}

std::vector<sdn::PairRecord> load_split(const std::string& data_root, const std::string& split,
                                        int jobs) {
  fs::path manifest_path = fs::path(data_root) / split / "manifest.jsonl";
  if (!fs::exists(manifest_path))
    throw sdn::IoError("no manifest at " + manifest_path.string());
  sdn::Manifest manifest = sdn::load_manifest(manifest_path);
  return sdn::load_all_pairs(manifest, data_root, jobs);
}

int cmd_gen(const CommonOpts& common, const std::string& out, const std::string& scale_name,
            double max_nqd, int diff_min, int diff_max) {
  sdn::PartCatalog cat = load_catalog_opt(common);
  sdn::SuiteScale scale = scale_name == "small" ? sdn::SuiteScale::small : sdn::SuiteScale::tiny;
  auto specs = sdn::standard_suite_specs(cat, scale);
  // train-split overrides
  for (auto& spec : specs) {
    if (spec.name == "train" || spec.name == "ablation_train") {
      if (max_nqd >= 0) spec.max_nqd = max_nqd;
      if (diff_min >= 0) spec.d_min = diff_min;
      if (diff_max >= 0) spec.d_max = diff_max;
    }
  }
  sdn::GenConfig cfg = sdn::default_gen_config(cat, common.seed);
  fs::create_directories(out);
  std::set<uint64_t> train_pairs, train_aligned_pairs;
  for (const auto& spec : specs) {
    const std::set<uint64_t>* excluded = nullptr;
    if (spec.name == "test_seen_pose") excluded = &train_pairs;
    if (spec.name == "test_seen_pose_aligned") excluded = &train_aligned_pairs;
    sdn::Manifest m = sdn::generate_split(cat, spec, cfg, out, common.jobs, excluded);
    if (spec.name == "train")
      for (const auto& r : m.records)
        train_pairs.insert(sdn::state_pair_key(sdn::AssemblyState{r.state_a},
                                               sdn::AssemblyState{r.state_b}));
    if (spec.name == "train_aligned")
      for (const auto& r : m.records)
        train_aligned_pairs.insert(sdn::state_pair_key(sdn::AssemblyState{r.state_a},
                                                       sdn::AssemblyState{r.state_b}));
    std::printf("generated %-24s %5zu pairs\n", spec.name.c_str(), m.records.size());
  }
  // dataset.json echo matches build_standard_suites layout
  auto suites = std::vector<std::string>{};
  (void)suites;
  std::printf("dataset written to %s\n", out.c_str());
  return 0;
}

int cmd_train(const CommonOpts& common, const std::string& data, const std::string& out,
              const std::string& mechanism, const std::string& split,
              const std::string& val_split, int epochs, int batch, double lr, int warmup,
              const std::vector<int>& windows) {
  auto train_set = load_split(data, split, common.jobs);
  auto val_set = load_split(data, val_split, common.jobs);
  sdn::ArchConfig arch;
  arch.attention.mechanism = sdn::nn::mechanism_from_name(mechanism);
  if (!windows.empty()) arch.attention.lca_windows = windows;
  sdn::TrainConfig cfg;
  cfg.epochs = epochs;
  cfg.batch_size = batch;
  cfg.peak_lr = lr;
  cfg.warmup_epochs = warmup;
  cfg.seed = common.seed;
  sdn::Rng rng(common.seed);
  sdn::Model model = sdn::Model::build(arch, rng);
  std::printf("training %s: %lld parameters, %zu train / %zu val pairs\n", mechanism.c_str(),
              static_cast<long long>(model.param_count()), train_set.size(), val_set.size());
  sdn::TrainResult res = sdn::train_model(model, train_set, val_set, cfg, out);
  std::printf("done: best val median IoU %.4f (epoch %d); checkpoints in %s\n",
              res.best_val_median, res.best_epoch, out.c_str());
  return 0;
}

int cmd_eval(const CommonOpts& common, const std::string& checkpoint, const std::string& data,
             const std::string& split, const std::string& out) {
  if (!fs::exists(checkpoint)) throw sdn::IoError("checkpoint not found: " + checkpoint);
  sdn::Model model = sdn::load_checkpoint(checkpoint);
  auto records = load_split(data, split, common.jobs);
  sdn::EvalReport report = sdn::evaluate(sdn::model_predictor(model), records);
  sdn::emit_report(report, out);
  for (const auto& a : report.aggregates)
    if (a.metric == "iou" && a.stratum == "all")
      std::printf("%s/%s: median IoU %.4f mean %.4f over %d pairs\n", split.c_str(), a.key.c_str(),
                  a.median, a.mean, a.count);
  std::printf("report written to %s\n", out.c_str());
  return 0;
}

int cmd_attn(const CommonOpts& common, const std::string& checkpoint, const std::string& data,
             const std::string& split, int64_t pair_id, const std::string& query, int level,
             const std::string& out) {
  if (!fs::exists(checkpoint)) throw sdn::IoError("checkpoint not found: " + checkpoint);
  int qx = 0, qy = 0;
  if (std::sscanf(query.c_str(), "%d,%d", &qx, &qy) != 2)
    throw sdn::InvalidArgument("--query expects X,Y");
  sdn::Model model = sdn::load_checkpoint(checkpoint);
  fs::path manifest_path = fs::path(data) / split / "manifest.jsonl";
  sdn::Manifest manifest = sdn::load_manifest(manifest_path);
  sdn::PairRecord rec = sdn::load_pair(manifest, data, pair_id);
  sdn::AttentionProbe probe = sdn::extract_attention(model, rec, level, qx, qy);
  // red overlay on the sample image, query cross on the anchor
  const int s = model.arch.input_size;
  sdn::ImageRGB panel(2 * s, s);
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x) {
      const uint8_t* a = rec.anchor.rgb.px(x, y);
      uint8_t* pa = panel.px(x, y);
      std::copy_n(a, 3, pa);
      float h = probe.heatmap.at(y, x);
      const uint8_t* sp = rec.sample.rgb.px(x, y);
      uint8_t* ps = panel.px(s + x, y);
      ps[0] = static_cast<uint8_t>(std::min(255.0f, sp[0] * (1 - h) + 255.0f * h));
      ps[1] = static_cast<uint8_t>(sp[1] * (1 - h));
      ps[2] = static_cast<uint8_t>(sp[2] * (1 - h));
    }
  for (int d = -3; d <= 3; ++d) {
    auto mark = [&](int x, int y) {
      if (x >= 0 && x < s && y >= 0 && y < s) {
        uint8_t* p = panel.px(x, y);
        p[0] = 0;
        p[1] = 255;
        p[2] = 0;
      }
    };
    mark(qx + d, qy);
    mark(qx, qy + d);
  }
  fs::create_directories(out);
  char name[64];
  std::snprintf(name, sizeof(name), "attn_pair%08lld_level%d_q%d_%d.png",
                static_cast<long long>(pair_id), level, qx, qy);
  sdn::write_file((fs::path(out) / name).string(), sdn::encode_png_rgb8(panel));
  std::printf("attention heatmap written to %s/%s (resolution %d)\n", out.c_str(), name,
              probe.resolution);
  (void)common;
  return 0;
}

int cmd_gradcheck(uint64_t seed) {
  auto results = sdn::nn::standard_grad_checks(seed);
  bool all = true;
  for (const auto& r : results) {
    std::printf("[%s] %-28s max rel err %.3e (tol %.1e)\n", r.pass ? "PASS" : "FAIL",
                r.name.c_str(), r.max_rel_err, r.tolerance);
    all = all && r.pass;
  }
  return all ? 0 : 1;
}

int cmd_oracle(uint64_t seed) {
  auto results = sdn::oracle::run_oracle_suites(seed);
  bool all = true;
  for (const auto& r : results) {
    std::printf("[%s] %-36s %s\n", r.pass ? "PASS" : "FAIL", r.name.c_str(), r.detail.c_str());
    all = all && r.pass;
  }
  return all ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"statediffnet: synthetic assembly change-detection lab"};
  app.set_config("--config", "", "read options from a TOML file");
  app.require_subcommand(1);

  CommonOpts common;

  auto add_common = [&common](CLI::App* cmd) {
    cmd->add_option("--catalog", common.catalog_path, "part catalog JSON path (default: bundled)")
        ->envname("SDN_CATALOG");
    cmd->add_option("--seed", common.seed, "master random seed")->envname("SDN_SEED");
    cmd->add_option("--jobs", common.jobs, "worker threads")->envname("SDN_JOBS");
  };

  // gen
  auto* gen = app.add_subcommand("gen", "generate the standard dataset suites");
  std::string gen_out, gen_scale = "tiny";
  double gen_max_nqd = -1;
  int gen_diff_min = -1, gen_diff_max = -1;
  gen->add_option("--out", gen_out, "output dataset root")->required()->envname("SDN_OUT");
  gen->add_option("--scale", gen_scale, "suite scale")
      ->check(CLI::IsMember({"tiny", "small"}))
      ->envname("SDN_SCALE");
  gen->add_option("--max-nqd", gen_max_nqd, "override train-split orientation budget");
  gen->add_option("--diff-min", gen_diff_min, "override train-split minimum part diff");
  gen->add_option("--diff-max", gen_diff_max, "override train-split maximum part diff");
  add_common(gen);

  // train
  auto* train = app.add_subcommand("train", "train a model on a generated suite");
  std::string train_data, train_out, train_mech = "gca", train_split = "train",
              train_val_split = "test_seen_pose";
  int train_epochs = 60, train_batch = 16, train_warmup = 5;
  double train_lr = 3e-4;
  std::vector<int> train_windows;
  train->add_option("--data", train_data, "dataset root")->required()->envname("SDN_DATA");
  train->add_option("--out", train_out, "checkpoint/metrics directory")->required();
  train->add_option("--mechanism", train_mech, "feature-registration mechanism")
      ->check(CLI::IsMember({"gca", "lca", "gca_msa", "concat"}))
      ->envname("SDN_MECHANISM");
  train->add_option("--split", train_split, "training split name");
  train->add_option("--val-split", train_val_split, "validation split name");
  train->add_option("--epochs", train_epochs, "total epochs");
  train->add_option("--batch", train_batch, "batch size");
  train->add_option("--lr", train_lr, "peak learning rate");
  train->add_option("--warmup", train_warmup, "warmup epochs");
  train->add_option("--lca-windows", train_windows, "lca window sizes, finest first")
      ->delimiter(',');
  add_common(train);

  // eval
  auto* eval = app.add_subcommand("eval", "evaluate a checkpoint and emit the report");
  std::string eval_ckpt, eval_data, eval_split = "test_seen_pose", eval_out;
  eval->add_option("--checkpoint", eval_ckpt, "checkpoint path")->required();
  eval->add_option("--data", eval_data, "dataset root")->required()->envname("SDN_DATA");
  eval->add_option("--split", eval_split, "split to evaluate");
  eval->add_option("--out", eval_out, "report directory")->required();
  add_common(eval);

  // attn
  auto* attn = app.add_subcommand("attn", "extract an attention heatmap for one query pixel");
  std::string attn_ckpt, attn_data, attn_split = "test_seen_pose", attn_query, attn_out;
  int64_t attn_pair = 0;
  int attn_level = 0;
  attn->add_option("--checkpoint", attn_ckpt, "checkpoint path")->required();
  attn->add_option("--data", attn_data, "dataset root")->required()->envname("SDN_DATA");
  attn->add_option("--split", attn_split, "split name");
  attn->add_option("--pair", attn_pair, "pair id");
  attn->add_option("--query", attn_query, "anchor query pixel X,Y")->required();
  attn->add_option("--level", attn_level, "attention level (0 = finest)")
      ->check(CLI::IsMember({0, 1, 2}));
  attn->add_option("--out", attn_out, "output directory")->required();
  add_common(attn);

  // gradcheck / oracle
  auto* gradcheck = app.add_subcommand("gradcheck", "finite-difference gradient checks");
  add_common(gradcheck);
  auto* oracle = app.add_subcommand("oracle", "run the brute-force oracle suites");
  add_common(oracle);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n" << app.help() << "\n";
    return 2;
  }

  try {
    if (gen->parsed())
      return cmd_gen(common, gen_out, gen_scale, gen_max_nqd, gen_diff_min, gen_diff_max);
    if (train->parsed())
      return cmd_train(common, train_data, train_out, train_mech, train_split, train_val_split,
                       train_epochs, train_batch, train_lr, train_warmup, train_windows);
    if (eval->parsed()) return cmd_eval(common, eval_ckpt, eval_data, eval_split, eval_out);
    if (attn->parsed())
      return cmd_attn(common, attn_ckpt, attn_data, attn_split, attn_pair, attn_query, attn_level,
                      attn_out);
    if (gradcheck->parsed()) return cmd_gradcheck(common.seed);
    if (oracle->parsed()) return cmd_oracle(common.seed);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
