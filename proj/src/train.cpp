// SPDX-License-Identifier: Apache-2.0
#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>

#include "sdn/eval.hpp"
#include "sdn/model.hpp"

namespace sdn {

using nn::Graph;
using nn::make_var;
using nn::TensorF;
using nn::TensorI;
using nn::VarPtr;

namespace {

class Adam {
 public:
  Adam(const std::vector<std::pair<std::string, VarPtr<float>>>& params, double beta1,
       double beta2, double eps)
      : beta1_(beta1), beta2_(beta2), eps_(eps) {
    for (const auto& [name, p] : params) {
      m_.emplace_back(p->value.shape());
      v_.emplace_back(p->value.shape());
    }
  }

  void step(const std::vector<std::pair<std::string, VarPtr<float>>>& params, double lr) {
    ++t_;
    const double bc1 = 1.0 - std::pow(beta1_, t_);
    const double bc2 = 1.0 - std::pow(beta2_, t_);
    for (size_t i = 0; i < params.size(); ++i) {
      auto& p = params[i].second;
      if (!p->has_grad()) continue;
      float* w = p->value.data();
      const float* g = p->grad.data();
      float* m = m_[i].data();
      float* v = v_[i].data();
      for (int64_t e = 0; e < p->value.size(); ++e) {
        m[e] = static_cast<float>(beta1_ * m[e] + (1.0 - beta1_) * g[e]);
        v[e] = static_cast<float>(beta2_ * v[e] + (1.0 - beta2_) * g[e] * g[e]);
        double mh = m[e] / bc1;
        double vh = v[e] / bc2;
        w[e] -= static_cast<float>(lr * mh / (std::sqrt(vh) + eps_));
      }
    }
  }

 private:
  double beta1_, beta2_, eps_;
  int64_t t_ = 0;
  std::vector<TensorF> m_, v_;
};

struct Batch {
  TensorF anchors, samples;
  TensorI targets;
};

Batch assemble_batch(const std::vector<PairRecord>& records, const std::vector<int>& indices,
                     size_t begin, size_t count, const AugmentConfig& aug, Rng& rng, int s) {
  Batch b;
  b.anchors = TensorF({static_cast<int>(count), 3, s, s});
  b.samples = TensorF({static_cast<int>(count), 3, s, s});
  b.targets = TensorI({static_cast<int>(count), s, s});
  const int64_t img = static_cast<int64_t>(3) * s * s;
  const int64_t plane = static_cast<int64_t>(s) * s;
  for (size_t i = 0; i < count; ++i) {
    const PairRecord& rec = records[static_cast<size_t>(indices[begin + i])];
    PairRecord processed = augment_pair(rec, aug, rng);
    PairTensors t = to_tensors(processed);
    std::copy_n(t.anchor.data(), img, b.anchors.data() + static_cast<int64_t>(i) * img);
    std::copy_n(t.sample.data(), img, b.samples.data() + static_cast<int64_t>(i) * img);
    std::copy_n(t.target.data(), plane, b.targets.data() + static_cast<int64_t>(i) * plane);
  }
  return b;
}

struct ValScore {
  double mean = 0, median = 0;
};

ValScore validate(const Model& model, const std::vector<PairRecord>& val_set, int batch_size) {
  std::vector<double> ious;
  ious.reserve(val_set.size());
  for (size_t begin = 0; begin < val_set.size(); begin += static_cast<size_t>(batch_size)) {
    size_t count = std::min(static_cast<size_t>(batch_size), val_set.size() - begin);
    std::vector<const PairRecord*> batch;
    for (size_t i = 0; i < count; ++i) batch.push_back(&val_set[begin + i]);
    auto masks = predict_masks(model, batch);
    for (size_t i = 0; i < count; ++i) ious.push_back(change_iou(masks[i], batch[i]->mask));
  }
  ValScore sc;
  if (ious.empty()) return sc;
  double sum = 0;
  for (double v : ious) sum += v;
  sc.mean = sum / static_cast<double>(ious.size());
  std::sort(ious.begin(), ious.end());
  sc.median = quantile_sorted(ious, 0.5);
  return sc;
}

}  // namespace

TrainResult train_model(Model& model, const std::vector<PairRecord>& train_set,
                        const std::vector<PairRecord>& val_set, const TrainConfig& cfg,
                        const std::filesystem::path& out_dir, bool verbose) {
  cfg.validate();
  if (train_set.empty()) throw InvalidArgument("training set is empty");
  std::filesystem::create_directories(out_dir);
  const int s = model.arch.input_size;
  const int batch = std::min<int>(cfg.batch_size, static_cast<int>(train_set.size()));
  const int steps_per_epoch = static_cast<int>(train_set.size()) / batch;

  Adam adam(model.params(), cfg.beta1, cfg.beta2, cfg.adam_eps);
  Rng root(cfg.seed);
  TrainResult result;
  result.last_checkpoint = out_dir / "last.ckpt";
  result.best_checkpoint = out_dir / "best.ckpt";
  std::ofstream metrics(out_dir / "metrics.jsonl", std::ios::trunc);

  int global_step = 0;
  bool stop = false;
  for (int epoch = 0; epoch < cfg.epochs && !stop; ++epoch) {
    // epoch-keyed shuffle
    std::vector<int> order(train_set.size());
    for (size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    Rng shuffle_rng = root.derive({0x50u, static_cast<uint64_t>(epoch)});
    for (size_t i = order.size(); i > 1; --i)
      std::swap(order[i - 1],
                order[static_cast<size_t>(shuffle_rng.uniform_int(0, static_cast<int64_t>(i) - 1))]);

    double loss_sum = 0;
    int loss_count = 0;
    double lr = 0;
    for (int step = 0; step < steps_per_epoch; ++step) {
      Rng aug_rng = root.derive({0xA06u, static_cast<uint64_t>(epoch), static_cast<uint64_t>(step)});
      Batch b = assemble_batch(train_set, order, static_cast<size_t>(step) * batch,
                               static_cast<size_t>(batch), cfg.augment, aug_rng, s);
      double epoch_frac = epoch + static_cast<double>(step) / steps_per_epoch;
      lr = schedule_lr(cfg, epoch_frac);

      Graph<float> g;
      auto av = make_var<float>(std::move(b.anchors));
      auto sv = make_var<float>(std::move(b.samples));
      auto logits = model.forward(g, av, sv);
      auto loss = nn::softmax_cross_entropy(g, logits, b.targets);
      double loss_val = loss->value[0];
      if (!std::isfinite(loss_val))
        throw NumericalError("training diverged: non-finite loss at epoch " +
                             std::to_string(epoch) + " step " + std::to_string(step));
      g.backward(loss);
      adam.step(model.params(), lr);
      model.zero_grads();
      loss_sum += loss_val;
      ++loss_count;
      ++global_step;
      if (cfg.max_steps > 0 && global_step >= cfg.max_steps) {
        stop = true;
        break;
      }
    }

    ValScore sc = validate(model, val_set, batch);
    EpochLog log;
    log.epoch = epoch;
    log.train_loss = loss_count ? loss_sum / loss_count : 0;
    log.val_iou_mean = sc.mean;
    log.val_iou_median = sc.median;
    log.lr = lr;
    result.log.push_back(log);
    if (verbose)
      std::printf("epoch %3d  loss %.5f  val-iou median %.4f mean %.4f  lr %.2e\n", epoch,
                  log.train_loss, log.val_iou_median, log.val_iou_mean, lr);
    metrics << "{\"epoch\":" << epoch << ",\"train_loss\":" << log.train_loss
            << ",\"val_iou_median\":" << log.val_iou_median
            << ",\"val_iou_mean\":" << log.val_iou_mean << ",\"lr\":" << lr << "}\n";
    metrics.flush();

    save_checkpoint(result.last_checkpoint, model, cfg, epoch, root.state());
    if (!val_set.empty() && sc.median > result.best_val_median) {
      result.best_val_median = sc.median;
      result.best_epoch = epoch;
      save_checkpoint(result.best_checkpoint, model, cfg, epoch, root.state());
    }
  }
  if (val_set.empty()) {
    save_checkpoint(result.best_checkpoint, model, cfg, cfg.epochs - 1, root.state());
    result.best_epoch = cfg.epochs - 1;
  }
  result.total_steps = global_step;
  return result;
}

}  // namespace sdn
