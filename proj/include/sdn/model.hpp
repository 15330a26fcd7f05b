// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include "sdn/attention.hpp"
#include "sdn/dataset.hpp"
#include "sdn/graph.hpp"
#include "sdn/rng.hpp"

namespace sdn {

struct ArchConfig {
  int input_size = 64;  // square, power of two
  int in_channels = 3;
  std::vector<int> encoder_widths = {16, 32, 64, 128};  // stage i halves resolution
  std::vector<int> attention_resolutions = {16, 8, 4};  // spatial sizes with feature fusion
  nn::AttentionConfig attention;
  std::vector<int> decoder_widths = {128, 64, 32, 16};  // bottom first
  int head_width = 16;
  int num_classes = 2;

  void validate() const;
  int stage_resolution(int stage) const { return input_size >> (stage + 1); }

  // reduced config for overfit-style smoke tests
  static ArchConfig tiny(nn::Mechanism mech);
};

struct TrainConfig {
  int batch_size = 16;
  int epochs = 60;
  int warmup_epochs = 5;
  double peak_lr = 3e-4;
  double beta1 = 0.9, beta2 = 0.999, adam_eps = 1e-8;
  uint64_t seed = 1;
  AugmentConfig augment;
  int max_steps = 0;  // 0 = no cap; caps total optimizer steps when set

  void validate() const;
};

// Linear warmup to peak over warmup_epochs, then cosine decay to exactly 0 at
// `epochs`. epoch_frac may be fractional (per-step schedule).
double schedule_lr(const TrainConfig& cfg, double epoch_frac);

template <typename T>
struct ConvLayerT {
  nn::VarPtr<T> w, b;
  int stride = 1;
};

template <typename T>
struct ForwardTraceT {
  struct Level {
    int resolution = 0;
    int window = 0;  // lca only; 0 otherwise
    nn::TensorT<T> f1, f2;  // maps fed to the fusion mechanism (post-MSA for gca_msa)
    nn::VarPtr<T> skip;
  };
  std::vector<Level> levels;
};

template <typename T>
class ModelT {
 public:
  ArchConfig arch;

  static ModelT build(const ArchConfig& arch, Rng& rng);

  // anchor/sample: [N,3,S,S] in [0,1]. Returns per-pixel logits [N,2,S,S].
  nn::VarPtr<T> forward(nn::Graph<T>& g, const nn::VarPtr<T>& anchor,
                        const nn::VarPtr<T>& sample, ForwardTraceT<T>* trace = nullptr) const;

  const std::vector<std::pair<std::string, nn::VarPtr<T>>>& params() const { return params_; }
  nn::VarPtr<T> param(const std::string& name) const;
  int64_t param_count() const;
  void zero_grads();

  template <typename U>
  ModelT<U> cast() const;

  // wiring, exposed for checkpoint io
  std::vector<ConvLayerT<T>> enc;       // two per stage
  std::vector<nn::MsaParams<T>> msa;    // one per attention level (gca_msa only)
  ConvLayerT<T> bottom;
  std::vector<ConvLayerT<T>> dec_pre;   // after each upsample
  std::vector<ConvLayerT<T>> dec_post;  // after each skip concat
  ConvLayerT<T> head1, head2;

  void rebuild_param_list();

 private:
  std::vector<std::pair<std::string, nn::VarPtr<T>>> params_;
};

using Model = ModelT<float>;

struct PairTensors {
  nn::TensorF anchor;  // [3,S,S], values in [0,1]
  nn::TensorF sample;
  nn::TensorI target;  // [S,S], {0,1}
};

PairTensors to_tensors(const PairRecord& rec);

// Argmax change masks for a batch of records (no-grad forward).
std::vector<BinaryMask> predict_masks(const Model& model,
                                      const std::vector<const PairRecord*>& batch);

// ---- checkpoint ----

struct CheckpointMeta {
  ArchConfig arch;
  TrainConfig train;
  int epoch = 0;
  uint64_t rng_state = 0;
};

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const TrainConfig& train_cfg, int epoch, uint64_t rng_state);
Model load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta = nullptr);

// ---- training ----

struct EpochLog {
  int epoch = 0;
  double train_loss = 0;
  double val_iou_mean = 0, val_iou_median = 0;
  double lr = 0;
};

struct TrainResult {
  std::vector<EpochLog> log;
  std::filesystem::path best_checkpoint, last_checkpoint;
  int best_epoch = -1;
  double best_val_median = -1;
  int total_steps = 0;
};

// Adam + warmup/cosine training loop; logs one line per epoch, keeps best-val
// (median change IoU) and last checkpoints under out_dir. Throws
// NumericalError on a non-finite loss.
TrainResult train_model(Model& model, const std::vector<PairRecord>& train_set,
                        const std::vector<PairRecord>& val_set, const TrainConfig& cfg,
                        const std::filesystem::path& out_dir, bool verbose = true);

// ---- attention extraction ----

struct AttentionProbe {
  nn::TensorF weights;  // [h,w] at the attention resolution; sums to 1
  nn::TensorF heatmap;  // [S,S], nearest-upsampled, max-normalized to [0,1]
  int resolution = 0;
};

// Softmax row of the query pixel (anchor coordinates) against the sample
// feature map at attention level `level` (0 = finest fusion resolution).
// Unsupported for the concat_only variant.
AttentionProbe extract_attention(const Model& model, const PairRecord& pair, int level,
                                 int query_x, int query_y);

}  // namespace sdn
