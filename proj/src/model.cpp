// SPDX-License-Identifier: Apache-2.0
#include "sdn/model.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>

#include <nlohmann/json.hpp>

#include "sdn/jsonw.hpp"

namespace sdn {

using nn::Graph;
using nn::make_var;
using nn::TensorT;
using nn::VarPtr;

void ArchConfig::validate() const {
  if (input_size < 32 || (input_size & (input_size - 1)) != 0)
    throw InvalidArgument("input size must be a power of two >= 32");
  if (encoder_widths.empty()) throw InvalidArgument("encoder needs at least one stage");
  if (decoder_widths.size() != encoder_widths.size())
    throw InvalidArgument("decoder_widths must have one entry per encoder stage");
  if (num_classes != 2) throw InvalidArgument("segmentation head is two-class");
  int stages = static_cast<int>(encoder_widths.size());
  for (int r : attention_resolutions) {
    bool found = false;
    for (int i = 0; i < stages; ++i)
      if (stage_resolution(i) == r) found = true;
    if (!found)
      throw InvalidArgument("attention resolution " + std::to_string(r) +
                            " is not an encoder output resolution");
  }
  if (attention.mechanism == nn::Mechanism::lca &&
      attention.lca_windows.size() != attention_resolutions.size())
    throw InvalidArgument("lca needs one window per attention resolution");
  for (int w : attention.lca_windows)
    if (w < 1 || w % 2 == 0) throw InvalidArgument("lca windows must be odd and >= 1");
  if (attention.mechanism == nn::Mechanism::gca_msa) {
    for (size_t a = 0; a < attention_resolutions.size(); ++a) {
      int width = 0;
      for (int i = 0; i < stages; ++i)
        if (stage_resolution(i) == attention_resolutions[a]) width = encoder_widths[static_cast<size_t>(i)];
      if (width % attention.msa_heads != 0)
        throw InvalidArgument("msa heads must divide the channel width at every attention level");
      if (attention.msa_positional_encoding && width % 4 != 0)
        throw InvalidArgument("positional encoding needs channel widths divisible by 4");
    }
  }
}

ArchConfig ArchConfig::tiny(nn::Mechanism mech) {
  ArchConfig a;
  a.encoder_widths = {8, 16, 32, 64};
  a.decoder_widths = {64, 32, 16, 8};
  a.head_width = 8;
  a.attention.mechanism = mech;
  a.attention.msa_heads = 4;
  return a;
}

void TrainConfig::validate() const {
  if (batch_size < 1) throw InvalidArgument("batch size must be >= 1");
  if (epochs < 1) throw InvalidArgument("epochs must be >= 1");
  if (warmup_epochs < 0 || warmup_epochs >= epochs)
    throw InvalidArgument("warmup epochs must lie in [0, epochs)");
  if (peak_lr < 0) throw InvalidArgument("learning rate must be >= 0");
}

double schedule_lr(const TrainConfig& cfg, double epoch_frac) {
  if (epoch_frac < 0) epoch_frac = 0;
  if (cfg.warmup_epochs > 0 && epoch_frac < cfg.warmup_epochs)
    return cfg.peak_lr * (epoch_frac / cfg.warmup_epochs);
  double t = (epoch_frac - cfg.warmup_epochs) / (cfg.epochs - cfg.warmup_epochs);
  t = std::min(1.0, std::max(0.0, t));
  return cfg.peak_lr * 0.5 * (1.0 + std::cos(kPi * t));
}

namespace {

template <typename T>
TensorT<T> he_normal(const std::vector<int>& shape, int fan_in, Rng& rng) {
  TensorT<T> t(shape);
  double std_dev = std::sqrt(2.0 / fan_in);
  for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.normal() * std_dev);
  return t;
}

template <typename T>
TensorT<T> xavier_uniform(const std::vector<int>& shape, int fan_in, int fan_out, Rng& rng) {
  TensorT<T> t(shape);
  double bound = std::sqrt(6.0 / (fan_in + fan_out));
  for (int64_t i = 0; i < t.size(); ++i) t[i] = static_cast<T>(rng.uniform(-bound, bound));
  return t;
}

template <typename T>
ConvLayerT<T> make_conv(int c_in, int c_out, int k, int stride, Rng& rng) {
  ConvLayerT<T> l;
  l.w = make_var<T>(he_normal<T>({c_out, c_in, k, k}, c_in * k * k, rng), true);
  l.b = make_var<T>(TensorT<T>({c_out}), true);
  l.stride = stride;
  return l;
}

template <typename T>
VarPtr<T> conv_block(Graph<T>& g, const ConvLayerT<T>& l, const VarPtr<T>& x, bool relu_after) {
  auto y = nn::bias_add(g, nn::conv2d(g, x, l.w, l.stride), l.b);
  return relu_after ? nn::relu(g, y) : y;
}

}  // namespace

template <typename T>
ModelT<T> ModelT<T>::build(const ArchConfig& arch, Rng& rng) {
  arch.validate();
  ModelT<T> m;
  m.arch = arch;
  const int stages = static_cast<int>(arch.encoder_widths.size());
  int prev = arch.in_channels;
  for (int i = 0; i < stages; ++i) {
    int w = arch.encoder_widths[static_cast<size_t>(i)];
    m.enc.push_back(make_conv<T>(prev, w, 3, 2, rng));
    m.enc.push_back(make_conv<T>(w, w, 3, 1, rng));
    prev = w;
  }
  if (arch.attention.mechanism == nn::Mechanism::gca_msa) {
    for (size_t a = 0; a < arch.attention_resolutions.size(); ++a) {
      int width = 0;
      for (int i = 0; i < stages; ++i)
        if (arch.stage_resolution(i) == arch.attention_resolutions[a])
          width = arch.encoder_widths[static_cast<size_t>(i)];
      nn::MsaParams<T> p;
      p.wq = make_var<T>(xavier_uniform<T>({width, width, 1, 1}, width, width, rng), true);
      p.wk = make_var<T>(xavier_uniform<T>({width, width, 1, 1}, width, width, rng), true);
      p.wv = make_var<T>(xavier_uniform<T>({width, width, 1, 1}, width, width, rng), true);
      p.wo = make_var<T>(xavier_uniform<T>({width, width, 1, 1}, width, width, rng), true);
      m.msa.push_back(p);
    }
  }
  // skip width at a stage: doubled when the stage feeds a fusion mechanism
  auto skip_width = [&](int stage) {
    int w = arch.encoder_widths[static_cast<size_t>(stage)];
    for (int r : arch.attention_resolutions)
      if (arch.stage_resolution(stage) == r) return 2 * w;
    return w;
  };
  m.bottom = make_conv<T>(skip_width(stages - 1), arch.decoder_widths[0], 3, 1, rng);
  for (int l = 1; l < stages; ++l) {
    int up_in = arch.decoder_widths[static_cast<size_t>(l - 1)];
    int dw = arch.decoder_widths[static_cast<size_t>(l)];
    m.dec_pre.push_back(make_conv<T>(up_in, dw, 3, 1, rng));
    m.dec_post.push_back(make_conv<T>(dw + skip_width(stages - 1 - l), dw, 3, 1, rng));
  }
  m.head1 = make_conv<T>(arch.decoder_widths.back(), arch.head_width, 3, 1, rng);
  m.head2 = make_conv<T>(arch.head_width, arch.num_classes, 1, 1, rng);
  m.rebuild_param_list();
  return m;
}

template <typename T>
void ModelT<T>::rebuild_param_list() {
  params_.clear();
  auto add_conv = [this](const std::string& name, const ConvLayerT<T>& l) {
    params_.emplace_back(name + ".w", l.w);
    params_.emplace_back(name + ".b", l.b);
  };
  for (size_t i = 0; i < enc.size(); ++i)
    add_conv("enc" + std::to_string(i / 2) + (i % 2 ? ".convB" : ".convA"), enc[i]);
  for (size_t a = 0; a < msa.size(); ++a) {
    params_.emplace_back("msa" + std::to_string(a) + ".wq", msa[a].wq);
    params_.emplace_back("msa" + std::to_string(a) + ".wk", msa[a].wk);
    params_.emplace_back("msa" + std::to_string(a) + ".wv", msa[a].wv);
    params_.emplace_back("msa" + std::to_string(a) + ".wo", msa[a].wo);
  }
  add_conv("bottom", bottom);
  for (size_t l = 0; l < dec_pre.size(); ++l) {
    add_conv("dec" + std::to_string(l + 1) + ".pre", dec_pre[l]);
    add_conv("dec" + std::to_string(l + 1) + ".post", dec_post[l]);
  }
  add_conv("head1", head1);
  add_conv("head2", head2);
}

template <typename T>
VarPtr<T> ModelT<T>::param(const std::string& name) const {
  for (const auto& [n, p] : params_)
    if (n == name) return p;
  throw InvalidArgument("unknown parameter: " + name);
}

template <typename T>
int64_t ModelT<T>::param_count() const {
  int64_t n = 0;
  for (const auto& [name, p] : params_) n += p->value.size();
  return n;
}

template <typename T>
void ModelT<T>::zero_grads() {
  for (auto& [name, p] : params_) p->zero_grad();
}

template <typename T>
VarPtr<T> ModelT<T>::forward(Graph<T>& g, const VarPtr<T>& anchor, const VarPtr<T>& sample,
                             ForwardTraceT<T>* trace) const {
  if (anchor->value.rank() != 4 || sample->value.rank() != 4)
    throw ShapeError("forward expects [N,3,S,S] inputs");
  if (anchor->value.dim(2) != arch.input_size || anchor->value.dim(3) != arch.input_size ||
      !anchor->value.same_shape(sample->value))
    throw ShapeError("forward: input size mismatch with the configured architecture");

  const int stages = static_cast<int>(arch.encoder_widths.size());
  std::vector<VarPtr<T>> f1(static_cast<size_t>(stages)), f2(static_cast<size_t>(stages));
  VarPtr<T> x1 = anchor, x2 = sample;
  for (int i = 0; i < stages; ++i) {
    x1 = conv_block(g, enc[static_cast<size_t>(2 * i)], x1, true);
    x1 = conv_block(g, enc[static_cast<size_t>(2 * i + 1)], x1, true);
    x2 = conv_block(g, enc[static_cast<size_t>(2 * i)], x2, true);
    x2 = conv_block(g, enc[static_cast<size_t>(2 * i + 1)], x2, true);
    f1[static_cast<size_t>(i)] = x1;
    f2[static_cast<size_t>(i)] = x2;
  }

  auto attention_level_of = [&](int stage) {
    for (size_t a = 0; a < arch.attention_resolutions.size(); ++a)
      if (arch.attention_resolutions[a] == arch.stage_resolution(stage)) return static_cast<int>(a);
    return -1;
  };

  auto fuse = [&](int stage) -> VarPtr<T> {
    int a = attention_level_of(stage);
    VarPtr<T> a1 = f1[static_cast<size_t>(stage)], a2 = f2[static_cast<size_t>(stage)];
    if (a < 0) return a1;  // plain skip: anchor features only
    VarPtr<T> skip;
    int window = 0;
    switch (arch.attention.mechanism) {
      case nn::Mechanism::gca:
        skip = nn::global_cross_attention(g, a1, a2);
        break;
      case nn::Mechanism::lca:
        window = arch.attention.lca_windows[static_cast<size_t>(a)];
        skip = nn::local_cross_attention(g, a1, a2, window);
        break;
      case nn::Mechanism::gca_msa: {
        const auto& p = msa[static_cast<size_t>(a)];
        a1 = nn::linear_self_attention(g, a1, p, arch.attention.msa_heads,
                                       arch.attention.msa_positional_encoding);
        a2 = nn::linear_self_attention(g, a2, p, arch.attention.msa_heads,
                                       arch.attention.msa_positional_encoding);
        skip = nn::global_cross_attention(g, a1, a2);
        break;
      }
      case nn::Mechanism::concat_only:
        skip = nn::concat_channels(g, a1, a2);
        break;
    }
    if (trace) {
      typename ForwardTraceT<T>::Level lvl;
      lvl.resolution = arch.stage_resolution(stage);
      lvl.window = window;
      lvl.f1 = a1->value;
      lvl.f2 = a2->value;
      lvl.skip = skip;
      trace->levels.push_back(std::move(lvl));
    }
    return skip;
  };

  if (trace) trace->levels.clear();
  VarPtr<T> x = conv_block(g, bottom, fuse(stages - 1), true);
  for (int l = 1; l < stages; ++l) {
    x = nn::upsample_nearest2(g, x);
    x = conv_block(g, dec_pre[static_cast<size_t>(l - 1)], x, true);
    x = nn::concat_channels(g, x, fuse(stages - 1 - l));
    x = conv_block(g, dec_post[static_cast<size_t>(l - 1)], x, true);
  }
  x = nn::upsample_nearest2(g, x);
  x = conv_block(g, head1, x, true);
  x = conv_block(g, head2, x, false);
  if (trace) std::reverse(trace->levels.begin(), trace->levels.end());  // finest first
  return x;
}

template <typename T>
template <typename U>
ModelT<U> ModelT<T>::cast() const {
  ModelT<U> out;
  out.arch = arch;
  auto conv_cast = [](const ConvLayerT<T>& l) {
    ConvLayerT<U> o;
    o.w = make_var<U>(l.w->value.template cast<U>(), true);
    o.b = make_var<U>(l.b->value.template cast<U>(), true);
    o.stride = l.stride;
    return o;
  };
  for (const auto& l : enc) out.enc.push_back(conv_cast(l));
  for (const auto& p : msa) {
    nn::MsaParams<U> q;
    q.wq = make_var<U>(p.wq->value.template cast<U>(), true);
    q.wk = make_var<U>(p.wk->value.template cast<U>(), true);
    q.wv = make_var<U>(p.wv->value.template cast<U>(), true);
    q.wo = make_var<U>(p.wo->value.template cast<U>(), true);
    out.msa.push_back(q);
  }
  out.bottom = conv_cast(bottom);
  for (const auto& l : dec_pre) out.dec_pre.push_back(conv_cast(l));
  for (const auto& l : dec_post) out.dec_post.push_back(conv_cast(l));
  out.head1 = conv_cast(head1);
  out.head2 = conv_cast(head2);
  out.rebuild_param_list();
  return out;
}

PairTensors to_tensors(const PairRecord& rec) {
  const int s = rec.anchor.width();
  PairTensors t;
  t.anchor = nn::TensorF({3, s, s});
  t.sample = nn::TensorF({3, s, s});
  t.target = nn::TensorI({s, s});
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x) {
      for (int c = 0; c < 3; ++c) {
        t.anchor.at(c, y, x) = static_cast<float>(rec.anchor.rgb.px(x, y)[c]) / 255.0f;
        t.sample.at(c, y, x) = static_cast<float>(rec.sample.rgb.px(x, y)[c]) / 255.0f;
      }
      t.target.at(y, x) = rec.mask.at(x, y);
    }
  return t;
}

std::vector<BinaryMask> predict_masks(const Model& model,
                                      const std::vector<const PairRecord*>& batch) {
  if (batch.empty()) return {};
  const int s = model.arch.input_size;
  nn::TensorF a({static_cast<int>(batch.size()), 3, s, s});
  nn::TensorF b({static_cast<int>(batch.size()), 3, s, s});
  for (size_t i = 0; i < batch.size(); ++i) {
    PairTensors t = to_tensors(*batch[i]);
    std::copy_n(t.anchor.data(), t.anchor.size(), a.data() + static_cast<int64_t>(i) * 3 * s * s);
    std::copy_n(t.sample.data(), t.sample.size(), b.data() + static_cast<int64_t>(i) * 3 * s * s);
  }
  Graph<float> g(/*recording=*/false);
  auto logits = model.forward(g, make_var<float>(std::move(a)), make_var<float>(std::move(b)));
  std::vector<BinaryMask> masks;
  masks.reserve(batch.size());
  const int64_t plane = static_cast<int64_t>(s) * s;
  for (size_t i = 0; i < batch.size(); ++i) {
    BinaryMask m(s, s);
    const float* l0 = logits->value.data() + static_cast<int64_t>(i) * 2 * plane;
    const float* l1 = l0 + plane;
    for (int64_t p = 0; p < plane; ++p) m.values[static_cast<size_t>(p)] = l1[p] > l0[p] ? 1 : 0;
    masks.push_back(std::move(m));
  }
  return masks;
}

// ---- checkpoint io ----

namespace {

constexpr char kCkptMagic[8] = {'S', 'D', 'N', 'C', 'K', 'P', 'T', '1'};

void put_u32(std::ofstream& out, uint32_t v) { out.write(reinterpret_cast<const char*>(&v), 4); }
void put_u64(std::ofstream& out, uint64_t v) { out.write(reinterpret_cast<const char*>(&v), 8); }
uint32_t get_u32(std::ifstream& in) {
  uint32_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 4);
  return v;
}
uint64_t get_u64(std::ifstream& in) {
  uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), 8);
  return v;
}

std::string arch_to_json(const ArchConfig& a) {
  JsonWriter w;
  w.begin_obj();
  w.key("input_size").num(a.input_size);
  w.key("in_channels").num(a.in_channels);
  w.key("encoder_widths").num_array(a.encoder_widths);
  w.key("attention_resolutions").num_array(a.attention_resolutions);
  w.key("mechanism").str(nn::mechanism_name(a.attention.mechanism));
  w.key("lca_windows").num_array(a.attention.lca_windows);
  w.key("msa_heads").num(a.attention.msa_heads);
  w.key("msa_positional_encoding").boolean(a.attention.msa_positional_encoding);
  w.key("decoder_widths").num_array(a.decoder_widths);
  w.key("head_width").num(a.head_width);
  w.key("num_classes").num(a.num_classes);
  w.end_obj();
  return w.text();
}

ArchConfig arch_from_json(const nlohmann::json& j) {
  ArchConfig a;
  a.input_size = j.at("input_size").get<int>();
  a.in_channels = j.at("in_channels").get<int>();
  a.encoder_widths = j.at("encoder_widths").get<std::vector<int>>();
  a.attention_resolutions = j.at("attention_resolutions").get<std::vector<int>>();
  a.attention.mechanism = nn::mechanism_from_name(j.at("mechanism").get<std::string>());
  a.attention.lca_windows = j.at("lca_windows").get<std::vector<int>>();
  a.attention.msa_heads = j.at("msa_heads").get<int>();
  a.attention.msa_positional_encoding = j.at("msa_positional_encoding").get<bool>();
  a.decoder_widths = j.at("decoder_widths").get<std::vector<int>>();
  a.head_width = j.at("head_width").get<int>();
  a.num_classes = j.at("num_classes").get<int>();
  return a;
}

std::string train_to_json(const TrainConfig& t) {
  JsonWriter w;
  w.begin_obj();
  w.key("batch_size").num(t.batch_size);
  w.key("epochs").num(t.epochs);
  w.key("warmup_epochs").num(t.warmup_epochs);
  w.key("peak_lr").num(t.peak_lr);
  w.key("beta1").num(t.beta1);
  w.key("beta2").num(t.beta2);
  w.key("adam_eps").num(t.adam_eps);
  w.key("seed").num(t.seed);
  w.key("max_steps").num(t.max_steps);
  const AugmentConfig& a = t.augment;
  w.key("augment");
  w.begin_obj()
      .key("brightness").num(a.brightness)
      .key("contrast").num(a.contrast)
      .key("hue_degrees").num(a.hue_degrees)
      .key("rot90").boolean(a.rot90)
      .key("max_angle_degrees").num(a.max_angle_degrees)
      .key("hflip").boolean(a.hflip)
      .key("vflip").boolean(a.vflip)
      .key("blur_sigma_max").num(a.blur_sigma_max)
      .end_obj();
  w.end_obj();
  return w.text();
}

TrainConfig train_from_json(const nlohmann::json& j) {
  TrainConfig t;
  t.batch_size = j.at("batch_size").get<int>();
  t.epochs = j.at("epochs").get<int>();
  t.warmup_epochs = j.at("warmup_epochs").get<int>();
  t.peak_lr = j.at("peak_lr").get<double>();
  t.beta1 = j.at("beta1").get<double>();
  t.beta2 = j.at("beta2").get<double>();
  t.adam_eps = j.at("adam_eps").get<double>();
  t.seed = j.at("seed").get<uint64_t>();
  t.max_steps = j.at("max_steps").get<int>();
  const auto& ja = j.at("augment");
  t.augment.brightness = ja.at("brightness").get<double>();
  t.augment.contrast = ja.at("contrast").get<double>();
  t.augment.hue_degrees = ja.at("hue_degrees").get<double>();
  t.augment.rot90 = ja.at("rot90").get<bool>();
  t.augment.max_angle_degrees = ja.at("max_angle_degrees").get<double>();
  t.augment.hflip = ja.at("hflip").get<bool>();
  t.augment.vflip = ja.at("vflip").get<bool>();
  t.augment.blur_sigma_max = ja.at("blur_sigma_max").get<double>();
  return t;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Model& model,
                     const TrainConfig& train_cfg, int epoch, uint64_t rng_state) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open checkpoint for write: " + path.string());
  out.write(kCkptMagic, 8);
  put_u32(out, 1);  // version
  put_u64(out, static_cast<uint64_t>(model.params().size()));
  for (const auto& [name, p] : model.params()) {
    put_u32(out, static_cast<uint32_t>(name.size()));
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    out.put(0);  // dtype 0 = float32
    put_u32(out, static_cast<uint32_t>(p->value.rank()));
    for (int i = 0; i < p->value.rank(); ++i) put_u64(out, static_cast<uint64_t>(p->value.dim(i)));
    out.write(reinterpret_cast<const char*>(p->value.data()),
              static_cast<std::streamsize>(p->value.size() * sizeof(float)));
  }
  JsonWriter meta;
  meta.begin_obj();
  meta.key("epoch").num(epoch);
  meta.key("rng_state").num(rng_state);
  meta.end_obj();
  std::string arch_js = arch_to_json(model.arch);
  std::string train_js = train_to_json(train_cfg);
  std::string meta_js = meta.text();
  for (const std::string* s : {&arch_js, &train_js, &meta_js}) {
    put_u64(out, s->size());
    out.write(s->data(), static_cast<std::streamsize>(s->size()));
  }
  if (!out) throw IoError("checkpoint write failed: " + path.string());
}

Model load_checkpoint(const std::filesystem::path& path, CheckpointMeta* meta) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint: " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kCkptMagic, 8) != 0)
    throw ParseError("not a checkpoint file: " + path.string());
  uint32_t version = get_u32(in);
  if (version != 1) throw ParseError("unsupported checkpoint version");
  uint64_t count = get_u64(in);
  std::vector<std::pair<std::string, nn::TensorF>> tensors;
  tensors.reserve(count);
  for (uint64_t i = 0; i < count; ++i) {
    uint32_t name_len = get_u32(in);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    char dtype = 0;
    in.get(dtype);
    if (dtype != 0) throw ParseError("unsupported tensor dtype in checkpoint");
    uint32_t rank = get_u32(in);
    std::vector<int> shape(rank);
    for (uint32_t d = 0; d < rank; ++d) shape[d] = static_cast<int>(get_u64(in));
    nn::TensorF t(shape);
    in.read(reinterpret_cast<char*>(t.data()),
            static_cast<std::streamsize>(t.size() * sizeof(float)));
    tensors.emplace_back(std::move(name), std::move(t));
  }
  auto read_blob = [&in, &path]() {
    uint64_t len = get_u64(in);
    std::string s(len, '\0');
    in.read(s.data(), static_cast<std::streamsize>(len));
    if (!in) throw ParseError("truncated checkpoint: " + path.string());
    return s;
  };
  nlohmann::json arch_js = nlohmann::json::parse(read_blob());
  nlohmann::json train_js = nlohmann::json::parse(read_blob());
  nlohmann::json meta_js = nlohmann::json::parse(read_blob());

  ArchConfig arch = arch_from_json(arch_js);
  Rng scratch(0);
  Model model = Model::build(arch, scratch);
  if (tensors.size() != model.params().size())
    throw ParseError("checkpoint tensor count does not match the architecture");
  for (size_t i = 0; i < tensors.size(); ++i) {
    const auto& [name, t] = tensors[i];
    const auto& [want_name, p] = model.params()[i];
    if (name != want_name || !(t.shape() == p->value.shape()))
      throw ParseError("checkpoint tensor '" + name + "' does not match '" + want_name + "'");
    p->value = t;
  }
  if (meta) {
    meta->arch = arch;
    meta->train = train_from_json(train_js);
    meta->epoch = meta_js.at("epoch").get<int>();
    meta->rng_state = meta_js.at("rng_state").get<uint64_t>();
  }
  return model;
}

// ---- attention extraction ----

AttentionProbe extract_attention(const Model& model, const PairRecord& pair, int level,
                                 int query_x, int query_y) {
  if (model.arch.attention.mechanism == nn::Mechanism::concat_only)
    throw UnsupportedMechanismError(
        "the concat variant has no attention weights to extract");
  const int s = model.arch.input_size;
  if (query_x < 0 || query_x >= s || query_y < 0 || query_y >= s)
    throw InvalidArgument("query pixel outside the image");
  if (level < 0 || level >= static_cast<int>(model.arch.attention_resolutions.size()))
    throw InvalidArgument("attention level out of range");

  PairTensors t = to_tensors(pair);
  Graph<float> g(/*recording=*/false);
  ForwardTraceT<float> trace;
  nn::TensorF a = t.anchor.reshaped({1, 3, s, s});
  nn::TensorF b = t.sample.reshaped({1, 3, s, s});
  model.forward(g, make_var<float>(std::move(a)), make_var<float>(std::move(b)), &trace);

  const auto& lvl = trace.levels[static_cast<size_t>(level)];
  const int res = lvl.resolution;
  nn::TensorF f1 = lvl.f1.reshaped({lvl.f1.dim(1), res, res});
  nn::TensorF f2 = lvl.f2.reshaped({lvl.f2.dim(1), res, res});
  int qfx = std::min(res - 1, query_x * res / s);
  int qfy = std::min(res - 1, query_y * res / s);

  AttentionProbe probe;
  probe.resolution = res;
  probe.weights = nn::attention_weight_row(f1, f2, qfx, qfy, lvl.window);
  probe.heatmap = nn::TensorF({s, s});
  float mx = 0;
  for (int64_t i = 0; i < probe.weights.size(); ++i) mx = std::max(mx, probe.weights[i]);
  const int scale = s / res;
  for (int y = 0; y < s; ++y)
    for (int x = 0; x < s; ++x)
      probe.heatmap.at(y, x) = probe.weights.at(y / scale, x / scale) / mx;
  return probe;
}

template class ModelT<float>;
template class ModelT<double>;
template ModelT<double> ModelT<float>::cast<double>() const;
template ModelT<float> ModelT<double>::cast<float>() const;

}  // namespace sdn
