// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <optional>
#include <vector>

#include "sdn/assembly.hpp"
#include "sdn/geometry.hpp"
#include "sdn/image.hpp"
#include "sdn/rng.hpp"

namespace sdn {

enum class BackgroundStyle { flat, value_noise };

struct RenderParams {
  int image_size = 128;  // square, power of two, >= 32
  Vec3 light_dir{0.4, 0.8, 0.3};  // direction toward the light, normalized on use
  double ambient = 0.25;          // in [0, 1]
  BackgroundStyle background = BackgroundStyle::value_noise;
  uint64_t background_seed = 0;

  void validate() const {
    if (image_size < 32 || (image_size & (image_size - 1)) != 0)
      throw InvalidArgument("render image size must be a power of two >= 32");
    if (ambient < 0 || ambient > 1) throw InvalidArgument("ambient must lie in [0, 1]");
    if (light_dir.norm() == 0) throw InvalidArgument("light direction must be nonzero");
  }
};

struct RenderedView {
  ImageRGB rgb;
  ImageU16 instance;          // part id per pixel, 0 = background
  std::vector<float> depth;   // camera-space depth; empty after reload from disk
  CameraPose pose;
  AssemblyState state;

  int width() const { return rgb.width; }
  int height() const { return rgb.height; }
  bool has_depth() const { return !depth.empty(); }
};

// Z-buffered projection of all present parts under a pinhole camera with flat
// per-face Lambert shading: channel = color * clamp01(ambient + max(0, n.l)).
// Depth ties are broken toward the lower part id. Bit-deterministic.
RenderedView rasterize(const PartCatalog& cat, const AssemblyState& state, const CameraPose& pose,
                       const RenderParams& params);

// Fig-style ground truth: mask(x, y) = 1 iff the two instance maps disagree.
// Both views must share the camera pose (orientation nQD <= 1e-12, identical
// position and intrinsics) and image size.
BinaryMask change_mask(const RenderedView& anchor, const RenderedView& sample_at_anchor_pose);

// Independent rule used as an oracle: pixel is change iff either of the two
// instance labels at that pixel is in the part-diff set.
BinaryMask change_mask_by_diff_membership(const RenderedView& anchor,
                                          const RenderedView& sample_at_anchor_pose);

struct CropSpec {
  double margin_frac = 0.10;
  int out_size = 64;
  bool random_translation = true;
};

struct CropWindow {
  int x0 = 0, y0 = 0, side = 0;
};

// Square window containing the bounding box of nonzero instance pixels padded
// by margin_frac on each side, randomly translated while still covering the
// box, clamped to the image. Throws RenderError when the view has no object.
CropWindow compute_crop_window(const ImageU16& instance, const CropSpec& spec, Rng& rng);

ImageRGB crop_rgb_bilinear(const ImageRGB& src, const CropWindow& win, int out_size);
ImageU16 crop_u16_nearest(const ImageU16& src, const CropWindow& win, int out_size);
BinaryMask crop_mask_nearest(const BinaryMask& src, const CropWindow& win, int out_size);
std::vector<float> crop_depth_nearest(const std::vector<float>& src, int src_size,
                                      const CropWindow& win, int out_size);

struct AugmentConfig {
  double brightness = 0.2;        // additive, fraction of full scale
  double contrast = 0.2;          // multiplicative jitter amplitude
  double hue_degrees = 60.0;      // hue rotation amplitude
  bool rot90 = true;              // random multiple-of-90 rotation
  double max_angle_degrees = 10.0;  // extra continuous rotation
  bool hflip = true;
  bool vflip = true;
  double blur_sigma_max = 1.0;

  static AugmentConfig none() {
    AugmentConfig c;
    c.brightness = c.contrast = c.hue_degrees = 0;
    c.rot90 = c.hflip = c.vflip = false;
    c.max_angle_degrees = 0;
    c.blur_sigma_max = 0;
    return c;
  }
};

// In-place augmentation helpers used by augment_pair (exposed for tests).
void apply_rot90(ImageRGB& img, int k);
void apply_rot90(ImageU16& img, int k);
void apply_rot90(BinaryMask& m, int k);
void apply_flip(ImageRGB& img, bool horizontal, bool vertical);
void apply_flip(ImageU16& img, bool horizontal, bool vertical);
void apply_flip(BinaryMask& m, bool horizontal, bool vertical);
void apply_rotation(ImageRGB& img, double angle_rad);   // bilinear, clamp-to-edge
void apply_rotation(ImageU16& img, double angle_rad);   // nearest
void apply_rotation(BinaryMask& m, double angle_rad);   // nearest
void apply_color_jitter(ImageRGB& img, double hue_deg, double brightness, double contrast);
void apply_gaussian_blur(ImageRGB& img, double sigma);

}  // namespace sdn
