#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "longitrack/errors.hpp"
#include "longitrack/volume.hpp"

namespace longitrack {

/// CT intensity normalization: clamp to a HU window, then shift/scale.
struct NormalizationConfig {
  double clip_lo = -1000.0;
  double clip_hi = 1000.0;
  double mu = 0.0;
  double sigma_hu = 500.0;
};

inline void require_valid(const NormalizationConfig& c) {
  if (!(c.clip_lo < c.clip_hi))
    throw ConfigError("normalization: clip_lo must be < clip_hi");
  if (!(c.sigma_hu > 0.0))
    throw ConfigError("normalization: sigma_hu must be > 0");
}

enum class BlobMode { unit_intensity, unit_volume };

/// Gaussian point-prompt channel. Distances are measured in voxels,
/// isotropically; the blob is truncated at truncation_sigma standard
/// deviations. unit_intensity keeps the center at exactly 1; unit_volume
/// rescales the channel to sum to 1.
struct PointBlobConfig {
  double sigma_vox = 2.0;
  double truncation_sigma = 3.0;
  BlobMode mode = BlobMode::unit_intensity;
};

inline void require_valid(const PointBlobConfig& c) {
  if (!(c.sigma_vox > 0.0)) throw ConfigError("point_blob: sigma_vox must be > 0");
  if (!(c.truncation_sigma > 0.0))
    throw ConfigError("point_blob: truncation_sigma must be > 0");
}

/// Which channels the segmenter input carries besides the current image.
struct InputMode {
  bool use_prior_image = true;
  bool use_prior_mask = true;
  bool use_point = true;
};

inline void require_valid(const InputMode& m) {
  if (!m.use_prior_mask && !m.use_point)
    throw ConfigError("input_mode: at least one of prior mask / point required");
}

inline int channel_count(const InputMode& m) {
  return 1 + (m.use_prior_image ? 1 : 0) + (m.use_prior_mask ? 1 : 0) +
         (m.use_point ? 1 : 0);
}

/// (clamp(v, lo, hi) - mu) / sigma, voxelwise. Shape and spacing carry over.
template <class T>
Volume3<float> normalize_ct(const Volume3<T>& raw,
                            const NormalizationConfig& cfg) {
  require_valid(cfg);
  Volume3<float> out;
  out.shape = raw.shape;
  out.spacing = raw.spacing;
  out.data.resize(raw.data.size());
  const double lo = cfg.clip_lo, hi = cfg.clip_hi;
  for (std::size_t i = 0; i < raw.data.size(); ++i) {
    double v = static_cast<double>(raw.data[i]);
    v = v < lo ? lo : (v > hi ? hi : v);
    out.data[i] = static_cast<float>((v - cfg.mu) / cfg.sigma_hu);
  }
  return out;
}

inline float normalize_hu(double v, const NormalizationConfig& cfg) {
  v = v < cfg.clip_lo ? cfg.clip_lo : (v > cfg.clip_hi ? cfg.clip_hi : v);
  return static_cast<float>((v - cfg.mu) / cfg.sigma_hu);
}

/// Truncated Gaussian blob around `center`:
///   g(v) = exp(-|v - center|^2 / (2 sigma^2))  for |v - center| <= trunc*sigma
/// Zero outside the truncation radius. unit_volume divides by the sum.
inline Volume3<float> rasterize_point(VoxelIndex center, Shape3 patch_shape,
                                      const PointBlobConfig& cfg) {
  require_valid(cfg);
  if (!in_bounds(center, patch_shape))
    throw PromptOutOfPatch("point (" + std::to_string(center.z) + "," +
                           std::to_string(center.y) + "," +
                           std::to_string(center.x) + ") outside patch");
  Volume3<float> out = Volume3<float>::filled(patch_shape, {1.0, 1.0, 1.0}, 0.0f);
  const double radius = cfg.truncation_sigma * cfg.sigma_vox;
  const double r2 = radius * radius;
  const double inv2s2 = 1.0 / (2.0 * cfg.sigma_vox * cfg.sigma_vox);
  const std::int64_t r_ceil = static_cast<std::int64_t>(std::ceil(radius));

  const std::int64_t z0 = std::max<std::int64_t>(0, center.z - r_ceil);
  const std::int64_t z1 = std::min(patch_shape[0] - 1, center.z + r_ceil);
  const std::int64_t y0 = std::max<std::int64_t>(0, center.y - r_ceil);
  const std::int64_t y1 = std::min(patch_shape[1] - 1, center.y + r_ceil);
  const std::int64_t x0 = std::max<std::int64_t>(0, center.x - r_ceil);
  const std::int64_t x1 = std::min(patch_shape[2] - 1, center.x + r_ceil);

  double sum = 0.0;
  for (std::int64_t z = z0; z <= z1; ++z)
    for (std::int64_t y = y0; y <= y1; ++y)
      for (std::int64_t x = x0; x <= x1; ++x) {
        const double dz = static_cast<double>(z - center.z);
        const double dy = static_cast<double>(y - center.y);
        const double dx = static_cast<double>(x - center.x);
        const double d2 = dz * dz + dy * dy + dx * dx;
        if (d2 > r2) continue;
        const float g = static_cast<float>(std::exp(-d2 * inv2s2));
        out.at(z, y, x) = g;
        sum += g;
      }

  if (cfg.mode == BlobMode::unit_volume) {
    const float inv = static_cast<float>(1.0 / sum);  // sum >= 1 (center voxel)
    for (float& v : out.data) v *= inv;
  }
  return out;
}

/// Concatenates channels in the fixed order
/// [current image, prior image?, prior mask?, point?] according to `mode`.
/// Pass nullptr for channels you do not have.
inline std::vector<Volume3<float>> stack_inputs(const Volume3<float>& curr_img,
                                                const Volume3<float>* prior_img,
                                                const Volume3<float>* prior_mask,
                                                const Volume3<float>* point,
                                                const InputMode& mode) {
  require_valid(mode);
  std::vector<Volume3<float>> channels;
  channels.push_back(curr_img);

  auto add = [&](const Volume3<float>* ch, const char* name) {
    if (ch == nullptr)
      throw MissingChannel(std::string("input mode requires channel: ") + name);
    if (ch->shape != curr_img.shape)
      throw ShapeMismatch(std::string("channel shape mismatch: ") + name);
    channels.push_back(*ch);
  };
  if (mode.use_prior_image) add(prior_img, "prior image");
  if (mode.use_prior_mask) add(prior_mask, "prior mask");
  if (mode.use_point) add(point, "point");
  return channels;
}

}  // namespace longitrack
