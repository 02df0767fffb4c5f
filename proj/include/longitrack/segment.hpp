#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>
#include <memory>
#include <string>
#include <vector>

#include "longitrack/cases.hpp"
#include "longitrack/errors.hpp"
#include "longitrack/patch.hpp"
#include "longitrack/prompt.hpp"
#include "longitrack/volume.hpp"

namespace longitrack {

/// Seeded intensity-band region growing. Works on raw HU so the thresholds
/// stay interpretable. Within mask_dilation_vox (Euclidean) of the prior
/// mask the band widens to tau_hu * mask_tau_relax.
struct RegionGrowConfig {
  double tau_hu = 150.0;      // intensity band half-width around the seed
  double r_max_vox = 24.0;    // Euclidean growth radius cap, in voxels
  int connectivity = 6;       // 6 or 26
  int mask_dilation_vox = 3;
  double mask_tau_relax = 1.5;
};

inline void require_valid(const RegionGrowConfig& c) {
  if (!(c.tau_hu > 0.0)) throw ConfigError("region_grow: tau_hu must be > 0");
  if (!(c.r_max_vox > 0.0))
    throw ConfigError("region_grow: r_max_vox must be > 0");
  if (c.connectivity != 6 && c.connectivity != 26)
    throw ConfigError("region_grow: connectivity must be 6 or 26");
  if (c.mask_dilation_vox < 0)
    throw ConfigError("region_grow: mask_dilation_vox must be >= 0");
  if (!(c.mask_tau_relax >= 1.0))
    throw ConfigError("region_grow: mask_tau_relax must be >= 1");
}

namespace detail {

inline const std::vector<VoxelIndex>& neighbor_offsets(int connectivity) {
  static const std::vector<VoxelIndex> six = {
      {-1, 0, 0}, {1, 0, 0}, {0, -1, 0}, {0, 1, 0}, {0, 0, -1}, {0, 0, 1}};
  static const std::vector<VoxelIndex> twentysix = [] {
    std::vector<VoxelIndex> n;
    for (std::int64_t z = -1; z <= 1; ++z)
      for (std::int64_t y = -1; y <= 1; ++y)
        for (std::int64_t x = -1; x <= 1; ++x)
          if (z || y || x) n.push_back({z, y, x});
    return n;
  }();
  return connectivity == 6 ? six : twentysix;
}

/// Marks every voxel within Euclidean distance `radius` of a positive mask
/// voxel.
inline std::vector<std::uint8_t> dilate_mask(const Volume3<float>& mask,
                                             int radius) {
  std::vector<std::uint8_t> out(mask.data.size(), 0);
  std::vector<VoxelIndex> ball;
  for (std::int64_t z = -radius; z <= radius; ++z)
    for (std::int64_t y = -radius; y <= radius; ++y)
      for (std::int64_t x = -radius; x <= radius; ++x)
        if (z * z + y * y + x * x <=
            static_cast<std::int64_t>(radius) * radius)
          ball.push_back({z, y, x});
  const Shape3& S = mask.shape;
  for (std::int64_t z = 0; z < S[0]; ++z)
    for (std::int64_t y = 0; y < S[1]; ++y)
      for (std::int64_t x = 0; x < S[2]; ++x) {
        if (!(mask.at(z, y, x) > 0.0f)) continue;
        for (const auto& o : ball) {
          const VoxelIndex v{z + o.z, y + o.y, x + o.x};
          if (in_bounds(v, S))
            out[static_cast<std::size_t>(mask.flat(v.z, v.y, v.x))] = 1;
        }
      }
  return out;
}

}  // namespace detail

/// Flood fill from the recorded in-patch center over voxels whose raw HU
/// stays within the band around the seed value, never growing past
/// r_max_vox from the seed. Returns a {0,1} probability patch.
inline Volume3<float> region_grow(const PatchPair& pair,
                                  const RegionGrowConfig& cfg,
                                  bool use_prior_mask = true) {
  require_valid(cfg);
  const Volume3<float>& hu = pair.curr_raw_hu;
  const Shape3& S = hu.shape;
  const VoxelIndex seed = pair.center_in_patch;
  if (!in_bounds(seed, S))
    throw PromptOutOfPatch("region grow seed outside patch");
  if (!in_bounds(pair.origin_curr + seed, pair.full_shape_curr))
    throw SeedInPadding("region grow seed fell in padded area of case patch");

  const double seed_hu = static_cast<double>(hu[seed]);
  const double r2_max = cfg.r_max_vox * cfg.r_max_vox;

  bool have_mask = false;
  std::vector<std::uint8_t> relaxed;
  if (use_prior_mask) {
    for (float v : pair.prior_mask.data)
      if (v > 0.0f) {
        have_mask = true;
        break;
      }
    if (have_mask)
      relaxed = detail::dilate_mask(pair.prior_mask, cfg.mask_dilation_vox);
  }

  Volume3<float> out = Volume3<float>::filled(S, hu.spacing, 0.0f);
  std::vector<std::uint8_t> visited(hu.data.size(), 0);
  const auto& neighbors = detail::neighbor_offsets(cfg.connectivity);

  auto admissible = [&](VoxelIndex v) {
    const std::int64_t dz = v.z - seed.z, dy = v.y - seed.y, dx = v.x - seed.x;
    if (static_cast<double>(dz * dz + dy * dy + dx * dx) > r2_max)
      return false;
    const std::size_t i = static_cast<std::size_t>(hu.flat(v.z, v.y, v.x));
    double tau = cfg.tau_hu;
    if (have_mask && relaxed[i]) tau *= cfg.mask_tau_relax;
    return std::abs(static_cast<double>(hu.data[i]) - seed_hu) <= tau;
  };

  std::deque<VoxelIndex> queue;
  queue.push_back(seed);
  visited[static_cast<std::size_t>(hu.flat(seed.z, seed.y, seed.x))] = 1;
  while (!queue.empty()) {
    const VoxelIndex v = queue.front();
    queue.pop_front();
    out[v] = 1.0f;
    for (const auto& o : neighbors) {
      const VoxelIndex n = v + o;
      if (!in_bounds(n, S)) continue;
      const std::size_t i = static_cast<std::size_t>(hu.flat(n.z, n.y, n.x));
      if (visited[i]) continue;
      visited[i] = 1;
      if (admissible(n)) queue.push_back(n);
    }
  }
  return out;
}

/// Pipeline-correctness stand-in: returns the ground-truth follow-up mask of
/// the pair's lesion, cropped to the patch window, as {0,1}.
inline Volume3<float> oracle_segment(const PatchPair& pair,
                                     const Volume3<std::uint16_t>& gt_followup,
                                     const std::vector<LesionPrompt>& lesions) {
  const bool known = std::any_of(
      lesions.begin(), lesions.end(),
      [&](const LesionPrompt& l) { return l.id == pair.lesion_id; });
  if (!known)
    throw UnknownLesion("lesion id " + std::to_string(pair.lesion_id) +
                        " absent from ground truth");
  return crop_label(gt_followup, static_cast<std::uint16_t>(pair.lesion_id),
                    pair.origin_curr, pair.curr_raw_hu.shape);
}

/// Voxelwise arithmetic mean of probability maps. Summation is done in
/// double over the sorted member values so the result is invariant under
/// permutations of the input list and exact for identical members.
inline Volume3<float> ensemble_mean(const std::vector<Volume3<float>>& maps) {
  if (maps.empty()) throw EmptyEnsemble("ensemble of zero maps");
  const Shape3& S = maps.front().shape;
  for (const auto& m : maps)
    if (m.shape != S) throw ShapeMismatch("ensemble member shape mismatch");
  Volume3<float> out = maps.front();
  if (maps.size() == 1) return out;
  const double k_members = static_cast<double>(maps.size());
  std::vector<float> vals(maps.size());
  for (std::size_t i = 0; i < out.data.size(); ++i) {
    for (std::size_t k = 0; k < maps.size(); ++k) vals[k] = maps[k].data[i];
    std::sort(vals.begin(), vals.end());
    double sum = 0.0;
    for (float v : vals) sum += static_cast<double>(v);
    out.data[i] = static_cast<float>(sum / k_members);
  }
  return out;
}

/// Foreground iff value >= threshold.
inline Volume3<std::uint8_t> binarize(const Volume3<float>& prob,
                                      double threshold) {
  Volume3<std::uint8_t> out;
  out.shape = prob.shape;
  out.spacing = prob.spacing;
  out.data.resize(prob.data.size());
  for (std::size_t i = 0; i < prob.data.size(); ++i)
    out.data[i] = static_cast<double>(prob.data[i]) >= threshold ? 1 : 0;
  return out;
}

/// A per-lesion segmenter: maps an aligned patch pair to a probability
/// patch in [0,1] of the same shape. Implementations must be deterministic
/// and safe to call concurrently on distinct pairs.
class SegmenterBackend {
 public:
  virtual ~SegmenterBackend() = default;
  virtual Volume3<float> segment(const PatchPair& pair,
                                 const InputMode& mode) const = 0;
};

class RegionGrowBackend final : public SegmenterBackend {
 public:
  explicit RegionGrowBackend(RegionGrowConfig cfg) : cfg_(cfg) {
    require_valid(cfg_);
  }
  Volume3<float> segment(const PatchPair& pair,
                         const InputMode& mode) const override {
    return region_grow(pair, cfg_, mode.use_prior_mask);
  }

 private:
  RegionGrowConfig cfg_;
};

class OracleBackend final : public SegmenterBackend {
 public:
  explicit OracleBackend(const CaseRecord& cs) : case_(&cs) {}
  Volume3<float> segment(const PatchPair& pair,
                         const InputMode&) const override {
    return oracle_segment(pair, case_->gt_followup, case_->lesions);
  }

 private:
  const CaseRecord* case_;  // not owned; must outlive the backend
};

inline bool known_backend(const std::string& name) {
  return name == "region_grow" || name == "oracle";
}

inline std::unique_ptr<SegmenterBackend> make_backend(
    const std::string& name, const RegionGrowConfig& cfg,
    const CaseRecord& cs) {
  if (name == "region_grow") return std::make_unique<RegionGrowBackend>(cfg);
  if (name == "oracle") return std::make_unique<OracleBackend>(cs);
  throw ConfigError("unknown backend \"" + name +
                    "\" (expected region_grow or oracle)");
}

}  // namespace longitrack
