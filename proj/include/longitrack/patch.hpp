#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "longitrack/cases.hpp"
#include "longitrack/errors.hpp"
#include "longitrack/prompt.hpp"
#include "longitrack/rng.hpp"
#include "longitrack/volume.hpp"

namespace longitrack {

struct PatchSpec {
  Shape3 patch_size{64, 64, 64};  // components >= 4 and even
  double pad_value_hu = -1000.0;  // air, applied before normalization
  int train_shift_max = 4;        // per-axis center jitter in voxels
};

inline void require_valid(const PatchSpec& s) {
  for (int a = 0; a < 3; ++a) {
    if (s.patch_size[a] < 4 || s.patch_size[a] % 2 != 0)
      throw ConfigError("patch_size components must be even and >= 4");
  }
  if (s.train_shift_max < 0)
    throw ConfigError("train_shift_max must be >= 0");
}

/// Aligned fixed-size patches from both timepoints plus prompt channels.
/// Raw HU patches are kept next to the normalized ones so intensity-based
/// backends can work in HU.
struct PatchPair {
  int lesion_id = 0;
  Volume3<float> curr_raw_hu;   // follow-up scan window, raw HU
  Volume3<float> prior_raw_hu;  // baseline scan window, raw HU
  Volume3<float> curr_image;    // normalized
  Volume3<float> prior_image;   // normalized
  Volume3<float> prior_mask;    // this lesion's baseline mask, {0,1}
  Volume3<float> point_channel;
  VoxelIndex origin_curr;       // patch corner in follow-up volume coords
  VoxelIndex origin_prior;      // patch corner in baseline volume coords
  VoxelIndex center_in_patch;   // where the (jittered) centers were placed
  Shape3 full_shape_curr{0, 0, 0};
  Shape3 full_shape_prior{0, 0, 0};

  bool operator==(const PatchPair&) const = default;
};

/// Extraction core shared by training and inference sampling. Both scans
/// place their (jittered) center at `center_in_patch`; everything outside
/// the scan is padded with pad_value_hu (masks and point channel with 0).
inline PatchPair extract_pair(const CaseRecord& cs, const LesionPrompt& lesion,
                              const PatchSpec& spec,
                              const NormalizationConfig& norm,
                              const PointBlobConfig& blob,
                              VoxelIndex center_in_patch,
                              VoxelIndex jitter_curr, VoxelIndex jitter_prior) {
  require_valid(spec);
  if (!cs.has_lesion(lesion.id))
    throw UnknownLesion("lesion id " + std::to_string(lesion.id) +
                        " not in case " + cs.patient_id);

  const Shape3 P = spec.patch_size;
  const VoxelIndex c_curr = lesion.center_followup + jitter_curr;
  const VoxelIndex c_prior = lesion.center_baseline + jitter_prior;

  PatchPair pp;
  pp.lesion_id = lesion.id;
  pp.center_in_patch = center_in_patch;
  pp.origin_curr = c_curr - center_in_patch;
  pp.origin_prior = c_prior - center_in_patch;
  pp.full_shape_curr = cs.followup.shape;
  pp.full_shape_prior = cs.baseline.shape;

  const float pad = static_cast<float>(spec.pad_value_hu);
  pp.curr_raw_hu = crop(cs.followup, pp.origin_curr, P, pad);
  pp.prior_raw_hu = crop(cs.baseline, pp.origin_prior, P, pad);
  pp.curr_image = normalize_ct(pp.curr_raw_hu, norm);
  pp.prior_image = normalize_ct(pp.prior_raw_hu, norm);
  pp.prior_mask = crop_label(cs.gt_baseline,
                             static_cast<std::uint16_t>(lesion.id),
                             pp.origin_prior, P);
  pp.point_channel = rasterize_point(center_in_patch, P, blob);
  pp.point_channel.spacing = cs.followup.spacing;
  return pp;
}

/// Training draw: the shared in-patch center offset is uniform per axis in
/// [floor(P/4), floor(3P/4)) and each scan gets an independent jitter
/// uniform in [-train_shift_max, +train_shift_max].
/// Draw order per call: offset z,y,x; follow-up jitter z,y,x; baseline
/// jitter z,y,x.
inline PatchPair train_sample(const CaseRecord& cs, const LesionPrompt& lesion,
                              const PatchSpec& spec,
                              const NormalizationConfig& norm,
                              const PointBlobConfig& blob, RngStream& rng) {
  require_valid(spec);
  const Shape3 P = spec.patch_size;
  VoxelIndex offset;
  std::int64_t* off[3] = {&offset.z, &offset.y, &offset.x};
  for (int a = 0; a < 3; ++a)
    *off[a] = rng.uniform_int(P[a] / 4, 3 * P[a] / 4 - 1);

  const std::int64_t s = spec.train_shift_max;
  VoxelIndex j_curr{rng.uniform_int(-s, s), rng.uniform_int(-s, s),
                    rng.uniform_int(-s, s)};
  VoxelIndex j_prior{rng.uniform_int(-s, s), rng.uniform_int(-s, s),
                     rng.uniform_int(-s, s)};
  return extract_pair(cs, lesion, spec, norm, blob, offset, j_curr, j_prior);
}

/// Inference extraction: no jitter, centers placed exactly at floor(P/2).
inline PatchPair infer_patch(const CaseRecord& cs, const LesionPrompt& lesion,
                             const PatchSpec& spec,
                             const NormalizationConfig& norm,
                             const PointBlobConfig& blob) {
  require_valid(spec);
  const Shape3 P = spec.patch_size;
  const VoxelIndex mid{P[0] / 2, P[1] / 2, P[2] / 2};
  return extract_pair(cs, lesion, spec, norm, blob, mid, {0, 0, 0}, {0, 0, 0});
}

/// Sparse full-volume update: one (flat voxel index, value) pair per patch
/// voxel that lands inside the full volume. Voxels that fell in padding are
/// dropped.
inline std::vector<std::pair<std::uint64_t, float>> paste_patch(
    Shape3 full_shape, VoxelIndex origin, const Volume3<float>& patch) {
  std::vector<std::pair<std::uint64_t, float>> updates;
  std::int64_t lo[3], hi[3];
  const std::int64_t org[3] = {origin.z, origin.y, origin.x};
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max<std::int64_t>(0, -org[a]);
    hi[a] = std::min<std::int64_t>(patch.shape[a], full_shape[a] - org[a]);
  }
  if (lo[0] >= hi[0] || lo[1] >= hi[1] || lo[2] >= hi[2]) return updates;
  updates.reserve(static_cast<std::size_t>((hi[0] - lo[0]) * (hi[1] - lo[1]) *
                                           (hi[2] - lo[2])));
  for (std::int64_t z = lo[0]; z < hi[0]; ++z)
    for (std::int64_t y = lo[1]; y < hi[1]; ++y) {
      const std::uint64_t row =
          static_cast<std::uint64_t>(((z + org[0]) * full_shape[1] + y + org[1]) *
                                     full_shape[2] + org[2]);
      const float* src =
          &patch.data[static_cast<std::size_t>(patch.flat(z, y, lo[2]))];
      for (std::int64_t x = lo[2]; x < hi[2]; ++x)
        updates.emplace_back(row + static_cast<std::uint64_t>(x),
                             src[x - lo[2]]);
    }
  return updates;
}

struct CaseWarning {
  int lesion_id = 0;
  std::string message;
};

/// Flags lesions whose follow-up center lies within `margin` voxels of any
/// face of the follow-up volume (margin 0: exactly on a face, or outside).
inline std::vector<CaseWarning> validate_case(const CaseRecord& cs,
                                              std::int64_t margin = 0) {
  std::vector<CaseWarning> warnings;
  const Shape3& shape = cs.followup.shape;
  for (const auto& l : cs.lesions) {
    const std::int64_t c[3] = {l.center_followup.z, l.center_followup.y,
                               l.center_followup.x};
    std::int64_t dist = std::numeric_limits<std::int64_t>::max();
    for (int a = 0; a < 3; ++a)
      dist = std::min(dist, std::min(c[a], shape[a] - 1 - c[a]));
    if (dist <= margin) {
      warnings.push_back(
          {l.id, "lesion " + std::to_string(l.id) + " of case " +
                     cs.patient_id + ": follow-up center (" +
                     std::to_string(c[0]) + "," + std::to_string(c[1]) + "," +
                     std::to_string(c[2]) + ") is within " +
                     std::to_string(margin) + " voxels of the scan edge"});
    }
  }
  return warnings;
}

}  // namespace longitrack
