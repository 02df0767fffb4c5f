#pragma once

#include <cstdint>
#include <string>
#include <unordered_set>
#include <utility>
#include <vector>

#include "longitrack/errors.hpp"
#include "longitrack/volume.hpp"

namespace longitrack {

/// One lesion's sparse full-volume probability update, as produced by
/// paste_patch.
struct LesionUpdate {
  int lesion_id = 0;
  std::vector<std::pair<std::uint64_t, float>> updates;
};

namespace detail {

inline void check_lesion_ids(const std::vector<LesionUpdate>& preds) {
  std::unordered_set<int> seen;
  for (const auto& p : preds) {
    if (p.lesion_id <= 0 || p.lesion_id > 0xFFFF)
      throw ReservedLabel("lesion id " + std::to_string(p.lesion_id) +
                          " not representable (need 1..65535)");
    if (!seen.insert(p.lesion_id).second)
      throw DuplicateLesion("duplicate lesion id " +
                            std::to_string(p.lesion_id));
  }
}

}  // namespace detail

/// Merges per-lesion predictions into one multilabel map. A voxel gets
/// label L iff L's probability there reaches the threshold and is strictly
/// greatest among qualifying lesions; exact ties go to the smaller id.
/// The result does not depend on the order of `preds`.
inline Volume3<std::uint16_t> merge_multilabel(
    const std::vector<LesionUpdate>& preds, Shape3 full_shape,
    Spacing3 spacing, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ConfigError("merge threshold must be in (0,1)");
  detail::check_lesion_ids(preds);

  Volume3<std::uint16_t> out =
      Volume3<std::uint16_t>::filled(full_shape, spacing, 0);
  std::vector<float> best(out.data.size(), -1.0f);
  for (const auto& pred : preds) {
    const std::uint16_t label = static_cast<std::uint16_t>(pred.lesion_id);
    for (const auto& [idx, p] : pred.updates) {
      if (idx >= out.data.size())
        throw ShapeMismatch("update index outside full volume");
      if (static_cast<double>(p) < threshold) continue;
      if (p > best[idx] || (p == best[idx] && label < out.data[idx])) {
        best[idx] = p;
        out.data[idx] = label;
      }
    }
  }
  return out;
}

/// One independent binary volume per lesion; overlaps are not suppressed.
inline std::vector<std::pair<int, Volume3<std::uint8_t>>> export_separate(
    const std::vector<LesionUpdate>& preds, Shape3 full_shape,
    Spacing3 spacing, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0))
    throw ConfigError("merge threshold must be in (0,1)");
  detail::check_lesion_ids(preds);

  std::vector<std::pair<int, Volume3<std::uint8_t>>> out;
  out.reserve(preds.size());
  for (const auto& pred : preds) {
    Volume3<std::uint8_t> mask =
        Volume3<std::uint8_t>::filled(full_shape, spacing, 0);
    for (const auto& [idx, p] : pred.updates) {
      if (idx >= mask.data.size())
        throw ShapeMismatch("update index outside full volume");
      if (static_cast<double>(p) >= threshold) mask.data[idx] = 1;
    }
    out.emplace_back(pred.lesion_id, std::move(mask));
  }
  return out;
}

}  // namespace longitrack
