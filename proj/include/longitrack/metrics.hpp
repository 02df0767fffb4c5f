#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <map>
#include <numeric>
#include <string>
#include <unordered_map>
#include <vector>

#include "longitrack/errors.hpp"
#include "longitrack/rng.hpp"
#include "longitrack/volume.hpp"

namespace longitrack {

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) {
    std::iota(parent_.begin(), parent_.end(), std::size_t{0});
  }
  std::size_t find(std::size_t i) {
    while (parent_[i] != i) {
      parent_[i] = parent_[parent_[i]];
      i = parent_[i];
    }
    return i;
  }
  void unite(std::size_t a, std::size_t b) { parent_[find(a)] = find(b); }

 private:
  std::vector<std::size_t> parent_;
};

/// True iff some foreground voxel of `a` overlaps or 26-touches a
/// foreground voxel of `b`.
inline bool masks_touch_26(const Volume3<std::uint8_t>& a,
                           const Volume3<std::uint8_t>& b) {
  const Shape3& S = a.shape;
  for (std::int64_t z = 0; z < S[0]; ++z)
    for (std::int64_t y = 0; y < S[1]; ++y)
      for (std::int64_t x = 0; x < S[2]; ++x) {
        if (!a.at(z, y, x)) continue;
        const std::int64_t z1 = std::min(S[0] - 1, z + 1);
        const std::int64_t y1 = std::min(S[1] - 1, y + 1);
        const std::int64_t x1 = std::min(S[2] - 1, x + 1);
        for (std::int64_t nz = std::max<std::int64_t>(0, z - 1); nz <= z1; ++nz)
          for (std::int64_t ny = std::max<std::int64_t>(0, y - 1); ny <= y1;
               ++ny)
            for (std::int64_t nx = std::max<std::int64_t>(0, x - 1); nx <= x1;
                 ++nx)
              if (b.at(nz, ny, nx)) return true;
      }
  return false;
}

}  // namespace detail

/// A set of lesions whose ground-truth masks overlap or touch, together
/// with the union masks the challenge metrics are computed on.
struct LesionGroup {
  int group_id = 0;
  std::vector<int> members;
  Volume3<std::uint8_t> merged_gt;
  Volume3<std::uint8_t> merged_pred;
};

/// Partitions lesions into groups: two lesions share a group iff their GT
/// masks overlap or touch under 26-connectivity, closed transitively.
inline std::vector<LesionGroup> group_gt_lesions(
    const std::vector<std::pair<int, Volume3<std::uint8_t>>>& gt_masks) {
  if (gt_masks.empty()) return {};
  const Shape3& S = gt_masks.front().second.shape;
  const Spacing3& spacing = gt_masks.front().second.spacing;
  for (const auto& [id, m] : gt_masks)
    if (m.shape != S) throw ShapeMismatch("GT mask shape mismatch");

  detail::UnionFind uf(gt_masks.size());
  for (std::size_t i = 0; i < gt_masks.size(); ++i)
    for (std::size_t j = i + 1; j < gt_masks.size(); ++j)
      if (detail::masks_touch_26(gt_masks[i].second, gt_masks[j].second))
        uf.unite(i, j);

  std::map<std::size_t, std::vector<std::size_t>> by_root;
  for (std::size_t i = 0; i < gt_masks.size(); ++i)
    by_root[uf.find(i)].push_back(i);

  std::vector<LesionGroup> groups;
  for (auto& [root, indices] : by_root) {
    LesionGroup g;
    for (std::size_t i : indices) g.members.push_back(gt_masks[i].first);
    std::sort(g.members.begin(), g.members.end());
    g.merged_gt = Volume3<std::uint8_t>::filled(S, spacing, 0);
    g.merged_pred = Volume3<std::uint8_t>::filled(S, spacing, 0);
    for (std::size_t i : indices)
      for (std::size_t v = 0; v < g.merged_gt.data.size(); ++v)
        if (gt_masks[i].second.data[v]) g.merged_gt.data[v] = 1;
    groups.push_back(std::move(g));
  }
  std::sort(groups.begin(), groups.end(),
            [](const LesionGroup& a, const LesionGroup& b) {
              return a.members.front() < b.members.front();
            });
  for (std::size_t i = 0; i < groups.size(); ++i)
    groups[i].group_id = static_cast<int>(i + 1);
  return groups;
}

/// Fills each group's merged prediction with the union of its members'
/// predicted masks. Lesions without a prediction contribute nothing.
inline void attach_predictions(
    std::vector<LesionGroup>& groups,
    const std::vector<std::pair<int, Volume3<std::uint8_t>>>& pred_masks) {
  std::unordered_map<int, const Volume3<std::uint8_t>*> by_id;
  for (const auto& [id, m] : pred_masks) by_id[id] = &m;
  for (auto& g : groups) {
    for (int id : g.members) {
      auto it = by_id.find(id);
      if (it == by_id.end()) continue;
      if (it->second->shape != g.merged_pred.shape)
        throw ShapeMismatch("prediction mask shape mismatch");
      for (std::size_t v = 0; v < g.merged_pred.data.size(); ++v)
        if (it->second->data[v]) g.merged_pred.data[v] = 1;
    }
  }
}

/// Dice overlap 2|A∩B| / (|A|+|B|) in [0,1]; 1.0 when both masks are empty.
inline double dice(const Volume3<std::uint8_t>& a,
                   const Volume3<std::uint8_t>& b) {
  if (a.shape != b.shape) throw ShapeMismatch("dice: mask shapes differ");
  std::int64_t na = 0, nb = 0, inter = 0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    const bool va = a.data[i] != 0, vb = b.data[i] != 0;
    na += va;
    nb += vb;
    inter += va && vb;
  }
  if (na + nb == 0) return 1.0;
  return 2.0 * static_cast<double>(inter) / static_cast<double>(na + nb);
}

/// Physical volume of missed ground truth, |GT \ PRED| in mm^3.
inline double fnvol(const Volume3<std::uint8_t>& gt,
                    const Volume3<std::uint8_t>& pred,
                    const Spacing3& spacing) {
  if (gt.shape != pred.shape) throw ShapeMismatch("fnvol: mask shapes differ");
  std::int64_t n = 0;
  for (std::size_t i = 0; i < gt.data.size(); ++i)
    n += (gt.data[i] != 0) && (pred.data[i] == 0);
  return volume_mm3(n, spacing);
}

/// Physical volume of spurious prediction, |PRED \ GT| in mm^3.
inline double fpvol(const Volume3<std::uint8_t>& gt,
                    const Volume3<std::uint8_t>& pred,
                    const Spacing3& spacing) {
  return fnvol(pred, gt, spacing);
}

struct MetricsRow {
  std::string patient_id;  // or "MEAN"
  double dice = 0.0;       // in [0,100]
  double fnvol = 0.0;      // mm^3
  double fpvol = 0.0;      // mm^3
  std::int64_t n_groups = 0;
};

/// Per-patient metrics: Dice is averaged over the lesion groups (x100),
/// FN/FP volumes are summed over them.
inline MetricsRow evaluate_patient(const std::vector<LesionGroup>& groups,
                                   const Spacing3& spacing,
                                   const std::string& patient_id) {
  if (groups.empty())
    throw NoLesions("patient " + patient_id + " has no lesion groups");
  MetricsRow row;
  row.patient_id = patient_id;
  row.n_groups = static_cast<std::int64_t>(groups.size());
  double dice_sum = 0.0;
  for (const auto& g : groups) {
    dice_sum += dice(g.merged_gt, g.merged_pred);
    row.fnvol += fnvol(g.merged_gt, g.merged_pred, spacing);
    row.fpvol += fpvol(g.merged_gt, g.merged_pred, spacing);
  }
  row.dice = 100.0 * dice_sum / static_cast<double>(groups.size());
  return row;
}

/// Unweighted mean over patients; n_groups is the total group count.
inline MetricsRow evaluate_dataset(const std::vector<MetricsRow>& rows) {
  if (rows.empty()) throw NoPatients("no patient rows to aggregate");
  MetricsRow mean;
  mean.patient_id = "MEAN";
  for (const auto& r : rows) {
    mean.dice += r.dice;
    mean.fnvol += r.fnvol;
    mean.fpvol += r.fpvol;
    mean.n_groups += r.n_groups;
  }
  const double n = static_cast<double>(rows.size());
  mean.dice /= n;
  mean.fnvol /= n;
  mean.fpvol /= n;
  return mean;
}

/// Deterministic fold assignment: fold(id) = FNV-1a-64(id) mod k. Stable
/// under dataset growth because it never looks at the other ids.
inline std::map<std::string, int> fold_split(
    const std::vector<std::string>& patient_ids, int k) {
  if (k < 2) throw ConfigError("fold count must be >= 2");
  std::map<std::string, int> assignment;
  for (const auto& id : patient_ids) {
    if (!assignment.emplace(id, static_cast<int>(fnv1a64(id) %
                                                 static_cast<std::uint64_t>(k)))
             .second)
      throw DuplicateId("duplicate patient id " + id);
  }
  return assignment;
}

/// CSV with header patient_id,dice,fnvol_mm3,fpvol_mm3,n_groups, one row per
/// patient in the given order, then the MEAN row. Two decimal places.
inline std::string metrics_csv(const std::vector<MetricsRow>& rows,
                               const MetricsRow& mean) {
  std::string out = "patient_id,dice,fnvol_mm3,fpvol_mm3,n_groups\n";
  char buf[160];
  auto append = [&](const MetricsRow& r) {
    std::snprintf(buf, sizeof(buf), "%s,%.2f,%.2f,%.2f,%lld\n",
                  r.patient_id.c_str(), r.dice, r.fnvol, r.fpvol,
                  static_cast<long long>(r.n_groups));
    out += buf;
  };
  for (const auto& r : rows) append(r);
  append(mean);
  return out;
}

}  // namespace longitrack
