#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "longitrack/cases.hpp"
#include "longitrack/errors.hpp"
#include "longitrack/rng.hpp"
#include "longitrack/volume.hpp"

namespace longitrack {

/// Synthetic longitudinal phantom: a soft-tissue cylinder in air with
/// ellipsoidal lesions that grow or shrink and drift between timepoints.
struct PhantomConfig {
  Shape3 shape{64, 64, 64};
  Spacing3 spacing{1.5, 1.5, 1.5};
  int n_lesions_min = 1;
  int n_lesions_max = 5;
  double radius_mm_min = 3.0;   // per-axis semi-axis range at baseline
  double radius_mm_max = 10.0;
  double hu_min = 50.0;         // lesion intensity above the body
  double hu_max = 150.0;
  double body_hu = 0.0;
  double air_hu = -1000.0;
  double noise_sigma = 20.0;
  double growth_min = 0.6;      // follow-up semi-axis scale
  double growth_max = 1.6;
  int drift_max_vox = 3;        // per-axis center shift between timepoints
  double body_radius_frac = 0.42;  // of the smaller in-plane extent, in mm
  double min_gap_spacings = 2.5;   // lesion separation, units of max spacing

  void require_valid() const {
    for (int a = 0; a < 3; ++a) {
      if (shape[a] < 8) throw ConfigError("phantom shape must be >= 8 per axis");
      if (!(spacing[a] > 0.0)) throw ConfigError("phantom spacing must be > 0");
    }
    if (n_lesions_min < 1 || n_lesions_max < n_lesions_min)
      throw ConfigError("lesion count range is invalid");
    if (!(radius_mm_min > 0.0) || radius_mm_max < radius_mm_min)
      throw ConfigError("lesion radius range is invalid");
    if (hu_max < hu_min) throw ConfigError("lesion HU range is invalid");
    if (!(growth_min > 0.0) || growth_max < growth_min)
      throw ConfigError("growth range is invalid");
    if (noise_sigma < 0.0) throw ConfigError("noise sigma must be >= 0");
    if (drift_max_vox < 0) throw ConfigError("drift must be >= 0");
    const std::int64_t min_extent = std::min({shape[0], shape[1], shape[2]});
    if (drift_max_vox * 8 > min_extent)
      throw ConfigError("drift too large for the volume");
    if (!(body_radius_frac > 0.0) || body_radius_frac > 0.5)
      throw ConfigError("body radius fraction must be in (0, 0.5]");
    if (min_gap_spacings < 0.0) throw ConfigError("lesion gap must be >= 0");
  }
};

namespace detail {

struct PhantomLesion {
  int id = 0;
  VoxelIndex center_base;
  VoxelIndex center_follow;
  double semi_base[3];    // mm, per axis (z, y, x)
  double semi_follow[3];  // mm
  double hu = 0.0;
};

inline double max_semi(const double semi[3]) {
  return std::max({semi[0], semi[1], semi[2]});
}

/// Conservative separation test on bounding spheres: centers at least
/// (r_i + r_j + gap) mm apart, so the voxel masks can never touch.
inline bool far_enough(const VoxelIndex& ci, double ri, const VoxelIndex& cj,
                       double rj, const Spacing3& sp, double gap_mm) {
  const double dz = static_cast<double>(ci.z - cj.z) * sp[0];
  const double dy = static_cast<double>(ci.y - cj.y) * sp[1];
  const double dx = static_cast<double>(ci.x - cj.x) * sp[2];
  const double need = ri + rj + gap_mm;
  return dz * dz + dy * dy + dx * dx >= need * need;
}

/// Ellipsoid fits inside the grid with one voxel to spare and inside the
/// body cylinder.
inline bool contained(const VoxelIndex& c, const double semi[3],
                      const PhantomConfig& cfg, double body_radius_mm) {
  const std::int64_t idx[3] = {c.z, c.y, c.x};
  for (int a = 0; a < 3; ++a) {
    const auto margin =
        static_cast<std::int64_t>(std::ceil(semi[a] / cfg.spacing[a])) + 1;
    if (idx[a] < margin || idx[a] > cfg.shape[a] - 1 - margin) return false;
  }
  const double cy = 0.5 * static_cast<double>(cfg.shape[1] - 1);
  const double cx = 0.5 * static_cast<double>(cfg.shape[2] - 1);
  const double dy = (static_cast<double>(c.y) - cy) * cfg.spacing[1];
  const double dx = (static_cast<double>(c.x) - cx) * cfg.spacing[2];
  const double radial = std::sqrt(dy * dy + dx * dx);
  return radial + std::max(semi[1], semi[2]) <= body_radius_mm;
}

/// Stamps the ellipsoid into the image and the label map.
inline void rasterize_lesion(Volume3<float>& img, Volume3<std::uint16_t>& gt,
                             const VoxelIndex& c, const double semi[3],
                             double hu, int label, const Spacing3& sp) {
  std::int64_t lo[3], hi[3];
  const std::int64_t idx[3] = {c.z, c.y, c.x};
  for (int a = 0; a < 3; ++a) {
    const auto r = static_cast<std::int64_t>(std::ceil(semi[a] / sp[a]));
    lo[a] = std::max<std::int64_t>(0, idx[a] - r);
    hi[a] = std::min(img.shape[a] - 1, idx[a] + r);
  }
  for (std::int64_t z = lo[0]; z <= hi[0]; ++z)
    for (std::int64_t y = lo[1]; y <= hi[1]; ++y)
      for (std::int64_t x = lo[2]; x <= hi[2]; ++x) {
        const double fz = static_cast<double>(z - c.z) * sp[0] / semi[0];
        const double fy = static_cast<double>(y - c.y) * sp[1] / semi[1];
        const double fx = static_cast<double>(x - c.x) * sp[2] / semi[2];
        if (fz * fz + fy * fy + fx * fx <= 1.0) {
          img.at(z, y, x) = static_cast<float>(hu);
          gt.at(z, y, x) = static_cast<std::uint16_t>(label);
        }
      }
}

inline std::string format_patient_id(std::uint64_t bits40) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%010llx",
                static_cast<unsigned long long>(bits40 & 0xFFFFFFFFFFull));
  return buf;
}

}  // namespace detail

/// Derives the patient id for a case seed: ten lowercase hex digits.
inline std::string phantom_patient_id(std::uint64_t case_seed) {
  return detail::format_patient_id(
      detail::splitmix64_mix(case_seed ^ fnv1a64("patient_id")));
}

/// Generates one longitudinal case. Same seed and config give a
/// bit-identical case.
///
/// Draw order, stream "phantom": lesion count; then per lesion per attempt
/// semi-axes z,y,x, center z,y,x, growth, drift z,y,x, HU. Rejected
/// attempts still consume their draws. Streams "noise0" and "noise1" add
/// voxel noise to baseline and follow-up in flat index order.
inline CaseRecord gen_case(std::uint64_t seed, const PhantomConfig& cfg) {
  cfg.require_valid();

  const double body_radius_mm =
      cfg.body_radius_frac *
      std::min(static_cast<double>(cfg.shape[1]) * cfg.spacing[1],
               static_cast<double>(cfg.shape[2]) * cfg.spacing[2]);
  const double gap_mm =
      cfg.min_gap_spacings *
      std::max({cfg.spacing[0], cfg.spacing[1], cfg.spacing[2]});

  RngStream rng(seed, "phantom");
  const int n_lesions = static_cast<int>(
      rng.uniform_int(cfg.n_lesions_min, cfg.n_lesions_max));

  // Congestion handling: after 250 failed attempts the radius draw is
  // scaled down and the attempt budget restarts.
  static constexpr double kShrink[] = {1.0, 0.85, 0.7, 0.55};
  static constexpr int kAttempts = 250;

  std::vector<detail::PhantomLesion> lesions;
  for (int li = 0; li < n_lesions; ++li) {
    bool placed = false;
    for (double shrink : kShrink) {
      for (int attempt = 0; attempt < kAttempts && !placed; ++attempt) {
        detail::PhantomLesion L;
        L.id = li + 1;
        for (double& s : L.semi_base)
          s = shrink * rng.uniform_real(cfg.radius_mm_min, cfg.radius_mm_max);
        L.center_base.z = rng.uniform_int(2, cfg.shape[0] - 3);
        L.center_base.y = rng.uniform_int(2, cfg.shape[1] - 3);
        L.center_base.x = rng.uniform_int(2, cfg.shape[2] - 3);
        const double growth = rng.uniform_real(cfg.growth_min, cfg.growth_max);
        for (int a = 0; a < 3; ++a) L.semi_follow[a] = growth * L.semi_base[a];
        L.center_follow = L.center_base;
        L.center_follow.z += rng.uniform_int(-cfg.drift_max_vox, cfg.drift_max_vox);
        L.center_follow.y += rng.uniform_int(-cfg.drift_max_vox, cfg.drift_max_vox);
        L.center_follow.x += rng.uniform_int(-cfg.drift_max_vox, cfg.drift_max_vox);
        L.hu = rng.uniform_real(cfg.hu_min, cfg.hu_max);

        if (!detail::contained(L.center_base, L.semi_base, cfg, body_radius_mm))
          continue;
        if (!detail::contained(L.center_follow, L.semi_follow, cfg,
                               body_radius_mm))
          continue;
        bool clear = true;
        for (const auto& other : lesions) {
          if (!detail::far_enough(L.center_base, detail::max_semi(L.semi_base),
                                  other.center_base,
                                  detail::max_semi(other.semi_base),
                                  cfg.spacing, gap_mm) ||
              !detail::far_enough(L.center_follow,
                                  detail::max_semi(L.semi_follow),
                                  other.center_follow,
                                  detail::max_semi(other.semi_follow),
                                  cfg.spacing, gap_mm)) {
            clear = false;
            break;
          }
        }
        if (!clear) continue;
        lesions.push_back(L);
        placed = true;
      }
      if (placed) break;
    }
    if (!placed)
      throw PlacementFailed("could not place lesion " +
                            std::to_string(li + 1) + " for seed " +
                            std::to_string(seed));
  }

  CaseRecord cs;
  cs.patient_id = phantom_patient_id(seed);
  cs.baseline = Volume3<float>::filled(cfg.shape, cfg.spacing,
                                       static_cast<float>(cfg.air_hu));
  cs.gt_baseline = Volume3<std::uint16_t>::filled(cfg.shape, cfg.spacing, 0);

  const double cy = 0.5 * static_cast<double>(cfg.shape[1] - 1);
  const double cx = 0.5 * static_cast<double>(cfg.shape[2] - 1);
  for (std::int64_t y = 0; y < cfg.shape[1]; ++y)
    for (std::int64_t x = 0; x < cfg.shape[2]; ++x) {
      const double dy = (static_cast<double>(y) - cy) * cfg.spacing[1];
      const double dx = (static_cast<double>(x) - cx) * cfg.spacing[2];
      if (dy * dy + dx * dx > body_radius_mm * body_radius_mm) continue;
      for (std::int64_t z = 0; z < cfg.shape[0]; ++z)
        cs.baseline.at(z, y, x) = static_cast<float>(cfg.body_hu);
    }
  cs.followup = cs.baseline;
  cs.gt_followup = cs.gt_baseline;

  for (const auto& L : lesions) {
    detail::rasterize_lesion(cs.baseline, cs.gt_baseline, L.center_base,
                             L.semi_base, L.hu, L.id, cfg.spacing);
    detail::rasterize_lesion(cs.followup, cs.gt_followup, L.center_follow,
                             L.semi_follow, L.hu, L.id, cfg.spacing);
    cs.lesions.push_back({L.id, L.center_base, L.center_follow});
  }

  if (cfg.noise_sigma > 0.0) {
    RngStream n0(seed, "noise0");
    for (float& v : cs.baseline.data)
      v += static_cast<float>(n0.normal(0.0, cfg.noise_sigma));
    RngStream n1(seed, "noise1");
    for (float& v : cs.followup.data)
      v += static_cast<float>(n1.normal(0.0, cfg.noise_sigma));
  }
  return cs;
}

/// Generates n_cases cases under root, one directory per patient id.
/// Case i uses seed splitmix64_at(master_seed, i); id collisions are
/// resolved by remixing, so every directory name is unique. Returns the
/// patient ids in generation order.
inline std::vector<std::string> gen_dataset(
    const std::filesystem::path& root, std::uint64_t master_seed, int n_cases,
    const PhantomConfig& cfg) {
  if (n_cases < 1) throw ConfigError("case count must be >= 1");
  cfg.require_valid();
  std::filesystem::create_directories(root);

  std::set<std::string> used;
  std::vector<std::string> ids;
  for (int i = 0; i < n_cases; ++i) {
    const std::uint64_t case_seed = splitmix64_at(master_seed, i);
    CaseRecord cs = gen_case(case_seed, cfg);
    std::uint64_t bits =
        detail::splitmix64_mix(case_seed ^ fnv1a64("patient_id"));
    while (!used.insert(cs.patient_id).second) {
      bits = detail::splitmix64_mix(bits);
      cs.patient_id = detail::format_patient_id(bits);
    }
    save_case(root, cs);
    ids.push_back(cs.patient_id);
  }
  return ids;
}

}  // namespace longitrack
