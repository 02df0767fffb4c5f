#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <set>

#include "helpers.hpp"
#include "longitrack/patch.hpp"
#include "longitrack/rng.hpp"

using namespace longitrack;

namespace {

// Two 80^3 scans with a linear HU ramp so every voxel is identifiable,
// plus one labeled lesion at matching centers.
CaseRecord ramp_case() {
  CaseRecord cs;
  cs.patient_id = "ramptest01";
  const Shape3 shape{80, 80, 80};
  const Spacing3 sp{1.0, 1.0, 1.0};
  cs.baseline = Volume3<float>::filled(shape, sp, 0.0f);
  cs.followup = Volume3<float>::filled(shape, sp, 0.0f);
  for (std::size_t i = 0; i < cs.baseline.data.size(); ++i) {
    const float v = static_cast<float>(i % 1999) - 999.0f;
    cs.baseline.data[i] = v;
    cs.followup.data[i] = -v;
  }
  cs.gt_baseline = Volume3<std::uint16_t>::filled(shape, sp, 0);
  cs.gt_followup = Volume3<std::uint16_t>::filled(shape, sp, 0);
  for (std::int64_t z = 38; z <= 42; ++z)
    for (std::int64_t y = 38; y <= 42; ++y)
      for (std::int64_t x = 38; x <= 42; ++x) {
        cs.gt_baseline.at(z, y, x) = 1;
        cs.gt_followup.at(z, y, x) = 1;
      }
  cs.lesions.push_back({1, {40, 40, 40}, {40, 40, 40}});
  return cs;
}

}  // namespace

TEST_CASE("training draws stay in the inner half with bounded jitter",
          "[patch]") {
  const Shape3 P{64, 64, 64};
  RngStream rng(7, "sample");
  std::int64_t off_min = 1000, off_max = -1000, jit_min = 1000, jit_max = -1000;
  for (int i = 0; i < 10000; ++i) {
    for (int a = 0; a < 3; ++a) {
      const std::int64_t o = rng.uniform_int(P[a] / 4, 3 * P[a] / 4 - 1);
      off_min = std::min(off_min, o);
      off_max = std::max(off_max, o);
    }
    for (int a = 0; a < 6; ++a) {
      const std::int64_t j = rng.uniform_int(-4, 4);
      jit_min = std::min(jit_min, j);
      jit_max = std::max(jit_max, j);
    }
  }
  CHECK(off_min == 16);
  CHECK(off_max == 47);
  CHECK(jit_min == -4);
  CHECK(jit_max == 4);
}

TEST_CASE("train_sample respects its documented bounds", "[patch]") {
  const CaseRecord cs = ramp_case();
  PatchSpec spec;
  NormalizationConfig norm;
  PointBlobConfig blob;
  RngStream rng(11, "train");
  for (int i = 0; i < 200; ++i) {
    const auto pp = train_sample(cs, cs.lesions[0], spec, norm, blob, rng);
    for (int a = 0; a < 3; ++a) {
      const std::int64_t c =
          a == 0 ? pp.center_in_patch.z
                 : (a == 1 ? pp.center_in_patch.y : pp.center_in_patch.x);
      CHECK(c >= 16);
      CHECK(c <= 47);
    }
    // center voxel of the follow-up window is within jitter of the prompt
    const VoxelIndex hit = pp.origin_curr + pp.center_in_patch;
    CHECK(std::abs(hit.z - 40) <= 4);
    CHECK(std::abs(hit.y - 40) <= 4);
    CHECK(std::abs(hit.x - 40) <= 4);
    CHECK(pp.curr_image.shape == spec.patch_size);
    CHECK(pp.prior_mask.shape == spec.patch_size);
  }
}

TEST_CASE("scan jitters are drawn independently", "[patch]") {
  const CaseRecord cs = ramp_case();
  PatchSpec spec;
  NormalizationConfig norm;
  PointBlobConfig blob;
  RngStream rng(3, "train");
  double sxy = 0, sx = 0, sy = 0, sxx = 0, syy = 0;
  const int n = 10000;
  for (int i = 0; i < n; ++i) {
    const auto pp = train_sample(cs, cs.lesions[0], spec, norm, blob, rng);
    const double jc = static_cast<double>(pp.origin_curr.z +
                                          pp.center_in_patch.z - 40);
    const double jp = static_cast<double>(pp.origin_prior.z +
                                          pp.center_in_patch.z - 40);
    sx += jc; sy += jp; sxy += jc * jp; sxx += jc * jc; syy += jp * jp;
  }
  const double cov = sxy / n - (sx / n) * (sy / n);
  const double var_c = sxx / n - (sx / n) * (sx / n);
  const double var_p = syy / n - (sy / n) * (sy / n);
  CHECK(std::abs(cov / std::sqrt(var_c * var_p)) < 0.05);
}

TEST_CASE("inference centers the prompt at floor(P/2)", "[patch]") {
  const CaseRecord cs = ramp_case();
  PatchSpec spec;
  NormalizationConfig norm;
  PointBlobConfig blob;
  const auto pp = infer_patch(cs, cs.lesions[0], spec, norm, blob);
  CHECK(pp.center_in_patch == (VoxelIndex{32, 32, 32}));
  CHECK(pp.origin_curr + pp.center_in_patch == cs.lesions[0].center_followup);
  CHECK(pp.origin_prior + pp.center_in_patch == cs.lesions[0].center_baseline);
  // window content matches the source volumes exactly
  CHECK(pp.curr_raw_hu.at(32, 32, 32) == cs.followup.at(40, 40, 40));
  CHECK(pp.prior_raw_hu.at(32, 32, 32) == cs.baseline.at(40, 40, 40));
  CHECK(pp.prior_mask.at(32, 32, 32) == 1.0f);
  CHECK(pp.prior_mask.at(0, 0, 0) == 0.0f);
  CHECK(pp.point_channel.at(32, 32, 32) == 1.0f);
  // deterministic: a second extraction is identical
  CHECK(pp == infer_patch(cs, cs.lesions[0], spec, norm, blob));
  // matches the shared core with explicit mid placement and zero jitter
  CHECK(pp == extract_pair(cs, cs.lesions[0], spec, norm, blob, {32, 32, 32},
                           {0, 0, 0}, {0, 0, 0}));
}

TEST_CASE("out-of-scan voxels pad with air before normalization", "[patch]") {
  CaseRecord cs = ramp_case();
  cs.lesions[0].center_followup = {2, 40, 40};  // near the z=0 face
  cs.lesions[0].center_baseline = {2, 40, 40};
  PatchSpec spec;
  NormalizationConfig norm;
  PointBlobConfig blob;
  const auto pp = infer_patch(cs, cs.lesions[0], spec, norm, blob);
  CHECK(pp.curr_image.shape == spec.patch_size);
  // origin_curr.z = 2 - 32 = -30: patch rows z < 30 fall outside the scan
  CHECK(pp.curr_raw_hu.at(0, 0, 0) == -1000.0f);
  CHECK(pp.curr_image.at(0, 0, 0) == normalize_hu(-1000.0, norm));
  CHECK(pp.prior_mask.at(0, 0, 0) == 0.0f);
  CHECK(pp.curr_raw_hu.at(30, 32, 32) == cs.followup.at(0, 40, 40));
}

TEST_CASE("unknown lesion id is rejected", "[patch]") {
  const CaseRecord cs = ramp_case();
  PatchSpec spec;
  NormalizationConfig norm;
  PointBlobConfig blob;
  LesionPrompt ghost{9, {40, 40, 40}, {40, 40, 40}};
  CHECK_THROWS_AS(infer_patch(cs, ghost, spec, norm, blob), UnknownLesion);
}

TEST_CASE("patch spec validation", "[patch]") {
  const CaseRecord cs = ramp_case();
  NormalizationConfig norm;
  PointBlobConfig blob;
  PatchSpec odd;
  odd.patch_size = {64, 63, 64};
  CHECK_THROWS_AS(infer_patch(cs, cs.lesions[0], odd, norm, blob), ConfigError);
  PatchSpec tiny;
  tiny.patch_size = {2, 64, 64};
  CHECK_THROWS_AS(infer_patch(cs, cs.lesions[0], tiny, norm, blob),
                  ConfigError);
}

TEST_CASE("paste_patch inverts crop inside the volume", "[patch]") {
  const CaseRecord cs = ramp_case();
  SECTION("interior window round-trips every voxel") {
    const VoxelIndex origin{10, 20, 5};
    const auto window = crop(cs.followup, origin, {16, 16, 16}, -1.0f);
    const auto updates = paste_patch(cs.followup.shape, origin, window);
    REQUIRE(updates.size() == 16u * 16u * 16u);
    for (const auto& [flat, v] : updates)
      CHECK(cs.followup.data[static_cast<std::size_t>(flat)] == v);
  }
  SECTION("negative origin drops exactly the out-of-volume rows") {
    const auto patch = Volume3<float>::filled({64, 64, 64}, {1, 1, 1}, 2.0f);
    const auto updates = paste_patch({80, 80, 80}, {-8, 0, 0}, patch);
    CHECK(updates.size() == 56u * 64u * 64u);
    std::set<std::uint64_t> seen;
    for (const auto& [flat, v] : updates) {
      CHECK(v == 2.0f);
      CHECK(flat < 80u * 80u * 80u);
      seen.insert(flat);
    }
    CHECK(seen.size() == updates.size());  // no duplicate targets
  }
  SECTION("fully out-of-volume patch contributes nothing") {
    const auto patch = Volume3<float>::filled({8, 8, 8}, {1, 1, 1}, 1.0f);
    CHECK(paste_patch({16, 16, 16}, {16, 0, 0}, patch).empty());
    CHECK(paste_patch({16, 16, 16}, {0, -8, 0}, patch).empty());
  }
}

TEST_CASE("validate_case flags follow-up centers near scan faces", "[patch]") {
  CaseRecord cs = ramp_case();
  CHECK(validate_case(cs, 0).empty());
  CHECK(validate_case(cs, 2).empty());

  cs.lesions.push_back({2, {40, 40, 40}, {0, 40, 40}});
  auto w = validate_case(cs, 0);
  REQUIRE(w.size() == 1);
  CHECK(w[0].lesion_id == 2);

  cs.lesions.push_back({3, {40, 40, 40}, {40, 78, 40}});  // one voxel off face
  CHECK(validate_case(cs, 0).size() == 1);
  CHECK(validate_case(cs, 1).size() == 2);
  CHECK(validate_case(cs, 2).size() == 2);
}
