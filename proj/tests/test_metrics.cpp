#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"
#include "longitrack/metrics.hpp"

using namespace longitrack;

namespace {

using Mask = Volume3<std::uint8_t>;

Mask box(Shape3 shape, VoxelIndex lo, VoxelIndex hi) {
  auto m = Mask::filled(shape, {1, 1, 1}, 0);
  for (std::int64_t z = lo.z; z <= hi.z; ++z)
    for (std::int64_t y = lo.y; y <= hi.y; ++y)
      for (std::int64_t x = lo.x; x <= hi.x; ++x) m.at(z, y, x) = 1;
  return m;
}

// triple-loop counting, no shared code with the library
void count_reference(const Mask& a, const Mask& b, std::int64_t& na,
                     std::int64_t& nb, std::int64_t& inter) {
  na = nb = inter = 0;
  for (std::int64_t z = 0; z < a.shape[0]; ++z)
    for (std::int64_t y = 0; y < a.shape[1]; ++y)
      for (std::int64_t x = 0; x < a.shape[2]; ++x) {
        const bool va = a.at(z, y, x) != 0;
        const bool vb = b.at(z, y, x) != 0;
        na += va;
        nb += vb;
        inter += va && vb;
      }
}

}  // namespace

TEST_CASE("dice worked examples", "[metrics]") {
  const Shape3 S{6, 6, 6};
  // |A|=6, |B|=4, |A∩B|=3  ->  2*3/(6+4) = 0.6
  const auto a = box(S, {0, 0, 0}, {0, 0, 5});
  auto b = box(S, {0, 0, 3}, {0, 0, 5});
  b.at(3, 3, 3) = 1;
  CHECK(dice(a, b) == 0.6);
  CHECK(dice(b, a) == 0.6);
  CHECK(dice(a, a) == 1.0);
  const auto empty = Mask::filled(S, {1, 1, 1}, 0);
  CHECK(dice(empty, empty) == 1.0);
  CHECK(dice(a, empty) == 0.0);
}

TEST_CASE("dice and volumes agree with a counting reference", "[metrics]") {
  std::mt19937_64 eng(31);
  const Spacing3 sp{1.5, 0.8, 0.8};
  for (int rep = 0; rep < 300; ++rep) {
    const Shape3 S{testutil::draw_int(eng, 1, 12), testutil::draw_int(eng, 1, 12),
                   testutil::draw_int(eng, 1, 12)};
    const auto a = testutil::random_mask<std::uint8_t>(eng, S, 0.35, sp);
    const auto b = testutil::random_mask<std::uint8_t>(eng, S, 0.35, sp);
    std::int64_t na, nb, inter;
    count_reference(a, b, na, nb, inter);
    const double want =
        na + nb == 0 ? 1.0 : 2.0 * static_cast<double>(inter) / (na + nb);
    CHECK(std::abs(dice(a, b) - want) <= 1e-12);
    CHECK(fnvol(a, b, sp) == volume_mm3(na - inter, sp));
    CHECK(fpvol(a, b, sp) == volume_mm3(nb - inter, sp));
    CHECK(fnvol(a, b, sp) == fpvol(b, a, sp));
  }
}

TEST_CASE("volume worked example", "[metrics]") {
  const Shape3 S{4, 4, 4};
  const Spacing3 sp{2, 1, 1};
  const auto gt = box(S, {0, 0, 0}, {0, 1, 4 - 1});    // 8 voxels
  const auto pred = box(S, {0, 1, 0}, {0, 2, 4 - 1});  // 8 voxels, 4 shared
  CHECK(fnvol(gt, pred, sp) == 8.0);   // 4 missed voxels * 2 mm^3
  CHECK(fpvol(gt, pred, sp) == 8.0);
  CHECK(dice(gt, pred) == 0.5);
}

TEST_CASE("lesion grouping by overlap or touch", "[metrics]") {
  const Shape3 S{8, 8, 8};
  SECTION("far apart lesions form singleton groups") {
    std::vector<std::pair<int, Mask>> gt;
    gt.emplace_back(4, box(S, {0, 0, 0}, {1, 1, 1}));
    gt.emplace_back(2, box(S, {5, 5, 5}, {6, 6, 6}));
    const auto groups = group_gt_lesions(gt);
    REQUIRE(groups.size() == 2);
    CHECK(groups[0].members == std::vector<int>{2});
    CHECK(groups[1].members == std::vector<int>{4});
    CHECK(groups[0].group_id == 1);
    CHECK(groups[1].group_id == 2);
  }
  SECTION("transitive contact merges a chain into one group") {
    std::vector<std::pair<int, Mask>> gt;
    gt.emplace_back(1, box(S, {0, 0, 0}, {0, 0, 2}));
    gt.emplace_back(2, box(S, {1, 1, 3}, {1, 1, 4}));  // diagonal touch to 1
    gt.emplace_back(3, box(S, {1, 1, 4}, {2, 2, 6}));  // overlaps 2
    const auto groups = group_gt_lesions(gt);
    REQUIRE(groups.size() == 1);
    CHECK(groups[0].members == std::vector<int>{1, 2, 3});
    // merged mask is the union
    std::int64_t n = 0;
    for (auto v : groups[0].merged_gt.data) n += v;
    std::int64_t want = 3 + 2 + 2 * 2 * 3 - 1;  // one voxel shared by 2 and 3
    CHECK(n == want);
  }
  SECTION("a one voxel gap under 26-connectivity separates groups") {
    std::vector<std::pair<int, Mask>> gt;
    gt.emplace_back(1, box(S, {0, 0, 0}, {0, 0, 1}));
    gt.emplace_back(2, box(S, {0, 0, 3}, {0, 0, 4}));
    CHECK(group_gt_lesions(gt).size() == 2);
    std::vector<std::pair<int, Mask>> touching;
    touching.emplace_back(1, box(S, {0, 0, 0}, {0, 0, 1}));
    touching.emplace_back(2, box(S, {0, 0, 2}, {0, 0, 4}));
    CHECK(group_gt_lesions(touching).size() == 1);
  }
  SECTION("empty input yields no groups") {
    CHECK(group_gt_lesions({}).empty());
  }
}

TEST_CASE("attach_predictions unions member predictions", "[metrics]") {
  const Shape3 S{8, 8, 8};
  std::vector<std::pair<int, Mask>> gt;
  gt.emplace_back(1, box(S, {0, 0, 0}, {0, 0, 1}));
  gt.emplace_back(2, box(S, {0, 0, 2}, {0, 0, 3}));  // touches lesion 1
  auto groups = group_gt_lesions(gt);
  REQUIRE(groups.size() == 1);

  std::vector<std::pair<int, Mask>> preds;
  preds.emplace_back(1, box(S, {0, 0, 0}, {0, 0, 0}));
  preds.emplace_back(2, box(S, {0, 0, 3}, {0, 0, 4}));
  attach_predictions(groups, preds);
  std::int64_t n = 0;
  for (auto v : groups[0].merged_pred.data) n += v;
  CHECK(n == 3);
  CHECK(groups[0].merged_pred.at(0, 0, 0) == 1);
  CHECK(groups[0].merged_pred.at(0, 0, 4) == 1);

  // a missing prediction leaves the union untouched
  auto groups2 = group_gt_lesions(gt);
  std::vector<std::pair<int, Mask>> partial;
  partial.emplace_back(2, box(S, {0, 0, 2}, {0, 0, 3}));
  attach_predictions(groups2, partial);
  std::int64_t n2 = 0;
  for (auto v : groups2[0].merged_pred.data) n2 += v;
  CHECK(n2 == 2);
}

TEST_CASE("patient metrics from groups", "[metrics]") {
  const Shape3 S{8, 8, 8};
  const Spacing3 sp{1, 1, 1};
  std::vector<std::pair<int, Mask>> gt;
  gt.emplace_back(1, box(S, {0, 0, 0}, {0, 0, 1}));
  gt.emplace_back(2, box(S, {4, 4, 4}, {4, 4, 7}));
  auto groups = group_gt_lesions(gt);
  REQUIRE(groups.size() == 2);

  SECTION("perfect predictions give dice 100 and zero volumes") {
    attach_predictions(groups, gt);
    const auto row = evaluate_patient(groups, sp, "p0");
    CHECK(row.dice == 100.0);
    CHECK(row.fnvol == 0.0);
    CHECK(row.fpvol == 0.0);
    CHECK(row.n_groups == 2);
  }
  SECTION("group dice values average, volumes add") {
    std::vector<std::pair<int, Mask>> preds;
    preds.emplace_back(1, box(S, {0, 0, 0}, {0, 0, 1}));  // dice 1
    preds.emplace_back(2, box(S, {4, 4, 4}, {4, 4, 5}));  // dice 2*2/(4+2)
    attach_predictions(groups, preds);
    const auto row = evaluate_patient(groups, sp, "p0");
    CHECK(std::abs(row.dice - 100.0 * (1.0 + 2.0 / 3.0) / 2.0) < 1e-9);
    CHECK(row.fnvol == 2.0);
    CHECK(row.fpvol == 0.0);
  }
  SECTION("all-empty predictions give dice 0") {
    const auto row = evaluate_patient(groups, sp, "p0");
    CHECK(row.dice == 0.0);
    CHECK(row.fnvol == 6.0);
  }
  SECTION("no groups is an error") {
    CHECK_THROWS_AS(evaluate_patient({}, sp, "p0"), NoLesions);
  }
}

TEST_CASE("dataset aggregation", "[metrics]") {
  MetricsRow a{"p0", 60.0, 10.0, 4.0, 2};
  MetricsRow b{"p1", 70.0, 30.0, 0.0, 3};
  const auto mean = evaluate_dataset({a, b});
  CHECK(mean.patient_id == "MEAN");
  CHECK(mean.dice == 65.0);
  CHECK(mean.fnvol == 20.0);
  CHECK(mean.fpvol == 2.0);
  CHECK(mean.n_groups == 5);
  const auto flipped = evaluate_dataset({b, a});
  CHECK(flipped.dice == mean.dice);
  const auto single = evaluate_dataset({a});
  CHECK(single.dice == a.dice);
  CHECK(single.n_groups == a.n_groups);
  CHECK_THROWS_AS(evaluate_dataset({}), NoPatients);
}

TEST_CASE("fold assignment is a stable hash mod k", "[metrics]") {
  SECTION("frozen example") {
    const auto folds = fold_split({"013d407166"}, 5);
    CHECK(folds.at("013d407166") ==
          static_cast<int>(0x66cc0e0941af7801ULL % 5));
  }
  SECTION("matches an independent FNV-1a implementation") {
    std::mt19937_64 eng(8);
    std::vector<std::string> ids;
    for (int i = 0; i < 300; ++i)
      ids.push_back("case" + std::to_string(testutil::draw(eng)));
    const auto folds = fold_split(ids, 5);
    std::vector<int> sizes(5, 0);
    for (const auto& id : ids) {
      std::uint64_t h = 14695981039346656037ULL;
      for (char c : id) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ULL;
      }
      CHECK(folds.at(id) == static_cast<int>(h % 5));
      ++sizes[folds.at(id)];
    }
    for (int s : sizes) CHECK(s > 0);
  }
  SECTION("assignment ignores the rest of the roster") {
    const auto small = fold_split({"aa", "bb"}, 3);
    const auto big = fold_split({"aa", "bb", "cc", "dd", "ee"}, 3);
    CHECK(small.at("aa") == big.at("aa"));
    CHECK(small.at("bb") == big.at("bb"));
  }
  SECTION("bad input") {
    CHECK_THROWS_AS(fold_split({"a", "a"}, 2), DuplicateId);
    CHECK_THROWS_AS(fold_split({"a"}, 1), ConfigError);
  }
}

TEST_CASE("metrics CSV layout", "[metrics]") {
  std::vector<MetricsRow> rows;
  rows.push_back({"p0", 87.654, 1.005, 0.0, 2});
  rows.push_back({"p1", 100.0, 0.0, 12.3456, 1});
  const auto mean = evaluate_dataset(rows);
  const auto csv = metrics_csv(rows, mean);

  std::vector<std::string> lines;
  std::size_t pos = 0;
  while (pos < csv.size()) {
    const auto nl = csv.find('\n', pos);
    REQUIRE(nl != std::string::npos);  // file ends with a newline
    lines.push_back(csv.substr(pos, nl - pos));
    pos = nl + 1;
  }
  REQUIRE(lines.size() == 4);
  CHECK(lines[0] == "patient_id,dice,fnvol_mm3,fpvol_mm3,n_groups");
  CHECK(lines[1] == "p0,87.65,1.00,0.00,2");
  CHECK(lines[2] == "p1,100.00,0.00,12.35,1");
  CHECK(lines[3] == "MEAN,93.83,0.50,6.17,3");
}
