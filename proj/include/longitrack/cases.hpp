#pragma once

#include <algorithm>
#include <filesystem>
#include <string>
#include <vector>

#include "json.hpp"
#include "longitrack/errors.hpp"
#include "longitrack/svol.hpp"
#include "longitrack/volume.hpp"

namespace longitrack {

/// One lesion's identity plus its center in the baseline scan and the
/// propagated center in the follow-up scan, both in voxel coordinates.
struct LesionPrompt {
  int id = 0;  // > 0; doubles as the output label
  VoxelIndex center_baseline;
  VoxelIndex center_followup;

  bool operator==(const LesionPrompt&) const = default;
};

/// One patient: both scans in HU, multilabel ground truth for both
/// timepoints, and the lesion prompt list.
struct CaseRecord {
  std::string patient_id;
  Volume3<float> baseline;
  Volume3<float> followup;
  Volume3<std::uint16_t> gt_baseline;
  Volume3<std::uint16_t> gt_followup;
  std::vector<LesionPrompt> lesions;

  const LesionPrompt& lesion_by_id(int id) const {
    for (const auto& l : lesions)
      if (l.id == id) return l;
    throw UnknownLesion("lesion id " + std::to_string(id) + " not in case " +
                        patient_id);
  }
  bool has_lesion(int id) const {
    return std::any_of(lesions.begin(), lesions.end(),
                       [id](const LesionPrompt& l) { return l.id == id; });
  }
};

// lesions.json:
// {"patient_id": "...",
//  "lesions": [{"id": 1, "center_baseline": [z,y,x],
//               "center_followup": [z,y,x]}, ...]}

inline nlohmann::ordered_json lesions_to_json(
    const std::string& patient_id, const std::vector<LesionPrompt>& lesions) {
  nlohmann::ordered_json j;
  j["patient_id"] = patient_id;
  auto& arr = j["lesions"] = nlohmann::ordered_json::array();
  for (const auto& l : lesions) {
    nlohmann::ordered_json e;
    e["id"] = l.id;
    e["center_baseline"] = {l.center_baseline.z, l.center_baseline.y,
                            l.center_baseline.x};
    e["center_followup"] = {l.center_followup.z, l.center_followup.y,
                            l.center_followup.x};
    arr.push_back(std::move(e));
  }
  return j;
}

inline void write_lesions_json(const std::filesystem::path& path,
                               const std::string& patient_id,
                               const std::vector<LesionPrompt>& lesions) {
  const std::string text = lesions_to_json(patient_id, lesions).dump(2) + "\n";
  std::vector<std::uint8_t> bytes(text.begin(), text.end());
  write_file_bytes(path, bytes);
}

inline std::pair<std::string, std::vector<LesionPrompt>> read_lesions_json(
    const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(path.string() + ": " + e.what());
  }
  if (!j.is_object() || !j.contains("patient_id") || !j.contains("lesions"))
    throw FormatError(path.string() + ": expected patient_id and lesions");
  std::vector<LesionPrompt> lesions;
  for (const auto& e : j["lesions"]) {
    LesionPrompt l;
    if (!e.contains("id") || !e["id"].is_number_integer() ||
        e["id"].get<int>() <= 0)
      throw FormatError(path.string() + ": lesion id must be an integer > 0");
    l.id = e["id"].get<int>();
    auto read_center = [&](const char* key) -> VoxelIndex {
      if (!e.contains(key) || !e[key].is_array() || e[key].size() != 3)
        throw FormatError(path.string() + ": " + key +
                          " must be a [z,y,x] array");
      return {e[key][0].get<std::int64_t>(), e[key][1].get<std::int64_t>(),
              e[key][2].get<std::int64_t>()};
    };
    l.center_baseline = read_center("center_baseline");
    l.center_followup = read_center("center_followup");
    lesions.push_back(l);
  }
  return {j["patient_id"].get<std::string>(), std::move(lesions)};
}

// On-disk case layout: <root>/<patient_id>/{baseline,followup}.svol,
// gt_{baseline,followup}.svol (u16 multilabel), lesions.json.

inline CaseRecord load_case(const std::filesystem::path& case_dir) {
  CaseRecord rec;
  rec.baseline = read_svol_as<float>(case_dir / "baseline.svol");
  rec.followup = read_svol_as<float>(case_dir / "followup.svol");
  rec.gt_baseline = read_svol_as<std::uint16_t>(case_dir / "gt_baseline.svol");
  rec.gt_followup = read_svol_as<std::uint16_t>(case_dir / "gt_followup.svol");
  auto [pid, lesions] = read_lesions_json(case_dir / "lesions.json");
  rec.patient_id = pid;
  rec.lesions = std::move(lesions);
  return rec;
}

inline void save_case(const std::filesystem::path& root,
                      const CaseRecord& rec) {
  const auto dir = root / rec.patient_id;
  std::filesystem::create_directories(dir);
  write_svol(rec.baseline, dir / "baseline.svol");
  write_svol(rec.followup, dir / "followup.svol");
  write_svol(rec.gt_baseline, dir / "gt_baseline.svol");
  write_svol(rec.gt_followup, dir / "gt_followup.svol");
  write_lesions_json(dir / "lesions.json", rec.patient_id, rec.lesions);
}

/// Sorted list of patient directories (those containing lesions.json).
inline std::vector<std::string> list_patients(
    const std::filesystem::path& root) {
  std::vector<std::string> ids;
  if (!std::filesystem::is_directory(root))
    throw IoError("dataset root not found: " + root.string());
  for (const auto& entry : std::filesystem::directory_iterator(root)) {
    if (entry.is_directory() &&
        std::filesystem::exists(entry.path() / "lesions.json"))
      ids.push_back(entry.path().filename().string());
  }
  std::sort(ids.begin(), ids.end());
  return ids;
}

}  // namespace longitrack
