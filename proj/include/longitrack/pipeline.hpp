#pragma once

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <map>
#include <mutex>
#include <optional>
#include <set>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "json.hpp"

#include "longitrack/cases.hpp"
#include "longitrack/errors.hpp"
#include "longitrack/fuse.hpp"
#include "longitrack/log.hpp"
#include "longitrack/metrics.hpp"
#include "longitrack/patch.hpp"
#include "longitrack/phantom.hpp"
#include "longitrack/prompt.hpp"
#include "longitrack/rng.hpp"
#include "longitrack/segment.hpp"
#include "longitrack/svol.hpp"
#include "longitrack/volume.hpp"

namespace longitrack {

struct BackendConfig {
  std::string name = "region_grow";
  RegionGrowConfig region_grow;
};

/// Everything a run needs. Serialized as one JSON file; the resolved copy
/// is written next to each command's outputs.
struct RunConfig {
  std::string dataset_root = "data";
  std::string output_root = "out";
  std::uint64_t seed = 42;
  int n_cases = 10;
  int k_folds = 5;
  double threshold = 0.5;
  BackendConfig backend;
  std::vector<int> ensemble_members;  // fold ids; empty = single model
  PatchSpec patch;
  NormalizationConfig normalization;
  PointBlobConfig point_blob;
  InputMode input_mode;
  PhantomConfig phantom;

  void require_valid() const {
    if (dataset_root.empty() || output_root.empty())
      throw ConfigError("dataset_root and output_root must be nonempty");
    if (n_cases < 1) throw ConfigError("case count must be >= 1");
    if (k_folds < 2) throw ConfigError("fold count must be >= 2");
    if (!(threshold > 0.0 && threshold < 1.0))
      throw ConfigError("threshold must be in (0,1)");
    if (!known_backend(backend.name))
      throw ConfigError("unknown backend \"" + backend.name + "\"");
    longitrack::require_valid(backend.region_grow);
    for (int m : ensemble_members)
      if (m < 0 || m >= k_folds)
        throw ConfigError("ensemble member " + std::to_string(m) +
                          " outside fold range [0," +
                          std::to_string(k_folds) + ")");
    longitrack::require_valid(patch);
    longitrack::require_valid(normalization);
    longitrack::require_valid(point_blob);
    longitrack::require_valid(input_mode);
    phantom.require_valid();
  }
};

/// Per-invocation knobs that never change the produced bytes; kept out of
/// the serialized config on purpose.
struct RuntimeOptions {
  int jobs = 1;
  bool exclude_patient_on_edge = false;
  std::string fold_selector = "all";  // "all" or an integer in [0, k_folds)
};

namespace detail {

inline void check_keys(const nlohmann::json& j,
                       std::initializer_list<const char*> allowed,
                       const std::string& scope) {
  if (!j.is_object())
    throw ConfigError("config section \"" + scope + "\" must be an object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known)
      throw ConfigError("unknown config key \"" + scope + it.key() + "\"");
  }
}

template <class T>
void read_key(const nlohmann::json& j, const char* key, T& out) {
  if (auto it = j.find(key); it != j.end()) out = it->get<T>();
}

inline void read_shape(const nlohmann::json& j, const char* key, Shape3& out) {
  if (auto it = j.find(key); it != j.end()) {
    const auto v = it->get<std::vector<std::int64_t>>();
    if (v.size() != 3)
      throw ConfigError(std::string(key) + " must have 3 entries");
    out = {v[0], v[1], v[2]};
  }
}

inline void read_spacing(const nlohmann::json& j, const char* key,
                         Spacing3& out) {
  if (auto it = j.find(key); it != j.end()) {
    const auto v = it->get<std::vector<double>>();
    if (v.size() != 3)
      throw ConfigError(std::string(key) + " must have 3 entries");
    out = {v[0], v[1], v[2]};
  }
}

inline std::string blob_mode_name(BlobMode m) {
  return m == BlobMode::unit_intensity ? "unit_intensity" : "unit_volume";
}

inline BlobMode blob_mode_from(const std::string& s) {
  if (s == "unit_intensity") return BlobMode::unit_intensity;
  if (s == "unit_volume") return BlobMode::unit_volume;
  throw ConfigError("point_blob.mode must be unit_intensity or unit_volume");
}

}  // namespace detail

inline nlohmann::ordered_json run_config_to_json(const RunConfig& c) {
  nlohmann::ordered_json j;
  j["dataset_root"] = c.dataset_root;
  j["output_root"] = c.output_root;
  j["seed"] = c.seed;
  j["n_cases"] = c.n_cases;
  j["k_folds"] = c.k_folds;
  j["threshold"] = c.threshold;
  j["backend"] = {{"name", c.backend.name},
                  {"tau_hu", c.backend.region_grow.tau_hu},
                  {"r_max_vox", c.backend.region_grow.r_max_vox},
                  {"connectivity", c.backend.region_grow.connectivity},
                  {"mask_dilation_vox", c.backend.region_grow.mask_dilation_vox},
                  {"mask_tau_relax", c.backend.region_grow.mask_tau_relax}};
  j["ensemble_members"] = c.ensemble_members;
  j["patch"] = {{"shape", c.patch.patch_size},
                {"pad_value_hu", c.patch.pad_value_hu},
                {"train_shift_max", c.patch.train_shift_max}};
  j["normalization"] = {{"clip_lo", c.normalization.clip_lo},
                        {"clip_hi", c.normalization.clip_hi},
                        {"mu", c.normalization.mu},
                        {"sigma_hu", c.normalization.sigma_hu}};
  j["point_blob"] = {{"sigma_vox", c.point_blob.sigma_vox},
                     {"truncation_sigma", c.point_blob.truncation_sigma},
                     {"mode", detail::blob_mode_name(c.point_blob.mode)}};
  j["input_mode"] = {{"use_prior_image", c.input_mode.use_prior_image},
                     {"use_prior_mask", c.input_mode.use_prior_mask},
                     {"use_point", c.input_mode.use_point}};
  j["phantom"] = {{"shape", c.phantom.shape},
                  {"spacing", c.phantom.spacing},
                  {"n_lesions_min", c.phantom.n_lesions_min},
                  {"n_lesions_max", c.phantom.n_lesions_max},
                  {"radius_mm_min", c.phantom.radius_mm_min},
                  {"radius_mm_max", c.phantom.radius_mm_max},
                  {"hu_min", c.phantom.hu_min},
                  {"hu_max", c.phantom.hu_max},
                  {"body_hu", c.phantom.body_hu},
                  {"air_hu", c.phantom.air_hu},
                  {"noise_sigma", c.phantom.noise_sigma},
                  {"growth_min", c.phantom.growth_min},
                  {"growth_max", c.phantom.growth_max},
                  {"drift_max_vox", c.phantom.drift_max_vox},
                  {"body_radius_frac", c.phantom.body_radius_frac},
                  {"min_gap_spacings", c.phantom.min_gap_spacings}};
  return j;
}

/// Strict parse: unknown keys anywhere are an error, missing keys keep
/// their defaults.
inline RunConfig run_config_from_json(const nlohmann::json& j) {
  RunConfig c;
  try {
    detail::check_keys(j,
                       {"dataset_root", "output_root", "seed", "n_cases",
                        "k_folds", "threshold", "backend", "ensemble_members",
                        "patch", "normalization", "point_blob", "input_mode",
                        "phantom"},
                       "");
    detail::read_key(j, "dataset_root", c.dataset_root);
    detail::read_key(j, "output_root", c.output_root);
    detail::read_key(j, "seed", c.seed);
    detail::read_key(j, "n_cases", c.n_cases);
    detail::read_key(j, "k_folds", c.k_folds);
    detail::read_key(j, "threshold", c.threshold);
    if (auto it = j.find("backend"); it != j.end()) {
      detail::check_keys(*it,
                         {"name", "tau_hu", "r_max_vox", "connectivity",
                          "mask_dilation_vox", "mask_tau_relax"},
                         "backend.");
      detail::read_key(*it, "name", c.backend.name);
      detail::read_key(*it, "tau_hu", c.backend.region_grow.tau_hu);
      detail::read_key(*it, "r_max_vox", c.backend.region_grow.r_max_vox);
      detail::read_key(*it, "connectivity", c.backend.region_grow.connectivity);
      detail::read_key(*it, "mask_dilation_vox",
                       c.backend.region_grow.mask_dilation_vox);
      detail::read_key(*it, "mask_tau_relax",
                       c.backend.region_grow.mask_tau_relax);
    }
    detail::read_key(j, "ensemble_members", c.ensemble_members);
    if (auto it = j.find("patch"); it != j.end()) {
      detail::check_keys(*it, {"shape", "pad_value_hu", "train_shift_max"},
                         "patch.");
      detail::read_shape(*it, "shape", c.patch.patch_size);
      detail::read_key(*it, "pad_value_hu", c.patch.pad_value_hu);
      detail::read_key(*it, "train_shift_max", c.patch.train_shift_max);
    }
    if (auto it = j.find("normalization"); it != j.end()) {
      detail::check_keys(*it, {"clip_lo", "clip_hi", "mu", "sigma_hu"},
                         "normalization.");
      detail::read_key(*it, "clip_lo", c.normalization.clip_lo);
      detail::read_key(*it, "clip_hi", c.normalization.clip_hi);
      detail::read_key(*it, "mu", c.normalization.mu);
      detail::read_key(*it, "sigma_hu", c.normalization.sigma_hu);
    }
    if (auto it = j.find("point_blob"); it != j.end()) {
      detail::check_keys(*it, {"sigma_vox", "truncation_sigma", "mode"},
                         "point_blob.");
      detail::read_key(*it, "sigma_vox", c.point_blob.sigma_vox);
      detail::read_key(*it, "truncation_sigma", c.point_blob.truncation_sigma);
      if (auto m = it->find("mode"); m != it->end())
        c.point_blob.mode = detail::blob_mode_from(m->get<std::string>());
    }
    if (auto it = j.find("input_mode"); it != j.end()) {
      detail::check_keys(
          *it, {"use_prior_image", "use_prior_mask", "use_point"},
          "input_mode.");
      detail::read_key(*it, "use_prior_image", c.input_mode.use_prior_image);
      detail::read_key(*it, "use_prior_mask", c.input_mode.use_prior_mask);
      detail::read_key(*it, "use_point", c.input_mode.use_point);
    }
    if (auto it = j.find("phantom"); it != j.end()) {
      detail::check_keys(*it,
                         {"shape", "spacing", "n_lesions_min", "n_lesions_max",
                          "radius_mm_min", "radius_mm_max", "hu_min", "hu_max",
                          "body_hu", "air_hu", "noise_sigma", "growth_min",
                          "growth_max", "drift_max_vox", "body_radius_frac",
                          "min_gap_spacings"},
                         "phantom.");
      detail::read_shape(*it, "shape", c.phantom.shape);
      detail::read_spacing(*it, "spacing", c.phantom.spacing);
      detail::read_key(*it, "n_lesions_min", c.phantom.n_lesions_min);
      detail::read_key(*it, "n_lesions_max", c.phantom.n_lesions_max);
      detail::read_key(*it, "radius_mm_min", c.phantom.radius_mm_min);
      detail::read_key(*it, "radius_mm_max", c.phantom.radius_mm_max);
      detail::read_key(*it, "hu_min", c.phantom.hu_min);
      detail::read_key(*it, "hu_max", c.phantom.hu_max);
      detail::read_key(*it, "body_hu", c.phantom.body_hu);
      detail::read_key(*it, "air_hu", c.phantom.air_hu);
      detail::read_key(*it, "noise_sigma", c.phantom.noise_sigma);
      detail::read_key(*it, "growth_min", c.phantom.growth_min);
      detail::read_key(*it, "growth_max", c.phantom.growth_max);
      detail::read_key(*it, "drift_max_vox", c.phantom.drift_max_vox);
      detail::read_key(*it, "body_radius_frac", c.phantom.body_radius_frac);
      detail::read_key(*it, "min_gap_spacings", c.phantom.min_gap_spacings);
    }
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  return c;
}

inline RunConfig load_run_config(const std::filesystem::path& path) {
  const auto bytes = read_file_bytes(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(bytes.begin(), bytes.end());
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config " + path.string() + ": " + e.what());
  }
  return run_config_from_json(j);
}

namespace detail {

inline void write_text_file(const std::filesystem::path& path,
                            const std::string& text) {
  write_file_bytes(path, std::vector<std::uint8_t>(text.begin(), text.end()));
}

inline void write_config_echo(const std::filesystem::path& dir,
                              const std::string& command,
                              const RunConfig& cfg) {
  write_text_file(dir / (command + "_config.json"),
                  run_config_to_json(cfg).dump(2) + "\n");
}

/// "all" -> nullopt; otherwise an integer in [0, k).
inline std::optional<int> parse_fold_selector(const std::string& s, int k) {
  if (s == "all") return std::nullopt;
  int fold = -1;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), fold);
  if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
    throw ConfigError("fold selector must be \"all\" or an integer, got \"" +
                      s + "\"");
  if (fold < 0 || fold >= k)
    throw ConfigError("fold " + std::to_string(fold) + " outside [0," +
                      std::to_string(k) + ")");
  return fold;
}

inline std::vector<std::string> select_patients(const RunConfig& cfg,
                                                const std::string& selector) {
  std::vector<std::string> ids = list_patients(cfg.dataset_root);
  const auto fold = parse_fold_selector(selector, cfg.k_folds);
  if (!fold) return ids;
  const auto assignment = fold_split(ids, cfg.k_folds);
  std::vector<std::string> keep;
  for (const auto& id : ids)
    if (assignment.at(id) == *fold) keep.push_back(id);
  return keep;
}

struct FileRecord {
  std::string path;  // relative to the output root
  std::uint64_t bytes = 0;
  std::uint64_t hash = 0;
};

inline FileRecord write_output(const std::filesystem::path& root,
                               const std::string& name,
                               const std::vector<std::uint8_t>& bytes) {
  write_file_bytes(root / name, bytes);
  return {name, bytes.size(), fnv1a64_bytes(bytes.data(), bytes.size())};
}

inline std::string hash_hex(std::uint64_t h) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(h));
  return buf;
}

inline void write_manifest(const std::filesystem::path& root,
                           std::vector<FileRecord> files) {
  std::sort(files.begin(), files.end(),
            [](const FileRecord& a, const FileRecord& b) {
              return a.path < b.path;
            });
  nlohmann::ordered_json j;
  auto& arr = j["files"] = nlohmann::ordered_json::array();
  for (const auto& f : files)
    arr.push_back({{"path", f.path},
                   {"bytes", f.bytes},
                   {"fnv1a64", hash_hex(f.hash)}});
  write_text_file(root / "manifest.json", j.dump(2) + "\n");
}

/// Runs fn(i) for i in [0,n) on up to `jobs` threads; the first exception
/// wins and is rethrown after all workers stop.
template <class Fn>
void parallel_for(std::size_t n, int jobs, Fn&& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::mutex err_mutex;
  std::exception_ptr first_error;
  auto worker = [&] {
    while (!failed.load(std::memory_order_relaxed)) {
      const std::size_t i = next.fetch_add(1, std::memory_order_relaxed);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) first_error = std::current_exception();
        failed.store(true, std::memory_order_relaxed);
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const int n_threads = static_cast<int>(
      std::min<std::size_t>(static_cast<std::size_t>(jobs), n));
  pool.reserve(static_cast<std::size_t>(n_threads));
  for (int t = 0; t < n_threads; ++t) pool.emplace_back(worker);
  for (auto& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

}  // namespace detail

struct GenResult {
  std::vector<std::string> patient_ids;
};

/// gen: synthesize the dataset under dataset_root and echo the config.
inline GenResult run_gen(const RunConfig& cfg) {
  cfg.require_valid();
  GenResult res;
  res.patient_ids =
      gen_dataset(cfg.dataset_root, cfg.seed, cfg.n_cases, cfg.phantom);
  detail::write_config_echo(cfg.dataset_root, "gen", cfg);
  log_info("generated " + std::to_string(res.patient_ids.size()) +
           " cases under " + cfg.dataset_root);
  return res;
}

struct SplitResult {
  std::map<std::string, int> assignment;
};

/// split: deterministic fold assignment for the dataset, written as
/// folds.json under output_root.
inline SplitResult run_split(const RunConfig& cfg) {
  cfg.require_valid();
  SplitResult res;
  res.assignment = fold_split(list_patients(cfg.dataset_root), cfg.k_folds);
  std::filesystem::create_directories(cfg.output_root);
  nlohmann::ordered_json j;
  j["k"] = cfg.k_folds;
  auto& a = j["assignment"] = nlohmann::ordered_json::object();
  for (const auto& [id, fold] : res.assignment) a[id] = fold;
  detail::write_text_file(std::filesystem::path(cfg.output_root) / "folds.json",
                          j.dump(2) + "\n");
  detail::write_config_echo(cfg.output_root, "split", cfg);
  log_info("assigned " + std::to_string(res.assignment.size()) +
           " patients to " + std::to_string(cfg.k_folds) + " folds");
  return res;
}

struct InferResult {
  std::vector<std::string> processed;
  std::vector<std::string> skipped_patients;
  std::map<std::string, std::vector<int>> skipped_lesions;
};

/// infer: per lesion, cut the aligned patch pair, run the backend (once
/// per ensemble member), average, paste back, then fuse per patient into
/// <pid>_merged.svol plus per-lesion binary masks. Writes skipped.json,
/// the config echo, and a manifest hashing every produced file.
inline InferResult run_infer(const RunConfig& cfg, const RuntimeOptions& rt) {
  cfg.require_valid();
  const std::vector<std::string> ids =
      detail::select_patients(cfg, rt.fold_selector);
  const std::filesystem::path out_root(cfg.output_root);
  std::filesystem::create_directories(out_root);

  struct PerPatient {
    bool skipped = false;
    std::vector<int> skipped_lesions;
    std::vector<detail::FileRecord> files;
  };
  std::vector<PerPatient> per(ids.size());

  detail::parallel_for(
      ids.size(), rt.jobs, [&](std::size_t i) {
        const std::string& pid = ids[i];
        PerPatient& r = per[i];
        const CaseRecord cs =
            load_case(std::filesystem::path(cfg.dataset_root) / pid);
        const auto warnings = validate_case(cs, 0);
        std::set<int> edge;
        for (const auto& w : warnings) {
          log_info(w.message);
          edge.insert(w.lesion_id);
        }
        if (!edge.empty() && rt.exclude_patient_on_edge) {
          log_info("skipping patient " + pid + ": lesion center on scan edge");
          r.skipped = true;
          return;
        }
        const auto backend =
            make_backend(cfg.backend.name, cfg.backend.region_grow, cs);
        const std::size_t n_members =
            cfg.ensemble_members.empty() ? 1 : cfg.ensemble_members.size();

        std::vector<LesionUpdate> preds;
        for (const auto& lesion : cs.lesions) {
          if (edge.count(lesion.id)) {
            log_info("skipping lesion " + std::to_string(lesion.id) +
                     " of patient " + pid + ": center on scan edge");
            r.skipped_lesions.push_back(lesion.id);
            continue;
          }
          const PatchPair pair = infer_patch(cs, lesion, cfg.patch,
                                             cfg.normalization, cfg.point_blob);
          std::vector<Volume3<float>> maps;
          maps.reserve(n_members);
          for (std::size_t m = 0; m < n_members; ++m)
            maps.push_back(backend->segment(pair, cfg.input_mode));
          const Volume3<float> prob = ensemble_mean(maps);
          preds.push_back({lesion.id, paste_patch(cs.followup.shape,
                                                  pair.origin_curr, prob)});
        }
        const auto merged = merge_multilabel(preds, cs.followup.shape,
                                             cs.followup.spacing, cfg.threshold);
        r.files.push_back(detail::write_output(out_root, pid + "_merged.svol",
                                               write_svol_bytes(merged)));
        for (const auto& [id, mask] :
             export_separate(preds, cs.followup.shape, cs.followup.spacing,
                             cfg.threshold))
          r.files.push_back(detail::write_output(
              out_root, pid + "_lesion" + std::to_string(id) + ".svol",
              write_svol_bytes(mask)));
      });

  InferResult res;
  std::vector<detail::FileRecord> files;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (per[i].skipped) {
      res.skipped_patients.push_back(ids[i]);
      continue;
    }
    res.processed.push_back(ids[i]);
    if (!per[i].skipped_lesions.empty())
      res.skipped_lesions[ids[i]] = per[i].skipped_lesions;
    for (auto& f : per[i].files) files.push_back(std::move(f));
  }

  nlohmann::ordered_json sk;
  sk["patients"] = res.skipped_patients;
  auto& sl = sk["lesions"] = nlohmann::ordered_json::object();
  for (const auto& [pid, lesions] : res.skipped_lesions) sl[pid] = lesions;
  const std::string sk_text = sk.dump(2) + "\n";
  files.push_back(detail::write_output(
      out_root, "skipped.json",
      std::vector<std::uint8_t>(sk_text.begin(), sk_text.end())));

  const std::string cfg_text = run_config_to_json(cfg).dump(2) + "\n";
  files.push_back(detail::write_output(
      out_root, "infer_config.json",
      std::vector<std::uint8_t>(cfg_text.begin(), cfg_text.end())));

  detail::write_manifest(out_root, std::move(files));
  log_info("inferred " + std::to_string(res.processed.size()) + " patients");
  return res;
}

struct EvalResult {
  std::vector<MetricsRow> rows;
  MetricsRow mean;
  std::vector<std::string> failed;   // patients with missing predictions
  std::vector<std::string> skipped;  // per skipped.json or zero GT lesions
  std::string csv;
};

/// eval: challenge metrics against the merged multilabel predictions.
/// Patients listed in skipped.json or without lesions are excluded;
/// a missing prediction file marks the patient failed.
inline EvalResult run_eval(const RunConfig& cfg, const RuntimeOptions& rt) {
  cfg.require_valid();
  const std::vector<std::string> ids =
      detail::select_patients(cfg, rt.fold_selector);
  const std::filesystem::path out_root(cfg.output_root);

  std::set<std::string> skipped_by_infer;
  const auto skip_path = out_root / "skipped.json";
  if (std::filesystem::exists(skip_path)) {
    const auto bytes = read_file_bytes(skip_path);
    try {
      const auto j = nlohmann::json::parse(bytes.begin(), bytes.end());
      for (const auto& pid : j.at("patients"))
        skipped_by_infer.insert(pid.get<std::string>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError("skipped.json: " + std::string(e.what()));
    }
  }

  EvalResult res;
  for (const auto& pid : ids) {
    if (skipped_by_infer.count(pid)) {
      log_info("patient " + pid + " was skipped at inference; not evaluated");
      res.skipped.push_back(pid);
      continue;
    }
    const CaseRecord cs =
        load_case(std::filesystem::path(cfg.dataset_root) / pid);
    if (cs.lesions.empty()) {
      log_info("patient " + pid + " has no lesions; excluded from the mean");
      res.skipped.push_back(pid);
      continue;
    }
    const auto pred_path = out_root / (pid + "_merged.svol");
    if (!std::filesystem::exists(pred_path)) {
      log_error("missing prediction " + pred_path.string());
      res.failed.push_back(pid);
      continue;
    }
    const auto merged = read_svol_as<std::uint16_t>(pred_path);
    if (merged.shape != cs.gt_followup.shape)
      throw ShapeMismatch("prediction shape differs from GT for " + pid);

    std::vector<std::pair<int, Volume3<std::uint8_t>>> gt_masks, pred_masks;
    for (const auto& lesion : cs.lesions) {
      const auto label = static_cast<std::uint16_t>(lesion.id);
      auto gt = Volume3<std::uint8_t>::filled(cs.gt_followup.shape,
                                              cs.gt_followup.spacing, 0);
      auto pr = gt;
      for (std::size_t v = 0; v < gt.data.size(); ++v) {
        if (cs.gt_followup.data[v] == label) gt.data[v] = 1;
        if (merged.data[v] == label) pr.data[v] = 1;
      }
      gt_masks.emplace_back(lesion.id, std::move(gt));
      pred_masks.emplace_back(lesion.id, std::move(pr));
    }
    auto groups = group_gt_lesions(gt_masks);
    attach_predictions(groups, pred_masks);
    res.rows.push_back(
        evaluate_patient(groups, cs.gt_followup.spacing, pid));
  }

  res.mean = evaluate_dataset(res.rows);
  res.csv = metrics_csv(res.rows, res.mean);
  std::filesystem::create_directories(out_root);
  detail::write_text_file(out_root / "metrics.csv", res.csv);
  detail::write_config_echo(cfg.output_root, "eval", cfg);
  log_info("evaluated " + std::to_string(res.rows.size()) + " patients");
  return res;
}

struct ValidateResult {
  int n_patients = 0;
  std::vector<CaseWarning> warnings;
};

/// validate: load every case and report edge-center warnings.
inline ValidateResult run_validate(const RunConfig& cfg) {
  cfg.require_valid();
  ValidateResult res;
  for (const auto& pid : list_patients(cfg.dataset_root)) {
    const CaseRecord cs =
        load_case(std::filesystem::path(cfg.dataset_root) / pid);
    ++res.n_patients;
    for (auto& w : validate_case(cs, 0)) {
      log_info(w.message);
      res.warnings.push_back(std::move(w));
    }
  }
  log_info("validated " + std::to_string(res.n_patients) + " patients, " +
           std::to_string(res.warnings.size()) + " warnings");
  return res;
}

}  // namespace longitrack
