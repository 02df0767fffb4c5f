#pragma once

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <random>
#include <string>

#include <unistd.h>

#include "longitrack/volume.hpp"

namespace testutil {

// Scratch directory removed on scope exit.
struct TempDir {
  std::filesystem::path path;

  TempDir() {
    static std::atomic<int> counter{0};
    path = std::filesystem::temp_directory_path() /
           ("longitrack_test_" + std::to_string(::getpid()) + "_" +
            std::to_string(counter.fetch_add(1)));
    std::filesystem::create_directories(path);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
};

// Engine output is pinned by the standard; distributions are not, so tests
// derive values from raw draws only.
inline std::uint64_t draw(std::mt19937_64& eng) { return eng(); }

inline std::int64_t draw_int(std::mt19937_64& eng, std::int64_t lo,
                             std::int64_t hi) {
  const auto span = static_cast<std::uint64_t>(hi - lo + 1);
  return lo + static_cast<std::int64_t>(eng() % span);
}

inline double draw_unit(std::mt19937_64& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

template <class T>
longitrack::Volume3<T> random_mask(std::mt19937_64& eng,
                                   longitrack::Shape3 shape,
                                   double fg_prob = 0.3,
                                   longitrack::Spacing3 spacing = {1, 1, 1}) {
  auto v = longitrack::Volume3<T>::filled(shape, spacing, T(0));
  for (auto& e : v.data) e = draw_unit(eng) < fg_prob ? T(1) : T(0);
  return v;
}

}  // namespace testutil
