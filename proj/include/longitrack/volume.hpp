#pragma once

#include <algorithm>
#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "longitrack/errors.hpp"

namespace longitrack {

/// Integer voxel coordinate in (z,y,x) order. May be negative or out of
/// bounds while doing patch geometry.
struct VoxelIndex {
  std::int64_t z = 0;
  std::int64_t y = 0;
  std::int64_t x = 0;

  friend VoxelIndex operator+(VoxelIndex a, VoxelIndex b) {
    return {a.z + b.z, a.y + b.y, a.x + b.x};
  }
  friend VoxelIndex operator-(VoxelIndex a, VoxelIndex b) {
    return {a.z - b.z, a.y - b.y, a.x - b.x};
  }
  bool operator==(const VoxelIndex&) const = default;
};

using Shape3 = std::array<std::int64_t, 3>;    // (z,y,x), components >= 1
using Spacing3 = std::array<double, 3>;        // mm per voxel along (z,y,x)

inline bool in_bounds(VoxelIndex v, const Shape3& shape) {
  return v.z >= 0 && v.z < shape[0] && v.y >= 0 && v.y < shape[1] &&
         v.x >= 0 && v.x < shape[2];
}

/// 3D scalar grid with voxel spacing. Data is a flat array in C order,
/// x fastest. Values are immutable by convention once a volume has been
/// handed off; all pipeline stages build new volumes instead of mutating.
template <class T>
struct Volume3 {
  Shape3 shape{0, 0, 0};
  Spacing3 spacing{1.0, 1.0, 1.0};
  std::vector<T> data;

  static Volume3 filled(Shape3 shape, Spacing3 spacing, T value) {
    Volume3 v;
    v.shape = shape;
    v.spacing = spacing;
    v.data.assign(static_cast<std::size_t>(shape[0]) * shape[1] * shape[2],
                  value);
    return v;
  }

  std::int64_t voxel_count() const { return shape[0] * shape[1] * shape[2]; }

  std::int64_t flat(std::int64_t z, std::int64_t y, std::int64_t x) const {
    return (z * shape[1] + y) * shape[2] + x;
  }

  T& at(std::int64_t z, std::int64_t y, std::int64_t x) {
    return data[static_cast<std::size_t>(flat(z, y, x))];
  }
  const T& at(std::int64_t z, std::int64_t y, std::int64_t x) const {
    return data[static_cast<std::size_t>(flat(z, y, x))];
  }
  T& operator[](VoxelIndex v) { return at(v.z, v.y, v.x); }
  const T& operator[](VoxelIndex v) const { return at(v.z, v.y, v.x); }

  bool operator==(const Volume3&) const = default;
};

template <class T>
struct DtypeTraits;
template <>
struct DtypeTraits<float> {
  static constexpr const char* name = "f32";
};
template <>
struct DtypeTraits<std::uint16_t> {
  static constexpr const char* name = "u16";
};
template <>
struct DtypeTraits<std::uint8_t> {
  static constexpr const char* name = "u8";
};

/// Throws FormatError unless shape, spacing and data length satisfy the
/// Volume3 invariants.
template <class T>
void require_valid(const Volume3<T>& v) {
  for (int a = 0; a < 3; ++a) {
    if (v.shape[a] < 1)
      throw FormatError("volume shape component " + std::to_string(a) +
                        " must be >= 1, got " + std::to_string(v.shape[a]));
    if (!(v.spacing[a] > 0.0))
      throw FormatError("volume spacing component " + std::to_string(a) +
                        " must be > 0");
  }
  if (static_cast<std::int64_t>(v.data.size()) != v.voxel_count())
    throw FormatError("volume data length " + std::to_string(v.data.size()) +
                      " does not match shape product " +
                      std::to_string(v.voxel_count()));
}

/// Physical volume in mm^3 of `voxel_count` voxels at the given spacing.
inline double volume_mm3(std::int64_t voxel_count, const Spacing3& spacing) {
  for (int a = 0; a < 3; ++a)
    if (!(spacing[a] > 0.0)) throw FormatError("spacing must be > 0");
  if (voxel_count < 0) throw FormatError("voxel count must be >= 0");
  return static_cast<double>(voxel_count) * spacing[0] * spacing[1] *
         spacing[2];
}

/// Extracts an axis-aligned window of `out_shape` voxels starting at
/// `origin` (which may be partially or fully outside the volume).
/// Out-of-bounds voxels are filled with `pad`.
template <class T>
Volume3<T> crop(const Volume3<T>& v, VoxelIndex origin, Shape3 out_shape,
                T pad) {
  Volume3<T> out = Volume3<T>::filled(out_shape, v.spacing, pad);
  // overlap of the window with the source volume, in window coordinates
  std::int64_t lo[3], hi[3];
  const std::int64_t org[3] = {origin.z, origin.y, origin.x};
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max<std::int64_t>(0, -org[a]);
    hi[a] = std::min<std::int64_t>(out_shape[a], v.shape[a] - org[a]);
  }
  if (lo[0] >= hi[0] || lo[1] >= hi[1] || lo[2] >= hi[2]) return out;
  const std::int64_t span = hi[2] - lo[2];
  for (std::int64_t z = lo[0]; z < hi[0]; ++z) {
    for (std::int64_t y = lo[1]; y < hi[1]; ++y) {
      const T* src = &v.data[static_cast<std::size_t>(
          v.flat(z + org[0], y + org[1], lo[2] + org[2]))];
      T* dst = &out.data[static_cast<std::size_t>(out.flat(z, y, lo[2]))];
      std::copy(src, src + span, dst);
    }
  }
  return out;
}

/// Binary {0,1} float mask of voxels carrying `label`, cropped like crop().
inline Volume3<float> crop_label(const Volume3<std::uint16_t>& gt,
                                 std::uint16_t label, VoxelIndex origin,
                                 Shape3 out_shape) {
  Volume3<float> out = Volume3<float>::filled(out_shape, gt.spacing, 0.0f);
  std::int64_t lo[3], hi[3];
  const std::int64_t org[3] = {origin.z, origin.y, origin.x};
  for (int a = 0; a < 3; ++a) {
    lo[a] = std::max<std::int64_t>(0, -org[a]);
    hi[a] = std::min<std::int64_t>(out_shape[a], gt.shape[a] - org[a]);
  }
  if (lo[0] >= hi[0] || lo[1] >= hi[1] || lo[2] >= hi[2]) return out;
  for (std::int64_t z = lo[0]; z < hi[0]; ++z)
    for (std::int64_t y = lo[1]; y < hi[1]; ++y) {
      const std::uint16_t* src = &gt.data[static_cast<std::size_t>(
          gt.flat(z + org[0], y + org[1], lo[2] + org[2]))];
      float* dst = &out.data[static_cast<std::size_t>(out.flat(z, y, lo[2]))];
      for (std::int64_t x = 0; x < hi[2] - lo[2]; ++x)
        dst[x] = src[x] == label ? 1.0f : 0.0f;
    }
  return out;
}

}  // namespace longitrack
