#pragma once

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <string>
#include <variant>
#include <vector>

#include "json.hpp"
#include "longitrack/errors.hpp"
#include "longitrack/volume.hpp"

namespace longitrack {

// SVOL1 container: bytes "SVOL1\n", one line of UTF-8 JSON
// {"shape":[z,y,x],"spacing":[sz,sy,sx],"dtype":"f32"|"u16"|"u8"}, a single
// 0x0A byte, then the raw little-endian payload in C order (x fastest).
// No trailing bytes.

namespace detail {

inline constexpr char kSvolMagic[6] = {'S', 'V', 'O', 'L', '1', '\n'};

template <class T>
void append_le(std::vector<std::uint8_t>& out, T value) {
  if constexpr (sizeof(T) == 1) {
    out.push_back(static_cast<std::uint8_t>(value));
  } else if constexpr (sizeof(T) == 2) {
    auto u = std::bit_cast<std::uint16_t>(value);
    out.push_back(static_cast<std::uint8_t>(u & 0xff));
    out.push_back(static_cast<std::uint8_t>(u >> 8));
  } else {
    static_assert(sizeof(T) == 4);
    auto u = std::bit_cast<std::uint32_t>(value);
    for (int i = 0; i < 4; ++i)
      out.push_back(static_cast<std::uint8_t>((u >> (8 * i)) & 0xff));
  }
}

template <class T>
T read_le(const std::uint8_t* p) {
  if constexpr (sizeof(T) == 1) {
    return static_cast<T>(p[0]);
  } else if constexpr (sizeof(T) == 2) {
    std::uint16_t u = static_cast<std::uint16_t>(p[0]) |
                      static_cast<std::uint16_t>(p[1]) << 8;
    return std::bit_cast<T>(u);
  } else {
    static_assert(sizeof(T) == 4);
    std::uint32_t u = 0;
    for (int i = 0; i < 4; ++i) u |= static_cast<std::uint32_t>(p[i]) << (8 * i);
    return std::bit_cast<T>(u);
  }
}

}  // namespace detail

/// Serializes a volume to SVOL1 bytes. Two calls on equal volumes produce
/// identical bytes.
template <class T>
std::vector<std::uint8_t> write_svol_bytes(const Volume3<T>& vol) {
  require_valid(vol);
  nlohmann::ordered_json header;
  header["shape"] = {vol.shape[0], vol.shape[1], vol.shape[2]};
  header["spacing"] = {vol.spacing[0], vol.spacing[1], vol.spacing[2]};
  header["dtype"] = DtypeTraits<T>::name;
  const std::string line = header.dump();

  std::vector<std::uint8_t> out;
  out.reserve(sizeof(detail::kSvolMagic) + line.size() + 1 +
              vol.data.size() * sizeof(T));
  out.insert(out.end(), std::begin(detail::kSvolMagic),
             std::end(detail::kSvolMagic));
  out.insert(out.end(), line.begin(), line.end());
  out.push_back(0x0A);
  for (const T& v : vol.data) detail::append_le(out, v);
  return out;
}

inline void write_file_bytes(const std::filesystem::path& path,
                             const std::vector<std::uint8_t>& bytes) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open for writing: " + path.string());
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  if (!f) throw IoError("write failed: " + path.string());
}

template <class T>
void write_svol(const Volume3<T>& vol, const std::filesystem::path& path) {
  write_file_bytes(path, write_svol_bytes(vol));
}

inline std::vector<std::uint8_t> read_file_bytes(
    const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open for reading: " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(f)),
                                  std::istreambuf_iterator<char>());
  if (f.bad()) throw IoError("read failed: " + path.string());
  return bytes;
}

using VolumeVariant =
    std::variant<Volume3<float>, Volume3<std::uint16_t>, Volume3<std::uint8_t>>;

namespace detail {

template <class T>
Volume3<T> decode_payload(Shape3 shape, Spacing3 spacing,
                          const std::uint8_t* payload, std::size_t bytes,
                          const std::string& what) {
  const std::int64_t count = shape[0] * shape[1] * shape[2];
  const std::size_t expected = static_cast<std::size_t>(count) * sizeof(T);
  if (bytes != expected)
    throw FormatError(what + ": payload is " + std::to_string(bytes) +
                      " bytes, header implies " + std::to_string(expected));
  Volume3<T> vol;
  vol.shape = shape;
  vol.spacing = spacing;
  vol.data.resize(static_cast<std::size_t>(count));
  for (std::int64_t i = 0; i < count; ++i)
    vol.data[static_cast<std::size_t>(i)] =
        read_le<T>(payload + static_cast<std::size_t>(i) * sizeof(T));
  return vol;
}

}  // namespace detail

inline VolumeVariant read_svol_bytes(const std::vector<std::uint8_t>& bytes,
                                     const std::string& what = "svol") {
  using nlohmann::json;
  if (bytes.size() < sizeof(detail::kSvolMagic) ||
      std::memcmp(bytes.data(), detail::kSvolMagic,
                  sizeof(detail::kSvolMagic)) != 0)
    throw FormatError(what + ": bad magic, not an SVOL1 file");

  std::size_t nl = sizeof(detail::kSvolMagic);
  while (nl < bytes.size() && bytes[nl] != 0x0A) ++nl;
  if (nl == bytes.size())
    throw FormatError(what + ": unterminated header line");
  const std::string line(bytes.begin() + sizeof(detail::kSvolMagic),
                         bytes.begin() + static_cast<std::ptrdiff_t>(nl));

  json header;
  try {
    header = json::parse(line);
  } catch (const json::exception& e) {
    throw FormatError(what + ": header is not valid JSON: " + e.what());
  }
  if (!header.is_object() || header.size() != 3 || !header.contains("shape") ||
      !header.contains("spacing") || !header.contains("dtype"))
    throw FormatError(what +
                      ": header must have exactly shape, spacing, dtype");

  Shape3 shape;
  Spacing3 spacing;
  const auto& jshape = header["shape"];
  const auto& jspacing = header["spacing"];
  if (!jshape.is_array() || jshape.size() != 3 || !jspacing.is_array() ||
      jspacing.size() != 3)
    throw FormatError(what + ": shape and spacing must be 3-element arrays");
  for (int a = 0; a < 3; ++a) {
    if (!jshape[a].is_number_integer() ||
        jshape[a].get<std::int64_t>() < 1)
      throw FormatError(what + ": shape components must be integers >= 1");
    shape[a] = jshape[a].get<std::int64_t>();
    if (!jspacing[a].is_number() || !(jspacing[a].get<double>() > 0.0))
      throw FormatError(what + ": spacing components must be > 0");
    spacing[a] = jspacing[a].get<double>();
  }
  if (!header["dtype"].is_string())
    throw FormatError(what + ": dtype must be a string");
  const std::string dtype = header["dtype"].get<std::string>();

  const std::uint8_t* payload = bytes.data() + nl + 1;
  const std::size_t payload_bytes = bytes.size() - nl - 1;
  if (dtype == "f32")
    return detail::decode_payload<float>(shape, spacing, payload,
                                         payload_bytes, what);
  if (dtype == "u16")
    return detail::decode_payload<std::uint16_t>(shape, spacing, payload,
                                                 payload_bytes, what);
  if (dtype == "u8")
    return detail::decode_payload<std::uint8_t>(shape, spacing, payload,
                                                payload_bytes, what);
  throw FormatError(what + ": unknown dtype \"" + dtype + "\"");
}

inline VolumeVariant read_svol(const std::filesystem::path& path) {
  return read_svol_bytes(read_file_bytes(path), path.string());
}

/// Reads an SVOL1 file and requires its dtype to be T.
template <class T>
Volume3<T> read_svol_as(const std::filesystem::path& path) {
  VolumeVariant v = read_svol(path);
  if (auto* p = std::get_if<Volume3<T>>(&v)) return std::move(*p);
  throw FormatError(path.string() + ": expected dtype " +
                    std::string(DtypeTraits<T>::name));
}

}  // namespace longitrack
