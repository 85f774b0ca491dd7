#pragma once

// Flat binary tensor container. One file holds an ordered list of named
// n-dimensional arrays; clips, checkpoints, and prediction files are all
// instances of this format.
//
// Layout (all integers little-endian):
//   magic   "TCR3" (4 bytes)
//   version u16 (currently 1)
//   count   u32
//   then per entry, in insertion order:
//     name_len u16, name bytes (UTF-8)
//     dtype    u8 (0 = f32, 1 = f64, 2 = u8)
//     ndim     u8
//     dims     ndim x u64
//     payload  row-major element bytes

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "tcr3/common.hpp"

namespace tcr3 {

static_assert(std::endian::native == std::endian::little,
              "container I/O assumes a little-endian host");

enum class Dtype : std::uint8_t { f32 = 0, f64 = 1, u8 = 2 };

inline std::size_t dtype_size(Dtype d) {
  switch (d) {
    case Dtype::f32: return 4;
    case Dtype::f64: return 8;
    case Dtype::u8: return 1;
  }
  throw std::invalid_argument("unknown dtype");
}

struct TensorEntry {
  std::string name;
  Dtype dtype = Dtype::f32;
  std::vector<std::uint64_t> dims;
  std::vector<std::uint8_t> data;  // raw little-endian payload

  std::uint64_t element_count() const {
    std::uint64_t n = 1;
    for (auto d : dims) n *= d;
    return n;
  }
  const float* as_f32() const;
  const double* as_f64() const;
  const std::uint8_t* as_u8() const;
};

class TensorContainer {
 public:
  static constexpr std::uint16_t kVersion = 1;

  void add_f32(const std::string& name, std::vector<std::uint64_t> dims, const float* values);
  void add_f64(const std::string& name, std::vector<std::uint64_t> dims, const double* values);
  void add_u8(const std::string& name, std::vector<std::uint64_t> dims,
              const std::uint8_t* values);

  bool has(const std::string& name) const;
  const TensorEntry& get(const std::string& name) const;  // throws if absent
  const std::vector<TensorEntry>& entries() const { return entries_; }

  // Serialization. save() writes the whole container; load() validates the
  // header and every entry, reporting the byte offset of the first problem.
  void save(const std::string& path) const;
  static TensorContainer load(const std::string& path);

  std::vector<std::uint8_t> serialize() const;
  static TensorContainer deserialize(const std::vector<std::uint8_t>& bytes);

 private:
  void add_raw(const std::string& name, Dtype dtype, std::vector<std::uint64_t> dims,
               const void* values);
  std::vector<TensorEntry> entries_;
};

}  // namespace tcr3
