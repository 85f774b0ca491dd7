#include "tcr3/container.hpp"

#include <cstring>
#include <fstream>
#include <limits>

namespace tcr3 {

namespace {

constexpr char kMagic[4] = {'T', 'C', 'R', '3'};

[[noreturn]] void corrupt(std::size_t offset, const std::string& what) {
  throw std::runtime_error("container: " + what + " at byte offset " + std::to_string(offset));
}

// Bounds-checked little-endian reader over a byte buffer.
struct Reader {
  const std::vector<std::uint8_t>& buf;
  std::size_t pos = 0;

  void need(std::size_t n, const char* what) {
    if (pos + n > buf.size()) corrupt(pos, std::string("truncated ") + what);
  }
  template <typename T>
  T read_int(const char* what) {
    need(sizeof(T), what);
    T v;
    std::memcpy(&v, buf.data() + pos, sizeof(T));
    pos += sizeof(T);
    return v;
  }
  std::string read_name(std::size_t len) {
    need(len, "entry name");
    std::string s(reinterpret_cast<const char*>(buf.data() + pos), len);
    pos += len;
    return s;
  }
  void read_bytes(std::uint8_t* dst, std::size_t n, const char* what) {
    need(n, what);
    std::memcpy(dst, buf.data() + pos, n);
    pos += n;
  }
};

template <typename T>
void append_int(std::vector<std::uint8_t>& out, T v) {
  const std::size_t at = out.size();
  out.resize(at + sizeof(T));
  std::memcpy(out.data() + at, &v, sizeof(T));
}

}  // namespace

const float* TensorEntry::as_f32() const {
  require(dtype == Dtype::f32, "entry '" + name + "' is not f32");
  return reinterpret_cast<const float*>(data.data());
}

const double* TensorEntry::as_f64() const {
  require(dtype == Dtype::f64, "entry '" + name + "' is not f64");
  return reinterpret_cast<const double*>(data.data());
}

const std::uint8_t* TensorEntry::as_u8() const {
  require(dtype == Dtype::u8, "entry '" + name + "' is not u8");
  return data.data();
}

void TensorContainer::add_raw(const std::string& name, Dtype dtype,
                              std::vector<std::uint64_t> dims, const void* values) {
  require(!name.empty(), "container: empty entry name");
  require(name.size() <= std::numeric_limits<std::uint16_t>::max(),
          "container: entry name too long");
  require(!has(name), "container: duplicate entry name '" + name + "'");
  require(dims.size() <= 255, "container: too many dimensions");

  TensorEntry e;
  e.name = name;
  e.dtype = dtype;
  e.dims = std::move(dims);
  const std::size_t bytes = static_cast<std::size_t>(e.element_count()) * dtype_size(dtype);
  e.data.resize(bytes);
  if (bytes > 0) std::memcpy(e.data.data(), values, bytes);
  entries_.push_back(std::move(e));
}

void TensorContainer::add_f32(const std::string& name, std::vector<std::uint64_t> dims,
                              const float* values) {
  add_raw(name, Dtype::f32, std::move(dims), values);
}

void TensorContainer::add_f64(const std::string& name, std::vector<std::uint64_t> dims,
                              const double* values) {
  add_raw(name, Dtype::f64, std::move(dims), values);
}

void TensorContainer::add_u8(const std::string& name, std::vector<std::uint64_t> dims,
                             const std::uint8_t* values) {
  add_raw(name, Dtype::u8, std::move(dims), values);
}

bool TensorContainer::has(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

const TensorEntry& TensorContainer::get(const std::string& name) const {
  for (const auto& e : entries_)
    if (e.name == name) return e;
  throw std::invalid_argument("container: no entry named '" + name + "'");
}

std::vector<std::uint8_t> TensorContainer::serialize() const {
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kMagic, kMagic + 4);
  append_int<std::uint16_t>(out, kVersion);
  append_int<std::uint32_t>(out, static_cast<std::uint32_t>(entries_.size()));
  for (const auto& e : entries_) {
    append_int<std::uint16_t>(out, static_cast<std::uint16_t>(e.name.size()));
    out.insert(out.end(), e.name.begin(), e.name.end());
    append_int<std::uint8_t>(out, static_cast<std::uint8_t>(e.dtype));
    append_int<std::uint8_t>(out, static_cast<std::uint8_t>(e.dims.size()));
    for (auto d : e.dims) append_int<std::uint64_t>(out, d);
    out.insert(out.end(), e.data.begin(), e.data.end());
  }
  return out;
}

TensorContainer TensorContainer::deserialize(const std::vector<std::uint8_t>& bytes) {
  Reader r{bytes};
  r.need(4, "magic");
  if (std::memcmp(bytes.data(), kMagic, 4) != 0) corrupt(0, "bad magic (expected 'TCR3')");
  r.pos = 4;
  const auto version = r.read_int<std::uint16_t>("version");
  if (version != kVersion)
    corrupt(4, "unsupported version " + std::to_string(version));
  const auto count = r.read_int<std::uint32_t>("entry count");

  TensorContainer c;
  for (std::uint32_t i = 0; i < count; ++i) {
    const std::size_t entry_at = r.pos;
    const auto name_len = r.read_int<std::uint16_t>("name length");
    TensorEntry e;
    e.name = r.read_name(name_len);
    if (e.name.empty()) corrupt(entry_at, "empty entry name");
    const auto dtype_raw = r.read_int<std::uint8_t>("dtype");
    if (dtype_raw > 2) corrupt(r.pos - 1, "unknown dtype code " + std::to_string(dtype_raw));
    e.dtype = static_cast<Dtype>(dtype_raw);
    const auto ndim = r.read_int<std::uint8_t>("ndim");
    e.dims.resize(ndim);
    std::uint64_t elems = 1;
    for (std::uint8_t d = 0; d < ndim; ++d) {
      e.dims[d] = r.read_int<std::uint64_t>("dims");
      if (e.dims[d] != 0 && elems > std::numeric_limits<std::uint64_t>::max() / e.dims[d])
        corrupt(entry_at, "dimension overflow");
      elems *= e.dims[d];
    }
    const std::uint64_t bytes_needed = elems * dtype_size(e.dtype);
    if (bytes_needed > bytes.size() - r.pos)
      corrupt(r.pos, "payload for '" + e.name + "' exceeds file size");
    e.data.resize(static_cast<std::size_t>(bytes_needed));
    r.read_bytes(e.data.data(), e.data.size(), "payload");
    if (c.has(e.name)) corrupt(entry_at, "duplicate entry name '" + e.name + "'");
    c.entries_.push_back(std::move(e));
  }
  if (r.pos != bytes.size()) corrupt(r.pos, "trailing bytes after last entry");
  return c;
}

void TensorContainer::save(const std::string& path) const {
  const std::vector<std::uint8_t> bytes = serialize();
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  require(f.good(), "container: cannot open '" + path + "' for writing");
  f.write(reinterpret_cast<const char*>(bytes.data()),
          static_cast<std::streamsize>(bytes.size()));
  require(f.good(), "container: write failed for '" + path + "'");
}

TensorContainer TensorContainer::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary | std::ios::ate);
  require(f.good(), "container: cannot open '" + path + "'");
  const std::streamsize size = f.tellg();
  f.seekg(0);
  std::vector<std::uint8_t> bytes(static_cast<std::size_t>(size));
  f.read(reinterpret_cast<char*>(bytes.data()), size);
  require(f.good(), "container: read failed for '" + path + "'");
  return deserialize(bytes);
}

}  // namespace tcr3
