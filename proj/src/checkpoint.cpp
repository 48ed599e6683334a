#include "hmn/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>

namespace hmn::diff {
namespace {

template <typename T>
void put_le(std::ostream& os, T v) {
  unsigned char buf[sizeof(T)];
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    buf[i] = static_cast<unsigned char>((v >> (8 * i)) & 0xff);
  }
  os.write(reinterpret_cast<const char*>(buf), sizeof(T));
}

template <typename T>
T get_le(std::istream& is, const char* what) {
  unsigned char buf[sizeof(T)];
  if (!is.read(reinterpret_cast<char*>(buf), sizeof(T))) {
    throw CheckpointError(std::string("checkpoint truncated while reading ") + what);
  }
  T v = 0;
  for (std::size_t i = 0; i < sizeof(T); ++i) v |= static_cast<T>(buf[i]) << (8 * i);
  return v;
}

}  // namespace

void write_checkpoint(std::ostream& os, const ParamStore& params) {
  put_le<std::uint32_t>(os, kCheckpointVersion);
  put_le<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.name.size()));
    os.write(p.name.data(), static_cast<std::streamsize>(p.name.size()));
    put_le<std::uint32_t>(os, static_cast<std::uint32_t>(p.value.rank()));
    for (auto d : p.value.shape()) put_le<std::uint64_t>(os, d);
  }
  for (const auto& p : params) {
    for (double v : p.value.data()) put_le<std::uint64_t>(os, std::bit_cast<std::uint64_t>(v));
  }
  if (!os) throw CheckpointError("failed writing checkpoint");
}

ParamStore read_checkpoint(std::istream& is) {
  const auto version = get_le<std::uint32_t>(is, "version");
  if (version != kCheckpointVersion) {
    throw CheckpointError("unsupported checkpoint version " + std::to_string(version));
  }
  const auto count = get_le<std::uint32_t>(is, "parameter count");
  std::vector<std::pair<std::string, Shape>> headers;
  for (std::uint32_t i = 0; i < count; ++i) {
    const auto len = get_le<std::uint32_t>(is, "name length");
    if (len > (1u << 16)) throw CheckpointError("implausible parameter name length");
    std::string name(len, '\0');
    if (!is.read(name.data(), len)) throw CheckpointError("checkpoint truncated in name");
    const auto rank = get_le<std::uint32_t>(is, "rank");
    if (rank > 8) throw CheckpointError("implausible rank for '" + name + "'");
    Shape shape(rank);
    for (auto& d : shape) d = static_cast<std::size_t>(get_le<std::uint64_t>(is, "dims"));
    headers.emplace_back(std::move(name), std::move(shape));
  }
  ParamStore store;
  for (auto& [name, shape] : headers) {
    Tensor t(shape);
    for (auto& v : t.data()) v = std::bit_cast<double>(get_le<std::uint64_t>(is, name.c_str()));
    store.add(name, std::move(t));
  }
  return store;
}

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params) {
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) throw CheckpointError("cannot open " + path.string() + " for writing");
  write_checkpoint(os, params);
}

ParamStore load_checkpoint(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw CheckpointError("cannot open " + path.string());
  return read_checkpoint(is);
}

void assign_values(ParamStore& dst, const ParamStore& src) {
  if (dst.size() != src.size()) {
    throw CheckpointError("parameter count mismatch: " + std::to_string(dst.size()) + " vs " +
                          std::to_string(src.size()));
  }
  for (std::size_t i = 0; i < dst.size(); ++i) {
    if (dst[i].name != src[i].name || dst[i].value.shape() != src[i].value.shape()) {
      throw CheckpointError("parameter mismatch at '" + dst[i].name + "' " +
                            shape_string(dst[i].value.shape()) + " vs '" + src[i].name + "' " +
                            shape_string(src[i].value.shape()));
    }
    auto from = src[i].value.data();
    auto to = dst[i].value.data();
    std::copy(from.begin(), from.end(), to.begin());
  }
}

}  // namespace hmn::diff
