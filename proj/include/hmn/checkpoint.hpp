#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <stdexcept>

#include "hmn/params.hpp"

namespace hmn::diff {

inline constexpr std::uint32_t kCheckpointVersion = 1;

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Layout, all integers and floats little-endian:
//   u32 version, u32 parameter count,
//   per parameter: u32 name length, name bytes (UTF-8), u32 rank, u64 dims[rank]
//   then every parameter's f64 values, concatenated in declaration order.
void write_checkpoint(std::ostream& os, const ParamStore& params);
ParamStore read_checkpoint(std::istream& is);

void save_checkpoint(const std::filesystem::path& path, const ParamStore& params);
ParamStore load_checkpoint(const std::filesystem::path& path);

/// Copies values from `src` into `dst`; names and shapes must match exactly.
void assign_values(ParamStore& dst, const ParamStore& src);

}  // namespace hmn::diff
