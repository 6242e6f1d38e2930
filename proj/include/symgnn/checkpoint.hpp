#pragma once

#include "symgnn/common.hpp"
#include "symgnn/tape.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace symgnn::ad {

// Flat named-matrix archive:
//   magic "SYMGNNCK", u32 version,
//   u64 count, then per entry: u32 name length, name bytes,
//   u64 rows, u64 cols, rows*cols little-endian f64 in row-major order.
inline constexpr char kCheckpointMagic[8] = {'S', 'Y', 'M', 'G', 'N', 'N', 'C', 'K'};
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct NamedMatrix {
  std::string name;
  Matrix value;
};

void write_archive(const std::filesystem::path& path, const std::vector<NamedMatrix>& entries);
std::vector<NamedMatrix> read_archive(const std::filesystem::path& path);

void save_parameters(const std::filesystem::path& path, const ParameterSet& params);
// Overwrites values of parameters present in both the file and the set. Every
// parameter in the set must be present with a matching shape.
void load_parameters(const std::filesystem::path& path, ParameterSet& params);

}  // namespace symgnn::ad
