#include "symgnn/checkpoint.hpp"

#include <algorithm>
#include <cstring>
#include <fstream>

namespace symgnn::ad {
namespace {

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T get(std::ifstream& in, const std::filesystem::path& path) {
  T v{};
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw ParseError("truncated archive " + path.string());
  return v;
}

}  // namespace

void write_archive(const std::filesystem::path& path, const std::vector<NamedMatrix>& entries) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out.write(kCheckpointMagic, sizeof(kCheckpointMagic));
  put<std::uint32_t>(out, kCheckpointVersion);
  put<std::uint64_t>(out, entries.size());
  for (const auto& e : entries) {
    put<std::uint32_t>(out, static_cast<std::uint32_t>(e.name.size()));
    out.write(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(e.value.rows()));
    put<std::uint64_t>(out, static_cast<std::uint64_t>(e.value.cols()));
    for (Index i = 0; i < e.value.rows(); ++i) {
      for (Index j = 0; j < e.value.cols(); ++j) put<double>(out, e.value(i, j));
    }
  }
  if (!out) throw Error("write failed for " + path.string());
}

std::vector<NamedMatrix> read_archive(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  char magic[sizeof(kCheckpointMagic)];
  in.read(magic, sizeof(magic));
  if (!in || std::memcmp(magic, kCheckpointMagic, sizeof(magic)) != 0) {
    throw ParseError(path.string() + " is not a parameter archive");
  }
  const auto version = get<std::uint32_t>(in, path);
  if (version != kCheckpointVersion) {
    throw ParseError("unsupported archive version " + std::to_string(version));
  }
  const auto count = get<std::uint64_t>(in, path);
  std::vector<NamedMatrix> entries;
  for (std::uint64_t k = 0; k < count; ++k) {
    NamedMatrix e;
    e.name.resize(get<std::uint32_t>(in, path));
    in.read(e.name.data(), static_cast<std::streamsize>(e.name.size()));
    const auto rows = static_cast<Index>(get<std::uint64_t>(in, path));
    const auto cols = static_cast<Index>(get<std::uint64_t>(in, path));
    e.value.resize(rows, cols);
    for (Index i = 0; i < rows; ++i) {
      for (Index j = 0; j < cols; ++j) e.value(i, j) = get<double>(in, path);
    }
    entries.push_back(std::move(e));
  }
  return entries;
}

void save_parameters(const std::filesystem::path& path, const ParameterSet& params) {
  std::vector<NamedMatrix> entries;
  entries.reserve(params.size());
  for (const auto& p : params) entries.push_back({p.name, p.value});
  write_archive(path, entries);
}

void load_parameters(const std::filesystem::path& path, ParameterSet& params) {
  const auto entries = read_archive(path);
  for (auto& p : params) {
    auto it = std::find_if(entries.begin(), entries.end(),
                           [&](const NamedMatrix& e) { return e.name == p.name; });
    if (it == entries.end()) throw IntegrityError("archive lacks parameter '" + p.name + "'");
    if (it->value.rows() != p.value.rows() || it->value.cols() != p.value.cols()) {
      throw ShapeError("parameter '" + p.name + "' has shape " + shape_str(it->value) +
                       " in archive, expected " + shape_str(p.value));
    }
    p.value = it->value;
  }
}

}  // namespace symgnn::ad
