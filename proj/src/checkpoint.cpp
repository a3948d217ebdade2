#include "gipa/checkpoint.hpp"

#include <bit>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>

namespace gipa {
namespace {

static_assert(std::endian::native == std::endian::little,
              "checkpoint I/O assumes a little-endian host");

void put_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(v));
}

std::uint64_t get_u64(std::ifstream& in, const std::string& what) {
  std::uint64_t v = 0;
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(v))) {
    throw CheckpointError("checkpoint truncated while reading " + what);
  }
  return v;
}

}  // namespace

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw CheckpointError("cannot open " + path.string() + " for writing");
  out.write(kCheckpointMagic, 8);
  for (const auto& [name, m] : tensors) {
    put_u64(out, name.size());
    out.write(name.data(), static_cast<std::streamsize>(name.size()));
    put_u64(out, m.rows());
    put_u64(out, m.cols());
    out.write(reinterpret_cast<const char*>(m.data().data()),
              static_cast<std::streamsize>(m.size() * sizeof(double)));
  }
  if (!out) throw CheckpointError("write failed for " + path.string());
}

std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw CheckpointError("cannot open checkpoint " + path.string());
  const auto file_size = std::filesystem::file_size(path);
  char magic[8];
  if (!in.read(magic, 8) || std::memcmp(magic, kCheckpointMagic, 8) != 0) {
    throw CheckpointError("bad checkpoint magic in " + path.string());
  }
  std::vector<NamedTensor> tensors;
  while (in.peek() != std::ifstream::traits_type::eof()) {
    const auto name_len = get_u64(in, "name length");
    if (name_len > file_size) throw CheckpointError("checkpoint name length out of range");
    std::string name(name_len, '\0');
    if (!in.read(name.data(), static_cast<std::streamsize>(name_len))) {
      throw CheckpointError("checkpoint truncated in tensor name");
    }
    const auto rows = get_u64(in, "rows of " + name);
    const auto cols = get_u64(in, "cols of " + name);
    if (cols != 0 && rows > file_size / sizeof(double) / cols) {
      throw CheckpointError("checkpoint tensor " + name + " larger than file");
    }
    std::vector<double> data(rows * cols);
    if (!in.read(reinterpret_cast<char*>(data.data()),
                 static_cast<std::streamsize>(data.size() * sizeof(double)))) {
      throw CheckpointError("checkpoint truncated in payload of " + name);
    }
    tensors.emplace_back(std::move(name), DenseMatrix::from_data(rows, cols, std::move(data)));
  }
  return tensors;
}

void save_parameters(const std::filesystem::path& path, const std::vector<Parameter*>& params) {
  std::vector<NamedTensor> tensors;
  tensors.reserve(params.size());
  for (const auto* p : params) tensors.emplace_back(p->name, p->value);
  write_checkpoint(path, tensors);
}

void load_parameters(const std::filesystem::path& path, const std::vector<Parameter*>& params) {
  std::map<std::string, DenseMatrix> by_name;
  for (auto& [name, m] : read_checkpoint(path)) {
    if (!by_name.emplace(name, std::move(m)).second) {
      throw CheckpointError("duplicate tensor " + name + " in checkpoint");
    }
  }
  if (by_name.size() != params.size()) {
    throw CheckpointError("checkpoint holds " + std::to_string(by_name.size()) +
                          " tensors, model expects " + std::to_string(params.size()));
  }
  for (auto* p : params) {
    auto it = by_name.find(p->name);
    if (it == by_name.end()) throw CheckpointError("checkpoint is missing tensor " + p->name);
    if (!it->second.same_shape(p->value)) {
      throw CheckpointError("shape mismatch for " + p->name + ": checkpoint " +
                            shape_string(it->second) + ", model " + shape_string(p->value));
    }
  }
  for (auto* p : params) p->value = by_name.at(p->name);
}

}  // namespace gipa
