#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gipa/dense_matrix.hpp"
#include "gipa/nn.hpp"

namespace gipa {

// Binary parameter file:
//   8 bytes  magic "GIPA0001"
//   then one record per tensor until end of file:
//     u64 name length, name bytes, u64 rows, u64 cols, rows*cols f64 payload
// All integers and floats little-endian, payload row-major.
inline constexpr char kCheckpointMagic[] = "GIPA0001";

class CheckpointError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

using NamedTensor = std::pair<std::string, DenseMatrix>;

void write_checkpoint(const std::filesystem::path& path, const std::vector<NamedTensor>& tensors);
std::vector<NamedTensor> read_checkpoint(const std::filesystem::path& path);

void save_parameters(const std::filesystem::path& path, const std::vector<Parameter*>& params);
// Restores values by name; every parameter must appear exactly once with a matching shape.
void load_parameters(const std::filesystem::path& path, const std::vector<Parameter*>& params);

}  // namespace gipa
