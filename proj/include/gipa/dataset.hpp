#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "gipa/dense_matrix.hpp"
#include "gipa/graph.hpp"

namespace gipa {

class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Splits {
  std::vector<std::size_t> train;
  std::vector<std::size_t> valid;
  std::vector<std::size_t> test;
  friend bool operator==(const Splits&, const Splits&) = default;
};

struct DatasetBundle {
  CsrGraph graph;
  DenseMatrix labels;  // [n x C], entries 0 or 1
  Splits splits;
  std::vector<std::string> node_feature_names;
  std::vector<std::string> edge_feature_names;
  std::vector<std::string> label_names;

  std::size_t num_labels() const { return labels.cols(); }
};

// On-disk layout, one directory with four headered CSV files:
//   nodes.csv   node_id,f1..f_dn        ids 0..n-1 in order
//   edges.csv   src,dst,e1..e_de        one row per undirected edge
//   labels.csv  node_id,y1..yC          ids 0..n-1 in order, y in {0,1}
//   splits.csv  node_id,split           split in {train,valid,test}
// Floats are written in shortest round-trip form.
DatasetBundle load_dataset(const std::filesystem::path& dir);
void write_dataset(const DatasetBundle& bundle, const std::filesystem::path& dir);

// Seeded shuffle of 0..n-1 sliced into train/valid/test by the given
// fractions; each split is returned in ascending order.
Splits split_nodes(std::size_t n, std::array<double, 3> fractions, std::uint64_t seed);

struct SyntheticSpec {
  std::size_t num_nodes = 300;
  double avg_degree = 3.0;
  std::size_t node_dim = 8;
  std::size_t edge_dim = 8;
  std::size_t num_labels = 8;
  std::uint64_t seed = 0;
};

// Random graph with standard-normal node and edge features. Label c of node
// i is 1 iff the sum over i's incident edges of w_c . e is positive, for a
// hidden standard-normal vector w_c; isolated nodes get 0.
DatasetBundle generate_synthetic(const SyntheticSpec& spec);

}  // namespace gipa
