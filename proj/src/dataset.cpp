#include "gipa/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>
#include <sstream>

#include "gipa/nn.hpp"

namespace gipa {
namespace {

namespace fs = std::filesystem;

std::vector<std::string_view> split_fields(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t b = 0;
  while (true) {
    auto e = line.find(',', b);
    if (e == std::string_view::npos) {
      out.push_back(line.substr(b));
      break;
    }
    out.push_back(line.substr(b, e - b));
    b = e + 1;
  }
  return out;
}

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
  std::vector<std::size_t> line_numbers;
};

CsvTable read_csv(const fs::path& path, std::size_t min_cols) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DataError("missing file " + path.string());
  CsvTable t;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    std::vector<std::string> fields;
    for (auto f : split_fields(line)) fields.emplace_back(f);
    if (!have_header) {
      t.header = std::move(fields);
      have_header = true;
      if (t.header.size() < min_cols) {
        throw DataError(path.string() + ": header needs at least " + std::to_string(min_cols) +
                        " columns");
      }
      continue;
    }
    if (fields.size() != t.header.size()) {
      throw DataError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                      std::to_string(t.header.size()) + " fields, found " +
                      std::to_string(fields.size()));
    }
    t.rows.push_back(std::move(fields));
    t.line_numbers.push_back(line_no);
  }
  if (!have_header) throw DataError(path.string() + ": empty file");
  return t;
}

std::string where(const fs::path& p, std::size_t line) {
  return p.filename().string() + ":" + std::to_string(line);
}

double parse_double(const std::string& s, const std::string& ctx) {
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || !std::isfinite(v)) {
    throw DataError(ctx + ": bad number '" + s + "'");
  }
  return v;
}

std::size_t parse_index(const std::string& s, const std::string& ctx) {
  std::size_t v = 0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) {
    throw DataError(ctx + ": bad node id '" + s + "'");
  }
  return v;
}

std::string format_double(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write " + path.string());
  out << text;
  if (!out) throw DataError("write failed for " + path.string());
}

std::vector<std::string> tail_names(const std::vector<std::string>& header, std::size_t skip) {
  return {header.begin() + static_cast<std::ptrdiff_t>(skip), header.end()};
}

}  // namespace

DatasetBundle load_dataset(const fs::path& dir) {
  if (!fs::is_directory(dir)) throw DataError("dataset directory not found: " + dir.string());
  DatasetBundle b;

  const auto nodes_path = dir / "nodes.csv";
  auto nodes = read_csv(nodes_path, 1);
  const std::size_t n = nodes.rows.size();
  if (n == 0) throw DataError(nodes_path.string() + ": no nodes");
  const std::size_t dn = nodes.header.size() - 1;
  DenseMatrix node_features(n, dn);
  for (std::size_t r = 0; r < n; ++r) {
    const auto ctx = where(nodes_path, nodes.line_numbers[r]);
    if (parse_index(nodes.rows[r][0], ctx) != r) {
      throw DataError(ctx + ": node ids must run 0..n-1 without gaps, expected " +
                      std::to_string(r));
    }
    for (std::size_t c = 0; c < dn; ++c) node_features(r, c) = parse_double(nodes.rows[r][c + 1], ctx);
  }
  b.node_feature_names = tail_names(nodes.header, 1);

  const auto edges_path = dir / "edges.csv";
  auto edges = read_csv(edges_path, 2);
  const std::size_t de = edges.header.size() - 2;
  std::vector<InputEdge> input;
  input.reserve(edges.rows.size());
  for (std::size_t r = 0; r < edges.rows.size(); ++r) {
    const auto ctx = where(edges_path, edges.line_numbers[r]);
    InputEdge e;
    e.src = parse_index(edges.rows[r][0], ctx);
    e.dst = parse_index(edges.rows[r][1], ctx);
    if (e.src >= n || e.dst >= n) throw DataError(ctx + ": endpoint out of range");
    e.features.resize(de);
    for (std::size_t c = 0; c < de; ++c) e.features[c] = parse_double(edges.rows[r][c + 2], ctx);
    input.push_back(std::move(e));
  }
  b.edge_feature_names = tail_names(edges.header, 2);
  b.graph = build_graph(input, std::move(node_features), de);

  const auto labels_path = dir / "labels.csv";
  auto labels = read_csv(labels_path, 2);
  if (labels.rows.size() != n) {
    throw DataError(labels_path.string() + ": expected " + std::to_string(n) + " rows, found " +
                    std::to_string(labels.rows.size()));
  }
  const std::size_t c_count = labels.header.size() - 1;
  b.labels = DenseMatrix(n, c_count);
  for (std::size_t r = 0; r < n; ++r) {
    const auto ctx = where(labels_path, labels.line_numbers[r]);
    if (parse_index(labels.rows[r][0], ctx) != r) {
      throw DataError(ctx + ": label node ids must run 0..n-1 without gaps");
    }
    for (std::size_t c = 0; c < c_count; ++c) {
      const auto& tok = labels.rows[r][c + 1];
      if (tok != "0" && tok != "1") throw DataError(ctx + ": label must be 0 or 1, got '" + tok + "'");
      b.labels(r, c) = tok == "1" ? 1.0 : 0.0;
    }
  }
  b.label_names = tail_names(labels.header, 1);

  const auto splits_path = dir / "splits.csv";
  auto splits = read_csv(splits_path, 2);
  std::vector<bool> seen(n, false);
  for (std::size_t r = 0; r < splits.rows.size(); ++r) {
    const auto ctx = where(splits_path, splits.line_numbers[r]);
    const auto id = parse_index(splits.rows[r][0], ctx);
    if (id >= n) throw DataError(ctx + ": node id out of range");
    if (seen[id]) throw DataError(ctx + ": node " + std::to_string(id) + " assigned twice");
    seen[id] = true;
    const auto& tok = splits.rows[r][1];
    if (tok == "train") b.splits.train.push_back(id);
    else if (tok == "valid") b.splits.valid.push_back(id);
    else if (tok == "test") b.splits.test.push_back(id);
    else throw DataError(ctx + ": unknown split '" + tok + "'");
  }
  for (auto* v : {&b.splits.train, &b.splits.valid, &b.splits.test}) std::sort(v->begin(), v->end());
  return b;
}

void write_dataset(const DatasetBundle& b, const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw DataError("cannot create directory " + dir.string());
  const auto& g = b.graph;
  const std::size_t n = g.num_nodes();

  auto header = [](std::string first, const std::vector<std::string>& names, std::size_t count,
                   const std::string& prefix) {
    std::string h = std::move(first);
    for (std::size_t c = 0; c < count; ++c) {
      h += ',';
      h += c < names.size() ? names[c] : prefix + std::to_string(c + 1);
    }
    return h + '\n';
  };

  std::string text = header("node_id", b.node_feature_names, g.node_dim(), "f");
  for (std::size_t i = 0; i < n; ++i) {
    text += std::to_string(i);
    for (double v : g.node_features().row(i)) text += ',' + format_double(v);
    text += '\n';
  }
  write_text(dir / "nodes.csv", text);

  // One row per undirected edge in edge-id order; the endpoints come from
  // the entry whose neighbor is the larger id (or the self-loop entry).
  std::vector<std::pair<std::size_t, std::size_t>> ends(g.num_undirected_edges(),
                                                         {SIZE_MAX, SIZE_MAX});
  auto dst = g.entry_destinations();
  auto nbr = g.col_indices();
  auto eid = g.edge_ids();
  for (std::size_t k = 0; k < g.num_edges(); ++k) {
    if (dst[k] <= nbr[k]) ends[eid[k]] = {dst[k], nbr[k]};
  }
  text = header("src,dst", b.edge_feature_names, g.edge_dim(), "e");
  for (std::size_t e = 0; e < ends.size(); ++e) {
    if (ends[e].first == SIZE_MAX) throw DataError("write_dataset: edge " + std::to_string(e) + " has no entry");
    text += std::to_string(ends[e].first) + ',' + std::to_string(ends[e].second);
    for (double v : g.edge_features().row(e)) text += ',' + format_double(v);
    text += '\n';
  }
  write_text(dir / "edges.csv", text);

  text = header("node_id", b.label_names, b.labels.cols(), "y");
  for (std::size_t i = 0; i < n; ++i) {
    text += std::to_string(i);
    for (double v : b.labels.row(i)) text += v > 0.5 ? ",1" : ",0";
    text += '\n';
  }
  write_text(dir / "labels.csv", text);

  std::vector<const char*> tag(n, nullptr);
  for (auto i : b.splits.train) tag.at(i) = "train";
  for (auto i : b.splits.valid) tag.at(i) = "valid";
  for (auto i : b.splits.test) tag.at(i) = "test";
  text = "node_id,split\n";
  for (std::size_t i = 0; i < n; ++i) {
    if (tag[i] != nullptr) text += std::to_string(i) + ',' + tag[i] + '\n';
  }
  write_text(dir / "splits.csv", text);
}

Splits split_nodes(std::size_t n, std::array<double, 3> fractions, std::uint64_t seed) {
  for (double f : fractions) {
    if (!(f >= 0.0)) throw std::invalid_argument("split_nodes: fractions must be non-negative");
  }
  if (std::abs(fractions[0] + fractions[1] + fractions[2] - 1.0) > 1e-9) {
    throw std::invalid_argument("split_nodes: fractions must sum to 1");
  }
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Rng rng(seed);
  std::shuffle(perm.begin(), perm.end(), rng);
  const auto dn = static_cast<double>(n);
  const std::size_t n_train = std::min<std::size_t>(n, std::llround(fractions[0] * dn));
  const std::size_t n_valid = std::min<std::size_t>(n - n_train, std::llround(fractions[1] * dn));
  Splits s;
  auto b = perm.begin();
  s.train.assign(b, b + static_cast<std::ptrdiff_t>(n_train));
  s.valid.assign(b + static_cast<std::ptrdiff_t>(n_train),
                 b + static_cast<std::ptrdiff_t>(n_train + n_valid));
  s.test.assign(b + static_cast<std::ptrdiff_t>(n_train + n_valid), perm.end());
  for (auto* v : {&s.train, &s.valid, &s.test}) std::sort(v->begin(), v->end());
  return s;
}

DatasetBundle generate_synthetic(const SyntheticSpec& spec) {
  if (spec.num_nodes < 4) throw std::invalid_argument("generate_synthetic: need at least 4 nodes");
  if (spec.num_labels < 1 || spec.node_dim < 1 || spec.edge_dim < 1) {
    throw std::invalid_argument("generate_synthetic: label and feature widths must be >= 1");
  }
  if (!(spec.avg_degree >= 0.0) || !std::isfinite(spec.avg_degree)) {
    throw std::invalid_argument("generate_synthetic: avg_degree must be finite and >= 0");
  }
  Rng rng(spec.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  const std::size_t n = spec.num_nodes;

  DenseMatrix node_features(n, spec.node_dim);
  for (double& v : node_features.data()) v = normal(rng);

  const auto m = static_cast<std::size_t>(std::llround(spec.avg_degree * static_cast<double>(n) / 2.0));
  std::uniform_int_distribution<std::size_t> pick(0, n - 1);
  std::uniform_int_distribution<std::size_t> pick_other(0, n - 2);
  std::vector<InputEdge> edges(m);
  for (auto& e : edges) {
    e.src = pick(rng);
    e.dst = pick_other(rng);
    if (e.dst >= e.src) ++e.dst;
    e.features.resize(spec.edge_dim);
    for (double& v : e.features) v = normal(rng);
  }

  DenseMatrix hidden(spec.num_labels, spec.edge_dim);
  for (double& v : hidden.data()) v = normal(rng);
  const std::uint64_t split_seed = rng();

  DatasetBundle b;
  b.graph = build_graph(edges, std::move(node_features), spec.edge_dim);
  const auto& g = b.graph;
  b.labels = DenseMatrix(n, spec.num_labels);
  for (std::size_t i = 0; i < n; ++i) {
    auto nb = g.in_neighbors(i);
    for (std::size_t c = 0; c < spec.num_labels; ++c) {
      double s = 0.0;
      for (std::size_t k = 0; k < nb.size(); ++k) {
        auto e = g.edge_features().row(nb.edges[k]);
        for (std::size_t d = 0; d < spec.edge_dim; ++d) s += hidden(c, d) * e[d];
      }
      b.labels(i, c) = s > 0.0 ? 1.0 : 0.0;
    }
  }
  b.splits = split_nodes(n, {0.6, 0.2, 0.2}, split_seed);
  for (std::size_t c = 0; c < spec.node_dim; ++c) b.node_feature_names.push_back("f" + std::to_string(c + 1));
  for (std::size_t c = 0; c < spec.edge_dim; ++c) b.edge_feature_names.push_back("e" + std::to_string(c + 1));
  for (std::size_t c = 0; c < spec.num_labels; ++c) b.label_names.push_back("y" + std::to_string(c + 1));
  return b;
}

}  // namespace gipa
