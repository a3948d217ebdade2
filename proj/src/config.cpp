#include "gipa/config.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <set>
#include <sstream>

namespace gipa {
namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <typename T>
T parse_number(const std::string& v, const std::string& key) {
  T out{};
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) {
    throw ConfigError("invalid value '" + v + "' for " + key);
  }
  return out;
}

bool parse_bool(const std::string& v, const std::string& key) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("invalid boolean '" + v + "' for " + key);
}

void expect_token(const std::string& v, const std::string& key, const std::string& only) {
  std::string lower = v;
  for (char& c : lower) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  if (lower != only) throw ConfigError(key + " supports only '" + only + "', got '" + v + "'");
}

using Setter = std::function<void(TrainConfig&, const std::string&, const std::string&)>;

const std::map<std::string, Setter>& setters() {
  auto size_field = [](std::size_t TrainConfig::*f) -> Setter {
    return [f](TrainConfig& c, const std::string& v, const std::string& k) {
      c.*f = parse_number<std::size_t>(v, k);
    };
  };
  auto double_field = [](double TrainConfig::*f) -> Setter {
    return [f](TrainConfig& c, const std::string& v, const std::string& k) {
      c.*f = parse_number<double>(v, k);
    };
  };
  static const std::map<std::string, Setter> table = {
      {"node_emb", size_field(&TrainConfig::node_emb)},
      {"edge_emb", size_field(&TrainConfig::edge_emb)},
      {"att_mlp_depth", size_field(&TrainConfig::att_mlp_depth)},
      {"heads", size_field(&TrainConfig::heads)},
      {"prop_mlp_depth", size_field(&TrainConfig::prop_mlp_depth)},
      {"hidden_units", size_field(&TrainConfig::hidden_units)},
      {"num_gipa_layers", size_field(&TrainConfig::num_gipa_layers)},
      {"edge_drop", double_field(&TrainConfig::edge_drop)},
      {"dropout_node", double_field(&TrainConfig::dropout_node)},
      {"dropout_attention", double_field(&TrainConfig::dropout_attention)},
      {"dropout_propagation", double_field(&TrainConfig::dropout_propagation)},
      {"dropout_aggregation", double_field(&TrainConfig::dropout_aggregation)},
      {"dropout_final_fc", double_field(&TrainConfig::dropout_final_fc)},
      {"lr", double_field(&TrainConfig::lr)},
      {"weight_decay", double_field(&TrainConfig::weight_decay)},
      {"epochs", size_field(&TrainConfig::epochs)},
      {"eval_every", size_field(&TrainConfig::eval_every)},
      {"seed", [](TrainConfig& c, const std::string& v,
                  const std::string& k) { c.seed = parse_number<std::uint64_t>(v, k); }},
      {"ablate_prop_edges", [](TrainConfig& c, const std::string& v,
                               const std::string& k) { c.ablate_prop_edges = parse_bool(v, k); }},
      {"data_dir", [](TrainConfig& c, const std::string& v, const std::string&) { c.data_dir = v; }},
      {"out_dir", [](TrainConfig& c, const std::string& v, const std::string&) { c.out_dir = v; }},
      // Fixed choices, accepted so a config can spell out every table row.
      {"optimizer", [](TrainConfig&, const std::string& v,
                       const std::string& k) { expect_token(v, k, "adamw"); }},
      {"aggregation", [](TrainConfig&, const std::string& v,
                         const std::string& k) { expect_token(v, k, "sum"); }},
      {"activation", [](TrainConfig&, const std::string& v,
                        const std::string& k) { expect_token(v, k, "relu"); }},
  };
  return table;
}

std::string fmt(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

TrainConfig parse_config(const std::string& text) {
  TrainConfig cfg;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string raw;
  std::size_t line_no = 0;
  while (std::getline(in, raw)) {
    ++line_no;
    const auto hash = raw.find('#');
    const std::string line = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (line.empty()) continue;
    const auto eq = line.find('=');
    const std::string where = "line " + std::to_string(line_no) + ": ";
    if (eq == std::string::npos) throw ConfigError(where + "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    auto it = setters().find(key);
    if (it == setters().end()) throw ConfigError(where + "unknown key '" + key + "'");
    if (!seen.insert(key).second) throw ConfigError(where + "duplicate key '" + key + "'");
    if (value.empty()) throw ConfigError(where + "missing value for '" + key + "'");
    try {
      it->second(cfg, value, key);
    } catch (const ConfigError& e) {
      throw ConfigError(where + e.what());
    }
  }
  try {
    validate(cfg);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("invalid configuration: ") + e.what());
  }
  return cfg;
}

TrainConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string format_config(const TrainConfig& c) {
  std::ostringstream out;
  out << "node_emb = " << c.node_emb << '\n'
      << "edge_emb = " << c.edge_emb << '\n'
      << "att_mlp_depth = " << c.att_mlp_depth << '\n'
      << "heads = " << c.heads << '\n'
      << "prop_mlp_depth = " << c.prop_mlp_depth << '\n'
      << "hidden_units = " << c.hidden_units << '\n'
      << "num_gipa_layers = " << c.num_gipa_layers << '\n'
      << "edge_drop = " << fmt(c.edge_drop) << '\n'
      << "dropout_node = " << fmt(c.dropout_node) << '\n'
      << "dropout_attention = " << fmt(c.dropout_attention) << '\n'
      << "dropout_propagation = " << fmt(c.dropout_propagation) << '\n'
      << "dropout_aggregation = " << fmt(c.dropout_aggregation) << '\n'
      << "dropout_final_fc = " << fmt(c.dropout_final_fc) << '\n'
      << "lr = " << fmt(c.lr) << '\n'
      << "weight_decay = " << fmt(c.weight_decay) << '\n'
      << "epochs = " << c.epochs << '\n'
      << "eval_every = " << c.eval_every << '\n'
      << "seed = " << c.seed << '\n'
      << "ablate_prop_edges = " << (c.ablate_prop_edges ? "true" : "false") << '\n';
  if (!c.data_dir.empty()) out << "data_dir = " << c.data_dir << '\n';
  if (!c.out_dir.empty()) out << "out_dir = " << c.out_dir << '\n';
  return out.str();
}

}  // namespace gipa
