#pragma once

// End-to-end composition: cluster -> transition graph -> node features ->
// weighted ensemble -> per-fingerprint scores.

#include <fstream>
#include <istream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "iodetect/learner.hpp"

namespace iodetect {

/// Which context the node features see. `fingerprints` treats every scan as
/// its own cluster; `clusters` keeps the clustering but only hop-0 features.
enum class FeatureMode { graph, clusters, fingerprints };

inline const char* to_string(FeatureMode m) {
  switch (m) {
    case FeatureMode::graph:
      return "graph";
    case FeatureMode::clusters:
      return "clusters";
    default:
      return "fingerprints";
  }
}

struct PipelineConfig {
  ClusterParams cluster;
  std::optional<std::int64_t> max_gap_ms;
  FeatureLayout layout = FeatureLayout::standard();
  LearnerKind learner = LearnerKind::random_forest;
  Hyperparameters hyper;
  std::uint64_t seed = 1;
  double threshold = 0.5;
  TieRule tie_rule = TieRule::indoor;

  /// Feature layout used under `mode`.
  FeatureLayout layout_for(FeatureMode mode) const {
    return mode == FeatureMode::graph ? layout : FeatureLayout::local_only();
  }

  void validate() const {
    cluster.validate();
    layout.validate();
    if (!(threshold >= 0.0 && threshold <= 1.0)) throw ConfigError("threshold must lie in [0, 1]");
    if (hyper.n_trees == 0) throw ConfigError("n_trees must be positive");
    if (!(hyper.learning_rate > 0)) throw ConfigError("learning_rate must be positive");
    if (!(hyper.subsample > 0 && hyper.subsample <= 1)) throw ConfigError("subsample must lie in (0, 1]");
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Parses `key = value` lines; `#` starts a comment.
inline std::map<std::string, std::string> read_key_values(std::istream& in) {
  std::map<std::string, std::string> kv;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return kv;
}

inline double to_real(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const double d = std::stod(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "' expects a number, got '" + v + "'");
}

inline std::int64_t to_int(const std::string& key, const std::string& v) {
  try {
    std::size_t used = 0;
    const long long d = std::stoll(v, &used);
    if (used == v.size()) return d;
  } catch (const std::exception&) {
  }
  throw ConfigError("'" + key + "' expects an integer, got '" + v + "'");
}

inline std::size_t to_count(const std::string& key, const std::string& v) {
  const auto i = to_int(key, v);
  if (i < 0) throw ConfigError("'" + key + "' must be non-negative");
  return static_cast<std::size_t>(i);
}

inline std::optional<HopRange> to_range(const std::string& key, const std::string& v) {
  if (v == "none") return std::nullopt;
  const auto dash = v.find('-');
  if (dash == std::string::npos) {
    const auto d = to_count(key, v);
    return HopRange{d, d};
  }
  return HopRange{to_count(key, v.substr(0, dash)), to_count(key, v.substr(dash + 1))};
}

inline std::string range_text(const std::optional<HopRange>& r) {
  if (!r) return "none";
  return std::to_string(r->lo) + "-" + std::to_string(r->hi);
}

}  // namespace detail

inline void apply_config_value(PipelineConfig& cfg, const std::string& key, const std::string& value) {
  using namespace detail;
  if (key == "eps") cfg.cluster.eps = to_real(key, value);
  else if (key == "min_pts") cfg.cluster.min_pts = to_count(key, value);
  else if (key == "max_gap_ms") cfg.max_gap_ms = value == "none" ? std::nullopt : std::optional(to_int(key, value));
  else if (key == "neighbors_range") cfg.layout.neighbors = to_range(key, value);
  else if (key == "power_range") cfg.layout.power = to_range(key, value);
  else if (key == "aps_range") cfg.layout.aps = to_range(key, value);
  else if (key == "fps_range") cfg.layout.fingerprints = to_range(key, value);
  else if (key == "learner") cfg.learner = parse_learner(value);
  else if (key == "n_trees") cfg.hyper.n_trees = to_count(key, value);
  else if (key == "max_depth") cfg.hyper.max_depth = to_count(key, value);
  else if (key == "gbm_depth") cfg.hyper.gbm_depth = to_count(key, value);
  else if (key == "learning_rate") cfg.hyper.learning_rate = to_real(key, value);
  else if (key == "min_leaf") cfg.hyper.min_leaf = to_real(key, value);
  else if (key == "mtry") cfg.hyper.mtry = to_count(key, value);
  else if (key == "subsample") cfg.hyper.subsample = to_real(key, value);
  else if (key == "seed") cfg.seed = static_cast<std::uint64_t>(to_int(key, value));
  else if (key == "threshold") cfg.threshold = to_real(key, value);
  else if (key == "tie_rule") {
    if (value == "indoor") cfg.tie_rule = TieRule::indoor;
    else if (value == "drop") cfg.tie_rule = TieRule::drop;
    else throw ConfigError("tie_rule must be indoor or drop");
  } else {
    throw ConfigError("unknown config key '" + key + "'");
  }
}

inline PipelineConfig read_pipeline_config(std::istream& in) {
  PipelineConfig cfg;
  for (const auto& [k, v] : detail::read_key_values(in)) apply_config_value(cfg, k, v);
  cfg.validate();
  return cfg;
}

/// `default` names the built-in configuration.
inline PipelineConfig read_pipeline_config(const std::string& path) {
  if (path == "default") return {};
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  return read_pipeline_config(in);
}

inline std::string format_pipeline_config(const PipelineConfig& cfg) {
  std::ostringstream out;
  out << "eps = " << format_double(cfg.cluster.eps) << '\n'
      << "min_pts = " << cfg.cluster.min_pts << '\n'
      << "max_gap_ms = " << (cfg.max_gap_ms ? std::to_string(*cfg.max_gap_ms) : "none") << '\n'
      << "neighbors_range = " << detail::range_text(cfg.layout.neighbors) << '\n'
      << "power_range = " << detail::range_text(cfg.layout.power) << '\n'
      << "aps_range = " << detail::range_text(cfg.layout.aps) << '\n'
      << "fps_range = " << detail::range_text(cfg.layout.fingerprints) << '\n'
      << "learner = " << to_string(cfg.learner) << '\n'
      << "n_trees = " << cfg.hyper.n_trees << '\n'
      << "max_depth = " << cfg.hyper.max_depth << '\n'
      << "gbm_depth = " << cfg.hyper.gbm_depth << '\n'
      << "learning_rate = " << format_double(cfg.hyper.learning_rate) << '\n'
      << "min_leaf = " << format_double(cfg.hyper.min_leaf) << '\n'
      << "mtry = " << cfg.hyper.mtry << '\n'
      << "subsample = " << format_double(cfg.hyper.subsample) << '\n'
      << "seed = " << cfg.seed << '\n'
      << "threshold = " << format_double(cfg.threshold) << '\n'
      << "tie_rule = " << (cfg.tie_rule == TieRule::indoor ? "indoor" : "drop") << '\n';
  return out.str();
}

/// Clustering, graph and node features of one device's matrix.
struct GraphAnalysis {
  ClusterAssignment assignment;
  TransitionGraph graph;
  FeatureTable features;
};

/// Every fingerprint in its own cluster.
inline ClusterAssignment singleton_assignment(std::size_t n) {
  std::vector<std::size_t> labels(n);
  std::iota(labels.begin(), labels.end(), std::size_t{0});
  return ClusterAssignment::from_labels(labels);
}

inline GraphAnalysis analyze(const FingerprintMatrix& m, const PipelineConfig& cfg,
                             FeatureMode mode = FeatureMode::graph) {
  GraphAnalysis a;
  a.assignment = mode == FeatureMode::fingerprints ? singleton_assignment(m.scan_count()) : cluster(m, cfg.cluster);
  a.graph = build_graph(a.assignment, m, cfg.max_gap_ms);
  a.features = extract_features(a.graph, m, cfg.layout_for(mode));
  return a;
}

inline std::vector<std::size_t> node_weights(const ClusterAssignment& a) {
  std::vector<std::size_t> w;
  for (const auto& mem : a.members) w.push_back(mem.size());
  return w;
}

/// Majority label per node, `unlabeled` where no vote is possible.
inline std::vector<Label> node_label_column(const ClusterAssignment& a, const std::vector<Label>& labels,
                                            TieRule tie_rule) {
  std::vector<Label> out(a.cluster_count(), Label::unlabeled);
  for (const auto& n : label_nodes(a, labels, tie_rule).labeled) out[n.node] = n.label;
  return out;
}

/// Trains on the nodes of `a` labeled by majority vote over `labels`.
inline Model fit(const GraphAnalysis& a, const std::vector<Label>& labels, const PipelineConfig& cfg) {
  const auto nodes = label_nodes(a.assignment, labels, cfg.tie_rule);
  return train(training_set(a.features, nodes), cfg.learner, cfg.hyper, cfg.seed);
}

inline Prediction score(const Model& model, const GraphAnalysis& a, const PipelineConfig& cfg) {
  return predict(model, a.features, a.assignment, cfg.threshold);
}

/// Leading `count` fingerprints of `m` as a matrix of their own.
inline FingerprintMatrix prefix(const FingerprintMatrix& m, std::size_t count) {
  count = std::min(count, m.scan_count());
  std::vector<ScanRecord> records = to_records(m);
  records.resize(count);
  return ingest(records);
}

}  // namespace iodetect
