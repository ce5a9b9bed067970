#pragma once

// Weighted tree ensembles over node feature vectors.
//
// Instance weights are multiplicities: every statistic a split or leaf uses
// sums weights, so a node of weight k behaves exactly like k copies of a
// weight-1 node.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iodetect/node_features.hpp"

namespace iodetect {

// ---------------------------------------------------------------------------
// Node labels by majority vote

enum class TieRule { indoor, drop };

struct LabeledNode {
  NodeId node = 0;
  Label label = Label::unlabeled;
  std::size_t weight = 0;
};

struct NodeLabels {
  std::vector<LabeledNode> labeled;
  std::vector<NodeId> unlabeled;  // no labeled member, or a dropped tie
};

inline NodeLabels label_nodes(const ClusterAssignment& assignment, const std::vector<Label>& labels,
                              TieRule tie_rule = TieRule::indoor) {
  if (labels.size() != assignment.cluster_of.size())
    throw CoverageError("one label per fingerprint required");
  NodeLabels out;
  for (NodeId c = 0; c < assignment.cluster_count(); ++c) {
    std::size_t indoor = 0, outdoor = 0;
    for (FpIndex i : assignment.members[c]) {
      if (labels[i] == Label::indoor) ++indoor;
      else if (labels[i] == Label::outdoor) ++outdoor;
    }
    const std::size_t weight = assignment.members[c].size();
    if (indoor + outdoor == 0 || (indoor == outdoor && tie_rule == TieRule::drop)) {
      out.unlabeled.push_back(c);
      continue;
    }
    out.labeled.push_back({c, indoor >= outdoor ? Label::indoor : Label::outdoor, weight});
  }
  return out;
}

/// Training instances: one row per labeled node, y = 1 for indoor.
struct Dataset {
  std::vector<std::string> names;
  std::vector<NodeFeatureVector> rows;
  std::vector<int> y;
  std::vector<double> w;

  std::size_t size() const noexcept { return rows.size(); }
};

inline Dataset training_set(const FeatureTable& table, const NodeLabels& nodes) {
  Dataset d;
  d.names = table.names;
  for (const auto& n : nodes.labeled) {
    d.rows.push_back(table.rows.at(n.node));
    d.y.push_back(n.label == Label::indoor ? 1 : 0);
    d.w.push_back(static_cast<double>(n.weight));
  }
  return d;
}

/// Training instances from an exported feature table: labeled rows only.
inline Dataset training_set(const FeatureCsv& csv) {
  Dataset d;
  d.names = csv.table.names;
  for (std::size_t r = 0; r < csv.table.rows.size(); ++r) {
    if (csv.labels[r] == Label::unlabeled) continue;
    d.rows.push_back(csv.table.rows[r]);
    d.y.push_back(csv.labels[r] == Label::indoor ? 1 : 0);
    d.w.push_back(static_cast<double>(csv.weights[r]));
  }
  return d;
}

/// Appends the instances of `more`, e.g. another device's nodes.
inline void append(Dataset& into, const Dataset& more) {
  if (into.names.empty()) into.names = more.names;
  if (into.names != more.names) throw FeatureMismatchError("datasets have different feature columns");
  into.rows.insert(into.rows.end(), more.rows.begin(), more.rows.end());
  into.y.insert(into.y.end(), more.y.begin(), more.y.end());
  into.w.insert(into.w.end(), more.w.begin(), more.w.end());
}

// ---------------------------------------------------------------------------
// Decision trees

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  double value = 0.0;

  friend bool operator==(const TreeNode&, const TreeNode&) = default;
};

struct Tree {
  std::vector<TreeNode> nodes;

  double predict(const NodeFeatureVector& x) const {
    int at = 0;
    while (nodes[static_cast<std::size_t>(at)].feature >= 0) {
      const auto& n = nodes[static_cast<std::size_t>(at)];
      at = x[static_cast<std::size_t>(n.feature)] <= n.threshold ? n.left : n.right;
    }
    return nodes[static_cast<std::size_t>(at)].value;
  }

  friend bool operator==(const Tree&, const Tree&) = default;
};

enum class SplitCriterion {
  gini,           // targets are 0/1 labels
  squared_error,  // targets are real gradients
};

namespace detail {

/// Weighted impurity mass of a set with total weight `w` and weighted target
/// sum `s`; a split's gain is parent mass minus the children's.
inline double impurity_mass(SplitCriterion c, double w, double s) {
  if (w <= 0) return 0.0;
  if (c == SplitCriterion::gini) return 2.0 * s * (w - s) / w;
  return -s * s / w;  // SSE up to the constant sum of w*g^2
}

}  // namespace detail

struct SplitCandidate {
  int feature = -1;
  double threshold = 0.0;
  double gain = 0.0;

  bool valid() const noexcept { return feature >= 0; }
};

/// Best threshold split of `samples` over `features`. Thresholds sit midway
/// between consecutive distinct values; both children need `min_leaf` weight.
inline SplitCandidate best_split(const std::vector<NodeFeatureVector>& rows, const std::vector<double>& target,
                                 const std::vector<double>& weight, const std::vector<std::size_t>& samples,
                                 const std::vector<std::size_t>& features, SplitCriterion criterion,
                                 double min_leaf = 1.0) {
  double w_total = 0, s_total = 0;
  for (auto i : samples) {
    w_total += weight[i];
    s_total += weight[i] * target[i];
  }
  const double parent = detail::impurity_mass(criterion, w_total, s_total);
  SplitCandidate best;
  std::vector<std::size_t> order(samples);
  for (auto f : features) {
    std::sort(order.begin(), order.end(), [&](auto a, auto b) { return rows[a][f] < rows[b][f]; });
    double wl = 0, sl = 0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      const auto i = order[k];
      wl += weight[i];
      sl += weight[i] * target[i];
      const double here = rows[i][f];
      const double next = rows[order[k + 1]][f];
      if (!(here < next)) continue;
      if (wl < min_leaf || w_total - wl < min_leaf) continue;
      const double gain = parent - detail::impurity_mass(criterion, wl, sl) -
                          detail::impurity_mass(criterion, w_total - wl, s_total - sl);
      if (gain > best.gain + 1e-12) {
        best.feature = static_cast<int>(f);
        best.threshold = here + (next - here) / 2.0;
        best.gain = gain;
      }
    }
  }
  return best;
}

struct TreeParams {
  SplitCriterion criterion = SplitCriterion::gini;
  std::size_t max_depth = 0;      // 0: unlimited
  double min_leaf = 1.0;          // minimum child weight
  std::size_t features_per_split = 0;  // 0: all features
};

/// Leaf value: weighted target mean for gini trees, Newton step
/// sum(w*g) / sum(w*h) for gradient trees.
inline Tree grow_tree(const std::vector<NodeFeatureVector>& rows, const std::vector<double>& target,
                      const std::vector<double>& hessian, const std::vector<double>& weight,
                      std::vector<std::size_t> samples, const TreeParams& params, std::mt19937_64& rng) {
  const std::size_t p = rows.empty() ? 0 : rows.front().size();
  Tree tree;
  struct Pending {
    std::vector<std::size_t> samples;
    std::size_t depth;
    int slot;
  };
  std::vector<Pending> stack;
  tree.nodes.emplace_back();
  stack.push_back({std::move(samples), 0, 0});

  std::vector<std::size_t> all_features(p);
  std::iota(all_features.begin(), all_features.end(), std::size_t{0});

  while (!stack.empty()) {
    Pending job = std::move(stack.back());
    stack.pop_back();

    double w = 0, s = 0, h = 0;
    for (auto i : job.samples) {
      w += weight[i];
      s += weight[i] * target[i];
      h += weight[i] * hessian[i];
    }
    TreeNode leaf;
    if (params.criterion == SplitCriterion::gini)
      leaf.value = w > 0 ? s / w : 0.0;
    else
      leaf.value = h > 1e-12 ? s / h : 0.0;
    tree.nodes[static_cast<std::size_t>(job.slot)] = leaf;

    if (params.max_depth != 0 && job.depth >= params.max_depth) continue;
    if (params.criterion == SplitCriterion::gini && (s <= 0 || s >= w)) continue;  // pure

    SplitCandidate split;
    if (params.features_per_split == 0 || params.features_per_split >= p) {
      split = best_split(rows, target, weight, job.samples, all_features, params.criterion, params.min_leaf);
    } else {
      // Random subset first; fall back to the remaining features in the same
      // shuffled order only when the subset admits no split.
      std::vector<std::size_t> shuffled = all_features;
      std::shuffle(shuffled.begin(), shuffled.end(), rng);
      for (std::size_t from = 0; from < p && !split.valid(); from += params.features_per_split) {
        const std::size_t to = std::min(p, from + params.features_per_split);
        std::vector<std::size_t> subset(shuffled.begin() + static_cast<std::ptrdiff_t>(from),
                                        shuffled.begin() + static_cast<std::ptrdiff_t>(to));
        split = best_split(rows, target, weight, job.samples, subset, params.criterion, params.min_leaf);
      }
    }
    if (!split.valid()) continue;

    std::vector<std::size_t> left, right;
    for (auto i : job.samples)
      (rows[i][static_cast<std::size_t>(split.feature)] <= split.threshold ? left : right).push_back(i);

    auto& node = tree.nodes[static_cast<std::size_t>(job.slot)];
    node.feature = split.feature;
    node.threshold = split.threshold;
    node.left = static_cast<int>(tree.nodes.size());
    node.right = node.left + 1;
    const int l = node.left, r = node.right;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    stack.push_back({std::move(right), job.depth + 1, r});
    stack.push_back({std::move(left), job.depth + 1, l});
  }
  return tree;
}

// ---------------------------------------------------------------------------
// Ensembles

enum class LearnerKind { random_forest, gbm };

inline const char* to_string(LearnerKind k) { return k == LearnerKind::random_forest ? "rf" : "gbm"; }

inline LearnerKind parse_learner(const std::string& s) {
  if (s == "rf" || s == "random_forest") return LearnerKind::random_forest;
  if (s == "gbm") return LearnerKind::gbm;
  throw ConfigError("unknown learner '" + s + "' (expected rf or gbm)");
}

struct Hyperparameters {
  std::size_t n_trees = 100;      // rf trees / gbm rounds
  std::size_t max_depth = 0;      // rf: 0 = unlimited
  std::size_t gbm_depth = 3;
  double learning_rate = 0.1;
  double min_leaf = 1.0;
  std::size_t mtry = 0;           // rf: 0 = ceil(sqrt(p))
  double subsample = 1.0;         // gbm row fraction per round

  friend bool operator==(const Hyperparameters&, const Hyperparameters&) = default;
};

struct Model {
  LearnerKind kind = LearnerKind::random_forest;
  Hyperparameters params;
  std::uint64_t seed = 0;
  std::vector<std::string> feature_names;
  double base_score = 0.0;  // gbm initial log-odds
  std::vector<Tree> trees;

  /// Probability of indoor.
  double score(const NodeFeatureVector& x) const {
    if (kind == LearnerKind::random_forest) {
      if (trees.empty()) return 0.5;
      std::size_t votes = 0;
      for (const auto& t : trees) votes += t.predict(x) >= 0.5;
      return static_cast<double>(votes) / static_cast<double>(trees.size());
    }
    double f = base_score;
    for (const auto& t : trees) f += params.learning_rate * t.predict(x);
    return 1.0 / (1.0 + std::exp(-f));
  }

  friend bool operator==(const Model&, const Model&) = default;
};

inline Model train(const Dataset& data, LearnerKind kind, const Hyperparameters& params = {},
                   std::uint64_t seed = 0) {
  if (data.size() < 2) throw InsufficientDataError("need at least two training instances");
  double w_total = 0, w_indoor = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    if (data.w[i] <= 0) throw InsufficientDataError("instance weights must be positive");
    w_total += data.w[i];
    w_indoor += data.y[i] * data.w[i];
  }
  if (w_indoor == 0 || w_indoor == w_total) throw DegenerateLabelsError("training data holds a single class");

  Model model;
  model.kind = kind;
  model.params = params;
  model.seed = seed;
  model.feature_names = data.names;
  std::mt19937_64 rng(seed);
  const std::size_t n = data.size();
  const std::size_t p = data.names.size();
  std::vector<double> target(data.y.begin(), data.y.end());

  if (kind == LearnerKind::random_forest) {
    TreeParams tp;
    tp.criterion = SplitCriterion::gini;
    tp.max_depth = params.max_depth;
    tp.min_leaf = params.min_leaf;
    tp.features_per_split =
        params.mtry != 0 ? params.mtry : static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(p))));
    const std::vector<double> unit(n, 1.0);
    std::discrete_distribution<std::size_t> draw(data.w.begin(), data.w.end());
    for (std::size_t t = 0; t < params.n_trees; ++t) {
      std::vector<double> multiplicity(n, 0.0);
      for (std::size_t k = 0; k < n; ++k) multiplicity[draw(rng)] += 1.0;
      std::vector<std::size_t> in_bag;
      for (std::size_t i = 0; i < n; ++i)
        if (multiplicity[i] > 0) in_bag.push_back(i);
      model.trees.push_back(grow_tree(data.rows, target, unit, multiplicity, std::move(in_bag), tp, rng));
    }
    return model;
  }

  model.base_score = std::log(w_indoor / (w_total - w_indoor));
  TreeParams tp;
  tp.criterion = SplitCriterion::squared_error;
  tp.max_depth = params.gbm_depth;
  tp.min_leaf = params.min_leaf;
  std::vector<double> f(n, model.base_score), grad(n), hess(n);
  std::bernoulli_distribution keep(std::clamp(params.subsample, 0.0, 1.0));
  for (std::size_t round = 0; round < params.n_trees; ++round) {
    for (std::size_t i = 0; i < n; ++i) {
      const double prob = 1.0 / (1.0 + std::exp(-f[i]));
      grad[i] = target[i] - prob;
      hess[i] = prob * (1.0 - prob);
    }
    std::vector<std::size_t> rows;
    for (std::size_t i = 0; i < n; ++i)
      if (params.subsample >= 1.0 || keep(rng)) rows.push_back(i);
    if (rows.empty()) continue;
    Tree tree = grow_tree(data.rows, grad, hess, data.w, std::move(rows), tp, rng);
    for (std::size_t i = 0; i < n; ++i) f[i] += params.learning_rate * tree.predict(data.rows[i]);
    model.trees.push_back(std::move(tree));
  }
  return model;
}

// ---------------------------------------------------------------------------
// Prediction

struct Prediction {
  double threshold = 0.5;
  std::vector<double> node_scores;
  std::vector<double> fingerprint_scores;
  std::vector<NodeId> fingerprint_nodes;

  static Label hard_label(double score, double threshold) {
    return score >= threshold ? Label::indoor : Label::outdoor;
  }
  Label fingerprint_label(std::size_t i) const { return hard_label(fingerprint_scores.at(i), threshold); }
  Label node_label(NodeId x) const { return hard_label(node_scores.at(x), threshold); }
};

inline Prediction predict(const Model& model, const FeatureTable& features, const ClusterAssignment& assignment,
                          double threshold = 0.5) {
  if (features.names != model.feature_names) throw FeatureMismatchError("feature columns differ from the model's");
  if (features.rows.size() != assignment.cluster_count())
    throw FeatureMismatchError("one feature row per cluster required");
  Prediction pred;
  pred.threshold = threshold;
  pred.node_scores.reserve(features.rows.size());
  for (const auto& row : features.rows) {
    if (row.size() != model.feature_names.size()) throw FeatureMismatchError("feature row has the wrong width");
    pred.node_scores.push_back(model.score(row));
  }
  pred.fingerprint_nodes = assignment.cluster_of;
  for (NodeId c : assignment.cluster_of) pred.fingerprint_scores.push_back(pred.node_scores[c]);
  return pred;
}

/// Prediction export: one {"seq","cluster","score","label"} object per
/// fingerprint.
inline void write_predictions(std::ostream& out, const Prediction& p) {
  for (std::size_t i = 0; i < p.fingerprint_scores.size(); ++i) {
    nlohmann::json j{{"seq", i},
                     {"cluster", p.fingerprint_nodes[i]},
                     {"score", p.fingerprint_scores[i]},
                     {"label", to_string(p.fingerprint_label(i))}};
    out << j.dump() << '\n';
  }
}

inline Prediction read_predictions(std::istream& in, double threshold = 0.5) {
  Prediction p;
  p.threshold = threshold;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      if (j.at("seq").get<std::size_t>() != p.fingerprint_scores.size())
        throw FormatError("prediction records out of order");
      const auto node = j.at("cluster").get<NodeId>();
      const double s = j.at("score").get<double>();
      p.fingerprint_nodes.push_back(node);
      p.fingerprint_scores.push_back(s);
      if (node >= p.node_scores.size()) p.node_scores.resize(node + 1, 0.0);
      p.node_scores[node] = s;
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed prediction record: ") + e.what());
    }
  }
  return p;
}

// ---------------------------------------------------------------------------
// Model text format. Reals are written as hex floats so a model round-trips
// exactly:
//   iodetect-model 1
//   kind rf|gbm
//   seed <u64>
//   n_trees .. gbm_depth .. max_depth .. learning_rate .. min_leaf .. mtry .. subsample ..
//   base_score <hex>
//   features <count> <name>...
//   trees <count>
//   tree <nodes>
//   <feature> <threshold> <left> <right> <value>   (one line per node)

namespace detail {

inline std::string hex(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%a", v);
  return buf;
}

inline double parse_real(const std::string& s) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') throw FormatError("bad real '" + s + "' in model file");
  return v;
}

}  // namespace detail

inline void write_model(std::ostream& out, const Model& m) {
  out << "iodetect-model 1\n";
  out << "kind " << to_string(m.kind) << '\n';
  out << "seed " << m.seed << '\n';
  out << "n_trees " << m.params.n_trees << '\n';
  out << "max_depth " << m.params.max_depth << '\n';
  out << "gbm_depth " << m.params.gbm_depth << '\n';
  out << "learning_rate " << detail::hex(m.params.learning_rate) << '\n';
  out << "min_leaf " << detail::hex(m.params.min_leaf) << '\n';
  out << "mtry " << m.params.mtry << '\n';
  out << "subsample " << detail::hex(m.params.subsample) << '\n';
  out << "base_score " << detail::hex(m.base_score) << '\n';
  out << "features " << m.feature_names.size();
  for (const auto& n : m.feature_names) out << ' ' << n;
  out << '\n';
  out << "trees " << m.trees.size() << '\n';
  for (const auto& t : m.trees) {
    out << "tree " << t.nodes.size() << '\n';
    for (const auto& n : t.nodes)
      out << n.feature << ' ' << detail::hex(n.threshold) << ' ' << n.left << ' ' << n.right << ' '
          << detail::hex(n.value) << '\n';
  }
}

inline Model read_model(std::istream& in) {
  const auto expect = [&](const char* key) {
    std::string k;
    if (!(in >> k) || k != key) throw FormatError(std::string("model file: expected '") + key + "'");
  };
  const auto word = [&]() {
    std::string w;
    if (!(in >> w)) throw FormatError("model file truncated");
    return w;
  };
  const auto count = [&]() {
    const auto w = word();
    try {
      std::size_t used = 0;
      const auto v = std::stoull(w, &used);
      if (used != w.size()) throw std::invalid_argument(w);
      return static_cast<std::size_t>(v);
    } catch (const std::exception&) {
      throw FormatError("bad integer '" + w + "' in model file");
    }
  };

  const auto signed_int = [&]() {
    const auto w = word();
    try {
      std::size_t used = 0;
      const int v = std::stoi(w, &used);
      if (used != w.size()) throw std::invalid_argument(w);
      return v;
    } catch (const std::exception&) {
      throw FormatError("bad integer '" + w + "' in model file");
    }
  };

  Model m;
  expect("iodetect-model");
  if (word() != "1") throw FormatError("unsupported model version");
  expect("kind");
  m.kind = parse_learner(word());
  expect("seed");
  m.seed = count();
  expect("n_trees");
  m.params.n_trees = count();
  expect("max_depth");
  m.params.max_depth = count();
  expect("gbm_depth");
  m.params.gbm_depth = count();
  expect("learning_rate");
  m.params.learning_rate = detail::parse_real(word());
  expect("min_leaf");
  m.params.min_leaf = detail::parse_real(word());
  expect("mtry");
  m.params.mtry = count();
  expect("subsample");
  m.params.subsample = detail::parse_real(word());
  expect("base_score");
  m.base_score = detail::parse_real(word());
  expect("features");
  m.feature_names.resize(count());
  for (auto& n : m.feature_names) n = word();
  expect("trees");
  m.trees.resize(count());
  for (auto& t : m.trees) {
    expect("tree");
    t.nodes.resize(count());
    for (auto& n : t.nodes) {
      n.feature = signed_int();
      n.threshold = detail::parse_real(word());
      n.left = signed_int();
      n.right = signed_int();
      n.value = detail::parse_real(word());
      const auto limit = static_cast<int>(t.nodes.size());
      if (n.feature >= static_cast<int>(m.feature_names.size()) || n.left >= limit || n.right >= limit ||
          (n.feature >= 0 && (n.left <= 0 || n.right <= 0)))
        throw FormatError("model file: tree node out of range");
    }
    if (t.nodes.empty()) throw FormatError("model file: empty tree");
  }
  return m;
}

inline void write_model(const std::string& path, const Model& m) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  write_model(out, m);
}

inline Model read_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open model '" + path + "'");
  return read_model(in);
}

}  // namespace iodetect
