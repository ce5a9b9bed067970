#pragma once

// Neighbourhood features of transition-graph nodes.
//
// For a node x and hop bound d the pool is every fingerprint belonging to a
// cluster in N_x(d):
//   neighbors_d  |N_x(d)|
//   power_d      mean dBm over all readings in the pool (-100 if none)
//   aps_d        readings / fingerprints in the pool
//   fps_d        mean cluster size over N_x(d)

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/distributions/students_t.hpp>

#include "iodetect/transition_graph.hpp"

namespace iodetect {

inline constexpr double kNoReadingPowerDbm = -100.0;

enum class FeatureFamily { neighbors, power, aps, fingerprints };

inline const char* column_prefix(FeatureFamily f) {
  switch (f) {
    case FeatureFamily::neighbors:
      return "neighbors";
    case FeatureFamily::power:
      return "power";
    case FeatureFamily::aps:
      return "aps";
    case FeatureFamily::fingerprints:
      return "fps";
  }
  return "?";
}

struct HopRange {
  std::size_t lo = 0;
  std::size_t hi = 0;  // inclusive

  friend bool operator==(const HopRange&, const HopRange&) = default;
};

/// Which hop bounds are extracted for each feature family; a family without
/// a range is skipped.
struct FeatureLayout {
  std::optional<HopRange> neighbors = HopRange{2, 6};
  std::optional<HopRange> power = HopRange{0, 4};
  std::optional<HopRange> aps = HopRange{0, 4};
  std::optional<HopRange> fingerprints = HopRange{0, 4};

  /// Default 20-feature layout.
  static FeatureLayout standard() { return {}; }

  /// Single-scan/cluster statistics only (no graph context).
  static FeatureLayout local_only() { return {std::nullopt, HopRange{0, 0}, HopRange{0, 0}, HopRange{0, 0}}; }

  /// Every family at every bound up to `max_hops`.
  static FeatureLayout exhaustive(std::size_t max_hops) {
    return {HopRange{0, max_hops}, HopRange{0, max_hops}, HopRange{0, max_hops}, HopRange{0, max_hops}};
  }

  const std::optional<HopRange>& range(FeatureFamily f) const {
    switch (f) {
      case FeatureFamily::neighbors:
        return neighbors;
      case FeatureFamily::power:
        return power;
      case FeatureFamily::aps:
        return aps;
      default:
        return fingerprints;
    }
  }

  struct Column {
    FeatureFamily family;
    std::size_t hops;
  };

  std::vector<Column> columns() const {
    std::vector<Column> out;
    for (auto fam : {FeatureFamily::neighbors, FeatureFamily::power, FeatureFamily::aps, FeatureFamily::fingerprints})
      if (const auto& r = range(fam))
        for (std::size_t d = r->lo; d <= r->hi; ++d) out.push_back({fam, d});
    return out;
  }

  std::vector<std::string> names() const {
    std::vector<std::string> out;
    for (const auto& c : columns()) out.push_back(std::string(column_prefix(c.family)) + "_d" + std::to_string(c.hops));
    return out;
  }

  std::size_t max_hops() const {
    std::size_t h = 0;
    for (auto fam : {FeatureFamily::neighbors, FeatureFamily::power, FeatureFamily::aps, FeatureFamily::fingerprints})
      if (const auto& r = range(fam)) h = std::max(h, r->hi);
    return h;
  }

  void validate() const {
    for (auto fam : {FeatureFamily::neighbors, FeatureFamily::power, FeatureFamily::aps, FeatureFamily::fingerprints})
      if (const auto& r = range(fam); r && r->lo > r->hi)
        throw ConfigError(std::string("empty hop range for ") + column_prefix(fam));
  }
};

using NodeFeatureVector = std::vector<double>;

/// One row per graph node, columns named by the layout.
struct FeatureTable {
  std::vector<std::string> names;
  std::vector<NodeFeatureVector> rows;

  friend bool operator==(const FeatureTable&, const FeatureTable&) = default;
};

inline FeatureTable extract_features(const TransitionGraph& g, const FingerprintMatrix& m,
                                     const FeatureLayout& layout = FeatureLayout::standard()) {
  layout.validate();
  const std::size_t nodes = g.node_count();
  std::vector<double> readings(nodes, 0.0), dbm_sum(nodes, 0.0);
  for (NodeId x = 0; x < nodes; ++x)
    for (FpIndex i : g.members(x))
      for (const auto& r : m.fingerprints.at(i).readings) {
        readings[x] += 1.0;
        dbm_sum[x] += r.rssi_dbm;
      }

  const auto columns = layout.columns();
  const std::size_t max_hops = layout.max_hops();
  FeatureTable table{layout.names(), {}};
  table.rows.reserve(nodes);

  struct Pool {
    double nodes = 0, fps = 0, readings = 0, dbm = 0;
  };
  std::vector<Pool> cumulative(max_hops + 1);
  for (NodeId x = 0; x < nodes; ++x) {
    const auto layers = g.layers(x, max_hops);
    Pool acc;
    for (std::size_t d = 0; d <= max_hops; ++d) {
      if (d < layers.size())
        for (NodeId y : layers[d]) {
          acc.nodes += 1;
          acc.fps += static_cast<double>(g.weight(y));
          acc.readings += readings[y];
          acc.dbm += dbm_sum[y];
        }
      cumulative[d] = acc;
    }
    NodeFeatureVector row;
    row.reserve(columns.size());
    for (const auto& c : columns) {
      const Pool& p = cumulative[c.hops];
      switch (c.family) {
        case FeatureFamily::neighbors:
          row.push_back(p.nodes);
          break;
        case FeatureFamily::power:
          row.push_back(p.readings > 0 ? p.dbm / p.readings : kNoReadingPowerDbm);
          break;
        case FeatureFamily::aps:
          row.push_back(p.readings / p.fps);
          break;
        case FeatureFamily::fingerprints:
          row.push_back(p.fps / p.nodes);
          break;
      }
    }
    table.rows.push_back(std::move(row));
  }
  return table;
}

// ---------------------------------------------------------------------------
// Hop-bound selection by OLS significance

struct OlsFit {
  std::vector<double> coefficients;  // intercept first
  std::vector<double> std_errors;
  std::vector<double> t_stats;
  std::vector<double> p_values;
  std::size_t dof = 0;
};

/// Ordinary least squares with two-sided t-tests. `x` must already contain
/// the intercept column.
inline OlsFit ols(const Eigen::MatrixXd& x, const Eigen::VectorXd& y) {
  const auto n = x.rows();
  const auto p = x.cols();
  if (n <= p) throw RankDeficiencyError("need more observations than regressors");
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(x);
  if (qr.rank() < p) throw RankDeficiencyError("design matrix is collinear (rank " + std::to_string(qr.rank()) +
                                               " of " + std::to_string(p) + ")");
  const Eigen::VectorXd beta = qr.solve(y);
  const Eigen::VectorXd resid = y - x * beta;
  const double sigma2 = resid.squaredNorm() / static_cast<double>(n - p);

  // diag((X'X)^-1) from the triangular factor: X P = Q R.
  const Eigen::MatrixXd r = qr.matrixR().topLeftCorner(p, p).template triangularView<Eigen::Upper>();
  const Eigen::MatrixXd rinv =
      r.template triangularView<Eigen::Upper>().solve(Eigen::MatrixXd::Identity(p, p));
  const Eigen::VectorXd diag_pivoted = rinv.rowwise().squaredNorm();
  Eigen::VectorXd diag(p);
  const auto& perm = qr.colsPermutation().indices();
  for (Eigen::Index k = 0; k < p; ++k) diag[perm[k]] = diag_pivoted[k];

  OlsFit fit;
  fit.dof = static_cast<std::size_t>(n - p);
  boost::math::students_t dist(static_cast<double>(fit.dof));
  for (Eigen::Index j = 0; j < p; ++j) {
    const double se = std::sqrt(sigma2 * diag[j]);
    const double t = beta[j] / se;
    fit.coefficients.push_back(beta[j]);
    fit.std_errors.push_back(se);
    fit.t_stats.push_back(t);
    fit.p_values.push_back(std::isfinite(t) ? 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(t)))
                                            : 0.0);
  }
  return fit;
}

struct FeatureSelectionEntry {
  std::string name;
  enum class Status { fitted, constant, duplicate } status = Status::fitted;
  double coefficient = std::nan("");
  double t_stat = std::nan("");
  double p_value = std::nan("");
  bool selected = false;
};

struct FeatureSelectionReport {
  static constexpr double kAlpha = 0.05;
  std::vector<FeatureSelectionEntry> entries;

  std::vector<std::string> selected() const {
    std::vector<std::string> out;
    for (const auto& e : entries)
      if (e.selected) out.push_back(e.name);
    return out;
  }
};

/// Regresses the label (indoor = 1, outdoor = 0) on every feature column and
/// flags columns with p <= 0.05. Constant columns and exact duplicates of an
/// earlier column are left out of the fit.
inline FeatureSelectionReport select_neighborhood_sizes(const std::vector<std::string>& names,
                                                        const std::vector<NodeFeatureVector>& rows,
                                                        const std::vector<Label>& labels) {
  if (rows.size() != labels.size()) throw FeatureMismatchError("one label per feature row required");
  std::size_t indoor = 0, outdoor = 0;
  for (Label l : labels) {
    if (l == Label::indoor) ++indoor;
    else if (l == Label::outdoor) ++outdoor;
    else throw DegenerateLabelsError("selection rows must be labeled");
  }
  if (indoor == 0 || outdoor == 0) throw DegenerateLabelsError("both classes are required for selection");

  FeatureSelectionReport report;
  std::vector<std::size_t> kept;
  for (std::size_t c = 0; c < names.size(); ++c) {
    FeatureSelectionEntry e;
    e.name = names[c];
    const auto same_column = [&](std::size_t other) {
      return std::all_of(rows.begin(), rows.end(), [&](const auto& r) { return r[c] == r[other]; });
    };
    const bool constant =
        std::all_of(rows.begin(), rows.end(), [&](const auto& r) { return r[c] == rows.front()[c]; });
    if (constant)
      e.status = FeatureSelectionEntry::Status::constant;
    else if (std::any_of(kept.begin(), kept.end(), same_column))
      e.status = FeatureSelectionEntry::Status::duplicate;
    else
      kept.push_back(c);
    report.entries.push_back(e);
  }

  const auto n = static_cast<Eigen::Index>(rows.size());
  Eigen::MatrixXd x(n, static_cast<Eigen::Index>(kept.size() + 1));
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    x(i, 0) = 1.0;
    for (std::size_t k = 0; k < kept.size(); ++k) x(i, static_cast<Eigen::Index>(k + 1)) = rows[i][kept[k]];
    y[i] = labels[i] == Label::indoor ? 1.0 : 0.0;
  }
  const OlsFit fit = ols(x, y);
  for (std::size_t k = 0; k < kept.size(); ++k) {
    auto& e = report.entries[kept[k]];
    e.coefficient = fit.coefficients[k + 1];
    e.t_stat = fit.t_stats[k + 1];
    e.p_value = fit.p_values[k + 1];
    e.selected = e.p_value <= FeatureSelectionReport::kAlpha;
  }
  return report;
}

// ---------------------------------------------------------------------------
// CSV feature export: feature columns, then weight and label.

inline std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline void write_feature_csv(std::ostream& out, const FeatureTable& table, const std::vector<std::size_t>& weights,
                              const std::vector<Label>& labels) {
  if (weights.size() != table.rows.size() || labels.size() != table.rows.size())
    throw FeatureMismatchError("weights and labels must match the feature rows");
  for (const auto& n : table.names) out << n << ',';
  out << "weight,label\n";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    for (double v : table.rows[r]) out << format_double(v) << ',';
    out << weights[r] << ',' << (labels[r] == Label::unlabeled ? "" : to_string(labels[r])) << '\n';
  }
}

struct FeatureCsv {
  FeatureTable table;
  std::vector<std::size_t> weights;
  std::vector<Label> labels;
};

inline FeatureCsv read_feature_csv(std::istream& in) {
  const auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
  };
  FeatureCsv csv;
  std::string line;
  if (!std::getline(in, line)) throw FormatError("feature file is empty");
  auto header = split(line);
  if (header.size() < 2 || header[header.size() - 2] != "weight" || header.back() != "label")
    throw FormatError("feature header must end with weight,label");
  csv.table.names.assign(header.begin(), header.end() - 2);
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    auto cells = split(line);
    if (cells.size() != header.size()) throw FormatError("feature row has " + std::to_string(cells.size()) + " cells");
    NodeFeatureVector row;
    for (std::size_t c = 0; c + 2 < cells.size(); ++c) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(cells[c], &used));
        if (used != cells[c].size()) throw std::invalid_argument(cells[c]);
      } catch (const std::exception&) {
        throw FormatError("bad feature value '" + cells[c] + "'");
      }
    }
    csv.table.rows.push_back(std::move(row));
    csv.weights.push_back(std::stoul(cells[cells.size() - 2]));
    const auto& l = cells.back();
    csv.labels.push_back(l == "indoor" ? Label::indoor : l == "outdoor" ? Label::outdoor : Label::unlabeled);
  }
  return csv;
}

}  // namespace iodetect
