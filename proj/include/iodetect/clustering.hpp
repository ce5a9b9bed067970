#pragma once

// Density clustering of fingerprints.
//
// With min_pts == 1 every fingerprint is a core point, so DBSCAN's
// density-connected sets are exactly the connected components of the graph
// joining pairs within eps. Each fingerprint is region-queried once.

#include <cstdint>
#include <deque>
#include <fstream>
#include <limits>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iodetect/fp_index.hpp"

namespace iodetect {

using ClusterId = std::uint32_t;

struct ClusterParams {
  double eps = 0.22;
  std::size_t min_pts = 1;

  void validate() const {
    if (!(eps >= 0.0 && eps < 2.0)) throw ConfigError("eps must lie in [0, 2), got " + std::to_string(eps));
    if (min_pts < 1) throw ConfigError("min_pts must be at least 1");
  }
};

struct ClusterAssignment {
  std::vector<ClusterId> cluster_of;              // per fingerprint
  std::vector<std::vector<FpIndex>> members;      // per cluster, ascending

  std::size_t cluster_count() const noexcept { return members.size(); }
  std::size_t size(ClusterId c) const { return members.at(c).size(); }

  /// Builds the member lists from a label vector, renumbering clusters by
  /// their smallest member.
  static ClusterAssignment from_labels(const std::vector<std::size_t>& labels) {
    constexpr auto unset = std::numeric_limits<ClusterId>::max();
    std::vector<ClusterId> remap;
    ClusterAssignment a;
    a.cluster_of.resize(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] >= remap.size()) remap.resize(labels[i] + 1, unset);
      auto& id = remap[labels[i]];
      if (id == unset) {
        id = static_cast<ClusterId>(a.members.size());
        a.members.emplace_back();
      }
      a.cluster_of[i] = id;
      a.members[id].push_back(static_cast<FpIndex>(i));
    }
    return a;
  }

  friend bool operator==(const ClusterAssignment&, const ClusterAssignment&) = default;
};

inline ClusterAssignment cluster(const FingerprintIndex& index, const ClusterParams& params = {}) {
  params.validate();
  constexpr auto unset = std::numeric_limits<std::size_t>::max();
  const std::size_t n = index.size();
  std::vector<std::size_t> label(n, unset);
  QueryScratch scratch(n);
  std::size_t next = 0;

  if (params.min_pts == 1) {
    std::deque<FpIndex> frontier;
    for (FpIndex seed = 0; seed < n; ++seed) {
      if (label[seed] != unset) continue;
      label[seed] = next;
      frontier.push_back(seed);
      while (!frontier.empty()) {
        const FpIndex p = frontier.front();
        frontier.pop_front();
        for (FpIndex nb : index.region_query(p, params.eps, scratch)) {
          if (label[nb] == unset) {
            label[nb] = next;
            frontier.push_back(nb);
          }
        }
      }
      ++next;
    }
    return ClusterAssignment::from_labels(label);
  }

  // General DBSCAN; noise points end up as singleton clusters.
  std::vector<char> core(n, 0);
  std::vector<std::vector<FpIndex>> hood(n);
  for (FpIndex p = 0; p < n; ++p) {
    hood[p] = index.region_query(p, params.eps, scratch);
    core[p] = hood[p].size() >= params.min_pts;
  }
  for (FpIndex seed = 0; seed < n; ++seed) {
    if (label[seed] != unset || !core[seed]) continue;
    label[seed] = next;
    std::deque<FpIndex> frontier{seed};
    while (!frontier.empty()) {
      const FpIndex p = frontier.front();
      frontier.pop_front();
      if (!core[p]) continue;
      for (FpIndex nb : hood[p]) {
        if (label[nb] == unset) {
          label[nb] = next;
          frontier.push_back(nb);
        }
      }
    }
    ++next;
  }
  for (FpIndex p = 0; p < n; ++p)
    if (label[p] == unset) label[p] = next++;
  return ClusterAssignment::from_labels(label);
}

inline ClusterAssignment cluster(const FingerprintMatrix& m, const ClusterParams& params = {}) {
  return cluster(FingerprintIndex(m), params);
}

// Cluster export: one {"seq":..,"cluster":..} object per line.

inline void write_assignment(std::ostream& out, const ClusterAssignment& a) {
  for (std::size_t i = 0; i < a.cluster_of.size(); ++i)
    out << nlohmann::json{{"seq", i}, {"cluster", a.cluster_of[i]}}.dump() << '\n';
}

inline void write_assignment(const std::string& path, const ClusterAssignment& a) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  write_assignment(out, a);
}

inline ClusterAssignment read_assignment(std::istream& in) {
  std::vector<std::size_t> labels;
  std::string line;
  while (std::getline(in, line)) {
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const auto j = nlohmann::json::parse(line);
      const auto seq = j.at("seq").get<std::size_t>();
      if (seq != labels.size()) throw CoverageError("cluster file out of order at seq " + std::to_string(seq));
      labels.push_back(j.at("cluster").get<std::size_t>());
    } catch (const nlohmann::json::exception& e) {
      throw FormatError(std::string("malformed cluster record: ") + e.what());
    }
  }
  return ClusterAssignment::from_labels(labels);
}

inline ClusterAssignment read_assignment(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open cluster file '" + path + "'");
  return read_assignment(in);
}

}  // namespace iodetect
