#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "iodetect/iodetect.hpp"

namespace testing_support {

using namespace iodetect;

using Scan = std::vector<std::pair<int, int>>;  // (ap number, dBm)

inline ApId ap(int k) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "02:00:00:00:%02x:%02x", (k >> 8) & 0xff, k & 0xff);
  return ApId::parse(buf);
}

inline ScanRecord record(std::int64_t seq, const Scan& scan, Label label = Label::unlabeled,
                         std::int64_t period_ms = 3000) {
  ScanRecord r;
  r.device_id = "dev";
  r.seq = seq;
  r.timestamp_ms = 1'000'000 + seq * period_ms;
  for (const auto& [a, dbm] : scan) r.readings.push_back({ap(a), dbm});
  r.label = label;
  return r;
}

inline FingerprintMatrix matrix(const std::vector<Scan>& scans, const std::vector<Label>& labels = {}) {
  std::vector<ScanRecord> records;
  for (std::size_t i = 0; i < scans.size(); ++i)
    records.push_back(record(static_cast<std::int64_t>(i), scans[i], labels.empty() ? Label::unlabeled : labels[i]));
  return ingest(records);
}

inline Fingerprint fingerprint(const Scan& scan) { return matrix({scan}).fingerprints.front(); }

/// Fingerprints drawn around a set of prototypes so that many pairs fall
/// near the clustering radius, with runs of empty scans mixed in.
inline std::vector<Scan> random_scans(std::size_t count, std::uint64_t seed, std::size_t prototypes = 60,
                                      int ap_pool = 300, double empty_prob = 0.08) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> pick_ap(0, ap_pool - 1), strength(-90, -35), aps(3, 12);
  std::normal_distribution<double> noise(0.0, 4.0);
  std::bernoulli_distribution drop(0.15), empty(empty_prob), stay(0.7);
  std::vector<Scan> protos(prototypes);
  for (auto& p : protos) {
    std::map<int, int> chosen;
    const int k = aps(rng);
    while (static_cast<int>(chosen.size()) < k) chosen[pick_ap(rng)] = strength(rng);
    p.assign(chosen.begin(), chosen.end());
  }
  std::uniform_int_distribution<std::size_t> pick_proto(0, prototypes - 1);
  std::vector<Scan> out;
  std::size_t proto = pick_proto(rng);
  bool in_empty_run = false;
  for (std::size_t i = 0; i < count; ++i) {
    if (!stay(rng)) proto = pick_proto(rng);
    if (in_empty_run ? stay(rng) : empty(rng)) {
      in_empty_run = true;
      out.emplace_back();
      continue;
    }
    in_empty_run = false;
    Scan s;
    for (const auto& [a, dbm] : protos[proto])
      if (!drop(rng)) s.push_back({a, std::clamp(dbm + static_cast<int>(std::lround(noise(rng))), -99, -20)});
    out.push_back(std::move(s));
  }
  return out;
}

/// Canonical partition: members sorted, groups sorted by smallest member.
inline std::vector<std::vector<std::size_t>> canonical(const std::vector<std::size_t>& cluster_of) {
  std::map<std::size_t, std::vector<std::size_t>> groups;
  for (std::size_t i = 0; i < cluster_of.size(); ++i) groups[cluster_of[i]].push_back(i);
  std::vector<std::vector<std::size_t>> out;
  for (auto& [id, g] : groups) out.push_back(std::move(g));
  std::sort(out.begin(), out.end());
  return out;
}

inline std::vector<std::size_t> to_sizes(const std::vector<ClusterId>& ids) { return {ids.begin(), ids.end()}; }

/// Union-find over every pair within `eps`, evaluated by the unindexed
/// distance function.
inline std::vector<std::size_t> components_oracle(const FingerprintMatrix& m, double eps) {
  const std::size_t n = m.scan_count();
  std::vector<std::size_t> parent(n);
  std::iota(parent.begin(), parent.end(), std::size_t{0});
  const auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::vector<std::vector<RankedAp<ApId>>> ranks;
  for (const auto& f : m.fingerprints) ranks.push_back(rank_fingerprint(f));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (rank_distance<ApId>(ranks[i], ranks[j], i, j).value <= eps) parent[find(i)] = find(j);
  std::vector<std::size_t> out(n);
  for (std::size_t i = 0; i < n; ++i) out[i] = find(i);
  return out;
}

/// Spearman distance with absent APs materialised at half the smallest
/// received power and ranked over the full union vector.
inline double explicit_epsilon_distance(const std::map<int, double>& x, const std::map<int, double>& y) {
  double smallest = 1e300;
  for (const auto* f : {&x, &y})
    for (const auto& [a, p] : *f) smallest = std::min(smallest, p);
  const double eps = smallest / 2.0;
  std::map<int, std::pair<double, double>> joint;
  for (const auto& [a, p] : x) joint[a] = {p, eps};
  for (const auto& [a, p] : y) {
    auto it = joint.find(a);
    if (it == joint.end()) joint[a] = {eps, p};
    else it->second.second = p;
  }
  const auto ranks = [](const std::vector<double>& v) {
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
      double greater = 0, equal = 0;
      for (double w : v) {
        if (w > v[i]) greater += 1;
        else if (w == v[i]) equal += 1;
      }
      r[i] = greater + (equal + 1.0) / 2.0;
    }
    return r;
  };
  std::vector<double> vx, vy;
  for (const auto& [a, pq] : joint) {
    vx.push_back(pq.first);
    vy.push_back(pq.second);
  }
  const auto rx = ranks(vx), ry = ranks(vy);
  double sum = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) sum += (rx[i] - ry[i]) * (rx[i] - ry[i]);
  const double n = static_cast<double>(rx.size());
  return 6.0 * sum / (n * (n * n - 1.0));
}

inline std::map<int, double> power_map(const Scan& s) {
  std::map<int, double> out;
  for (const auto& [a, dbm] : s) out[a] = rssi_to_power(dbm);
  return out;
}

/// Random pair with 5-15 APs each and about 30% of the smaller side shared.
inline std::pair<Scan, Scan> random_pair(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> size(5, 15), dbm(-95, -30);
  const int kx = size(rng), ky = size(rng);
  const int shared = std::max(1, static_cast<int>(std::lround(0.3 * std::min(kx, ky))));
  Scan x, y;
  int next = 0;
  for (int i = 0; i < shared; ++i, ++next) {
    x.push_back({next, dbm(rng)});
    y.push_back({next, dbm(rng)});
  }
  for (int i = shared; i < kx; ++i) x.push_back({next++, dbm(rng)});
  for (int i = shared; i < ky; ++i) y.push_back({next++, dbm(rng)});
  return {x, y};
}

/// Feature values computed by materialising each neighbourhood pool.
inline std::vector<double> features_oracle(const TransitionGraph& g, const FingerprintMatrix& m, NodeId x) {
  const std::size_t n = g.node_count();
  std::vector<std::size_t> dist(n, SIZE_MAX);
  std::vector<NodeId> queue{x};
  dist[x] = 0;
  for (std::size_t h = 0; h < queue.size(); ++h)
    for (NodeId y : g.neighbors(queue[h]))
      if (dist[y] == SIZE_MAX) {
        dist[y] = dist[queue[h]] + 1;
        queue.push_back(y);
      }
  const auto pool = [&](std::size_t d) {
    std::vector<NodeId> out;
    for (NodeId y = 0; y < n; ++y)
      if (dist[y] <= d) out.push_back(y);
    return out;
  };
  std::vector<double> row;
  for (std::size_t d = 2; d <= 6; ++d) row.push_back(static_cast<double>(pool(d).size()));
  for (std::size_t d = 0; d <= 4; ++d) {
    std::vector<int> dbms;
    for (NodeId y : pool(d))
      for (auto i : g.members(y))
        for (const auto& r : m.fingerprints[i].readings) dbms.push_back(r.rssi_dbm);
    row.push_back(dbms.empty() ? -100.0
                               : std::accumulate(dbms.begin(), dbms.end(), 0.0) / static_cast<double>(dbms.size()));
  }
  for (std::size_t d = 0; d <= 4; ++d) {
    double aps = 0, scans = 0;
    for (NodeId y : pool(d))
      for (auto i : g.members(y)) {
        aps += static_cast<double>(m.fingerprints[i].size());
        scans += 1;
      }
    row.push_back(aps / scans);
  }
  for (std::size_t d = 0; d <= 4; ++d) {
    const auto p = pool(d);
    double sizes = 0;
    for (NodeId y : p) sizes += static_cast<double>(g.members(y).size());
    row.push_back(sizes / static_cast<double>(p.size()));
  }
  return row;
}

/// O(n^2) pair counting: P(score_pos > score_neg) + P(tie)/2.
inline double auc_oracle(const std::vector<std::pair<double, bool>>& s) {
  double wins = 0, pairs = 0;
  for (const auto& a : s)
    if (a.second)
      for (const auto& b : s)
        if (!b.second) {
          pairs += 1;
          wins += a.first > b.first ? 1.0 : a.first == b.first ? 0.5 : 0.0;
        }
  return wins / pairs;
}

/// Prediction whose fingerprints each form their own node.
inline Prediction prediction_from_scores(const std::vector<double>& scores, double threshold = 0.5) {
  Prediction p;
  p.threshold = threshold;
  p.node_scores = scores;
  p.fingerprint_scores = scores;
  for (std::size_t i = 0; i < scores.size(); ++i) p.fingerprint_nodes.push_back(static_cast<NodeId>(i));
  return p;
}

}  // namespace testing_support
