#pragma once

// Sparse-adapted Spearman rank distance between two fingerprints.
//
// Within a pair, APs received by only one side are ranked after every AP the
// other side received, all tied with each other. For a fingerprint with k
// received APs and m APs it lacks from the partner, those m share the average
// rank k + (m + 1) / 2, so the partner-relative ranks follow from the
// fingerprint's own ranks without materialising a global epsilon.

#include <algorithm>
#include <cstddef>
#include <numeric>
#include <span>
#include <vector>

#include "iodetect/core.hpp"

namespace iodetect {

template <typename Key>
struct RankedAp {
  Key ap;
  double rank = 0.0;

  friend bool operator==(const RankedAp&, const RankedAp&) = default;
};

/// Fractional ranks (1 = strongest, ties averaged) of `values`, returned in
/// input order.
template <typename T>
std::vector<double> descending_average_ranks(std::span<const T> values) {
  const std::size_t k = values.size();
  std::vector<std::size_t> order(k);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  std::vector<double> ranks(k);
  for (std::size_t lo = 0; lo < k;) {
    std::size_t hi = lo + 1;
    while (hi < k && values[order[hi]] == values[order[lo]]) ++hi;
    const double avg = (static_cast<double>(lo + 1) + static_cast<double>(hi)) / 2.0;
    for (std::size_t p = lo; p < hi; ++p) ranks[order[p]] = avg;
    lo = hi;
  }
  return ranks;
}

/// Intra-fingerprint ranks keyed by AP, in AP order.
inline std::vector<RankedAp<ApId>> rank_fingerprint(const Fingerprint& f) {
  std::vector<double> powers;
  powers.reserve(f.size());
  for (const auto& r : f.readings) powers.push_back(r.power);
  const auto ranks = descending_average_ranks<double>(powers);
  std::vector<RankedAp<ApId>> out;
  out.reserve(f.size());
  for (std::size_t i = 0; i < f.size(); ++i) out.push_back({f.readings[i].ap, ranks[i]});
  return out;
}

enum class DistanceCase {
  empty_adjacent,     // both empty, collected one after the other
  empty_nonadjacent,  // both empty, not consecutive
  disjoint,           // no AP in common
  single_identical,   // the same single AP on both sides
  spearman,           // 1 - rho over the pairwise ranking
  empty_self,         // an empty fingerprint compared with itself
};

inline const char* to_string(DistanceCase c) {
  switch (c) {
    case DistanceCase::empty_adjacent:
      return "empty-adjacent";
    case DistanceCase::empty_nonadjacent:
      return "empty-nonadjacent";
    case DistanceCase::disjoint:
      return "disjoint";
    case DistanceCase::single_identical:
      return "single-identical";
    case DistanceCase::spearman:
      return "spearman";
    case DistanceCase::empty_self:
      return "empty-self";
  }
  return "?";
}

struct DistanceValue {
  double value = 0.0;
  DistanceCase kind = DistanceCase::spearman;

  /// Spearman's rho; meaningful only for the spearman case.
  double rho() const noexcept { return 1.0 - value; }
};

namespace detail {

template <typename Key>
std::size_t count_shared(std::span<const RankedAp<Key>> x, std::span<const RankedAp<Key>> y) {
  std::size_t shared = 0;
  for (std::size_t a = 0, b = 0; a < x.size() && b < y.size();) {
    if (x[a].ap < y[b].ap)
      ++a;
    else if (y[b].ap < x[a].ap)
      ++b;
    else
      ++shared, ++a, ++b;
  }
  return shared;
}

}  // namespace detail

/// Sum of squared rank differences over the union of both key sets.
/// `x` and `y` are intra-fingerprint ranks sorted by key; `shared` is the
/// size of the key intersection.
template <typename Key>
double sum_squared_rank_diff(std::span<const RankedAp<Key>> x, std::span<const RankedAp<Key>> y,
                             std::size_t shared) {
  const double kx = static_cast<double>(x.size());
  const double ky = static_cast<double>(y.size());
  const double absent_x = kx + (static_cast<double>(y.size() - shared) + 1.0) / 2.0;
  const double absent_y = ky + (static_cast<double>(x.size() - shared) + 1.0) / 2.0;
  double sum = 0.0;
  std::size_t a = 0, b = 0;
  while (a < x.size() || b < y.size()) {
    double d;
    if (b == y.size() || (a < x.size() && x[a].ap < y[b].ap)) {
      d = x[a++].rank - absent_y;
    } else if (a == x.size() || y[b].ap < x[a].ap) {
      d = absent_x - y[b++].rank;
    } else {
      d = x[a++].rank - y[b++].rank;
    }
    sum += d * d;
  }
  return sum;
}

/// Distance over precomputed intra-fingerprint ranks; `i`, `j` are the scan
/// positions of the two fingerprints within one matrix.
template <typename Key>
DistanceValue rank_distance(std::span<const RankedAp<Key>> x, std::span<const RankedAp<Key>> y, std::size_t i,
                            std::size_t j) {
  if (x.empty() && y.empty()) {
    if (i == j) return {0.0, DistanceCase::empty_self};
    const std::size_t gap = i > j ? i - j : j - i;
    return gap == 1 ? DistanceValue{0.0, DistanceCase::empty_adjacent}
                    : DistanceValue{2.0, DistanceCase::empty_nonadjacent};
  }
  const std::size_t shared = detail::count_shared(x, y);
  if (shared == 0) return {2.0, DistanceCase::disjoint};
  if (shared == 1 && x.size() == 1 && y.size() == 1) return {0.0, DistanceCase::single_identical};

  const double n = static_cast<double>(x.size() + y.size() - shared);
  const double sum_sq = sum_squared_rank_diff(x, y, shared);
  return {6.0 * sum_sq / (n * (n * n - 1.0)), DistanceCase::spearman};
}

inline DistanceValue distance(const Fingerprint& x, const Fingerprint& y, std::size_t i, std::size_t j) {
  const auto rx = rank_fingerprint(x);
  const auto ry = rank_fingerprint(y);
  return rank_distance<ApId>(rx, ry, i, j);
}

/// Both rank vectors over the union of received APs.
struct PairwiseRanking {
  std::vector<ApId> union_aps;
  std::vector<double> ranks_x;
  std::vector<double> ranks_y;

  std::size_t n() const noexcept { return union_aps.size(); }
};

inline PairwiseRanking pairwise_ranking(const Fingerprint& x, const Fingerprint& y) {
  if (is_empty(x) || is_empty(y)) throw EmptyFingerprintError("pairwise ranking needs two non-empty fingerprints");
  const auto rx = rank_fingerprint(x);
  const auto ry = rank_fingerprint(y);
  const std::size_t shared = detail::count_shared<ApId>(rx, ry);
  if (shared == 0) throw DisjointError("fingerprints share no AP");

  const double absent_x = static_cast<double>(rx.size()) + (static_cast<double>(ry.size() - shared) + 1.0) / 2.0;
  const double absent_y = static_cast<double>(ry.size()) + (static_cast<double>(rx.size() - shared) + 1.0) / 2.0;
  PairwiseRanking out;
  std::size_t a = 0, b = 0;
  while (a < rx.size() || b < ry.size()) {
    if (b == ry.size() || (a < rx.size() && rx[a].ap < ry[b].ap)) {
      out.union_aps.push_back(rx[a].ap);
      out.ranks_x.push_back(rx[a++].rank);
      out.ranks_y.push_back(absent_y);
    } else if (a == rx.size() || ry[b].ap < rx[a].ap) {
      out.union_aps.push_back(ry[b].ap);
      out.ranks_x.push_back(absent_x);
      out.ranks_y.push_back(ry[b++].rank);
    } else {
      out.union_aps.push_back(rx[a].ap);
      out.ranks_x.push_back(rx[a++].rank);
      out.ranks_y.push_back(ry[b++].rank);
    }
  }
  return out;
}

}  // namespace iodetect
