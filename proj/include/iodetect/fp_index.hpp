#pragma once

// Inverted index from AP to the fingerprints that received it, with cached
// intra-fingerprint ranks. A region query only evaluates the distance for
// fingerprints sharing at least one AP with the query; every other
// non-empty pair is disjoint and sits at distance 2.

#include <algorithm>
#include <cstdint>
#include <span>
#include <vector>

#include "iodetect/core.hpp"
#include "iodetect/distance.hpp"

namespace iodetect {

using ApIndex = std::uint32_t;
using FpIndex = std::uint32_t;

/// Reusable visited stamps for region queries; one per querying thread.
class QueryScratch {
 public:
  explicit QueryScratch(std::size_t n = 0) : stamp_(n, 0) {}

  void begin(std::size_t n) {
    if (stamp_.size() != n) stamp_.assign(n, 0);
    if (++epoch_ == 0) {
      std::fill(stamp_.begin(), stamp_.end(), 0);
      epoch_ = 1;
    }
  }
  /// True the first time `i` is seen in the current query.
  bool visit(FpIndex i) {
    if (stamp_[i] == epoch_) return false;
    stamp_[i] = epoch_;
    return true;
  }

 private:
  std::vector<std::uint32_t> stamp_;
  std::uint32_t epoch_ = 0;
};

class FingerprintIndex {
 public:
  FingerprintIndex() = default;

  explicit FingerprintIndex(const FingerprintMatrix& m) {
    const auto& universe = m.ap_universe;
    postings_.resize(universe.size());
    ranks_.resize(m.scan_count());
    for (std::size_t i = 0; i < m.scan_count(); ++i) {
      const Fingerprint& f = m.fingerprints[i];
      if (is_empty(f)) {
        empties_.push_back(static_cast<FpIndex>(i));
        continue;
      }
      std::vector<double> powers;
      powers.reserve(f.size());
      for (const auto& r : f.readings) powers.push_back(r.power);
      const auto r = descending_average_ranks<double>(powers);
      auto& cached = ranks_[i];
      cached.reserve(f.size());
      for (std::size_t k = 0; k < f.size(); ++k) {
        // readings are AP-sorted and so is the universe, so ids ascend too
        auto it = std::lower_bound(universe.begin(), universe.end(), f.readings[k].ap);
        if (it == universe.end() || *it != f.readings[k].ap)
          throw FormatError("fingerprint AP missing from universe: " + f.readings[k].ap.str());
        const auto ap = static_cast<ApIndex>(it - universe.begin());
        cached.push_back({ap, r[k]});
        postings_[ap].push_back(static_cast<FpIndex>(i));
      }
    }
  }

  std::size_t size() const noexcept { return ranks_.size(); }

  const std::vector<FpIndex>& postings(ApIndex ap) const { return postings_.at(ap); }
  std::size_t ap_count() const noexcept { return postings_.size(); }
  std::span<const RankedAp<ApIndex>> ranks(FpIndex i) const { return ranks_.at(i); }
  const std::vector<FpIndex>& empties() const noexcept { return empties_; }

  DistanceValue distance(FpIndex i, FpIndex j) const { return rank_distance<ApIndex>(ranks_[i], ranks_[j], i, j); }

  /// All fingerprints within `eps` of fingerprint `q`, ascending.
  std::vector<FpIndex> region_query(FpIndex q, double eps, QueryScratch& scratch) const {
    if (q >= size()) throw IndexRangeError("fingerprint index " + std::to_string(q) + " out of range");
    if (!(eps >= 0.0 && eps < 2.0)) throw ConfigError("eps must lie in [0, 2)");
    std::vector<FpIndex> out;
    const auto& rq = ranks_[q];
    if (rq.empty()) {
      // only an adjacent empty fingerprint can be within eps < 2
      const FpIndex lo = q == 0 ? 0 : q - 1;
      auto it = std::lower_bound(empties_.begin(), empties_.end(), lo);
      for (; it != empties_.end() && *it <= q + 1; ++it) out.push_back(*it);
      return out;
    }
    scratch.begin(size());
    for (const auto& [ap, rank] : rq) {
      for (FpIndex c : postings_[ap]) {
        if (!scratch.visit(c)) continue;
        if (rank_distance<ApIndex>(rq, ranks_[c], q, c).value <= eps) out.push_back(c);
      }
    }
    std::sort(out.begin(), out.end());
    return out;
  }

  std::vector<FpIndex> region_query(FpIndex q, double eps) const {
    QueryScratch scratch(size());
    return region_query(q, eps, scratch);
  }

 private:
  std::vector<std::vector<FpIndex>> postings_;
  std::vector<std::vector<RankedAp<ApIndex>>> ranks_;
  std::vector<FpIndex> empties_;
};

}  // namespace iodetect
