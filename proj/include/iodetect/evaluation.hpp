#pragma once

#include <algorithm>
#include <cstdio>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "iodetect/pipeline.hpp"

namespace iodetect {

/// Mann-Whitney AUC: probability a random positive outscores a random
/// negative, ties counted one half.
inline double auc(const std::vector<std::pair<double, bool>>& scored) {
  std::size_t pos = 0;
  for (const auto& s : scored) pos += s.second;
  const std::size_t neg = scored.size() - pos;
  if (pos == 0 || neg == 0) throw DegenerateLabelsError("AUC needs both classes");

  std::vector<std::size_t> order(scored.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::sort(order.begin(), order.end(), [&](auto a, auto b) { return scored[a].first < scored[b].first; });
  double rank_sum = 0.0;
  for (std::size_t lo = 0; lo < order.size();) {
    std::size_t hi = lo + 1;
    while (hi < order.size() && scored[order[hi]].first == scored[order[lo]].first) ++hi;
    const double avg = (static_cast<double>(lo + 1) + static_cast<double>(hi)) / 2.0;
    for (std::size_t k = lo; k < hi; ++k)
      if (scored[order[k]].second) rank_sum += avg;
    lo = hi;
  }
  const double p = static_cast<double>(pos), n = static_cast<double>(neg);
  return (rank_sum - p * (p + 1.0) / 2.0) / (p * n);
}

struct EvalReport {
  std::optional<double> auc;  // absent when only one class is labeled
  double accuracy = 0.0;
  double indoor_prior = 0.0;
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;  // indoor is positive
  std::size_t n_evaluated = 0;

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

/// Per-fingerprint metrics over the labeled fingerprints, optionally limited
/// to the indices in `subset`.
inline EvalReport evaluate(const Prediction& pred, const std::vector<Label>& labels,
                           const std::vector<std::size_t>* subset = nullptr) {
  if (labels.size() != pred.fingerprint_scores.size())
    throw CoverageError("one label per predicted fingerprint required");
  EvalReport r;
  std::vector<std::pair<double, bool>> scored;
  const auto visit = [&](std::size_t i) {
    if (labels[i] == Label::unlabeled) return;
    const bool actual = labels[i] == Label::indoor;
    const bool predicted = pred.fingerprint_label(i) == Label::indoor;
    if (actual && predicted) ++r.tp;
    else if (actual) ++r.fn;
    else if (predicted) ++r.fp;
    else ++r.tn;
    scored.emplace_back(pred.fingerprint_scores[i], actual);
  };
  if (subset)
    for (auto i : *subset) visit(i);
  else
    for (std::size_t i = 0; i < labels.size(); ++i) visit(i);

  r.n_evaluated = scored.size();
  if (r.n_evaluated == 0) throw NoLabelsError("no labeled fingerprints to evaluate");
  const double n = static_cast<double>(r.n_evaluated);
  r.accuracy = static_cast<double>(r.tp + r.tn) / n;
  r.indoor_prior = static_cast<double>(r.tp + r.fn) / n;
  if (r.tp + r.fn > 0 && r.tn + r.fp > 0) r.auc = auc(scored);
  return r;
}

// ---------------------------------------------------------------------------
// Switch latency

struct SwitchEvent {
  Label to = Label::indoor;
  std::size_t index = 0;   // first fingerprint carrying the new label
  std::int64_t at_ms = 0;
  std::optional<double> latency_s;  // time until the first matching prediction
  bool missed = false;
};

struct SwitchLatencyReport {
  static constexpr double kMissedAfterSeconds = 500.0;
  std::vector<SwitchEvent> switches;

  /// Mean latency of detected switches into `to`; nullopt when there are none.
  std::optional<double> mean_latency(Label to) const {
    double sum = 0;
    std::size_t n = 0;
    for (const auto& s : switches)
      if (s.to == to && !s.missed) sum += *s.latency_s, ++n;
    if (n == 0) return std::nullopt;
    return sum / static_cast<double>(n);
  }
  double missed_fraction() const {
    if (switches.empty()) return 0.0;
    const auto missed = std::count_if(switches.begin(), switches.end(), [](const auto& s) { return s.missed; });
    return static_cast<double>(missed) / static_cast<double>(switches.size());
  }
};

/// A switch is the first labeled fingerprint whose label differs from the
/// previous labeled one. Detection is searched until the next switch; a
/// switch not detected in that window, or detected after more than 500 s,
/// is missed.
inline SwitchLatencyReport switch_latency(const Prediction& pred, const std::vector<Label>& labels,
                                          const std::vector<std::int64_t>& timestamps_ms) {
  if (labels.size() != pred.fingerprint_scores.size() || timestamps_ms.size() != labels.size())
    throw CoverageError("labels, timestamps and predictions must align");
  SwitchLatencyReport report;
  Label current = Label::unlabeled;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] == Label::unlabeled) continue;
    if (current != Label::unlabeled && labels[i] != current)
      report.switches.push_back({labels[i], i, timestamps_ms[i], std::nullopt, false});
    current = labels[i];
  }
  if (report.switches.empty()) throw NoTransitionsError("labels contain no indoor/outdoor switch");

  for (std::size_t s = 0; s < report.switches.size(); ++s) {
    auto& ev = report.switches[s];
    const std::size_t end = s + 1 < report.switches.size() ? report.switches[s + 1].index : labels.size();
    for (std::size_t i = ev.index; i < end; ++i) {
      if (pred.fingerprint_label(i) == ev.to) {
        ev.latency_s = static_cast<double>(timestamps_ms[i] - ev.at_ms) / 1000.0;
        break;
      }
    }
    ev.missed = !ev.latency_s || *ev.latency_s > SwitchLatencyReport::kMissedAfterSeconds;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Leave-one-location-out cross-validation

struct FoldResult {
  std::string location;
  std::size_t held_out = 0;
  EvalReport report;
  Model model;
};

struct CrossValidationReport {
  std::vector<FoldResult> folds;
  std::optional<double> mean_auc;  // over folds with a defined AUC
};

/// One analysis spans the whole matrix; each fold hides its location's
/// labels from node voting, trains, and scores that location's fingerprints.
inline CrossValidationReport location_cross_validation(const FingerprintMatrix& m, const PipelineConfig& cfg,
                                                       FeatureMode mode = FeatureMode::graph) {
  std::vector<std::string> locations;
  for (const auto& l : m.locations)
    if (l) locations.push_back(*l);
  std::sort(locations.begin(), locations.end());
  locations.erase(std::unique(locations.begin(), locations.end()), locations.end());
  if (locations.size() < 2) throw SingleLocationError("cross-validation needs at least two location tags");

  const GraphAnalysis analysis = analyze(m, cfg, mode);
  CrossValidationReport out;
  double auc_sum = 0;
  std::size_t auc_folds = 0;
  for (const auto& loc : locations) {
    std::vector<Label> masked = m.labels;
    std::vector<std::size_t> held;
    for (std::size_t i = 0; i < m.scan_count(); ++i)
      if (m.locations[i] && *m.locations[i] == loc) {
        masked[i] = Label::unlabeled;
        held.push_back(i);
      }
    FoldResult fold;
    fold.location = loc;
    fold.held_out = held.size();
    fold.model = fit(analysis, masked, cfg);
    fold.report = evaluate(score(fold.model, analysis, cfg), m.labels, &held);
    if (fold.report.auc) auc_sum += *fold.report.auc, ++auc_folds;
    out.folds.push_back(std::move(fold));
  }
  if (auc_folds > 0) out.mean_auc = auc_sum / static_cast<double>(auc_folds);
  return out;
}

// ---------------------------------------------------------------------------
// Warm-up

struct WarmupPoint {
  std::size_t minute = 0;
  std::size_t fingerprints = 0;
  double accuracy = 0.0;
};

struct WarmupReport {
  std::vector<WarmupPoint> points;
};

/// For each minute m the pipeline is rebuilt over the scans of minutes 1..m
/// (measured from the first scan), scored by the fixed `model`, and accuracy
/// is taken over that prefix. Stops early once the stream is exhausted.
inline WarmupReport warmup_eval(const Model& model, const FingerprintMatrix& m, std::size_t minutes,
                                const PipelineConfig& cfg, FeatureMode mode = FeatureMode::graph) {
  if (m.scan_count() == 0) throw EmptyPrefixError("scenario has no fingerprints in its first minute");
  const std::int64_t start = m.timestamps_ms.front();
  WarmupReport report;
  std::size_t end = 0;
  for (std::size_t minute = 1; minute <= minutes && end < m.scan_count(); ++minute) {
    const std::int64_t limit = start + static_cast<std::int64_t>(minute) * 60000;
    while (end < m.scan_count() && m.timestamps_ms[end] < limit) ++end;
    const FingerprintMatrix part = prefix(m, end);
    const GraphAnalysis a = analyze(part, cfg, mode);
    const EvalReport r = evaluate(score(model, a, cfg), part.labels);
    report.points.push_back({minute, end, r.accuracy});
  }
  return report;
}

// ---------------------------------------------------------------------------
// Report output

inline std::string format_metric(std::optional<double> v) {
  if (!v) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", *v);
  return buf;
}

inline nlohmann::json to_json(const EvalReport& r) {
  nlohmann::json j{{"accuracy", r.accuracy}, {"indoor_prior", r.indoor_prior}, {"tp", r.tp}, {"fp", r.fp},
                   {"tn", r.tn},           {"fn", r.fn},                     {"n_evaluated", r.n_evaluated}};
  j["auc"] = r.auc ? nlohmann::json(*r.auc) : nlohmann::json(nullptr);
  return j;
}

inline void print_report_table(std::ostream& out, const std::string& title, const EvalReport& r) {
  out << title << '\n'
      << "  AUC           " << format_metric(r.auc) << '\n'
      << "  accuracy      " << format_metric(r.accuracy) << '\n'
      << "  indoor prior  " << format_metric(r.indoor_prior) << '\n'
      << "  TP/FP/TN/FN   " << r.tp << '/' << r.fp << '/' << r.tn << '/' << r.fn << '\n'
      << "  evaluated     " << r.n_evaluated << '\n';
}

inline void write_warmup_csv(std::ostream& out, const WarmupReport& r) {
  out << "minute,accuracy\n";
  for (const auto& p : r.points) out << p.minute << ',' << format_double(p.accuracy) << '\n';
}

}  // namespace iodetect
