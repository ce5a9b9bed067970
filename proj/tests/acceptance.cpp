// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Soft targets print WARN and do not fail the run.

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <set>
#include <sstream>
#include <string>

#include "support.hpp"

using namespace iodetect;
using namespace testing_support;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

struct Outcome {
  bool pass = true;
  std::string detail;
  std::string warning;
};

int failures = 0;

void report(const std::string& id, const std::string& title, const std::function<Outcome()>& body) {
  Outcome o;
  try {
    o = body();
  } catch (const std::exception& e) {
    o = {false, std::string("exception: ") + e.what(), {}};
  }
  std::cout << (o.pass ? "[PASS] " : "[FAIL] ") << id << ' ' << title << " :: " << o.detail << '\n';
  if (!o.warning.empty()) std::cout << "[WARN] " << id << ' ' << o.warning << '\n';
  std::cout.flush();
  failures += !o.pass;
}

Outcome distance_case_table() {
  const auto empty = fingerprint({});
  const std::vector<double> got{
      distance(empty, empty, 7, 8).value,
      distance(empty, empty, 4, 7).value,
      distance(fingerprint({{1, -40}}), fingerprint({{2, -40}}), 0, 5).value,
      distance(fingerprint({{1, -30}}), fingerprint({{1, -80}}), 0, 5).value,
      distance(fingerprint({{1, -40}, {2, -60}, {3, -70}}), fingerprint({{1, -50}, {2, -45}, {4, -80}}), 0, 5).value,
  };
  // Σd² = 4 over n = 4: ρ = 1 - 24/60
  const double rho = 1.0 - 6.0 * 4.0 / (4.0 * 15.0);
  const std::vector<double> want{0.0, 2.0, 2.0, 0.0, 1.0 - rho};
  std::ostringstream d;
  for (double v : got) d << v << ' ';
  return {got == want, "values " + d.str(), {}};
}

Outcome distance_oracle() {
  std::mt19937_64 rng(2024);
  std::vector<std::pair<Scan, Scan>> pairs;
  for (int k = 0; k < 1000; ++k) pairs.push_back(random_pair(rng));
  const auto t0 = Clock::now();
  double worst = 0;
  for (const auto& [x, y] : pairs) {
    const double got = distance(fingerprint(x), fingerprint(y), 0, 9).value;
    worst = std::max(worst, std::fabs(got - explicit_epsilon_distance(power_map(x), power_map(y))));
  }
  const double secs = seconds_since(t0);
  return {worst <= 1e-9 && secs < 5.0, "max |diff| " + fmt("%.3g", worst) + ", " + fmt("%.3f", secs) + " s", {}};
}

Outcome region_query_exactness() {
  const auto m = matrix(random_scans(5000, 31));
  const FingerprintIndex index(m);
  std::vector<std::vector<RankedAp<ApId>>> ranks;
  for (const auto& f : m.fingerprints) ranks.push_back(rank_fingerprint(f));
  QueryScratch scratch;
  std::size_t mismatches = 0, total = 0;
  for (FpIndex q = 0; q < m.scan_count(); ++q) {
    std::vector<FpIndex> expect;
    for (FpIndex j = 0; j < m.scan_count(); ++j)
      if (rank_distance<ApId>(ranks[q], ranks[j], q, j).value <= 0.22) expect.push_back(j);
    const auto got = index.region_query(q, 0.22, scratch);
    mismatches += got != expect;
    total += got.size();
  }

  // soft speed target at 50,000 fingerprints
  const auto big = matrix(random_scans(50000, 32, 2500, 8000));
  const FingerprintIndex big_index(big);
  auto t0 = Clock::now();
  std::size_t sink = 0;
  for (FpIndex q = 0; q < big.scan_count(); ++q) sink += big_index.region_query(q, 0.22, scratch).size();
  const double indexed = seconds_since(t0);
  const std::size_t sample = 200;
  t0 = Clock::now();
  for (std::size_t s = 0; s < sample; ++s) {
    const auto q = static_cast<FpIndex>(s * (big.scan_count() / sample));
    for (FpIndex j = 0; j < big.scan_count(); ++j) sink += big_index.distance(q, j).value <= 0.22;
  }
  const double scan = seconds_since(t0) * static_cast<double>(big.scan_count()) / static_cast<double>(sample);
  const double speedup = scan / indexed;
  Outcome o{mismatches == 0,
            std::to_string(mismatches) + " mismatching queries of 5000 (" + std::to_string(total) +
                " neighbours); 50k pass " + fmt("%.2f", indexed) + " s vs scan ~" + fmt("%.1f", scan) + " s (" +
                fmt("%.1f", speedup) + "x)",
            {}};
  if (speedup < 5.0) o.warning = "indexed pass only " + fmt("%.1f", speedup) + "x faster than a linear scan";
  if (sink == 0) o.warning += " (no neighbours found)";
  return o;
}

Outcome clustering_equivalence() {
  const auto m = matrix(random_scans(2000, 41));
  const auto a = cluster(m);
  const bool same = canonical(to_sizes(a.cluster_of)) == canonical(components_oracle(m, 0.22));
  return {same, std::to_string(a.cluster_count()) + " clusters", {}};
}

Outcome graph_and_features() {
  std::size_t edge_mismatch = 0, nodes_checked = 0, n0_violations = 0;
  double worst = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto m = matrix(random_scans(1000, 50 + seed));
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> pick(0, 179);
    std::bernoulli_distribution stay(0.6);
    std::vector<std::size_t> seq{pick(rng)};
    while (seq.size() < m.scan_count()) seq.push_back(stay(rng) ? seq.back() : pick(rng));
    const auto a = ClusterAssignment::from_labels(seq);
    const auto g = build_graph(a, m);
    std::set<std::pair<NodeId, NodeId>> expect;
    for (std::size_t i = 1; i < seq.size(); ++i) {
      const NodeId u = a.cluster_of[i - 1], v = a.cluster_of[i];
      if (u != v) expect.insert({std::min(u, v), std::max(u, v)});
    }
    const auto edges = g.edges();
    edge_mismatch += std::set(edges.begin(), edges.end()) != expect;

    const auto t = extract_features(g, m);
    if (t.names.size() != 20) return {false, "feature count " + std::to_string(t.names.size()), {}};
    for (NodeId x = 0; x < g.node_count(); ++x) {
      const auto oracle = features_oracle(g, m, x);
      for (std::size_t c = 0; c < oracle.size(); ++c) worst = std::max(worst, std::fabs(oracle[c] - t.rows[x][c]));
      n0_violations += g.neighborhood(x, 0).size() != 1;
      ++nodes_checked;
    }
  }
  return {edge_mismatch == 0 && worst <= 1e-9 && n0_violations == 0,
          std::to_string(nodes_checked) + " nodes, edge mismatches " + std::to_string(edge_mismatch) +
              ", max feature |diff| " + fmt("%.3g", worst) + ", |N(0)|!=1 on " + std::to_string(n0_violations),
          {}};
}

Outcome auc_correctness() {
  std::mt19937_64 rng(6);
  std::uniform_int_distribution<int> coarse(0, 20), size(2, 200);
  std::bernoulli_distribution label(0.5);
  double worst = 0;
  for (int k = 0; k < 200; ++k) {
    std::vector<std::pair<double, bool>> s;
    const int n = size(rng);
    for (int i = 0; i < n; ++i) s.push_back({coarse(rng) / 20.0, label(rng)});
    s[0].second = true;
    s[1].second = false;
    worst = std::max(worst, std::fabs(auc(s) - auc_oracle(s)));
  }
  std::vector<Label> labels;
  for (int i = 0; i < 1000; ++i) labels.push_back(i % 100 < 83 ? Label::indoor : Label::outdoor);
  const auto r = evaluate(prediction_from_scores(std::vector<double>(labels.size(), 0.6)), labels);
  return {worst <= 1e-12 && r.auc == 0.5 && std::fabs(r.accuracy - 0.83) <= 0.001,
          "max |diff| " + fmt("%.3g", worst) + ", constant AUC " + fmt("%.4f", r.auc.value_or(-1)) + ", accuracy " +
              fmt("%.4f", r.accuracy),
          {}};
}

struct EndToEnd {
  Model graph_model;
  PipelineConfig cfg;
};

Outcome end_to_end(EndToEnd& keep) {
  const auto t0 = Clock::now();
  WorldSpec a, b;
  a.duration_s = b.duration_s = 8 * 3600;
  a.seed = 1;
  b.seed = 2;
  a.device_id = "world-a";
  b.device_id = "world-b";
  const auto train_m = ingest(generate(a));
  const auto test_m = ingest(generate(b));
  PipelineConfig cfg;
  std::string detail;
  double graph_auc = 0, fp_auc = 0;
  for (auto mode : {FeatureMode::graph, FeatureMode::clusters, FeatureMode::fingerprints}) {
    const auto ta = analyze(train_m, cfg, mode);
    const auto model = fit(ta, train_m.labels, cfg);
    const auto r = evaluate(score(model, analyze(test_m, cfg, mode), cfg), test_m.labels);
    const double v = r.auc.value_or(0.0);
    detail += std::string(to_string(mode)) + " AUC " + fmt("%.4f", v) + " acc " + fmt("%.4f", r.accuracy) + "; ";
    if (mode == FeatureMode::graph) {
      graph_auc = v;
      keep.graph_model = model;
      const double mean_size = static_cast<double>(train_m.scan_count()) / ta.assignment.cluster_count();
      detail += "mean cluster size " + fmt("%.2f", mean_size) + "; ";
    }
    if (mode == FeatureMode::fingerprints) fp_auc = v;
  }
  keep.cfg = cfg;
  const double secs = seconds_since(t0);
  detail += fmt("%.1f", secs) + " s";
  return {graph_auc >= 0.85 && graph_auc > fp_auc && secs < 300.0, detail, {}};
}

Outcome warmup(const EndToEnd& e2e) {
  double worst_separable = 1.0, worst_parking = 0.0;
  std::string detail;
  for (int scenario = 0; scenario < 3; ++scenario) {
    for (std::uint64_t seed = 11; seed <= 15; ++seed) {
      WorldSpec w;
      w.seed = seed;
      w.duration_s = 600;
      w.buildings = 1;
      if (scenario == 0) {  // stays in one building
        w.weak_room_fraction = 0;
        w.outdoor_dwell_min_s = w.outdoor_dwell_max_s = 0;
      } else if (scenario == 1) {  // walks between two buildings without entering
        w.buildings = 2;
        w.indoor_dwell_min_s = w.indoor_dwell_max_s = 0;
        w.outdoor_dwell_min_s = w.outdoor_dwell_max_s = 600;
      } else {
        w.profile = WorldProfile::underground_parking;
        w.outdoor_dwell_min_s = w.outdoor_dwell_max_s = 0;
      }
      const auto r = warmup_eval(e2e.graph_model, ingest(generate(w)), 10, e2e.cfg);
      for (const auto& p : r.points) {
        if (scenario == 2) worst_parking = std::max(worst_parking, p.accuracy);
        else if (p.minute >= 3) worst_separable = std::min(worst_separable, p.accuracy);
      }
    }
  }
  detail = "min accuracy from minute 3 (indoor/outdoor scenarios) " + fmt("%.4f", worst_separable) +
           ", max parking accuracy " + fmt("%.4f", worst_parking);
  return {worst_separable >= 0.9 && worst_parking < 0.5, detail, {}};
}

Outcome switch_latency_check() {
  const std::vector<std::int64_t> t{90000, 100000, 102000, 104300, 200000, 300000, 801000};
  const std::vector<Label> labels{Label::outdoor, Label::indoor,  Label::indoor, Label::indoor,
                                  Label::outdoor, Label::outdoor, Label::outdoor};
  const auto r = switch_latency(prediction_from_scores({0.1, 0.3, 0.4, 0.7, 0.8, 0.9, 0.2}), labels, t);
  const bool ok = r.switches.size() == 2 && r.switches[0].latency_s && std::fabs(*r.switches[0].latency_s - 4.3) < 1e-12 &&
                  !r.switches[0].missed && r.switches[1].latency_s && *r.switches[1].latency_s == 601.0 &&
                  r.switches[1].missed;
  return {ok,
          "latencies " + fmt("%.3f", r.switches.at(0).latency_s.value_or(-1)) + " s, " +
              fmt("%.3f", r.switches.at(1).latency_s.value_or(-1)) + " s (missed: " +
              (r.switches.at(1).missed ? "yes" : "no") + ")",
          {}};
}

}  // namespace

int main() {
  report("1", "distance case table", distance_case_table);
  report("2", "distance vs explicit-epsilon oracle", distance_oracle);
  report("3", "region query exactness", region_query_exactness);
  report("4", "clustering vs connected components", clustering_equivalence);
  report("5", "graph edges and node features", graph_and_features);
  report("6", "AUC and constant classifier", auc_correctness);
  EndToEnd e2e;
  report("7", "end-to-end synthetic benchmark", [&] { return end_to_end(e2e); });
  report("8", "warm-up behaviour", [&] { return warmup(e2e); });
  report("9", "switch latency", switch_latency_check);
  std::cout << "[SKIP] 10 published-dataset reproduction :: optional, dataset not available\n";
  std::cout << (failures == 0 ? "all required criteria passed\n" : std::to_string(failures) + " criteria failed\n");
  return failures == 0 ? 0 : 1;
}
