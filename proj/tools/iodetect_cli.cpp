// iodetect: indoor/outdoor classification of Wi-Fi scan logs.

#include <chrono>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "iodetect/iodetect.hpp"

namespace {

using namespace iodetect;

struct Options {
  std::string config = "default";
  std::optional<std::uint64_t> seed;
  std::optional<double> eps;
  std::optional<std::size_t> min_pts;
  std::optional<std::string> learner;
  std::optional<double> threshold;
  std::string out;
  std::string mode = "graph";
};

void log_line(const std::string& msg) { std::cerr << "[iodetect] " << msg << '\n'; }

PipelineConfig load_config(const Options& o) {
  PipelineConfig cfg = read_pipeline_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.eps) cfg.cluster.eps = *o.eps;
  if (o.min_pts) cfg.cluster.min_pts = *o.min_pts;
  if (o.learner) cfg.learner = parse_learner(*o.learner);
  if (o.threshold) cfg.threshold = *o.threshold;
  cfg.validate();
  return cfg;
}

FeatureMode parse_mode(const std::string& s) {
  if (s == "graph") return FeatureMode::graph;
  if (s == "clusters") return FeatureMode::clusters;
  if (s == "fingerprints") return FeatureMode::fingerprints;
  throw ConfigError("unknown feature mode '" + s + "'");
}

std::vector<FingerprintMatrix> load_devices(const std::string& path) {
  std::vector<FingerprintMatrix> out;
  for (const auto& stream : split_by_device(read_scan_log(path))) {
    out.push_back(ingest(stream));
    log_line("device " + out.back().device_id + ": T=" + std::to_string(out.back().scan_count()) +
             " N=" + std::to_string(out.back().ap_count()));
  }
  return out;
}

/// Stage commands work on one device at a time.
FingerprintMatrix load_single(const std::string& path, const std::string& device) {
  auto all = load_devices(path);
  if (!device.empty()) {
    for (auto& m : all)
      if (m.device_id == device) return std::move(m);
    throw FormatError("device '" + device + "' not found in " + path);
  }
  if (all.size() != 1) throw MixedDeviceError(path + " holds " + std::to_string(all.size()) + " devices; pick one with --device");
  return std::move(all.front());
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  return out;
}

void log_analysis(const GraphAnalysis& a) {
  log_line("clusters C=" + std::to_string(a.assignment.cluster_count()) + " nodes=" +
           std::to_string(a.graph.node_count()) + " edges=" + std::to_string(a.graph.edge_count()));
}

ClusterAssignment assignment_for(const FingerprintMatrix& m, const std::string& clusters_path, FeatureMode mode,
                                 const PipelineConfig& cfg) {
  if (mode == FeatureMode::fingerprints) return singleton_assignment(m.scan_count());
  if (!clusters_path.empty()) return read_assignment(clusters_path);
  return cluster(m, cfg.cluster);
}

nlohmann::json report_record(const std::string& device, const std::string& scope, const EvalReport& r) {
  auto j = to_json(r);
  j["device_id"] = device;
  j["scope"] = scope;
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Indoor/outdoor detection from Wi-Fi scan logs"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--config", o.config, "pipeline config file (key = value) or 'default'");
  app.add_option("--seed", o.seed, "random seed");
  app.add_option("--eps", o.eps, "clustering radius in [0, 2)");
  app.add_option("--min-pts", o.min_pts, "clustering minimum neighbourhood size");
  app.add_option("--learner", o.learner, "rf or gbm");
  app.add_option("--threshold", o.threshold, "indoor decision threshold");
  app.add_option("--out", o.out, "output path");

  std::string scans, clusters, features, model_path, predictions, device, spec_path, train_path, test_path;
  std::size_t minutes = 10, max_hops = 30;

  auto* ingest_cmd = app.add_subcommand("ingest", "validate a scan log; --out writes it back canonicalised");
  ingest_cmd->add_option("--scans", scans)->required();

  auto* cluster_cmd = app.add_subcommand("cluster", "cluster fingerprints, write {seq, cluster} records");
  cluster_cmd->add_option("--scans", scans)->required();
  cluster_cmd->add_option("--device", device);

  auto* graph_cmd = app.add_subcommand("graph", "write the transition graph (edge list to --out, nodes to --out.nodes)");
  graph_cmd->add_option("--scans", scans)->required();
  graph_cmd->add_option("--clusters", clusters);
  graph_cmd->add_option("--device", device);

  auto* features_cmd = app.add_subcommand("features", "write the node feature table as CSV");
  features_cmd->add_option("--scans", scans)->required();
  features_cmd->add_option("--clusters", clusters);
  features_cmd->add_option("--device", device);
  features_cmd->add_option("--mode", o.mode, "graph | clusters | fingerprints");

  auto* select_cmd = app.add_subcommand("select-dims", "regression-based hop-bound selection");
  select_cmd->add_option("--scans", scans)->required();
  select_cmd->add_option("--max-hops", max_hops);

  auto* train_cmd = app.add_subcommand("train", "train a model from one or more feature tables");
  std::vector<std::string> feature_files;
  train_cmd->add_option("--features", feature_files)->required();

  auto* predict_cmd = app.add_subcommand("predict", "score nodes and fingerprints");
  predict_cmd->add_option("--model", model_path)->required();
  predict_cmd->add_option("--features", features)->required();
  predict_cmd->add_option("--scans", scans)->required();
  predict_cmd->add_option("--clusters", clusters);
  predict_cmd->add_option("--device", device);
  predict_cmd->add_option("--mode", o.mode, "graph | clusters | fingerprints");

  auto* eval_cmd = app.add_subcommand("eval", "AUC / accuracy of predictions against scan labels");
  eval_cmd->add_option("--predictions", predictions)->required();
  eval_cmd->add_option("--scans", scans)->required();
  eval_cmd->add_option("--device", device);

  auto* latency_cmd = app.add_subcommand("latency", "indoor/outdoor switch detection latency");
  latency_cmd->add_option("--predictions", predictions)->required();
  latency_cmd->add_option("--scans", scans)->required();
  latency_cmd->add_option("--device", device);

  auto* xval_cmd = app.add_subcommand("xval", "leave-one-location-out cross-validation");
  xval_cmd->add_option("--scans", scans)->required();
  xval_cmd->add_option("--device", device);
  xval_cmd->add_option("--mode", o.mode, "graph | clusters | fingerprints");

  auto* warmup_cmd = app.add_subcommand("warmup", "per-minute accuracy with a rebuilt graph");
  warmup_cmd->add_option("--model", model_path)->required();
  warmup_cmd->add_option("--scans", scans)->required();
  warmup_cmd->add_option("--minutes", minutes);
  warmup_cmd->add_option("--device", device);
  warmup_cmd->add_option("--mode", o.mode, "graph | clusters | fingerprints");

  auto* synth_cmd = app.add_subcommand("synth", "generate a synthetic scan log");
  synth_cmd->add_option("--spec", spec_path, "world spec (key = value)");

  auto* pipeline_cmd = app.add_subcommand("pipeline", "train on one log, evaluate on another");
  pipeline_cmd->add_option("--train", train_path)->required();
  pipeline_cmd->add_option("--test", test_path)->required();
  pipeline_cmd->add_option("--mode", o.mode, "graph | clusters | fingerprints");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    const auto need_out = [&](const char* what) {
      if (o.out.empty()) throw ConfigError(std::string(what) + " requires --out");
    };

    if (*ingest_cmd) {
      const auto devices = load_devices(scans);
      if (!o.out.empty()) {
        auto out = open_out(o.out);
        for (const auto& m : devices) write_scan_log(out, to_records(m));
      }
      return 0;
    }

    const PipelineConfig cfg = load_config(o);
    const FeatureMode mode = parse_mode(o.mode);

    if (*cluster_cmd) {
      need_out("cluster");
      const auto m = load_single(scans, device);
      const auto a = cluster(m, cfg.cluster);
      log_line("clusters C=" + std::to_string(a.cluster_count()));
      write_assignment(o.out, a);
    } else if (*graph_cmd) {
      need_out("graph");
      const auto m = load_single(scans, device);
      const auto a = assignment_for(m, clusters, FeatureMode::graph, cfg);
      const auto g = build_graph(a, m, cfg.max_gap_ms);
      log_line("nodes=" + std::to_string(g.node_count()) + " edges=" + std::to_string(g.edge_count()));
      auto edges = open_out(o.out);
      write_edges(edges, g);
      auto nodes = open_out(o.out + ".nodes");
      write_nodes(nodes, g, m);
    } else if (*features_cmd) {
      need_out("features");
      const auto m = load_single(scans, device);
      GraphAnalysis a;
      a.assignment = assignment_for(m, clusters, mode, cfg);
      a.graph = build_graph(a.assignment, m, cfg.max_gap_ms);
      a.features = extract_features(a.graph, m, cfg.layout_for(mode));
      log_analysis(a);
      auto out = open_out(o.out);
      write_feature_csv(out, a.features, node_weights(a.assignment),
                        node_label_column(a.assignment, m.labels, cfg.tie_rule));
    } else if (*select_cmd) {
      std::vector<std::string> names;
      std::vector<NodeFeatureVector> rows;
      std::vector<Label> labels;
      for (const auto& m : load_devices(scans)) {
        const auto a = cluster(m, cfg.cluster);
        const auto g = build_graph(a, m, cfg.max_gap_ms);
        const auto table = extract_features(g, m, FeatureLayout::exhaustive(max_hops));
        names = table.names;
        for (const auto& n : label_nodes(a, m.labels, cfg.tie_rule).labeled) {
          rows.push_back(table.rows[n.node]);
          labels.push_back(n.label);
        }
      }
      const auto report = select_neighborhood_sizes(names, rows, labels);
      std::ostream* out = &std::cout;
      std::ofstream file;
      if (!o.out.empty()) {
        file = open_out(o.out);
        out = &file;
      }
      *out << "feature,status,coefficient,t,p,selected\n";
      for (const auto& e : report.entries) {
        const char* status = e.status == FeatureSelectionEntry::Status::fitted     ? "fitted"
                             : e.status == FeatureSelectionEntry::Status::constant ? "constant"
                                                                                   : "duplicate";
        *out << e.name << ',' << status << ',' << format_double(e.coefficient) << ',' << format_double(e.t_stat)
             << ',' << format_double(e.p_value) << ',' << (e.selected ? 1 : 0) << '\n';
      }
    } else if (*train_cmd) {
      need_out("train");
      Dataset data;
      for (const auto& path : feature_files) {
        std::ifstream in(path);
        if (!in) throw FormatError("cannot open '" + path + "'");
        append(data, training_set(read_feature_csv(in)));
      }
      log_line("training " + std::string(to_string(cfg.learner)) + " on " + std::to_string(data.size()) + " nodes");
      write_model(o.out, train(data, cfg.learner, cfg.hyper, cfg.seed));
    } else if (*predict_cmd) {
      need_out("predict");
      const auto model = read_model(model_path);
      std::ifstream in(features);
      if (!in) throw FormatError("cannot open '" + features + "'");
      const auto csv = read_feature_csv(in);
      const auto m = load_single(scans, device);
      const auto a = assignment_for(m, clusters, mode, cfg);
      auto out = open_out(o.out);
      write_predictions(out, predict(model, csv.table, a, cfg.threshold));
    } else if (*eval_cmd || *latency_cmd) {
      const auto m = load_single(scans, device);
      std::ifstream in(predictions);
      if (!in) throw FormatError("cannot open '" + predictions + "'");
      const auto pred = read_predictions(in, cfg.threshold);
      if (pred.fingerprint_scores.size() != m.scan_count())
        throw CoverageError("predictions cover " + std::to_string(pred.fingerprint_scores.size()) + " of " +
                            std::to_string(m.scan_count()) + " fingerprints");
      std::ofstream file;
      if (!o.out.empty()) file = open_out(o.out);
      if (*eval_cmd) {
        const auto r = evaluate(pred, m.labels);
        print_report_table(std::cout, "device " + m.device_id, r);
        if (file) file << report_record(m.device_id, "device", r).dump() << '\n';
      } else {
        const auto r = switch_latency(pred, m.labels, m.timestamps_ms);
        std::cout << "switches " << r.switches.size() << ", missed " << format_metric(r.missed_fraction()) << '\n'
                  << "  mean latency to indoor   " << format_metric(r.mean_latency(Label::indoor)) << " s\n"
                  << "  mean latency to outdoor  " << format_metric(r.mean_latency(Label::outdoor)) << " s\n";
        if (file)
          for (const auto& s : r.switches) {
            nlohmann::json j{{"seq", s.index}, {"to", to_string(s.to)}, {"missed", s.missed}};
            j["latency_s"] = s.latency_s ? nlohmann::json(*s.latency_s) : nlohmann::json(nullptr);
            file << j.dump() << '\n';
          }
      }
    } else if (*xval_cmd) {
      const auto m = load_single(scans, device);
      const auto r = location_cross_validation(m, cfg, mode);
      std::ofstream file;
      if (!o.out.empty()) file = open_out(o.out);
      for (const auto& f : r.folds) {
        print_report_table(std::cout, "location " + f.location, f.report);
        if (file) {
          auto j = report_record(m.device_id, "location", f.report);
          j["location"] = f.location;
          file << j.dump() << '\n';
        }
      }
      std::cout << "mean AUC " << format_metric(r.mean_auc) << '\n';
    } else if (*warmup_cmd) {
      const auto model = read_model(model_path);
      const auto m = load_single(scans, device);
      const auto r = warmup_eval(model, m, minutes, cfg, mode);
      if (!o.out.empty()) {
        auto out = open_out(o.out);
        write_warmup_csv(out, r);
      }
      write_warmup_csv(std::cout, r);
    } else if (*synth_cmd) {
      need_out("synth");
      WorldSpec spec = spec_path.empty() ? WorldSpec{} : read_world_spec(spec_path);
      if (o.seed) spec.seed = *o.seed;
      const auto records = generate(spec);
      log_line("generated " + std::to_string(records.size()) + " scans");
      write_scan_log(o.out, records);
    } else if (*pipeline_cmd) {
      const auto started = std::chrono::steady_clock::now();
      Dataset data;
      for (const auto& m : load_devices(train_path)) {
        const auto a = analyze(m, cfg, mode);
        log_analysis(a);
        append(data, training_set(a.features, label_nodes(a.assignment, m.labels, cfg.tie_rule)));
      }
      log_line("training " + std::string(to_string(cfg.learner)) + " on " + std::to_string(data.size()) + " nodes");
      const Model model = train(data, cfg.learner, cfg.hyper, cfg.seed);
      std::ofstream file;
      if (!o.out.empty()) file = open_out(o.out);
      for (const auto& m : load_devices(test_path)) {
        const auto a = analyze(m, cfg, mode);
        log_analysis(a);
        const auto r = evaluate(score(model, a, cfg), m.labels);
        print_report_table(std::cout, "device " + m.device_id + " (" + to_string(mode) + ")", r);
        if (file) file << report_record(m.device_id, "device", r).dump() << '\n';
      }
      log_line("elapsed " + format_metric(std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count()) + " s");
    }
  } catch (const Error& e) {
    std::cerr << "iodetect: " << e.kind() << ": " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "iodetect: " << e.what() << '\n';
    return 2;
  }
  return 0;
}
