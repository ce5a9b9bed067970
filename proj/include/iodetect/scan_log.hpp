#pragma once

// Line-delimited JSON scan log:
//   {"device_id":..,"seq":..,"timestamp_ms":..,"label":"indoor"|"outdoor"|null,
//    "location":string|null,"scan":[{"bssid":..,"rssi_dbm":..},..]}

#include <fstream>
#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "iodetect/core.hpp"

namespace iodetect {

inline ScanRecord parse_scan_line(const std::string& line) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(line);
  } catch (const nlohmann::json::parse_error& e) {
    throw FormatError(std::string("invalid scan record: ") + e.what());
  }
  try {
    ScanRecord rec;
    rec.device_id = j.at("device_id").get<std::string>();
    rec.seq = j.at("seq").get<std::int64_t>();
    rec.timestamp_ms = j.at("timestamp_ms").get<std::int64_t>();
    const auto& label = j.at("label");
    if (label.is_null()) {
      rec.label = Label::unlabeled;
    } else {
      const auto s = label.get<std::string>();
      if (s == "indoor")
        rec.label = Label::indoor;
      else if (s == "outdoor")
        rec.label = Label::outdoor;
      else
        throw FormatError("unknown label '" + s + "'");
    }
    if (auto it = j.find("location"); it != j.end() && !it->is_null()) rec.location = it->get<std::string>();
    for (const auto& r : j.at("scan")) {
      const auto& rssi = r.at("rssi_dbm");
      if (!rssi.is_number_integer()) throw FormatError("rssi_dbm must be an integer");
      rec.readings.push_back({ApId::parse(r.at("bssid").get<std::string>()), rssi.get<int>()});
    }
    return rec;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed scan record: ") + e.what());
  }
}

inline std::string format_scan_line(const ScanRecord& rec) {
  nlohmann::json j;
  j["device_id"] = rec.device_id;
  j["seq"] = rec.seq;
  j["timestamp_ms"] = rec.timestamp_ms;
  if (rec.label == Label::unlabeled)
    j["label"] = nullptr;
  else
    j["label"] = to_string(rec.label);
  if (rec.location)
    j["location"] = *rec.location;
  else
    j["location"] = nullptr;
  j["scan"] = nlohmann::json::array();
  for (const auto& r : rec.readings) j["scan"].push_back({{"bssid", r.ap.str()}, {"rssi_dbm", r.rssi_dbm}});
  return j.dump();
}

inline std::vector<ScanRecord> read_scan_log(std::istream& in) {
  std::vector<ScanRecord> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      out.push_back(parse_scan_line(line));
    } catch (const FormatError& e) {
      throw FormatError("line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

inline std::vector<ScanRecord> read_scan_log(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw FormatError("cannot open scan log '" + path + "'");
  return read_scan_log(in);
}

inline void write_scan_log(std::ostream& out, const std::vector<ScanRecord>& records) {
  for (const auto& r : records) out << format_scan_line(r) << '\n';
}

inline void write_scan_log(const std::string& path, const std::vector<ScanRecord>& records) {
  std::ofstream out(path);
  if (!out) throw FormatError("cannot write '" + path + "'");
  write_scan_log(out, records);
}

}  // namespace iodetect
