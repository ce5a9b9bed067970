#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "iodetect/errors.hpp"

namespace iodetect {

enum class Label : std::uint8_t { unlabeled = 0, indoor = 1, outdoor = 2 };

inline const char* to_string(Label l) {
  switch (l) {
    case Label::indoor:
      return "indoor";
    case Label::outdoor:
      return "outdoor";
    default:
      return "unlabeled";
  }
}

/// BSSID of one access point, always held in canonical `aa:bb:cc:dd:ee:ff`
/// form. Construct through `parse`, which accepts upper case and `-`
/// separators.
class ApId {
 public:
  ApId() = default;

  static ApId parse(std::string_view raw) {
    if (raw.size() != 17) throw FormatError("malformed BSSID '" + std::string(raw) + "'");
    std::string out(17, ':');
    for (std::size_t i = 0; i < 17; ++i) {
      const char c = raw[i];
      if (i % 3 == 2) {
        if (c != ':' && c != '-') throw FormatError("malformed BSSID '" + std::string(raw) + "'");
        continue;
      }
      if (!std::isxdigit(static_cast<unsigned char>(c)))
        throw FormatError("malformed BSSID '" + std::string(raw) + "'");
      out[i] = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    }
    ApId id;
    id.bssid_ = std::move(out);
    return id;
  }

  const std::string& str() const noexcept { return bssid_; }

  friend bool operator==(const ApId&, const ApId&) = default;
  friend auto operator<=>(const ApId&, const ApId&) = default;

 private:
  std::string bssid_;
};

/// Linear power ratio of an RSSI reported in dBm: 10^(dBm/10).
inline double rssi_to_power(int rssi_dbm) { return std::pow(10.0, rssi_dbm / 10.0); }

struct ApReading {
  ApId ap;
  int rssi_dbm = 0;

  friend bool operator==(const ApReading&, const ApReading&) = default;
};

/// One raw Wi-Fi scan as it appears in the scan log.
struct ScanRecord {
  std::string device_id;
  std::int64_t seq = 0;
  std::int64_t timestamp_ms = 0;
  std::vector<ApReading> readings;
  Label label = Label::unlabeled;
  std::optional<std::string> location;

  friend bool operator==(const ScanRecord&, const ScanRecord&) = default;
};

/// Sparse fingerprint entry. The dBm value is kept next to its linear power
/// because the neighbourhood power feature averages in dBm.
struct Reading {
  ApId ap;
  int rssi_dbm = 0;
  double power = 0.0;

  friend bool operator==(const Reading&, const Reading&) = default;
};

/// Result of one scan: readings sorted by AP, absent APs have power 0.
struct Fingerprint {
  std::size_t seq = 0;
  std::vector<Reading> readings;

  std::size_t size() const noexcept { return readings.size(); }

  /// Linear power of `ap`, 0 when the AP was not received.
  double power(const ApId& ap) const {
    auto it = std::lower_bound(readings.begin(), readings.end(), ap,
                               [](const Reading& r, const ApId& a) { return r.ap < a; });
    return (it != readings.end() && it->ap == ap) ? it->power : 0.0;
  }

  friend bool operator==(const Fingerprint&, const Fingerprint&) = default;
};

inline bool is_empty(const Fingerprint& f) noexcept { return f.readings.empty(); }

/// All fingerprints of one device, in scan order.
struct FingerprintMatrix {
  std::string device_id;
  std::vector<Fingerprint> fingerprints;
  std::vector<ApId> ap_universe;  // sorted
  std::vector<Label> labels;
  std::vector<std::optional<std::string>> locations;
  std::vector<std::int64_t> timestamps_ms;

  std::size_t scan_count() const noexcept { return fingerprints.size(); }
  std::size_t ap_count() const noexcept { return ap_universe.size(); }

  friend bool operator==(const FingerprintMatrix&, const FingerprintMatrix&) = default;
};

/// Builds the fingerprint matrix of a single device stream.
inline FingerprintMatrix ingest(const std::vector<ScanRecord>& stream) {
  FingerprintMatrix m;
  if (!stream.empty()) m.device_id = stream.front().device_id;
  m.fingerprints.reserve(stream.size());
  m.labels.reserve(stream.size());
  m.locations.reserve(stream.size());
  m.timestamps_ms.reserve(stream.size());

  std::set<ApId> universe;
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const ScanRecord& rec = stream[i];
    if (rec.device_id != m.device_id)
      throw MixedDeviceError("stream mixes devices '" + m.device_id + "' and '" + rec.device_id + "'");
    if (rec.seq != static_cast<std::int64_t>(i))
      throw OrderError("expected seq " + std::to_string(i) + ", got " + std::to_string(rec.seq));
    if (i > 0 && rec.timestamp_ms < stream[i - 1].timestamp_ms)
      throw OrderError("timestamp regression at seq " + std::to_string(i));

    Fingerprint f;
    f.seq = i;
    f.readings.reserve(rec.readings.size());
    for (const auto& r : rec.readings) f.readings.push_back({r.ap, r.rssi_dbm, rssi_to_power(r.rssi_dbm)});
    std::sort(f.readings.begin(), f.readings.end(),
              [](const Reading& a, const Reading& b) { return a.ap < b.ap; });
    for (std::size_t k = 1; k < f.readings.size(); ++k) {
      if (f.readings[k].ap == f.readings[k - 1].ap)
        throw DuplicateApError("AP " + f.readings[k].ap.str() + " repeated in scan seq " + std::to_string(i));
    }
    for (const auto& r : f.readings) universe.insert(r.ap);

    m.fingerprints.push_back(std::move(f));
    m.labels.push_back(rec.label);
    m.locations.push_back(rec.location);
    m.timestamps_ms.push_back(rec.timestamp_ms);
  }
  m.ap_universe.assign(universe.begin(), universe.end());
  return m;
}

/// Inverse of `ingest`: one record per fingerprint, readings in AP order.
inline std::vector<ScanRecord> to_records(const FingerprintMatrix& m) {
  std::vector<ScanRecord> out;
  out.reserve(m.scan_count());
  for (std::size_t i = 0; i < m.scan_count(); ++i) {
    ScanRecord rec;
    rec.device_id = m.device_id;
    rec.seq = static_cast<std::int64_t>(i);
    rec.timestamp_ms = m.timestamps_ms[i];
    rec.label = m.labels[i];
    rec.location = m.locations[i];
    for (const auto& r : m.fingerprints[i].readings) rec.readings.push_back({r.ap, r.rssi_dbm});
    out.push_back(std::move(rec));
  }
  return out;
}

/// Splits a mixed log into per-device streams, keeping first-seen device
/// order and the relative order of records within each device.
inline std::vector<std::vector<ScanRecord>> split_by_device(const std::vector<ScanRecord>& records) {
  std::vector<std::vector<ScanRecord>> out;
  std::vector<std::string> ids;
  for (const auto& r : records) {
    auto it = std::find(ids.begin(), ids.end(), r.device_id);
    if (it == ids.end()) {
      ids.push_back(r.device_id);
      out.emplace_back();
      out.back().push_back(r);
    } else {
      out[static_cast<std::size_t>(it - ids.begin())].push_back(r);
    }
  }
  return out;
}

}  // namespace iodetect
