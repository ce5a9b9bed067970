#pragma once

// Deterministic synthetic scan streams with indoor/outdoor ground truth.
//
// The device alternates building dwells with outdoor walks. Each building
// owns a fixed AP set whose per-AP mean RSSI varies by room; a walk follows
// the street between two buildings, where a short sliding window of weak
// street APs is in range. The first and last scans of a walk still hear the
// neighbouring building through its walls, and some rooms ("weak rooms")
// hear only a few attenuated APs, so single scans are not trivially
// separable.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include "iodetect/core.hpp"
#include "iodetect/pipeline.hpp"

namespace iodetect {

enum class WorldProfile { normal, underground_parking };

struct WorldSpec {
  std::uint64_t seed = 1;
  std::string device_id = "synth";
  std::int64_t start_ms = 1'700'000'000'000;
  double duration_s = 4 * 3600.0;
  double scan_period_s = 3.0;

  std::size_t buildings = 12;
  std::size_t ap_min = 8;
  std::size_t ap_max = 25;
  double indoor_rssi_mean = -55.0;
  double indoor_rssi_sigma = 12.0;
  std::size_t rooms_min = 3;
  std::size_t rooms_max = 8;
  double room_shift_sigma = 6.0;  // per-room offset of each AP's mean
  double room_dwell_s = 120.0;    // mean stay in one room
  double weak_room_fraction = 0.2;
  std::size_t weak_room_aps = 3;
  double weak_room_attenuation_db = 25.0;

  std::size_t outdoor_ap_min = 0;
  std::size_t outdoor_ap_max = 4;
  double outdoor_rssi_mean = -82.0;
  double outdoor_rssi_sigma = 8.0;
  std::size_t street_ap_span = 6;  // scans a street AP stays in range
  std::size_t leak_scans = 5;
  std::size_t leak_aps = 6;
  double leak_attenuation_db = 18.0;

  double scan_noise_sigma = 8.0;
  double dropout = 0.25;
  double empty_scan_prob = 0.15;

  double indoor_dwell_min_s = 900.0;
  double indoor_dwell_max_s = 3600.0;
  double outdoor_dwell_min_s = 120.0;
  double outdoor_dwell_max_s = 900.0;

  WorldProfile profile = WorldProfile::normal;

  /// Expected share of time spent indoors under the dwell schedule.
  double indoor_time_fraction() const {
    const double in = (indoor_dwell_min_s + indoor_dwell_max_s) / 2.0;
    const double out = (outdoor_dwell_min_s + outdoor_dwell_max_s) / 2.0;
    return in + out > 0 ? in / (in + out) : 0.0;
  }

  void validate() const {
    if (!(duration_s > 0) || !(scan_period_s > 0)) throw ConfigError("durations must be positive");
    if (buildings == 0) throw ConfigError("at least one building is required");
    if (ap_min == 0 || ap_min > ap_max) throw ConfigError("building AP range must satisfy 1 <= ap_min <= ap_max");
    if (rooms_min == 0 || rooms_min > rooms_max) throw ConfigError("room range must satisfy 1 <= rooms_min <= rooms_max");
    if (outdoor_ap_min > outdoor_ap_max) throw ConfigError("outdoor AP range is inverted");
    if (!(indoor_rssi_sigma > 0) || !(outdoor_rssi_sigma > 0) || !(scan_noise_sigma > 0) || !(room_shift_sigma > 0))
      throw ConfigError("every sigma must be positive");
    if (!(dropout >= 0 && dropout < 1) || !(empty_scan_prob >= 0 && empty_scan_prob <= 1) ||
        !(weak_room_fraction >= 0 && weak_room_fraction <= 1))
      throw ConfigError("probabilities must lie in [0, 1]");
    if (indoor_dwell_min_s < 0 || indoor_dwell_min_s > indoor_dwell_max_s || outdoor_dwell_min_s < 0 ||
        outdoor_dwell_min_s > outdoor_dwell_max_s)
      throw ConfigError("dwell ranges must satisfy 0 <= min <= max");
    if (indoor_dwell_max_s <= 0 && outdoor_dwell_max_s <= 0) throw ConfigError("some dwell time must be positive");
    if (!(room_dwell_s > 0) || street_ap_span == 0) throw ConfigError("room dwell and street span must be positive");
  }
};

inline void apply_world_value(WorldSpec& s, const std::string& key, const std::string& v) {
  using namespace detail;
  if (key == "seed") s.seed = static_cast<std::uint64_t>(to_int(key, v));
  else if (key == "device_id") s.device_id = v;
  else if (key == "start_ms") s.start_ms = to_int(key, v);
  else if (key == "duration_s") s.duration_s = to_real(key, v);
  else if (key == "scan_period_s") s.scan_period_s = to_real(key, v);
  else if (key == "buildings") s.buildings = to_count(key, v);
  else if (key == "ap_min") s.ap_min = to_count(key, v);
  else if (key == "ap_max") s.ap_max = to_count(key, v);
  else if (key == "indoor_rssi_mean") s.indoor_rssi_mean = to_real(key, v);
  else if (key == "indoor_rssi_sigma") s.indoor_rssi_sigma = to_real(key, v);
  else if (key == "rooms_min") s.rooms_min = to_count(key, v);
  else if (key == "rooms_max") s.rooms_max = to_count(key, v);
  else if (key == "room_shift_sigma") s.room_shift_sigma = to_real(key, v);
  else if (key == "room_dwell_s") s.room_dwell_s = to_real(key, v);
  else if (key == "weak_room_fraction") s.weak_room_fraction = to_real(key, v);
  else if (key == "weak_room_aps") s.weak_room_aps = to_count(key, v);
  else if (key == "weak_room_attenuation_db") s.weak_room_attenuation_db = to_real(key, v);
  else if (key == "outdoor_ap_min") s.outdoor_ap_min = to_count(key, v);
  else if (key == "outdoor_ap_max") s.outdoor_ap_max = to_count(key, v);
  else if (key == "outdoor_rssi_mean") s.outdoor_rssi_mean = to_real(key, v);
  else if (key == "outdoor_rssi_sigma") s.outdoor_rssi_sigma = to_real(key, v);
  else if (key == "street_ap_span") s.street_ap_span = to_count(key, v);
  else if (key == "leak_scans") s.leak_scans = to_count(key, v);
  else if (key == "leak_aps") s.leak_aps = to_count(key, v);
  else if (key == "leak_attenuation_db") s.leak_attenuation_db = to_real(key, v);
  else if (key == "scan_noise_sigma") s.scan_noise_sigma = to_real(key, v);
  else if (key == "dropout") s.dropout = to_real(key, v);
  else if (key == "empty_scan_prob") s.empty_scan_prob = to_real(key, v);
  else if (key == "indoor_dwell_min_s") s.indoor_dwell_min_s = to_real(key, v);
  else if (key == "indoor_dwell_max_s") s.indoor_dwell_max_s = to_real(key, v);
  else if (key == "outdoor_dwell_min_s") s.outdoor_dwell_min_s = to_real(key, v);
  else if (key == "outdoor_dwell_max_s") s.outdoor_dwell_max_s = to_real(key, v);
  else if (key == "profile") {
    if (v == "normal") s.profile = WorldProfile::normal;
    else if (v == "underground_parking") s.profile = WorldProfile::underground_parking;
    else throw ConfigError("unknown profile '" + v + "'");
  } else {
    throw ConfigError("unknown world key '" + key + "'");
  }
}

inline WorldSpec read_world_spec(std::istream& in) {
  WorldSpec s;
  for (const auto& [k, v] : detail::read_key_values(in)) apply_world_value(s, k, v);
  s.validate();
  return s;
}

inline WorldSpec read_world_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open world spec '" + path + "'");
  return read_world_spec(in);
}

namespace detail {

class WorldBuilder {
 public:
  explicit WorldBuilder(const WorldSpec& spec) : spec_(spec), rng_(spec.seed) {
    for (std::size_t b = 0; b < spec_.buildings; ++b) buildings_.push_back(make_building());
  }

  std::vector<ScanRecord> run() {
    const std::int64_t period_ms = static_cast<std::int64_t>(std::llround(spec_.scan_period_s * 1000.0));
    const std::size_t total = static_cast<std::size_t>(spec_.duration_s / spec_.scan_period_s);
    const bool has_indoor = spec_.indoor_dwell_max_s > 0;
    const bool has_outdoor = spec_.outdoor_dwell_max_s > 0;
    std::size_t here = 0;
    bool indoors = has_indoor;
    while (records_.size() < total) {
      if (indoors) {
        dwell_indoor(here, scans_for(spec_.indoor_dwell_min_s, spec_.indoor_dwell_max_s), total, period_ms);
      } else {
        const std::size_t next = pick_next(here);
        walk(here, next, scans_for(spec_.outdoor_dwell_min_s, spec_.outdoor_dwell_max_s), total, period_ms);
        here = next;
      }
      if (has_indoor && has_outdoor) indoors = !indoors;
    }
    return std::move(records_);
  }

 private:
  struct Room {
    std::vector<std::size_t> visible;  // indices into the building's APs
    std::vector<double> mean_dbm;      // per visible AP
  };
  struct Building {
    std::vector<ApId> aps;
    std::vector<double> base_dbm;
    std::vector<Room> rooms;
  };
  struct StreetAp {
    ApId ap;
    double mean_dbm;
  };

  ApId fresh_ap() {
    std::uniform_int_distribution<int> byte(0, 255);
    while (true) {
      char buf[18];
      // locally administered unicast prefix
      std::snprintf(buf, sizeof buf, "%02x:%02x:%02x:%02x:%02x:%02x", (byte(rng_) & 0xfc) | 0x02, byte(rng_),
                    byte(rng_), byte(rng_), byte(rng_), byte(rng_));
      ApId id = ApId::parse(buf);
      if (used_.insert(id).second) return id;
    }
  }

  double gauss(double mean, double sigma) { return std::normal_distribution<double>(mean, sigma)(rng_); }
  bool chance(double p) { return std::bernoulli_distribution(p)(rng_); }
  std::size_t uniform(std::size_t lo, std::size_t hi) { return std::uniform_int_distribution<std::size_t>(lo, hi)(rng_); }

  Building make_building() {
    Building b;
    if (spec_.profile == WorldProfile::underground_parking) {
      for (int k = 0; k < 2; ++k) {
        b.aps.push_back(fresh_ap());
        b.base_dbm.push_back(-90.0);
      }
      b.rooms.push_back({{0, 1}, {-90.0, -90.0}});
      return b;
    }
    const std::size_t n = uniform(spec_.ap_min, spec_.ap_max);
    for (std::size_t k = 0; k < n; ++k) {
      b.aps.push_back(fresh_ap());
      b.base_dbm.push_back(gauss(spec_.indoor_rssi_mean, spec_.indoor_rssi_sigma));
    }
    const std::size_t rooms = uniform(spec_.rooms_min, spec_.rooms_max);
    for (std::size_t r = 0; r < rooms; ++r) {
      Room room;
      const bool weak = chance(spec_.weak_room_fraction);
      std::vector<std::size_t> order(n);
      std::iota(order.begin(), order.end(), std::size_t{0});
      if (weak) {
        std::shuffle(order.begin(), order.end(), rng_);
        order.resize(std::min(n, spec_.weak_room_aps));
        std::sort(order.begin(), order.end());
      }
      for (std::size_t k : order) {
        const double mean = b.base_dbm[k] + gauss(0.0, spec_.room_shift_sigma) -
                            (weak ? spec_.weak_room_attenuation_db : 0.0);
        if (mean < -95.0) continue;  // below receiver sensitivity
        room.visible.push_back(k);
        room.mean_dbm.push_back(mean);
      }
      b.rooms.push_back(std::move(room));
    }
    return b;
  }

  std::size_t scans_for(double lo_s, double hi_s) {
    const double s = std::uniform_real_distribution<double>(lo_s, hi_s)(rng_);
    return std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(s / spec_.scan_period_s)));
  }

  std::size_t pick_next(std::size_t here) {
    if (spec_.buildings == 1) return here;
    std::size_t next = uniform(0, spec_.buildings - 2);
    return next >= here ? next + 1 : next;
  }

  static int to_dbm(double v) { return static_cast<int>(std::lround(std::clamp(v, -99.0, -20.0))); }

  void emit(std::vector<ApReading> readings, Label label, std::size_t district, std::int64_t period_ms) {
    ScanRecord rec;
    rec.device_id = spec_.device_id;
    rec.seq = static_cast<std::int64_t>(records_.size());
    rec.timestamp_ms = spec_.start_ms + rec.seq * period_ms;
    rec.readings = std::move(readings);
    rec.label = label;
    rec.location = "district-" + std::to_string(district);
    records_.push_back(std::move(rec));
  }

  void dwell_indoor(std::size_t b, std::size_t scans, std::size_t total, std::int64_t period_ms) {
    const Building& bld = buildings_[b];
    std::size_t room = uniform(0, bld.rooms.size() - 1);
    const double leave = spec_.scan_period_s / spec_.room_dwell_s;
    for (std::size_t s = 0; s < scans && records_.size() < total; ++s) {
      if (bld.rooms.size() > 1 && chance(std::min(1.0, leave))) {
        std::size_t next = uniform(0, bld.rooms.size() - 2);
        room = next >= room ? next + 1 : next;
      }
      const Room& r = bld.rooms[room];
      std::vector<ApReading> readings;
      if (spec_.profile == WorldProfile::underground_parking) {
        for (std::size_t k = 0; k < r.visible.size(); ++k)
          if (chance(0.5))
            readings.push_back({bld.aps[r.visible[k]], std::min(-85, to_dbm(gauss(r.mean_dbm[k], 2.0)))});
      } else {
        for (std::size_t k = 0; k < r.visible.size(); ++k) {
          if (chance(spec_.dropout)) continue;
          readings.push_back({bld.aps[r.visible[k]], to_dbm(gauss(r.mean_dbm[k], spec_.scan_noise_sigma))});
        }
      }
      emit(std::move(readings), Label::indoor, b, period_ms);
    }
  }

  std::vector<StreetAp>& street(std::size_t a, std::size_t b, std::size_t length) {
    auto& aps = streets_[{std::min(a, b), std::max(a, b)}];
    while (aps.size() < length) aps.push_back({fresh_ap(), gauss(spec_.outdoor_rssi_mean, spec_.outdoor_rssi_sigma)});
    return aps;
  }

  void walk(std::size_t from, std::size_t to, std::size_t scans, std::size_t total, std::int64_t period_ms) {
    const std::size_t span = spec_.street_ap_span;
    const std::size_t route_len =
        static_cast<std::size_t>(std::ceil(spec_.outdoor_dwell_max_s / spec_.scan_period_s)) + span + 1;
    auto& route = street(from, to, route_len);
    const bool forward = from <= to;
    for (std::size_t s = 0; s < scans && records_.size() < total; ++s) {
      std::vector<ApReading> readings;
      if (!chance(spec_.empty_scan_prob)) {
        std::vector<std::size_t> window;
        for (std::size_t k = 0; k < span; ++k) window.push_back(forward ? s + k : route_len - 1 - s - k);
        std::shuffle(window.begin(), window.end(), rng_);
        window.resize(std::min(window.size(), uniform(spec_.outdoor_ap_min, spec_.outdoor_ap_max)));
        for (std::size_t k : window)
          readings.push_back({route[k].ap, to_dbm(gauss(route[k].mean_dbm, spec_.scan_noise_sigma))});
        const bool near_from = s < spec_.leak_scans;
        const bool near_to = scans - s <= spec_.leak_scans;
        if ((near_from || near_to) && spec_.profile == WorldProfile::normal) {
          const Building& bld = buildings_[near_from ? from : to];
          std::vector<std::size_t> strongest(bld.aps.size());
          std::iota(strongest.begin(), strongest.end(), std::size_t{0});
          std::sort(strongest.begin(), strongest.end(),
                    [&](auto x, auto y) { return bld.base_dbm[x] > bld.base_dbm[y]; });
          strongest.resize(std::min(strongest.size(), spec_.leak_aps));
          for (std::size_t k : strongest) {
            if (chance(spec_.dropout)) continue;
            const double mean = bld.base_dbm[k] - spec_.leak_attenuation_db;
            if (mean < -95.0) continue;
            readings.push_back({bld.aps[k], to_dbm(gauss(mean, spec_.scan_noise_sigma))});
          }
        }
      }
      emit(std::move(readings), Label::outdoor, s * 2 < scans ? from : to, period_ms);
    }
  }

  const WorldSpec& spec_;
  std::mt19937_64 rng_;
  std::set<ApId> used_;
  std::vector<Building> buildings_;
  std::map<std::pair<std::size_t, std::size_t>, std::vector<StreetAp>> streets_;
  std::vector<ScanRecord> records_;
};

}  // namespace detail

/// Ground-truth stream for `spec`; identical specs give identical streams.
inline std::vector<ScanRecord> generate(const WorldSpec& spec) {
  spec.validate();
  return detail::WorldBuilder(spec).run();
}

}  // namespace iodetect
