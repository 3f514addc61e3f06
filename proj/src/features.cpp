#include "gspot/features.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "gspot/error.hpp"

namespace gspot {

int position_index(PositionSymbol p) {
  return p.radius_bit * 27 + static_cast<int>(p.angle_x) * 9 + static_cast<int>(p.angle_y) * 3 +
         static_cast<int>(p.angle_z);
}

PositionSymbol position_from_index(int index) {
  if (index < 0 || index >= kPositionSymbols) throw RangeError("position symbol out of range");
  return {static_cast<std::uint8_t>(index / 27), static_cast<AngleBin>(index / 9 % 3),
          static_cast<AngleBin>(index / 3 % 3), static_cast<AngleBin>(index % 3)};
}

int velocity_index(VelocitySymbol v) { return (v.dx + 1) * 9 + (v.dy + 1) * 3 + (v.dz + 1); }

VelocitySymbol velocity_from_index(int index) {
  if (index < 0 || index >= kVelocitySymbols) throw RangeError("velocity symbol out of range");
  return {static_cast<std::int8_t>(index / 9 - 1), static_cast<std::int8_t>(index / 3 % 3 - 1),
          static_cast<std::int8_t>(index % 3 - 1)};
}

int pack_symbol(PositionSymbol p, VelocitySymbol v) {
  return position_index(p) * kVelocitySymbols + velocity_index(v);
}

std::pair<PositionSymbol, VelocitySymbol> unpack_symbol(int symbol) {
  if (symbol < 0 || symbol >= kAlphabetSize) throw RangeError("symbol out of range");
  return {position_from_index(symbol / kVelocitySymbols),
          velocity_from_index(symbol % kVelocitySymbols)};
}

void validate(const FeatureConfig& cfg) {
  auto ok = [](double v) { return std::isfinite(v) && v > 0.0; };
  if (!ok(cfg.radius_threshold_m)) throw InputError("radius_threshold_m must be positive");
  if (!ok(cfg.speed_threshold_mps)) throw InputError("speed_threshold_mps must be positive");
  if (!ok(cfg.resample_hz)) throw InputError("resample_hz must be positive");
}

namespace {

AngleBin bin_angle(double theta) {
  if (theta < -kAngleBinRad) return AngleBin::Low;
  if (theta > kAngleBinRad) return AngleBin::High;
  return AngleBin::Mid;
}

}  // namespace

PositionSymbol discretize_position(Vec3 v, const FeatureConfig& cfg) {
  const double r = v.norm();
  PositionSymbol p;
  p.radius_bit = r >= cfg.radius_threshold_m ? 1 : 0;
  if (r == 0.0) return p;
  // Signed elevation toward each axis, in [-pi/2, pi/2].
  auto angle = [r](double c) { return std::asin(std::clamp(c / r, -1.0, 1.0)); };
  p.angle_x = bin_angle(angle(v.x));
  p.angle_y = bin_angle(angle(v.y));
  p.angle_z = bin_angle(angle(v.z));
  return p;
}

namespace {

struct Candidate {
  VelocitySymbol symbol;
  Vec3 unit;
};

// The 26 nonzero directions in increasing packed-index order.
const std::array<Candidate, 26>& candidates() {
  static const auto table = [] {
    std::array<Candidate, 26> c{};
    std::size_t n = 0;
    for (int i = 0; i < kVelocitySymbols; ++i) {
      const VelocitySymbol s = velocity_from_index(i);
      if (s.at_rest()) continue;
      const Vec3 d{double(s.dx), double(s.dy), double(s.dz)};
      c[n++] = {s, d / d.norm()};
    }
    return c;
  }();
  return table;
}

}  // namespace

VelocitySymbol discretize_velocity(Vec3 now, Vec3 prev, double dt_s, const FeatureConfig& cfg) {
  if (!(dt_s > 0.0)) throw InputError("velocity time step must be positive");
  const Vec3 vel = (now - prev) / dt_s;
  const double speed = vel.norm();
  if (!(speed >= cfg.speed_threshold_mps)) return {};
  VelocitySymbol best{};
  double best_cos = -std::numeric_limits<double>::infinity();
  for (const Candidate& c : candidates()) {
    const double cosine = vel.dot(c.unit) / speed;
    if (cosine > best_cos) {
      best_cos = cosine;
      best = c.symbol;
    }
  }
  return best;
}

std::vector<ObservationSequence> extract_sequences(std::span<const SkeletonSegment> segments,
                                                   HandSide side, const FeatureConfig& cfg) {
  validate(cfg);
  std::vector<ObservationSequence> out;
  for (const SkeletonSegment& seg : segments) {
    const double dt_s = seg.period_ms / 1000.0;
    ObservationSequence cur;
    Vec3 prev{};
    auto flush = [&] {
      if (!cur.empty()) out.push_back(std::move(cur));
      cur = ObservationSequence{};
    };
    for (const TimedSkeleton& ts : seg.samples) {
      Vec3 v;
      try {
        v = hand_vector(ts.skeleton, side);
      } catch (const UntrackedLimbError&) {
        flush();
        continue;
      }
      if (!v.finite()) {
        flush();
        continue;
      }
      const PositionSymbol p = discretize_position(v, cfg);
      const VelocitySymbol vel = cur.empty() ? VelocitySymbol{} : discretize_velocity(v, prev, dt_s, cfg);
      if (cur.empty()) {
        cur.side = side;
        cur.skeleton_id = ts.skeleton.player_id;
      }
      cur.symbols.push_back(pack_symbol(p, vel));
      cur.t_ms.push_back(ts.t_ms);
      prev = v;
    }
    flush();
  }
  return out;
}

std::vector<ObservationSequence> extract_sequences(std::span<const TimedSkeleton> track,
                                                   HandSide side, const FeatureConfig& cfg) {
  validate(cfg);
  const auto segments = resample_skeletons(track, cfg.resample_hz);
  return extract_sequences(segments, side, cfg);
}

// ---------------------------------------------------------------------------

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

}  // namespace

ConfigMap parse_config_text(const std::string& text) {
  ConfigMap map;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw InputError("config line " + std::to_string(lineno) + ": expected key = value");
    const std::string key = trim(line.substr(0, eq));
    if (key.empty()) throw InputError("config line " + std::to_string(lineno) + ": empty key");
    map[key] = trim(line.substr(eq + 1));
  }
  return map;
}

ConfigMap load_config_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot read config file " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

double config_number(const ConfigMap& map, const std::string& key, double fallback) {
  const auto it = map.find(key);
  if (it == map.end()) return fallback;
  try {
    std::size_t used = 0;
    const double v = std::stod(it->second, &used);
    if (used != it->second.size()) throw std::invalid_argument(key);
    return v;
  } catch (const std::exception&) {
    throw InputError("config key '" + key + "' is not a number: '" + it->second + "'");
  }
}

FeatureConfig feature_config_from(const ConfigMap& map, FeatureConfig base) {
  base.radius_threshold_m = config_number(map, "radius_threshold_m", base.radius_threshold_m);
  base.speed_threshold_mps = config_number(map, "speed_threshold_mps", base.speed_threshold_mps);
  base.resample_hz = config_number(map, "resample_hz", base.resample_hz);
  validate(base);
  return base;
}

}  // namespace gspot
