#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gspot/skeleton.hpp"
#include "gspot/vec3.hpp"

namespace gspot {

enum class AngleBin : std::uint8_t { Low = 0, Mid = 1, High = 2 };

struct PositionSymbol {
  std::uint8_t radius_bit = 0;
  AngleBin angle_x = AngleBin::Mid;
  AngleBin angle_y = AngleBin::Mid;
  AngleBin angle_z = AngleBin::Mid;

  friend bool operator==(const PositionSymbol&, const PositionSymbol&) = default;
};

// Direction components in {-1, 0, +1}; (0,0,0) is the rest symbol.
struct VelocitySymbol {
  std::int8_t dx = 0;
  std::int8_t dy = 0;
  std::int8_t dz = 0;

  bool at_rest() const { return dx == 0 && dy == 0 && dz == 0; }
  friend bool operator==(const VelocitySymbol&, const VelocitySymbol&) = default;
};

inline constexpr int kPositionSymbols = 54;
inline constexpr int kVelocitySymbols = 27;
inline constexpr int kAlphabetSize = kPositionSymbols * kVelocitySymbols;  // 1458

int position_index(PositionSymbol p);
PositionSymbol position_from_index(int index);
int velocity_index(VelocitySymbol v);
VelocitySymbol velocity_from_index(int index);

// symbol = position_index * 27 + velocity_index
int pack_symbol(PositionSymbol p, VelocitySymbol v);
std::pair<PositionSymbol, VelocitySymbol> unpack_symbol(int symbol);

struct FeatureConfig {
  double radius_threshold_m = 0.25;
  double speed_threshold_mps = 0.15;
  double resample_hz = kDefaultResampleHz;

  friend bool operator==(const FeatureConfig&, const FeatureConfig&) = default;
};

// Throws InputError unless all fields are positive and finite.
void validate(const FeatureConfig& cfg);

// Angle bin edge; not configurable.
inline constexpr double kAngleBinRad = 0.78539816339744830962;

PositionSymbol discretize_position(Vec3 hand, const FeatureConfig& cfg);
VelocitySymbol discretize_velocity(Vec3 now, Vec3 prev, double dt_s, const FeatureConfig& cfg);

struct ObservationSequence {
  std::vector<int> symbols;
  std::vector<double> t_ms;  // one per symbol
  HandSide side = HandSide::Right;
  std::uint8_t skeleton_id = 0;

  std::size_t size() const { return symbols.size(); }
  bool empty() const { return symbols.empty(); }
  double start_ms() const { return t_ms.empty() ? 0.0 : t_ms.front(); }
  double end_ms() const { return t_ms.empty() ? 0.0 : t_ms.back(); }
};

// One symbol per resampled frame. The first frame of every sequence gets the
// rest velocity. Frames where the arm is not tracked break the sequence, as
// do breaks between segments.
std::vector<ObservationSequence> extract_sequences(std::span<const SkeletonSegment> segments,
                                                   HandSide side, const FeatureConfig& cfg);

// Resamples a raw track at cfg.resample_hz, then extracts.
std::vector<ObservationSequence> extract_sequences(std::span<const TimedSkeleton> track,
                                                   HandSide side, const FeatureConfig& cfg);

// ---------------------------------------------------------------------------
// key = value configuration text. Blank lines and '#' comments are ignored.

using ConfigMap = std::map<std::string, std::string>;

ConfigMap parse_config_text(const std::string& text);
ConfigMap load_config_file(const std::filesystem::path& path);

// Applies recognized feature keys (radius_threshold_m, speed_threshold_mps,
// resample_hz) on top of `base`; other keys are left for other consumers.
FeatureConfig feature_config_from(const ConfigMap& map, FeatureConfig base = {});

double config_number(const ConfigMap& map, const std::string& key, double fallback);

}  // namespace gspot
