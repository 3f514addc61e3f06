#pragma once

#include <cstdint>
#include <filesystem>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gspot/container.hpp"
#include "gspot/gsn.hpp"
#include "gspot/pipeline.hpp"
#include "gspot/synth.hpp"

namespace gspot {

// ---------------------------------------------------------------------------
// Detection scoring

inline constexpr double kDefaultMatchWindowMs = 2000.0;

struct GestureScore {
  std::string gesture_name;
  std::size_t truths = 0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t absorbed = 0;  // duplicate detections inside an already matched window

  double tp_rate() const { return truths == 0 ? 0.0 : static_cast<double>(tp) / truths; }

  friend bool operator==(const GestureScore&, const GestureScore&) = default;
};

struct ScoreReport {
  std::vector<GestureScore> gestures;  // sorted by name
  GestureScore totals;
  double window_ms = kDefaultMatchWindowMs;
  PersonTime person_time;

  double fp_interval_s() const;          // total person-seconds per FP
  double fp_interval_tracked_s() const;  // tracked person-seconds per FP
  const GestureScore* find(const std::string& gesture) const;
};

// An event is a TP when its end lies in [start, end + window_ms] of an
// unmatched truth interval with the same gesture, skeleton and hand. Later
// events inside an already matched window are absorbed. Everything else is a
// FP; unmatched truths are FNs. Input order does not matter.
ScoreReport match_detections(std::span<const SpottedEvent> events, const AnnotationTrack& truth,
                             double window_ms = kDefaultMatchWindowMs, PersonTime person_time = {});

// person_seconds / fp_count; +infinity when fp_count is zero.
double fp_interval(std::size_t fp_count, double person_seconds);

std::string report_to_json(const ScoreReport& report);
std::string report_table(const ScoreReport& report);

// ---------------------------------------------------------------------------
// Gesture set comparison

struct ComparisonRow {
  std::string gesture_a;
  std::string gesture_b;  // empty when the gesture has no partner in b
  std::size_t fp_a = 0;
  std::size_t fp_b = 0;
  double ratio = 0.0;  // fp_a / fp_b; 1 when both are zero
};

struct ComparisonReport {
  std::vector<ComparisonRow> rows;
  std::size_t total_a = 0;
  std::size_t total_b = 0;
  double total_ratio = 0.0;
  PersonTime person_time;
};

double fp_ratio(std::size_t a, std::size_t b);

// Runs both networks over the same streams and counts false positives per
// gesture (all detections when `truth` is empty). Rows pair identical
// gesture names first, then redesign counterparts. Throws InputError when the
// networks use different feature configurations.
ComparisonReport compare_gesture_sets(const GestureSpottingNetwork& a, const GestureSpottingNetwork& b,
                                      std::span<const HandStream> streams, const AnnotationTrack& truth = {},
                                      PersonTime person_time = {});

std::string comparison_to_json(const ComparisonReport& report);
std::string comparison_table(const ComparisonReport& report);

// ---------------------------------------------------------------------------
// Still frames

inline constexpr double kDefaultStillThresholdMm = 8.0;
inline constexpr double kDefaultStillMinSeconds = 5.0;

struct StillInterval {
  std::size_t first_frame = 0;  // indices into the depth frame list
  std::size_t last_frame = 0;
  std::uint64_t start_ms = 0;
  std::uint64_t end_ms = 0;
  std::size_t representative = 0;  // middle frame

  friend bool operator==(const StillInterval&, const StillInterval&) = default;
};

// Mean absolute per-pixel depth difference between two frames, in mm.
double mean_abs_depth_diff(const DepthFrame& a, const DepthFrame& b);

// Maximal runs of consecutive frames whose successive differences all stay
// below threshold_mm and that span at least min_duration_s.
std::vector<StillInterval> still_frames(std::span<const DepthFrame> frames,
                                        double threshold_mm = kDefaultStillThresholdMm,
                                        double min_duration_s = kDefaultStillMinSeconds);

// Frame-at-a-time form of still_frames; keeps only the previous frame.
class StillFrameTracker {
 public:
  explicit StillFrameTracker(double threshold_mm = kDefaultStillThresholdMm,
                             double min_duration_s = kDefaultStillMinSeconds);

  void push(const DepthFrame& frame);
  // Closes the open run and returns all intervals found.
  std::vector<StillInterval> finish();

 private:
  void close(std::size_t last);

  double threshold_mm_;
  double min_duration_s_;
  std::optional<DepthFrame> prev_;
  std::size_t index_ = 0;
  std::size_t run_start_ = 0;
  std::uint64_t run_start_ms_ = 0;
  std::vector<StillInterval> out_;
};

// ---------------------------------------------------------------------------
// Occupancy

struct OccupancyMap {
  std::uint16_t width = 0;
  std::uint16_t height = 0;
  std::vector<double> values;  // row-major, each in [0, 1]

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * width + x]; }

  friend bool operator==(const OccupancyMap&, const OccupancyMap&) = default;
};

// Fraction of frames in which each pixel carries a nonzero player id.
OccupancyMap occupancy_map(std::span<const DepthFrame> frames);
OccupancyMap occupancy_map(std::span<const DepthFrame* const> frames);

// Incremental occupancy over frames of one size.
class OccupancyAccumulator {
 public:
  void add(const DepthFrame& frame);
  std::size_t frames() const { return frames_; }
  // Throws InputError when no frame was added.
  OccupancyMap map() const;

 private:
  std::uint16_t width_ = 0;
  std::uint16_t height_ = 0;
  std::size_t frames_ = 0;
  std::vector<std::uint32_t> counts_;
};

// Per-pixel max(0, gesture - background).
OccupancyMap gesture_zone(const OccupancyMap& gesture, const OccupancyMap& background);

// 16-bit binary PGM (P5, big-endian samples, maxval 65535).
void write_pgm(const OccupancyMap& map, const std::filesystem::path& path);
std::string pgm_bytes(const OccupancyMap& map);

}  // namespace gspot
