#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include "gspot/vec3.hpp"

namespace gspot {

enum class JointId : std::uint8_t {
  HipCenter,
  Spine,
  ShoulderCenter,
  Head,
  ShoulderLeft,
  ElbowLeft,
  WristLeft,
  HandLeft,
  ShoulderRight,
  ElbowRight,
  WristRight,
  HandRight,
  HipLeft,
  KneeLeft,
  AnkleLeft,
  FootLeft,
  HipRight,
  KneeRight,
  AnkleRight,
  FootRight,
};

inline constexpr std::size_t kJointCount = 20;

enum class JointState : std::uint8_t { NotTracked = 0, Inferred = 1, Tracked = 2 };

enum class HandSide : std::uint8_t { Left, Right };

std::string_view to_string(HandSide side);
HandSide hand_side_from_string(std::string_view s);

// Positions are stored at sensor precision (f32, meters) so that container
// round trips are bit-exact.
struct Joint {
  float x = 0.0f;
  float y = 0.0f;
  float z = 0.0f;
  JointState state = JointState::NotTracked;

  Vec3 position() const { return {x, y, z}; }
  void set_position(Vec3 p) {
    x = static_cast<float>(p.x);
    y = static_cast<float>(p.y);
    z = static_cast<float>(p.z);
  }
  friend bool operator==(const Joint&, const Joint&) = default;
};

struct Skeleton {
  std::uint8_t player_id = 1;
  std::array<Joint, kJointCount> joints{};

  const Joint& operator[](JointId id) const { return joints[static_cast<std::size_t>(id)]; }
  Joint& operator[](JointId id) { return joints[static_cast<std::size_t>(id)]; }
  friend bool operator==(const Skeleton&, const Skeleton&) = default;
};

// Hand position in the body-relative frame used for features: x and y
// relative to the same-side elbow, z (depth) relative to the same-side
// shoulder. Throws UntrackedLimbError if any of the three joints is
// NotTracked.
Vec3 hand_vector(const Skeleton& skel, HandSide side);

struct TimedSkeleton {
  double t_ms = 0.0;
  Skeleton skeleton;
};

// A run of uniformly spaced samples with no sequence break inside.
struct SkeletonSegment {
  double period_ms = 0.0;
  std::vector<TimedSkeleton> samples;
};

inline constexpr double kDefaultResampleHz = 30.0;
inline constexpr double kSequenceBreakMs = 500.0;

// Regularizes a jittered stream onto the grid t = k / rate_hz (k integer).
// Joint positions are linearly interpolated between the bracketing inputs;
// an interpolated joint takes the weaker of the two tracking states. Input
// gaps longer than `break_ms` produce no samples and split the output into
// separate segments. Input timestamps must be strictly increasing.
std::vector<SkeletonSegment> resample_skeletons(std::span<const TimedSkeleton> stream,
                                                double rate_hz = kDefaultResampleHz,
                                                double break_ms = kSequenceBreakMs);

}  // namespace gspot
