#include "gspot/skeleton.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "gspot/error.hpp"

namespace gspot {

std::string_view to_string(HandSide side) { return side == HandSide::Left ? "left" : "right"; }

HandSide hand_side_from_string(std::string_view s) {
  if (s == "left") return HandSide::Left;
  if (s == "right") return HandSide::Right;
  throw InputError("unknown hand side '" + std::string(s) + "'");
}

Vec3 hand_vector(const Skeleton& skel, HandSide side) {
  const bool left = side == HandSide::Left;
  const Joint& hand = skel[left ? JointId::HandLeft : JointId::HandRight];
  const Joint& elbow = skel[left ? JointId::ElbowLeft : JointId::ElbowRight];
  const Joint& shoulder = skel[left ? JointId::ShoulderLeft : JointId::ShoulderRight];
  if (hand.state == JointState::NotTracked || elbow.state == JointState::NotTracked ||
      shoulder.state == JointState::NotTracked) {
    throw UntrackedLimbError(std::string(to_string(side)) + " arm is not tracked");
  }
  return {double(hand.x) - double(elbow.x), double(hand.y) - double(elbow.y),
          double(hand.z) - double(shoulder.z)};
}

namespace {

constexpr double kGridEps = 1e-9;

Skeleton interpolate(const Skeleton& a, const Skeleton& b, double w) {
  if (w <= kGridEps) return a;
  if (w >= 1.0 - kGridEps) return b;
  Skeleton out;
  out.player_id = a.player_id;
  for (std::size_t j = 0; j < kJointCount; ++j) {
    const Joint& ja = a.joints[j];
    const Joint& jb = b.joints[j];
    Joint& jo = out.joints[j];
    jo.state = std::min(ja.state, jb.state);
    if (ja.state != JointState::NotTracked && jb.state != JointState::NotTracked) {
      jo.set_position(lerp(ja.position(), jb.position(), w));
    } else {
      const Joint& nearest = w < 0.5 ? ja : jb;
      jo.x = nearest.x;
      jo.y = nearest.y;
      jo.z = nearest.z;
    }
  }
  return out;
}

}  // namespace

std::vector<SkeletonSegment> resample_skeletons(std::span<const TimedSkeleton> stream,
                                                double rate_hz, double break_ms) {
  if (!(rate_hz > 0.0)) throw InputError("resample rate must be positive");
  std::vector<SkeletonSegment> segments;
  if (stream.empty()) return segments;

  for (std::size_t i = 1; i < stream.size(); ++i) {
    if (!(stream[i].t_ms > stream[i - 1].t_ms))
      throw OrderingError("skeleton timestamps must be strictly increasing");
  }

  const double period = 1000.0 / rate_hz;
  auto grid_time = [rate_hz](std::int64_t k) { return static_cast<double>(k) * 1000.0 / rate_hz; };
  auto first_index_at_or_after = [rate_hz](double t) {
    return static_cast<std::int64_t>(std::ceil((t - kGridEps) * rate_hz / 1000.0));
  };

  SkeletonSegment current{period, {}};
  auto flush = [&] {
    if (!current.samples.empty()) segments.push_back(std::move(current));
    current = SkeletonSegment{period, {}};
  };

  // Emits grid points in [a.t, b.t) for each admissible pair, and the last
  // point of a segment if it sits on the grid.
  for (std::size_t i = 0; i < stream.size(); ++i) {
    const TimedSkeleton& a = stream[i];
    const bool has_next = i + 1 < stream.size();
    const bool joined = has_next && stream[i + 1].t_ms - a.t_ms <= break_ms;
    if (joined) {
      const TimedSkeleton& b = stream[i + 1];
      for (std::int64_t k = first_index_at_or_after(a.t_ms);; ++k) {
        const double t = grid_time(k);
        if (t >= b.t_ms - kGridEps) break;
        const double w = (t - a.t_ms) / (b.t_ms - a.t_ms);
        current.samples.push_back({t, interpolate(a.skeleton, b.skeleton, w)});
      }
    } else {
      const std::int64_t k = first_index_at_or_after(a.t_ms);
      const double t = grid_time(k);
      if (std::abs(t - a.t_ms) <= kGridEps * std::max(1.0, std::abs(a.t_ms)))
        current.samples.push_back({t, a.skeleton});
      flush();
    }
  }
  flush();
  return segments;
}

}  // namespace gspot
