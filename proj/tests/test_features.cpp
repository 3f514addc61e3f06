#include <catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <set>

#include "gspot/error.hpp"
#include "gspot/features.hpp"
#include "gspot/rng.hpp"
#include "gspot/skeleton.hpp"

using namespace gspot;

namespace {

Skeleton random_skeleton(Rng& rng) {
  Skeleton s;
  for (auto& j : s.joints) {
    j.set_position({rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(1, 3)});
    j.state = JointState::Tracked;
  }
  return s;
}

// Nearest of the 26 unit directions by cosine, lowest velocity index on ties.
VelocitySymbol nearest_direction(Vec3 vel) {
  VelocitySymbol best;
  double best_cos = -2.0;
  for (int i = 0; i < kVelocitySymbols; ++i) {
    const int dx = i / 9 - 1, dy = i / 3 % 3 - 1, dz = i % 3 - 1;
    if (dx == 0 && dy == 0 && dz == 0) continue;
    const double c = (vel.x * dx + vel.y * dy + vel.z * dz) /
                     (vel.norm() * std::sqrt(double(dx * dx + dy * dy + dz * dz)));
    if (c > best_cos + 1e-12) {
      best_cos = c;
      best = {static_cast<std::int8_t>(dx), static_cast<std::int8_t>(dy), static_cast<std::int8_t>(dz)};
    }
  }
  return best;
}

AngleBin oracle_bin(double component, double norm) {
  const double theta = std::asin(component / norm);
  if (theta < -std::numbers::pi / 4) return AngleBin::Low;
  if (theta > std::numbers::pi / 4) return AngleBin::High;
  return AngleBin::Mid;
}

AngleBin mirror(AngleBin b) {
  return b == AngleBin::Low ? AngleBin::High : b == AngleBin::High ? AngleBin::Low : AngleBin::Mid;
}

TimedSkeleton at(double t_ms, Vec3 hand) {
  TimedSkeleton ts;
  ts.t_ms = t_ms;
  for (auto& j : ts.skeleton.joints) j.state = JointState::Tracked;
  ts.skeleton[JointId::ShoulderRight].set_position({0.2, 0.4, 2.0});
  ts.skeleton[JointId::ElbowRight].set_position({0.25, 0.15, 2.0});
  ts.skeleton[JointId::HandRight].set_position(hand);
  return ts;
}

}  // namespace

// ---------------------------------------------------------------------------
// hand vector and resampling

TEST_CASE("hand vector is elbow-relative in x,y and shoulder-relative in z") {
  Skeleton s;
  for (auto& j : s.joints) j.state = JointState::Tracked;
  CHECK(hand_vector(s, HandSide::Right) == Vec3{0, 0, 0});

  s[JointId::ElbowRight].set_position({0.1, 0.2, 2.0});
  s[JointId::ShoulderRight].set_position({0.2, 0.5, 2.1});
  s[JointId::HandRight].set_position({0.4, 0.2, 2.1});
  const Vec3 v = hand_vector(s, HandSide::Right);
  CHECK(v.x == Catch::Approx(0.3).margin(1e-6));
  CHECK(v.y == Catch::Approx(0.0).margin(1e-6));
  CHECK(v.z == Catch::Approx(0.0).margin(1e-6));

  s[JointId::ElbowRight].state = JointState::NotTracked;
  CHECK_THROWS_AS(hand_vector(s, HandSide::Right), UntrackedLimbError);
  s[JointId::ElbowRight].state = JointState::Inferred;
  CHECK_NOTHROW(hand_vector(s, HandSide::Right));
}

TEST_CASE("hand vector matches componentwise subtraction and ignores translation") {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    Skeleton s = random_skeleton(rng);
    for (HandSide side : {HandSide::Left, HandSide::Right}) {
      const auto& hand = s[side == HandSide::Left ? JointId::HandLeft : JointId::HandRight];
      const auto& elbow = s[side == HandSide::Left ? JointId::ElbowLeft : JointId::ElbowRight];
      const auto& shoulder = s[side == HandSide::Left ? JointId::ShoulderLeft : JointId::ShoulderRight];
      const Vec3 v = hand_vector(s, side);
      CHECK(v.x == double(hand.x) - double(elbow.x));
      CHECK(v.y == double(hand.y) - double(elbow.y));
      CHECK(v.z == double(hand.z) - double(shoulder.z));

      Skeleton moved = s;
      const Vec3 d{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
      for (auto& j : moved.joints) j.set_position(j.position() + d);
      const Vec3 w = hand_vector(moved, side);
      CHECK(w.x == Catch::Approx(v.x).margin(1e-5));
      CHECK(w.y == Catch::Approx(v.y).margin(1e-5));
      CHECK(w.z == Catch::Approx(v.z).margin(1e-5));
    }
  }
}

TEST_CASE("resampling interpolates linearly and is the identity on its own grid") {
  std::vector<TimedSkeleton> two = {at(0, {0, 0, 2}), at(100, {0.1, 0, 2})};
  const auto segs = resample_skeletons(two, 20.0);
  REQUIRE(segs.size() == 1);
  REQUIRE(segs[0].samples.size() == 3);
  CHECK(segs[0].samples[1].t_ms == Catch::Approx(50.0));
  CHECK(segs[0].samples[1].skeleton[JointId::HandRight].x == Catch::Approx(0.05).margin(1e-7));

  std::vector<TimedSkeleton> grid;
  for (int k = 0; k < 30; ++k) grid.push_back(at(k * 1000.0 / 30.0, {0.01 * k, 0.2, 2.0}));
  const auto same = resample_skeletons(grid, 30.0);
  REQUIRE(same.size() == 1);
  REQUIRE(same[0].samples.size() == grid.size());
  for (std::size_t k = 0; k < grid.size(); ++k)
    CHECK(std::abs(same[0].samples[k].skeleton[JointId::HandRight].x - grid[k].skeleton[JointId::HandRight].x) <
          1e-6);

  CHECK(resample_skeletons(std::vector<TimedSkeleton>{}).empty());
}

TEST_CASE("resampled jittered sinusoid stays close to the analytic path") {
  Rng rng(9);
  auto x_of = [](double t_ms) { return 0.3 * std::sin(2 * std::numbers::pi * t_ms / 1000.0); };
  std::vector<TimedSkeleton> in;
  double t = 0;
  while (t < 5000) {
    in.push_back(at(t, {x_of(t), 0, 2}));
    t += rng.uniform(33.0, 66.0);  // 15-30 fps
  }
  const auto segs = resample_skeletons(in, 30.0);
  REQUIRE(segs.size() == 1);
  double worst = 0;
  for (const auto& s : segs[0].samples)
    worst = std::max(worst, std::abs(s.skeleton[JointId::HandRight].x - x_of(s.t_ms)));
  CHECK(worst < 0.02);
}

TEST_CASE("gaps longer than 500 ms split segments and get no samples") {
  std::vector<TimedSkeleton> in;
  for (int k = 0; k < 10; ++k) in.push_back(at(k * 33.0, {0, 0, 2}));
  const double resume = 9 * 33.0 + 600.0;
  for (int k = 0; k < 10; ++k) in.push_back(at(resume + k * 33.0, {0, 0, 2}));
  const auto segs = resample_skeletons(in, 30.0);
  REQUIRE(segs.size() == 2);
  for (const auto& seg : segs)
    for (const auto& s : seg.samples) CHECK((s.t_ms <= 9 * 33.0 || s.t_ms >= resume));
}

// ---------------------------------------------------------------------------
// symbols

TEST_CASE("symbol packing is a bijection over the alphabet") {
  std::set<int> seen;
  for (int p = 0; p < kPositionSymbols; ++p)
    for (int v = 0; v < kVelocitySymbols; ++v) {
      const auto ps = position_from_index(p);
      const auto vs = velocity_from_index(v);
      const int s = pack_symbol(ps, vs);
      CHECK(s == p * 27 + v);
      const auto [p2, v2] = unpack_symbol(s);
      CHECK(p2 == ps);
      CHECK(v2 == vs);
      seen.insert(s);
    }
  CHECK(seen.size() == 1458);
  CHECK(kAlphabetSize == 1458);
  CHECK_THROWS_AS(unpack_symbol(1458), RangeError);
  CHECK_THROWS_AS(unpack_symbol(-1), RangeError);
  CHECK(velocity_index({0, 0, 0}) == 13);
}

TEST_CASE("position discretization examples") {
  const FeatureConfig cfg;
  const auto zero = discretize_position({0, 0, 0}, cfg);
  CHECK(zero.radius_bit == 0);
  CHECK(zero.angle_x == AngleBin::Mid);
  CHECK(zero.angle_y == AngleBin::Mid);
  CHECK(zero.angle_z == AngleBin::Mid);

  const auto ax = discretize_position({0.5, 0, 0}, cfg);
  CHECK(ax.radius_bit == 1);
  CHECK(ax.angle_x == AngleBin::High);
  CHECK(ax.angle_y == AngleBin::Mid);
  CHECK(ax.angle_z == AngleBin::Mid);

  // arcsin(1/sqrt 3) = 0.6155 < pi/4
  CHECK(std::asin(1 / std::sqrt(3.0)) == Catch::Approx(0.6155).margin(1e-4));
  const auto diag = discretize_position({0.1, 0.1, 0.1}, cfg);
  CHECK(diag == PositionSymbol{0, AngleBin::Mid, AngleBin::Mid, AngleBin::Mid});

  CHECK(discretize_position({0, -0.3, 0}, cfg).angle_y == AngleBin::Low);
  CHECK(discretize_position({0.25, 0, 0}, cfg).radius_bit == 1);
}

TEST_CASE("position discretization matches the arcsin oracle") {
  Rng rng(13);
  const FeatureConfig cfg;
  for (int i = 0; i < 2000; ++i) {
    const Vec3 v{rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6), rng.uniform(-0.6, 0.6)};
    const auto p = discretize_position(v, cfg);
    const double r = v.norm();
    CHECK(p.radius_bit == (r >= 0.25 ? 1 : 0));
    CHECK(p.angle_x == oracle_bin(v.x, r));
    CHECK(p.angle_y == oracle_bin(v.y, r));
    CHECK(p.angle_z == oracle_bin(v.z, r));

    const auto m = discretize_position({-v.x, v.y, v.z}, cfg);
    CHECK(m.angle_x == mirror(p.angle_x));
    CHECK(m.angle_y == p.angle_y);
    CHECK(m.angle_z == p.angle_z);
    CHECK(m.radius_bit == p.radius_bit);
  }
}

TEST_CASE("velocity discretization examples") {
  const FeatureConfig cfg;
  const Vec3 p{0.1, 0.2, 0.3};
  CHECK(discretize_velocity(p, p, 1.0 / 30, cfg).at_rest());
  CHECK(discretize_velocity({1, 0, 0}, {0, 0, 0}, 1.0, cfg) == VelocitySymbol{1, 0, 0});
  CHECK(discretize_velocity({1, 0.9, 0}, {0, 0, 0}, 1.0, cfg) == VelocitySymbol{1, 1, 0});
  CHECK(nearest_direction({1, 0.9, 0}) == VelocitySymbol{1, 1, 0});
  // below 0.15 m/s
  CHECK(discretize_velocity({0.004, 0, 0}, {0, 0, 0}, 1.0 / 30, cfg).at_rest());
  CHECK_THROWS_AS(discretize_velocity(p, p, 0.0, cfg), InputError);
}

TEST_CASE("velocity discretization matches the cosine oracle and its symmetries") {
  Rng rng(17);
  const FeatureConfig cfg;
  for (int i = 0; i < 3000; ++i) {
    const Vec3 prev{rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5), rng.uniform(-0.5, 0.5)};
    const Vec3 d{rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1), rng.uniform(-0.1, 0.1)};
    const double dt = rng.uniform(0.01, 0.1);
    const auto v = discretize_velocity(prev + d, prev, dt, cfg);
    if ((d / dt).norm() < cfg.speed_threshold_mps) {
      CHECK(v.at_rest());
    } else {
      CHECK(v == nearest_direction(d / dt));
    }
    CHECK(discretize_velocity(prev + d * 2.0, prev, dt * 2.0, cfg) == v);
    const auto m = discretize_velocity({-(prev.x + d.x), prev.y + d.y, prev.z + d.z}, {-prev.x, prev.y, prev.z}, dt,
                                       cfg);
    CHECK(m == VelocitySymbol{static_cast<std::int8_t>(-v.dx), v.dy, v.dz});
  }
}

TEST_CASE("sequence extraction") {
  const FeatureConfig cfg;
  SECTION("stationary arm gives identical rest symbols") {
    std::vector<TimedSkeleton> track;
    for (int k = 0; k < 10; ++k) track.push_back(at(k * 1000.0 / 30.0, {0.3, 0.1, 2.1}));
    const auto seqs = extract_sequences(std::span<const TimedSkeleton>(track), HandSide::Right, cfg);
    REQUIRE(seqs.size() == 1);
    REQUIRE(seqs[0].size() == 10);
    for (int s : seqs[0].symbols) {
      CHECK(s == seqs[0].symbols[0]);
      CHECK(unpack_symbol(s).second.at_rest());
    }
  }
  SECTION("rightward motion gives +x velocity") {
    std::vector<TimedSkeleton> track;
    for (int k = 0; k < 20; ++k) track.push_back(at(k * 1000.0 / 30.0, {0.25 + 0.02 * k, 0.1, 2.1}));
    const auto seqs = extract_sequences(std::span<const TimedSkeleton>(track), HandSide::Right, cfg);
    REQUIRE(seqs.size() == 1);
    CHECK(unpack_symbol(seqs[0].symbols[0]).second.at_rest());
    for (std::size_t i = 1; i < seqs[0].size(); ++i)
      CHECK(unpack_symbol(seqs[0].symbols[i]).second == VelocitySymbol{1, 0, 0});
  }
  SECTION("a 600 ms dropout splits the sequence") {
    std::vector<TimedSkeleton> track;
    for (int k = 0; k < 10; ++k) track.push_back(at(k * 33.0, {0.3, 0.1, 2.1}));
    for (int k = 0; k < 10; ++k) track.push_back(at(900 + k * 33.0, {0.3, 0.1, 2.1}));
    CHECK(extract_sequences(std::span<const TimedSkeleton>(track), HandSide::Right, cfg).size() == 2);
  }
  SECTION("untracked arm gives nothing") {
    std::vector<TimedSkeleton> track;
    for (int k = 0; k < 10; ++k) {
      auto ts = at(k * 33.0, {0.3, 0.1, 2.1});
      ts.skeleton[JointId::HandRight].state = JointState::NotTracked;
      track.push_back(ts);
    }
    CHECK(extract_sequences(std::span<const TimedSkeleton>(track), HandSide::Right, cfg).empty());
  }
}

TEST_CASE("config text parsing") {
  const auto m = parse_config_text("# comment\n\nradius_threshold_m = 0.3\n speed_threshold_mps=0.2 \nother = x\n");
  CHECK(m.at("other") == "x");
  const auto cfg = feature_config_from(m);
  CHECK(cfg.radius_threshold_m == 0.3);
  CHECK(cfg.speed_threshold_mps == 0.2);
  CHECK(cfg.resample_hz == 30.0);
  CHECK_THROWS_AS(feature_config_from(parse_config_text("resample_hz = -1\n")), InputError);
  CHECK_THROWS_AS(feature_config_from(parse_config_text("resample_hz = abc\n")), InputError);
}
