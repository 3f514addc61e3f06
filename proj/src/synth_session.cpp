#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <numbers>

#include "gspot/error.hpp"
#include "gspot/log.hpp"
#include "gspot/rng.hpp"
#include "gspot/synth.hpp"
#include "synth_internal.hpp"

namespace gspot {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kBlendMs = 300.0;
constexpr double kActivityGapMs = 500.0;
constexpr std::uint64_t kEpochMs = 1'700'000'000'000ULL;

const Vec3 kRestHand{-0.06, -0.39, -0.12};

double min_jerk(double tau) {
  tau = std::clamp(tau, 0.0, 1.0);
  return tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
}

const Vec3& rest_elbow() {
  static const Vec3 e = solve_elbow(kRestHand);
  return e;
}

// Sum of low-frequency sinusoids per axis.
class Drift {
 public:
  Drift() = default;
  Drift(Rng& rng, double amplitude_m) {
    for (auto& axis : waves_)
      for (auto& w : axis)
        w = {amplitude_m / 3.0 * rng.uniform(0.5, 1.5), rng.uniform(0.03, 0.25),
             rng.uniform(0.0, 2.0 * kPi)};
  }

  Vec3 at(double t_ms) const {
    std::array<double, 3> v{};
    for (std::size_t a = 0; a < 3; ++a)
      for (const auto& w : waves_[a]) v[a] += w.amp * std::sin(2.0 * kPi * w.freq_hz * t_ms / 1000.0 + w.phase);
    return {v[0], v[1], v[2]};
  }

 private:
  struct Wave {
    double amp = 0.0;
    double freq_hz = 0.0;
    double phase = 0.0;
  };
  std::array<std::array<Wave, 3>, 3> waves_{};
};

// Distance factor (ms) covered while a boundary velocity decays linearly to
// zero over the blend window.
double glide(double dt_ms) {
  dt_ms = std::clamp(dt_ms, 0.0, kBlendMs);
  return dt_ms - dt_ms * dt_ms / (2.0 * kBlendMs);
}

struct Activity {
  double start = 0.0;
  double end = 0.0;
  std::vector<ArmSample> path;
  // Boundary velocities in m/ms, continued into the splice blends.
  Vec3 v_hand_in, v_elbow_in, v_hand_out, v_elbow_out;

  Activity(double s, std::vector<ArmSample> p) : start(s), path(std::move(p)) {
    end = start + path.back().t_ms;
    if (path.size() >= 2) {
      const auto& a = path[0];
      const auto& b = path[1];
      const auto& y = path[path.size() - 2];
      const auto& z = path.back();
      v_hand_in = (b.hand - a.hand) / (b.t_ms - a.t_ms);
      v_elbow_in = (b.elbow - a.elbow) / (b.t_ms - a.t_ms);
      v_hand_out = (z.hand - y.hand) / (z.t_ms - y.t_ms);
      v_elbow_out = (z.elbow - y.elbow) / (z.t_ms - y.t_ms);
    }
  }

  double lo() const { return start - kBlendMs; }
  double hi() const { return end + kBlendMs; }
};

ArmSample sample_path(const std::vector<ArmSample>& path, double tau) {
  if (tau <= path.front().t_ms) return path.front();
  if (tau >= path.back().t_ms) return path.back();
  auto it = std::upper_bound(path.begin(), path.end(), tau,
                             [](double t, const ArmSample& s) { return t < s.t_ms; });
  const ArmSample& b = *it;
  const ArmSample& a = *(it - 1);
  const double w = (tau - a.t_ms) / (b.t_ms - a.t_ms);
  return {tau, lerp(a.hand, b.hand, w), lerp(a.elbow, b.elbow, w)};
}

struct Interval {
  double lo;
  double hi;
};

struct Arm {
  Drift drift;
  std::vector<Activity> acts;  // sorted, extended windows disjoint
  std::vector<Interval> dropouts;

  bool free(double lo, double hi) const {
    for (const auto& a : acts)
      if (lo < a.hi() + kActivityGapMs && a.lo() - kActivityGapMs < hi) return false;
    return true;
  }

  void insert(Activity act) {
    auto it = std::lower_bound(acts.begin(), acts.end(), act.start,
                               [](const Activity& a, double s) { return a.start < s; });
    acts.insert(it, std::move(act));
  }

  // Hand and elbow in the side frame.
  std::pair<Vec3, Vec3> pose(double t) const {
    const Vec3 d = drift.at(t);
    Vec3 hand = kRestHand;
    Vec3 elbow = rest_elbow();
    auto it = std::upper_bound(acts.begin(), acts.end(), t,
                               [](double x, const Activity& a) { return x < a.lo(); });
    if (it != acts.begin()) {
      const Activity& a = *(it - 1);
      if (t <= a.hi()) {
        if (t < a.start) {
          const double w = min_jerk((t - a.lo()) / kBlendMs);
          const double lead = glide(a.start - t);
          hand = lerp(hand, a.path.front().hand - a.v_hand_in * lead, w);
          elbow = lerp(elbow, a.path.front().elbow - a.v_elbow_in * lead, w);
        } else if (t > a.end) {
          const double w = min_jerk((t - a.end) / kBlendMs);
          const double lag = glide(t - a.end);
          hand = lerp(a.path.back().hand + a.v_hand_out * lag, hand, w);
          elbow = lerp(a.path.back().elbow + a.v_elbow_out * lag, elbow, w);
        } else {
          const ArmSample s = sample_path(a.path, t - a.start);
          hand = s.hand;
          elbow = s.elbow;
        }
      }
    }
    return {hand + d, elbow + d};
  }

  bool dropped(double t) const {
    for (const auto& iv : dropouts)
      if (t >= iv.lo && t < iv.hi) return true;
    return false;
  }
};

struct Body {
  std::uint8_t player_id = 1;
  Vec3 base;
  Drift sway;
  std::array<Arm, 2> arms;  // indexed by HandSide
};

std::size_t arm_index(HandSide s) { return s == HandSide::Left ? 0 : 1; }

void set(Skeleton& s, JointId id, Vec3 p) {
  auto& j = s[id];
  j.set_position(p);
  j.state = JointState::Tracked;
}

Skeleton pose_skeleton(const Body& body, double t, Rng* noise, double sigma) {
  Skeleton s;
  s.player_id = body.player_id;
  const Vec3 hip = body.base + body.sway.at(t);
  const Vec3 sc = hip + Vec3{0.0, 0.52, 0.03};
  set(s, JointId::HipCenter, hip);
  set(s, JointId::Spine, hip + Vec3{0.0, 0.25, 0.02});
  set(s, JointId::ShoulderCenter, sc);
  set(s, JointId::Head, hip + Vec3{0.0, 0.72, 0.05});
  for (HandSide side : {HandSide::Left, HandSide::Right}) {
    const double sx = side == HandSide::Right ? 1.0 : -1.0;
    const bool right = side == HandSide::Right;
    const Vec3 shoulder = sc + Vec3{0.18 * sx, -0.02, 0.0};
    const Arm& arm = body.arms[arm_index(side)];
    auto [hand_l, elbow_l] = arm.pose(t);
    const Vec3 hand = shoulder + Vec3{sx * hand_l.x, hand_l.y, hand_l.z};
    const Vec3 elbow = shoulder + Vec3{sx * elbow_l.x, elbow_l.y, elbow_l.z};
    Vec3 to_elbow = elbow - hand;
    const double len = to_elbow.norm();
    const Vec3 wrist = len > 1e-9 ? hand + to_elbow * (0.07 / len) : hand;
    set(s, right ? JointId::ShoulderRight : JointId::ShoulderLeft, shoulder);
    set(s, right ? JointId::ElbowRight : JointId::ElbowLeft, elbow);
    set(s, right ? JointId::WristRight : JointId::WristLeft, wrist);
    set(s, right ? JointId::HandRight : JointId::HandLeft, hand);
    const Vec3 h = hip + Vec3{0.10 * sx, -0.06, 0.0};
    const Vec3 knee = h + Vec3{0.02 * sx, -0.02, -0.45};
    const Vec3 ankle = knee + Vec3{0.0, -0.45, 0.03};
    set(s, right ? JointId::HipRight : JointId::HipLeft, h);
    set(s, right ? JointId::KneeRight : JointId::KneeLeft, knee);
    set(s, right ? JointId::AnkleRight : JointId::AnkleLeft, ankle);
    set(s, right ? JointId::FootRight : JointId::FootLeft, ankle + Vec3{0.0, -0.05, -0.12});
    if (arm.dropped(t)) {
      for (JointId id : right ? std::array{JointId::ElbowRight, JointId::WristRight, JointId::HandRight}
                              : std::array{JointId::ElbowLeft, JointId::WristLeft, JointId::HandLeft})
        s[id].state = JointState::NotTracked;
    }
  }
  if (noise != nullptr && sigma > 0.0) {
    for (auto& j : s.joints)
      j.set_position(j.position() + Vec3{noise->normal(0.0, sigma), noise->normal(0.0, sigma),
                                         noise->normal(0.0, sigma)});
  }
  return s;
}

// ---------------------------------------------------------------------------
// Background events, all starting and ending at the rest pose.

class EventPath {
 public:
  EventPath() { out_.push_back({0.0, kRestHand, {}}); }

  void move_to(Vec3 target, double dur) {
    const Vec3 from = cur_;
    const int steps = std::max(1, static_cast<int>(std::ceil(dur / kTemplateSampleMs)));
    for (int k = 1; k <= steps; ++k) {
      const double s = static_cast<double>(k) / steps;
      cur_ = lerp(from, target, min_jerk(s));
      out_.push_back({t_ + s * dur, cur_, {}});
    }
    t_ += dur;
  }

  void hold(double dur) { move_to(cur_, dur); }
  Vec3 at() const { return cur_; }

  std::vector<ArmSample> finish() && {
    for (auto& s : out_) s.elbow = solve_elbow(s.hand);
    return std::move(out_);
  }

 private:
  Vec3 cur_ = kRestHand;
  double t_ = 0.0;
  std::vector<ArmSample> out_;
};

using EventKind = BackgroundKind;

struct EventRate {
  EventKind kind;
  double per_min;
};

constexpr EventRate kEventRates[] = {
    {EventKind::Reach, 2.0},        {EventKind::Gesticulate, 1.0}, {EventKind::TouchFace, 0.7},
    {EventKind::LateralReach, 0.7}, {EventKind::Stretch, 0.2},
};

std::vector<ArmSample> event_path(EventKind kind, Rng& rng) {
  EventPath p;
  switch (kind) {
    case EventKind::Reach: {
      const Vec3 target{rng.uniform(-0.30, 0.20), rng.uniform(-0.42, -0.28), rng.uniform(-0.55, -0.35)};
      p.move_to(target, rng.uniform(450, 900));
      const int fiddles = static_cast<int>(rng.below(4));
      for (int i = 0; i < fiddles; ++i) {
        p.hold(rng.uniform(150, 700));
        p.move_to(target + Vec3{rng.uniform(-0.03, 0.03), rng.uniform(-0.02, 0.02), rng.uniform(-0.03, 0.03)},
                  rng.uniform(400, 800));
      }
      p.hold(rng.uniform(150, 700));
      p.move_to(kRestHand, rng.uniform(450, 900));
      break;
    }
    case EventKind::Gesticulate: {
      const int moves = 2 + static_cast<int>(rng.below(5));
      for (int i = 0; i < moves; ++i) {
        p.move_to({rng.uniform(-0.25, 0.30), rng.uniform(-0.30, 0.05), rng.uniform(-0.45, -0.20)},
                  rng.uniform(250, 600));
        p.hold(rng.uniform(0, 200));
      }
      p.move_to(kRestHand, rng.uniform(400, 700));
      break;
    }
    case EventKind::TouchFace: {
      p.move_to({rng.uniform(-0.18, -0.12), rng.uniform(0.08, 0.14), rng.uniform(-0.14, -0.08)},
                rng.uniform(500, 800));
      p.hold(rng.uniform(500, 2500));
      p.move_to(kRestHand, rng.uniform(500, 800));
      break;
    }
    case EventKind::LateralReach: {
      p.move_to({rng.uniform(0.35, 0.50), rng.uniform(-0.35, -0.15), rng.uniform(-0.35, -0.15)},
                rng.uniform(500, 800));
      p.hold(rng.uniform(200, 600));
      p.move_to(kRestHand, rng.uniform(500, 800));
      break;
    }
    case EventKind::Stretch: {
      p.move_to({rng.uniform(0.05, 0.20), rng.uniform(0.45, 0.55), rng.uniform(-0.05, 0.05)},
                rng.uniform(700, 1100));
      p.hold(rng.uniform(800, 2000));
      p.move_to(kRestHand, rng.uniform(700, 1100));
      break;
    }
  }
  return std::move(p).finish();
}

double intensity_scale(Intensity i) {
  switch (i) {
    case Intensity::Quiet: return 0.4;
    case Intensity::Typical: return 1.0;
    case Intensity::Boisterous: return 2.0;
  }
  return 1.0;
}

double drift_amplitude(Intensity i) {
  switch (i) {
    case Intensity::Quiet: return 0.01;
    case Intensity::Typical: return 0.02;
    case Intensity::Boisterous: return 0.035;
  }
  return 0.02;
}

Body make_body(std::uint8_t pid, double bx, Rng& rng, Intensity intensity) {
  Body b;
  b.player_id = pid;
  b.base = {bx, -0.35, 2.6};
  const double amp = drift_amplitude(intensity);
  b.sway = Drift(rng, 0.3 * amp);
  for (auto& arm : b.arms) arm.drift = Drift(rng, amp);
  return b;
}

struct Prompt {
  std::string gesture;
  std::string variant;
};

std::vector<Prompt> prompt_list(const SynthConfig& cfg) {
  std::vector<Prompt> out;
  for (const auto& g : cfg.gestures) {
    const auto variants = variants_of(g);
    if (cfg.prompts_per_variant > 0) {
      for (const auto& v : variants)
        for (int k = 0; k < cfg.prompts_per_variant; ++k) out.push_back({g, v});
    } else {
      for (int k = 0; k < cfg.prompts_per_gesture; ++k)
        out.push_back({g, variants[static_cast<std::size_t>(k) % variants.size()]});
    }
  }
  return out;
}

struct Scene {
  std::vector<Body> bodies;
  AnnotationTrack truth;
  std::vector<BackgroundEvent> background;
};

Scene build_scene(const SynthConfig& cfg) {
  validate(cfg);
  Rng root(cfg.seed);
  Rng body_rng = root.fork();
  Rng prompt_rng = root.fork();
  Rng event_rng = root.fork();
  Rng dropout_rng = root.fork();

  Scene scene;
  const double duration_ms = cfg.duration_s * 1000.0;
  for (int i = 0; i < cfg.n_skeletons; ++i) {
    const double bx = cfg.n_skeletons == 1 ? 0.0 : (i == 0 ? -0.45 : 0.45);
    scene.bodies.push_back(make_body(static_cast<std::uint8_t>(i + 1), bx, body_rng, cfg.intensity));
  }

  auto prompts = prompt_list(cfg);
  for (std::size_t i = prompts.size(); i > 1; --i) std::swap(prompts[i - 1], prompts[prompt_rng.below(i)]);
  const double slot = prompts.empty() ? duration_ms : duration_ms / static_cast<double>(prompts.size());
  for (std::size_t i = 0; i < prompts.size(); ++i) {
    const auto& tmpl = find_template(prompts[i].gesture, prompts[i].variant);
    auto path = render_template(tmpl, prompt_rng.bits());
    const double dur = path.back().t_ms;
    if (slot < dur + 2.0 * (kBlendMs + kActivityGapMs))
      throw InputError("too many prompts for a " + std::to_string(cfg.duration_s) + " s session");
    const double room = slot - dur - 2.0 * kBlendMs;
    double start = slot * static_cast<double>(i) + kBlendMs + 0.5 * room +
                   prompt_rng.uniform(-0.2, 0.2) * room;
    start = std::round(start);
    const std::size_t b = i % scene.bodies.size();
    Activity act(start, std::move(path));
    scene.bodies[b].arms[arm_index(HandSide::Right)].insert(std::move(act));
    scene.truth.items.push_back({prompts[i].gesture, prompts[i].variant, scene.bodies[b].player_id,
                                 HandSide::Right, start, start + dur, cfg.annotation_kind});
  }

  if (cfg.background_events) {
    const double scale = intensity_scale(cfg.intensity);
    for (auto& body : scene.bodies) {
      for (const auto& er : kEventRates) {
        const double rate_per_ms = er.per_min * scale / 60000.0;
        double t = event_rng.exponential(rate_per_ms);
        while (t < duration_ms) {
          Arm& arm = body.arms[event_rng.chance(0.6) ? 1 : 0];
          auto path = event_path(er.kind, event_rng);
          const double start = std::round(t);
          const double end = start + path.back().t_ms;
          if (start - kBlendMs > 0.0 && end + kBlendMs < duration_ms &&
              arm.free(start - kBlendMs, end + kBlendMs)) {
            arm.insert(Activity(start, std::move(path)));
            scene.background.push_back({er.kind, body.player_id,
                                        &arm == &body.arms[1] ? HandSide::Right : HandSide::Left, start, end});
          }
          t += event_rng.exponential(rate_per_ms);
        }
      }
    }
  }

  if (cfg.joint_dropout) {
    for (auto& body : scene.bodies) {
      for (auto& arm : body.arms) {
        double t = dropout_rng.exponential(1.0 / 60000.0);
        while (t < duration_ms) {
          arm.dropouts.push_back({t, t + dropout_rng.uniform(300.0, 1500.0)});
          t += dropout_rng.exponential(1.0 / 60000.0);
        }
      }
    }
  }

  std::sort(scene.background.begin(), scene.background.end(),
            [](const BackgroundEvent& a, const BackgroundEvent& b) { return a.start_ms < b.start_ms; });
  std::sort(scene.truth.items.begin(), scene.truth.items.end(),
            [](const Annotation& a, const Annotation& b) { return a.start_ms < b.start_ms; });
  return scene;
}

// Timestamps of one stream: nominal grid with +-2 ms jitter and random drops.
class Ticker {
 public:
  Ticker(double rate_hz, double drop_prob, double duration_ms, Rng rng)
      : rate_(rate_hz), drop_(drop_prob), duration_(duration_ms), rng_(rng) {
    advance();
  }

  bool done() const { return rate_ <= 0.0 || next_ >= duration_; }
  std::uint64_t peek() const { return static_cast<std::uint64_t>(next_); }
  void pop() { advance(); }

 private:
  void advance() {
    if (rate_ <= 0.0) return;
    for (;;) {
      const double nominal = std::round(static_cast<double>(k_) * 1000.0 / rate_);
      ++k_;
      const double jitter = k_ == 1 ? 0.0 : static_cast<double>(rng_.below(5)) - 2.0;
      const bool dropped = rng_.chance(drop_);
      next_ = nominal + jitter;
      if (next_ >= duration_ || !dropped) return;
    }
  }

  double rate_;
  double drop_;
  double duration_;
  Rng rng_;
  std::uint64_t k_ = 0;
  double next_ = 0.0;
};

}  // namespace

std::string_view to_string(BackgroundKind k) {
  switch (k) {
    case BackgroundKind::Reach: return "reach";
    case BackgroundKind::Gesticulate: return "gesticulate";
    case BackgroundKind::TouchFace: return "touch_face";
    case BackgroundKind::LateralReach: return "lateral_reach";
    case BackgroundKind::Stretch: return "stretch";
  }
  return "reach";
}

SessionHeader synth_header(const SynthConfig& cfg) {
  SessionHeader h;
  h.sensor_id = "synthetic-" + std::to_string(cfg.seed);
  h.start_epoch_ms = kEpochMs;
  h.stream_flags = stream_flags::kSkeleton;
  if (cfg.depth_rate_hz > 0.0) h.stream_flags |= stream_flags::kDepth;
  if (cfg.rgb_rate_hz > 0.0) h.stream_flags |= stream_flags::kRgb;
  return h;
}

AnnotationTrack generate_session(const SynthConfig& cfg, const FrameSink& sink,
                                 std::vector<BackgroundEvent>* background) {
  Scene scene = build_scene(cfg);
  if (background != nullptr) *background = scene.background;
  Rng root(cfg.seed ^ 0x5eed5eed5eedULL);
  const double duration_ms = cfg.duration_s * 1000.0;
  Ticker depth(cfg.depth_rate_hz, cfg.frame_drop_prob, duration_ms, root.fork());
  Ticker rgb(cfg.rgb_rate_hz, cfg.frame_drop_prob, duration_ms, root.fork());
  Ticker skel(cfg.skeleton_rate_hz, cfg.frame_drop_prob, duration_ms, root.fork());
  Rng noise = root.fork();

  std::vector<Skeleton> clean;
  for (;;) {
    std::array<Ticker*, 3> streams{&depth, &rgb, &skel};
    Ticker* pick = nullptr;
    std::size_t which = 0;
    for (std::size_t i = 0; i < streams.size(); ++i) {
      if (streams[i]->done()) continue;
      if (pick == nullptr || streams[i]->peek() < pick->peek()) {
        pick = streams[i];
        which = i;
      }
    }
    if (pick == nullptr) break;
    const std::uint64_t ts = pick->peek();
    pick->pop();
    const double t = static_cast<double>(ts);
    if (which == 0) {
      clean.clear();
      for (const auto& b : scene.bodies) clean.push_back(pose_skeleton(b, t, nullptr, 0.0));
      sink(render_depth(clean, ts));
    } else if (which == 1) {
      RgbFrame f;
      f.timestamp_ms = ts;
      f.jpeg = detail::flat_jpeg(f.width, f.height, 96);
      sink(std::move(f));
    } else {
      SkeletonFrameRecord rec;
      rec.timestamp_ms = ts;
      for (const auto& b : scene.bodies) rec.skeletons.push_back(pose_skeleton(b, t, &noise, cfg.sensor_noise_m));
      sink(std::move(rec));
    }
  }
  log::info("synth: seed " + std::to_string(cfg.seed) + ", " + std::to_string(scene.truth.items.size()) +
            " annotations");
  return std::move(scene.truth);
}

SynthSession generate_session(const SynthConfig& cfg) {
  SynthSession out;
  out.session.header = synth_header(cfg);
  out.annotations = generate_session(
      cfg, [&](Frame&& f) { out.session.frames.push_back(std::move(f)); }, &out.background);
  return out;
}

AnnotationTrack generate_session_files(const SynthConfig& cfg, const std::filesystem::path& dir) {
  validate(cfg);
  std::filesystem::create_directories(dir);
  const auto session_path = dir / "session.bgac";
  std::ofstream out(session_path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + session_path.string() + " for writing");
  SessionWriter writer(out, synth_header(cfg));
  AnnotationTrack truth = generate_session(cfg, [&](Frame&& f) { writer.write(f); });
  writer.finish();
  out.close();
  if (!out) throw IoError("write failed: " + session_path.string());
  write_annotations_file(truth, dir / "annotations.json");
  return truth;
}

IsolatedPerformance render_isolated_performance(const GestureTemplate& tmpl, std::uint64_t seed,
                                                double lead_ms, double tail_ms, double sensor_noise_m) {
  Rng rng(seed);
  Body body = make_body(1, 0.0, rng, Intensity::Quiet);
  auto path = render_template(tmpl, rng.bits());
  const double dur = path.back().t_ms;
  body.arms[arm_index(HandSide::Right)].insert(Activity(lead_ms, std::move(path)));
  Rng noise = rng.fork();
  IsolatedPerformance out;
  const double total = lead_ms + dur + tail_ms;
  for (int k = 0;; ++k) {
    const double t = k * 1000.0 / 30.0;
    if (t > total) break;
    out.track.push_back({t, pose_skeleton(body, t, &noise, sensor_noise_m)});
  }
  out.annotation = {tmpl.name, tmpl.variant, 1, HandSide::Right, lead_ms, lead_ms + dur, AnnotationKind::Injected};
  return out;
}

}  // namespace gspot
