#include <algorithm>
#include <cmath>
#include <numbers>

#include "gspot/error.hpp"
#include "gspot/rng.hpp"
#include "gspot/synth.hpp"

namespace gspot {

namespace {

constexpr double kPi = std::numbers::pi;

double min_jerk(double tau) {
  tau = std::clamp(tau, 0.0, 1.0);
  return tau * tau * tau * (10.0 - 15.0 * tau + 6.0 * tau * tau);
}

// Builds hand paths out of minimum-jerk moves and holds.
class PathBuilder {
 public:
  explicit PathBuilder(Vec3 start) : cur_(start) { out_.push_back({0.0, start, {}}); }

  void move_to(Vec3 target, double dur_ms) {
    const Vec3 from = cur_;
    sweep(dur_ms, [&](double s) { return lerp(from, target, min_jerk(s)); });
  }

  void hold(double dur_ms) {
    const Vec3 at = cur_;
    sweep(dur_ms, [&](double) { return at; });
  }

  // Arbitrary parametric segment; f(s) for s in [0, 1].
  template <typename F>
  void sweep(double dur_ms, F&& f) {
    if (dur_ms <= 0.0) return;
    const double t0 = t_;
    const int steps = std::max(1, static_cast<int>(std::ceil(dur_ms / kTemplateSampleMs)));
    for (int k = 1; k <= steps; ++k) {
      const double s = static_cast<double>(k) / steps;
      cur_ = f(s);
      out_.push_back({t0 + s * dur_ms, cur_, {}});
    }
    t_ = t0 + dur_ms;
  }

  std::vector<ArmSample> finish() && {
    for (auto& s : out_) s.elbow = solve_elbow(s.hand);
    return std::move(out_);
  }

  std::vector<ArmSample>& samples() { return out_; }

 private:
  Vec3 cur_;
  double t_ = 0.0;
  std::vector<ArmSample> out_;
};

struct Draw {
  double amp;
  double dur;
  int dir;
  Vec3 offset;
};

Draw draw(const GestureTemplate& t, Rng& rng) {
  const auto& j = t.jitter;
  Draw d;
  d.amp = rng.uniform(j.amplitude_scale_lo, j.amplitude_scale_hi);
  d.dur = rng.uniform(j.duration_scale_lo, j.duration_scale_hi);
  d.dir = t.params.direction != 0 ? t.params.direction : (rng.chance(0.5) ? 1 : -1);
  d.offset = {rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02), rng.uniform(-0.02, 0.02)};
  return d;
}

std::vector<ArmSample> swipe_path(const TemplateParams& p, const Draw& d, bool bent,
                                  double pause_ms) {
  const double half = 0.5 * p.amplitude_m * d.amp;
  const double y0 = bent ? 0.08 : -0.02;
  const double z0 = bent ? -0.30 : -0.45;
  const double cx = -0.05;
  // A plain swipe flows out of the arm raise, so its profile starts part way
  // into the acceleration phase; after a pause it starts from rest.
  const double tau0 = pause_ms > 0.0 ? 0.0 : 0.12;
  auto at = [&](double s) {
    const double m = min_jerk(tau0 + (1.0 - tau0) * s);
    const double x = cx + d.dir * half * (1.0 - 2.0 * m);
    const double bulge = std::sin(kPi * m);
    return Vec3{x, y0 + 0.03 * bulge, z0 - 0.04 * bulge} + d.offset;
  };
  PathBuilder b(at(0.0));
  b.hold(pause_ms);
  b.sweep(p.duration_ms * d.dur, at);
  return std::move(b).finish();
}

std::vector<ArmSample> airtap_path(const TemplateParams& p, const Draw& d,
                                   const std::string& variant) {
  const double dur = p.duration_ms * d.dur;
  const Vec3 start = Vec3{0.0, -0.06, -0.28} + d.offset;
  const Vec3 pushed = start + Vec3{0.0, 0.01, -p.amplitude_m * d.amp};
  PathBuilder b(start);
  b.move_to(pushed, 0.35 * dur);
  if (variant == "relax") {
    b.move_to(start + Vec3{0.0, -0.06, -0.06}, 0.65 * dur);
  } else if (variant == "drop") {
    b.move_to(pushed + Vec3{0.02, -0.26, 0.08}, 0.65 * dur);
  } else {
    b.move_to(start, 0.25 * dur);
    b.hold(0.40 * dur);
  }
  return std::move(b).finish();
}

std::vector<ArmSample> wave_path(const TemplateParams& p, const Draw& d) {
  const double dur = p.duration_ms * d.dur;
  const Vec3 elbow = Vec3{0.10, -0.10, -0.22} + d.offset;
  const double fore = 0.28;
  const double swing = std::asin(std::min(0.95, 0.5 * p.amplitude_m * d.amp / fore));
  const double tilt = 0.3;
  std::vector<ArmSample> out;
  const int steps = static_cast<int>(std::ceil(dur / kTemplateSampleMs));
  for (int k = 0; k <= steps; ++k) {
    const double t = dur * k / steps;
    const double phi = d.dir * swing * std::sin(2.0 * kPi * t / p.period_ms);
    const Vec3 dir{std::sin(phi), std::cos(phi) * std::cos(tilt), -std::cos(phi) * std::sin(tilt)};
    out.push_back({t, elbow + dir * fore, elbow});
  }
  return out;
}

std::vector<ArmSample> point_path(const TemplateParams& p, const Draw& d) {
  const double dur = p.duration_ms * d.dur;
  const Vec3 ready = Vec3{-0.02, -0.18, -0.24} + d.offset;
  const Vec3 extended = Vec3{0.03, 0.06, -0.55} + d.offset;
  const double reach = std::min(350.0, 0.35 * dur);
  PathBuilder b(ready);
  b.move_to(extended, reach);
  b.hold(dur - reach);
  return std::move(b).finish();
}

std::vector<ArmSample> circle_path(const TemplateParams& p, const Draw& d) {
  const double dur = p.duration_ms * d.dur;
  const double r = p.radius_m * d.amp;
  const Vec3 center = Vec3{0.0, 0.02, -0.40} + d.offset;
  auto at = [&](double s) {
    const double th = kPi / 2.0 + d.dir * 2.0 * kPi * min_jerk(s);
    return center + Vec3{r * std::cos(th), r * std::sin(th), 0.0};
  };
  PathBuilder b(at(0.0));
  b.sweep(dur, at);
  return std::move(b).finish();
}

std::vector<ArmSample> vertical_circling_path(const TemplateParams& p, const Draw& d) {
  const double dur = p.duration_ms * d.dur;
  const Vec3 elbow = Vec3{0.10, -0.08, -0.25} + d.offset;
  const double fore = 0.28;
  const double r = p.radius_m * d.amp;
  const double up = std::sqrt(fore * fore - r * r);
  std::vector<ArmSample> out;
  const int steps = static_cast<int>(std::ceil(dur / kTemplateSampleMs));
  for (int k = 0; k <= steps; ++k) {
    const double t = dur * k / steps;
    const double th = d.dir * 2.0 * kPi * t / p.period_ms;
    out.push_back({t, elbow + Vec3{r * std::cos(th), up, r * std::sin(th)}, elbow});
  }
  return out;
}

std::vector<ArmSample> forward_up_path(const TemplateParams& p, const Draw& d) {
  const double dur = p.duration_ms * d.dur;
  const Vec3 start = Vec3{0.0, -0.06, -0.28} + d.offset;
  const Vec3 pushed = start + Vec3{0.0, 0.0, -p.amplitude_m * d.amp};
  PathBuilder b(start);
  b.move_to(pushed, 0.6 * dur);
  b.move_to(pushed + Vec3{0.0, p.radius_m * d.amp, 0.03}, 0.4 * dur);
  return std::move(b).finish();
}

GestureTemplate make(std::string name, std::string variant, TemplateParams p) {
  return {std::move(name), std::move(variant), p, JitterModel{}};
}

}  // namespace

Vec3 solve_elbow(Vec3 hand, double upper_m, double fore_m) {
  const double d = hand.norm();
  if (d < 1e-6) return {0.0, -upper_m, 0.0};
  const Vec3 u = hand / d;
  if (d >= upper_m + fore_m) return u * upper_m;
  const double dc = std::max(d, std::abs(upper_m - fore_m) + 1e-6);
  const double along = (upper_m * upper_m - fore_m * fore_m + dc * dc) / (2.0 * dc);
  const double out = std::sqrt(std::max(0.0, upper_m * upper_m - along * along));
  Vec3 hint{0.3, -1.0, 0.25};
  Vec3 perp = hint - u * hint.dot(u);
  if (perp.norm() < 1e-6) perp = Vec3{1.0, 0.0, 0.0} - u * u.x;
  return u * along + perp / perp.norm() * out;
}

const std::vector<GestureTemplate>& gesture_catalog() {
  static const std::vector<GestureTemplate> catalog = [] {
    std::vector<GestureTemplate> c;
    c.push_back(make("Swipe", "straight", {.amplitude_m = 0.60, .duration_ms = 650}));
    c.push_back(make("Swipe", "bent", {.amplitude_m = 0.60, .duration_ms = 650}));
    c.push_back(make("AirTap", "relax", {.amplitude_m = 0.25, .duration_ms = 750}));
    c.push_back(make("AirTap", "drop", {.amplitude_m = 0.25, .duration_ms = 750}));
    c.push_back(make("AirTap", "pullback", {.amplitude_m = 0.25, .duration_ms = 750}));
    c.push_back(make("Wave", "default",
                     {.amplitude_m = 0.25, .duration_ms = 1200, .direction = 1, .period_ms = 450}));
    c.push_back(make("Point", "default", {.duration_ms = 1100, .hold_ms = 750}));
    c.push_back(make("PauseSwipe", "left",
                     {.amplitude_m = 0.60, .duration_ms = 650, .direction = -1, .pause_ms = 500}));
    c.push_back(make("PauseSwipe", "right",
                     {.amplitude_m = 0.60, .duration_ms = 650, .direction = 1, .pause_ms = 500}));
    c.push_back(make("Circle", "default", {.duration_ms = 1300, .direction = 1, .radius_m = 0.36}));
    c.push_back(make("VerticalCircling", "default",
                     {.duration_ms = 1500, .direction = 1, .radius_m = 0.09, .period_ms = 550}));
    c.push_back(make("ForwardUp", "default",
                     {.amplitude_m = 0.25, .duration_ms = 400, .radius_m = 0.15}));
    return c;
  }();
  return catalog;
}

const GestureTemplate& find_template(const std::string& gesture, const std::string& variant) {
  for (const auto& t : gesture_catalog())
    if (t.name == gesture && t.variant == variant) return t;
  throw InputError("unknown gesture template " + gesture + "/" + variant);
}

std::vector<std::string> variants_of(const std::string& gesture) {
  std::vector<std::string> out;
  for (const auto& t : gesture_catalog())
    if (t.name == gesture) out.push_back(t.variant);
  return out;
}

bool is_known_gesture(const std::string& gesture) { return !variants_of(gesture).empty(); }

const std::vector<std::string>& original_gestures() {
  static const std::vector<std::string> v = {"Swipe", "AirTap", "Wave", "Point"};
  return v;
}

const std::vector<std::string>& proposed_gestures() {
  static const std::vector<std::string> v = {"PauseSwipe", "ForwardUp", "VerticalCircling", "Circle"};
  return v;
}

std::optional<std::string> counterpart(const std::string& gesture) {
  const auto& a = original_gestures();
  const auto& b = proposed_gestures();
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i] == gesture) return b[i];
    if (b[i] == gesture) return a[i];
  }
  return std::nullopt;
}

double required_span_ms(const std::string& gesture) {
  return (gesture == "Point" || gesture == "Wave") ? 800.0 : 0.0;
}

std::vector<ArmSample> render_template(const GestureTemplate& tmpl, std::uint64_t seed) {
  Rng rng(seed);
  const Draw d = draw(tmpl, rng);
  const TemplateParams& p = tmpl.params;
  if (tmpl.name == "Swipe") return swipe_path(p, d, tmpl.variant == "bent", 0.0);
  if (tmpl.name == "PauseSwipe") return swipe_path(p, d, false, p.pause_ms);
  if (tmpl.name == "AirTap") return airtap_path(p, d, tmpl.variant);
  if (tmpl.name == "Wave") return wave_path(p, d);
  if (tmpl.name == "Point") return point_path(p, d);
  if (tmpl.name == "Circle") return circle_path(p, d);
  if (tmpl.name == "VerticalCircling") return vertical_circling_path(p, d);
  if (tmpl.name == "ForwardUp") return forward_up_path(p, d);
  throw InputError("no kinematic program for gesture " + tmpl.name);
}

}  // namespace gspot
