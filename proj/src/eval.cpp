#include "gspot/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <tuple>

#include "gspot/error.hpp"
#include "json.hpp"

namespace gspot {

namespace {

using nlohmann::json;

json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

std::string format_interval(double s) {
  if (!std::isfinite(s)) return "none";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.1f", s);
  return buf;
}

std::string pad(const std::string& s, std::size_t w, bool right = true) {
  if (s.size() >= w) return s;
  return right ? std::string(w - s.size(), ' ') + s : s + std::string(w - s.size(), ' ');
}

}  // namespace

double fp_interval(std::size_t fp_count, double person_seconds) {
  if (fp_count == 0) return std::numeric_limits<double>::infinity();
  return person_seconds / static_cast<double>(fp_count);
}

double ScoreReport::fp_interval_s() const { return fp_interval(totals.fp, person_time.total_s); }
double ScoreReport::fp_interval_tracked_s() const { return fp_interval(totals.fp, person_time.tracked_s); }

const GestureScore* ScoreReport::find(const std::string& gesture) const {
  for (const auto& g : gestures)
    if (g.gesture_name == gesture) return &g;
  return nullptr;
}

ScoreReport match_detections(std::span<const SpottedEvent> events, const AnnotationTrack& truth,
                             double window_ms, PersonTime person_time) {
  if (window_ms < 0.0) throw InputError("window_ms must be non-negative");
  std::vector<SpottedEvent> ev(events.begin(), events.end());
  std::sort(ev.begin(), ev.end(), [](const SpottedEvent& a, const SpottedEvent& b) {
    return std::tie(a.event.end_ms, a.event.start_ms, a.event.gesture_name, a.event.variant_name, a.skeleton_id,
                    a.hand, a.event.log_likelihood_margin) <
           std::tie(b.event.end_ms, b.event.start_ms, b.event.gesture_name, b.event.variant_name, b.skeleton_id,
                    b.hand, b.event.log_likelihood_margin);
  });
  std::vector<Annotation> tr = truth.items;
  std::sort(tr.begin(), tr.end(), [](const Annotation& a, const Annotation& b) {
    return std::tie(a.start_ms, a.end_ms, a.gesture_name, a.skeleton_id, a.hand) <
           std::tie(b.start_ms, b.end_ms, b.gesture_name, b.skeleton_id, b.hand);
  });

  std::map<std::string, GestureScore> by;
  auto score = [&](const std::string& g) -> GestureScore& {
    auto& s = by[g];
    s.gesture_name = g;
    return s;
  };
  for (const auto& a : tr) ++score(a.gesture_name).truths;

  std::vector<bool> matched(tr.size(), false);
  for (const auto& e : ev) {
    std::optional<std::size_t> open, closed;
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const Annotation& a = tr[i];
      if (a.gesture_name != e.event.gesture_name || a.skeleton_id != e.skeleton_id || a.hand != e.hand) continue;
      if (e.event.end_ms < a.start_ms || e.event.end_ms > a.end_ms + window_ms) continue;
      if (!matched[i]) {
        if (!open) open = i;
      } else if (!closed) {
        closed = i;
      }
    }
    GestureScore& s = score(e.event.gesture_name);
    if (open) {
      matched[*open] = true;
      ++s.tp;
    } else if (closed) {
      ++s.absorbed;
    } else {
      ++s.fp;
    }
  }

  ScoreReport report;
  report.window_ms = window_ms;
  report.person_time = person_time;
  report.totals.gesture_name = "total";
  for (auto& [name, s] : by) {
    s.fn = s.truths - s.tp;
    report.totals.truths += s.truths;
    report.totals.tp += s.tp;
    report.totals.fp += s.fp;
    report.totals.fn += s.fn;
    report.totals.absorbed += s.absorbed;
    report.gestures.push_back(s);
  }
  return report;
}

std::string report_to_json(const ScoreReport& report) {
  auto row = [&](const GestureScore& s) {
    return json{{"gesture_name", s.gesture_name},
                {"truths", s.truths},
                {"tp", s.tp},
                {"fp", s.fp},
                {"fn", s.fn},
                {"absorbed", s.absorbed},
                {"tp_rate", s.tp_rate()},
                {"fp_interval_s", number_or_null(fp_interval(s.fp, report.person_time.total_s))},
                {"fp_interval_tracked_s", number_or_null(fp_interval(s.fp, report.person_time.tracked_s))}};
  };
  json gestures = json::array();
  for (const auto& g : report.gestures) gestures.push_back(row(g));
  json doc = {{"schema_version", 1},
              {"window_ms", report.window_ms},
              {"person_seconds", report.person_time.total_s},
              {"tracked_person_seconds", report.person_time.tracked_s},
              {"gestures", gestures},
              {"totals", row(report.totals)}};
  return doc.dump(2) + "\n";
}

std::string report_table(const ScoreReport& report) {
  std::ostringstream out;
  out << pad("gesture", 18, false) << pad("truth", 7) << pad("TP", 6) << pad("FP", 7) << pad("FN", 6)
      << pad("TP rate", 9) << pad("s/FP", 9) << pad("tracked s/FP", 14) << "\n";
  auto line = [&](const GestureScore& s) {
    char rate[16];
    std::snprintf(rate, sizeof rate, "%.3f", s.tp_rate());
    out << pad(s.gesture_name, 18, false) << pad(std::to_string(s.truths), 7) << pad(std::to_string(s.tp), 6)
        << pad(std::to_string(s.fp), 7) << pad(std::to_string(s.fn), 6) << pad(rate, 9)
        << pad(format_interval(fp_interval(s.fp, report.person_time.total_s)), 9)
        << pad(format_interval(fp_interval(s.fp, report.person_time.tracked_s)), 14) << "\n";
  };
  for (const auto& g : report.gestures) line(g);
  line(report.totals);
  return out.str();
}

// ---------------------------------------------------------------------------

double fp_ratio(std::size_t a, std::size_t b) {
  if (a == b) return 1.0;
  if (b == 0) return std::numeric_limits<double>::infinity();
  return static_cast<double>(a) / static_cast<double>(b);
}

ComparisonReport compare_gesture_sets(const GestureSpottingNetwork& a, const GestureSpottingNetwork& b,
                                      std::span<const HandStream> streams, const AnnotationTrack& truth,
                                      PersonTime person_time) {
  if (a.features != b.features) throw InputError("networks were trained with different feature configurations");
  auto fp_counts = [&](const GestureSpottingNetwork& net) {
    const auto events = spot_streams(net, streams);
    const ScoreReport r = match_detections(events, truth, kDefaultMatchWindowMs, person_time);
    std::map<std::string, std::size_t> fp;
    for (const auto& g : net.gesture_names()) fp[g] = 0;
    for (const auto& g : r.gestures) fp[g.gesture_name] = g.fp;
    return fp;
  };
  const auto fa = fp_counts(a);
  const auto fb = fp_counts(b);
  const auto names_a = a.gesture_names();
  const auto names_b = b.gesture_names();

  ComparisonReport out;
  out.person_time = person_time;
  std::set<std::string> used_b;
  std::vector<std::string> pending;
  for (const auto& g : names_a) {
    if (std::find(names_b.begin(), names_b.end(), g) != names_b.end()) {
      out.rows.push_back({g, g, fa.at(g), fb.at(g), fp_ratio(fa.at(g), fb.at(g))});
      used_b.insert(g);
    } else {
      pending.push_back(g);
    }
  }
  for (const auto& g : pending) {
    const auto partner = counterpart(g);
    if (partner && fb.count(*partner) != 0 && used_b.count(*partner) == 0) {
      out.rows.push_back({g, *partner, fa.at(g), fb.at(*partner), fp_ratio(fa.at(g), fb.at(*partner))});
      used_b.insert(*partner);
    } else {
      out.rows.push_back({g, "", fa.at(g), 0, fp_ratio(fa.at(g), 0)});
    }
  }
  for (const auto& g : names_b)
    if (used_b.count(g) == 0) out.rows.push_back({"", g, 0, fb.at(g), fp_ratio(0, fb.at(g))});
  for (const auto& [g, n] : fa) out.total_a += n;
  for (const auto& [g, n] : fb) out.total_b += n;
  out.total_ratio = fp_ratio(out.total_a, out.total_b);
  return out;
}

std::string comparison_to_json(const ComparisonReport& report) {
  json rows = json::array();
  for (const auto& r : report.rows) {
    rows.push_back({{"gesture_a", r.gesture_a.empty() ? json(nullptr) : json(r.gesture_a)},
                    {"gesture_b", r.gesture_b.empty() ? json(nullptr) : json(r.gesture_b)},
                    {"fp_a", r.fp_a},
                    {"fp_b", r.fp_b},
                    {"ratio", number_or_null(r.ratio)}});
  }
  json doc = {{"schema_version", 1},
              {"rows", rows},
              {"total_a", report.total_a},
              {"total_b", report.total_b},
              {"total_ratio", number_or_null(report.total_ratio)},
              {"person_seconds", report.person_time.total_s},
              {"tracked_person_seconds", report.person_time.tracked_s}};
  return doc.dump(2) + "\n";
}

std::string comparison_table(const ComparisonReport& report) {
  std::ostringstream out;
  auto ratio = [](double r) {
    if (!std::isfinite(r)) return std::string("inf");
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.2f", r);
    return std::string(buf);
  };
  out << pad("gesture A", 18, false) << pad("FP A", 8) << "  " << pad("gesture B", 18, false) << pad("FP B", 8)
      << pad("A/B", 8) << "\n";
  for (const auto& r : report.rows)
    out << pad(r.gesture_a.empty() ? "-" : r.gesture_a, 18, false) << pad(std::to_string(r.fp_a), 8) << "  "
        << pad(r.gesture_b.empty() ? "-" : r.gesture_b, 18, false) << pad(std::to_string(r.fp_b), 8)
        << pad(ratio(r.ratio), 8) << "\n";
  out << pad("total", 18, false) << pad(std::to_string(report.total_a), 8) << "  " << pad("total", 18, false)
      << pad(std::to_string(report.total_b), 8) << pad(ratio(report.total_ratio), 8) << "\n";
  return out.str();
}

// ---------------------------------------------------------------------------

double mean_abs_depth_diff(const DepthFrame& a, const DepthFrame& b) {
  if (a.width != b.width || a.height != b.height || a.pixels.size() != b.pixels.size())
    throw InputError("depth frames differ in size");
  if (a.pixels.empty()) return 0.0;
  std::uint64_t sum = 0;
  for (std::size_t i = 0; i < a.pixels.size(); ++i) {
    const int da = a.pixels[i] >> 3;
    const int db = b.pixels[i] >> 3;
    sum += static_cast<std::uint64_t>(std::abs(da - db));
  }
  return static_cast<double>(sum) / static_cast<double>(a.pixels.size());
}

StillFrameTracker::StillFrameTracker(double threshold_mm, double min_duration_s)
    : threshold_mm_(threshold_mm), min_duration_s_(min_duration_s) {
  if (!(min_duration_s > 0.0)) throw InputError("min_duration_s must be positive");
  if (!(threshold_mm > 0.0)) throw InputError("still threshold must be positive");
}

void StillFrameTracker::close(std::size_t last) {
  if (last <= run_start_) return;
  const std::uint64_t span = prev_->timestamp_ms - run_start_ms_;
  if (static_cast<double>(span) < min_duration_s_ * 1000.0) return;
  out_.push_back({run_start_, last, run_start_ms_, prev_->timestamp_ms, run_start_ + (last - run_start_) / 2});
}

void StillFrameTracker::push(const DepthFrame& frame) {
  if (prev_ && mean_abs_depth_diff(*prev_, frame) >= threshold_mm_) {
    close(index_ - 1);
    run_start_ = index_;
    run_start_ms_ = frame.timestamp_ms;
  }
  if (!prev_) run_start_ms_ = frame.timestamp_ms;
  prev_ = frame;
  ++index_;
}

std::vector<StillInterval> StillFrameTracker::finish() {
  if (prev_) close(index_ - 1);
  prev_.reset();
  index_ = 0;
  run_start_ = 0;
  return std::move(out_);
}

std::vector<StillInterval> still_frames(std::span<const DepthFrame> frames, double threshold_mm,
                                        double min_duration_s) {
  StillFrameTracker tracker(threshold_mm, min_duration_s);
  for (const auto& f : frames) tracker.push(f);
  return tracker.finish();
}

// ---------------------------------------------------------------------------

void OccupancyAccumulator::add(const DepthFrame& f) {
  const std::size_t n = static_cast<std::size_t>(f.width) * f.height;
  if (frames_ == 0) {
    width_ = f.width;
    height_ = f.height;
    counts_.assign(n, 0);
  }
  if (f.width != width_ || f.height != height_ || f.pixels.size() != n)
    throw InputError("depth frames differ in size");
  for (std::size_t i = 0; i < n; ++i) counts_[i] += (f.pixels[i] & 0x7) != 0 ? 1u : 0u;
  ++frames_;
}

OccupancyMap OccupancyAccumulator::map() const {
  if (frames_ == 0) throw InputError("occupancy map needs at least one frame");
  OccupancyMap m;
  m.width = width_;
  m.height = height_;
  m.values.resize(counts_.size());
  const double total = static_cast<double>(frames_);
  for (std::size_t i = 0; i < counts_.size(); ++i) m.values[i] = counts_[i] / total;
  return m;
}

OccupancyMap occupancy_map(std::span<const DepthFrame* const> frames) {
  OccupancyAccumulator acc;
  for (const DepthFrame* f : frames) acc.add(*f);
  return acc.map();
}

OccupancyMap occupancy_map(std::span<const DepthFrame> frames) {
  std::vector<const DepthFrame*> ptrs;
  ptrs.reserve(frames.size());
  for (const auto& f : frames) ptrs.push_back(&f);
  return occupancy_map(std::span<const DepthFrame* const>(ptrs));
}

OccupancyMap gesture_zone(const OccupancyMap& gesture, const OccupancyMap& background) {
  if (gesture.width != background.width || gesture.height != background.height ||
      gesture.values.size() != background.values.size())
    throw InputError("occupancy maps differ in size");
  OccupancyMap z = gesture;
  for (std::size_t i = 0; i < z.values.size(); ++i) z.values[i] = std::max(0.0, gesture.values[i] - background.values[i]);
  return z;
}

std::string pgm_bytes(const OccupancyMap& map) {
  std::string out = "P5\n" + std::to_string(map.width) + " " + std::to_string(map.height) + "\n65535\n";
  out.reserve(out.size() + map.values.size() * 2);
  for (double v : map.values) {
    const auto s = static_cast<std::uint16_t>(std::lround(std::clamp(v, 0.0, 1.0) * 65535.0));
    out.push_back(static_cast<char>(s >> 8));
    out.push_back(static_cast<char>(s & 0xff));
  }
  return out;
}

void write_pgm(const OccupancyMap& map, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  const std::string bytes = pgm_bytes(map);
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed: " + path.string());
}

}  // namespace gspot
