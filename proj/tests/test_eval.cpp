#include <catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>

#include "gspot/error.hpp"
#include "gspot/eval.hpp"
#include "gspot/log.hpp"
#include "gspot/rng.hpp"

using namespace gspot;

namespace {

Annotation truth(const std::string& g, double start, double end, std::uint8_t skel = 1,
                 HandSide hand = HandSide::Right) {
  Annotation a;
  a.gesture_name = g;
  a.variant_name = "default";
  a.skeleton_id = skel;
  a.hand = hand;
  a.start_ms = start;
  a.end_ms = end;
  return a;
}

SpottedEvent event(const std::string& g, double end, std::uint8_t skel = 1, HandSide hand = HandSide::Right) {
  SpottedEvent e;
  e.skeleton_id = skel;
  e.hand = hand;
  e.event = {g, "default", end - 500.0, end, 1.0};
  return e;
}

AnnotationTrack five_swipes() {
  AnnotationTrack t;
  for (int i = 0; i < 5; ++i) t.items.push_back(truth("Swipe", 10000.0 * (i + 1), 10000.0 * (i + 1) + 800));
  return t;
}

DepthFrame flat_frame(std::uint64_t ts, int depth_mm, int w = 16, int h = 12) {
  DepthFrame f;
  f.timestamp_ms = ts;
  f.width = static_cast<std::uint16_t>(w);
  f.height = static_cast<std::uint16_t>(h);
  f.pixels.assign(std::size_t(w) * h, pack_depth_pixel(depth_mm, 0));
  return f;
}

// Runs of successive frames whose mean |diff| stays below the threshold.
std::vector<std::pair<std::size_t, std::size_t>> naive_still(const std::vector<DepthFrame>& frames, double th,
                                                             double min_s) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  std::size_t start = 0;
  for (std::size_t i = 1; i <= frames.size(); ++i) {
    bool breaks = i == frames.size();
    if (!breaks) {
      double sum = 0;
      for (std::size_t p = 0; p < frames[i].pixels.size(); ++p)
        sum += std::abs(int(frames[i].pixels[p] >> 3) - int(frames[i - 1].pixels[p] >> 3));
      breaks = sum / frames[i].pixels.size() >= th;
    }
    if (breaks) {
      const double span = double(frames[i - 1].timestamp_ms) - double(frames[start].timestamp_ms);
      if (i - 1 > start && span >= min_s * 1000.0) out.emplace_back(start, i - 1);
      start = i;
    }
  }
  return out;
}

}  // namespace

TEST_CASE("no events leave every truth unmatched") {
  const auto r = match_detections({}, five_swipes());
  CHECK(r.totals.truths == 5);
  CHECK(r.totals.tp == 0);
  CHECK(r.totals.fn == 5);
  CHECK(r.totals.fp == 0);
}

TEST_CASE("one event inside a window is a true positive") {
  const std::vector<SpottedEvent> ev = {event("Swipe", 30500)};
  const auto r = match_detections(ev, five_swipes());
  CHECK(r.totals.tp == 1);
  CHECK(r.totals.fn == 4);
  CHECK(r.totals.fp == 0);
}

TEST_CASE("duplicates inside a matched window are absorbed") {
  const std::vector<SpottedEvent> ev = {event("Swipe", 20500), event("Swipe", 21000), event("Swipe", 22700)};
  const auto r = match_detections(ev, five_swipes());
  CHECK(r.totals.tp == 1);
  CHECK(r.totals.absorbed == 2);
  CHECK(r.totals.fp == 0);
}

TEST_CASE("window edges and mismatches") {
  const auto t = five_swipes();
  // end at start and at end + window count; just outside does not
  CHECK(match_detections(std::vector{event("Swipe", 10000)}, t).totals.tp == 1);
  CHECK(match_detections(std::vector{event("Swipe", 12800)}, t).totals.tp == 1);
  CHECK(match_detections(std::vector{event("Swipe", 12801)}, t).totals.fp == 1);
  CHECK(match_detections(std::vector{event("Swipe", 9999)}, t).totals.fp == 1);
  CHECK(match_detections(std::vector{event("Point", 10500)}, t).totals.fp == 1);
  CHECK(match_detections(std::vector{event("Swipe", 10500, 2)}, t).totals.fp == 1);
  CHECK(match_detections(std::vector{event("Swipe", 10500, 1, HandSide::Left)}, t).totals.fp == 1);
  CHECK(match_detections(std::vector{event("Swipe", 10500)}, t, 0.0).totals.tp == 1);
  CHECK_THROWS_AS(match_detections({}, t, -1.0), InputError);
}

TEST_CASE("matching invariants on random inputs") {
  Rng rng(12);
  const std::vector<std::string> names = {"Swipe", "Point", "Wave"};
  for (int run = 0; run < 200; ++run) {
    AnnotationTrack t;
    double at = 0;
    for (std::size_t i = 0, n = rng.below(8); i < n; ++i) {
      at += rng.uniform(500, 6000);
      const double len = rng.uniform(300, 1500);
      t.items.push_back(truth(names[rng.below(3)], at, at + len, std::uint8_t(1 + rng.below(2)),
                              rng.chance(0.5) ? HandSide::Left : HandSide::Right));
      at += len;
    }
    std::vector<SpottedEvent> ev;
    for (std::size_t i = 0, n = rng.below(12); i < n; ++i)
      ev.push_back(event(names[rng.below(3)], rng.uniform(0, at + 3000), std::uint8_t(1 + rng.below(2)),
                         rng.chance(0.5) ? HandSide::Left : HandSide::Right));

    const auto r = match_detections(ev, t);
    CHECK(r.totals.tp + r.totals.fn == t.items.size());
    CHECK(r.totals.tp + r.totals.fp + r.totals.absorbed == ev.size());
    std::size_t tp = 0;
    for (const auto& g : r.gestures) {
      CHECK(g.tp + g.fn == g.truths);
      tp += g.tp;
    }
    CHECK(tp == r.totals.tp);

    auto shuffled = ev;
    std::reverse(shuffled.begin(), shuffled.end());
    if (shuffled.size() > 2) std::swap(shuffled[0], shuffled[shuffled.size() / 2]);
    const auto r2 = match_detections(shuffled, t);
    CHECK(r2.gestures == r.gestures);
    CHECK(r2.totals == r.totals);
  }
}

TEST_CASE("false positive intervals") {
  CHECK(std::isinf(fp_interval(0, 100.0)));
  CHECK(fp_interval(4, 100.0) == 25.0);
  ScoreReport r;
  r.totals.fp = 2;
  r.person_time = {600.0, 450.0};
  CHECK(r.fp_interval_s() == 300.0);
  CHECK(r.fp_interval_tracked_s() == 225.0);
  CHECK(fp_ratio(0, 0) == 1.0);
  CHECK(fp_ratio(6, 3) == 2.0);
  CHECK(std::isinf(fp_ratio(1, 0)));
}

TEST_CASE("a network compared with itself gives ratio one") {
  log::set_threshold(log::Level::Error);
  const auto train = generate_session(training_config({"Swipe", "Point"}, 12, 6));
  const auto streams = observation_streams(std::span<const Frame>(train.session.frames), FeatureConfig{});
  TrainSettings settings;
  const auto net = train_network(collect_examples(streams, train.annotations), {"Swipe", "Point"}, settings).network;

  SynthConfig cfg;
  cfg.duration_s = 120;
  cfg.prompts_per_gesture = 0;
  cfg.depth_rate_hz = 0;
  cfg.intensity = Intensity::Boisterous;
  cfg.seed = 9;
  const auto bg = generate_session(cfg);
  const auto bg_streams = observation_streams(std::span<const Frame>(bg.session.frames), FeatureConfig{});
  const auto cmp = compare_gesture_sets(net, net, bg_streams);
  REQUIRE(cmp.rows.size() == 2);
  for (const auto& row : cmp.rows) {
    CHECK(row.gesture_a == row.gesture_b);
    CHECK(row.fp_a == row.fp_b);
    CHECK(row.ratio == 1.0);
  }
  CHECK(cmp.total_ratio == 1.0);
  CHECK(cmp.total_a == spot_streams(net, bg_streams).size());

  auto other = net;
  other.features.speed_threshold_mps += 0.01;
  CHECK_THROWS_AS(compare_gesture_sets(net, other, bg_streams), InputError);
}

TEST_CASE("a six second static segment is found") {
  Rng rng(4);
  std::vector<DepthFrame> frames;
  // 10 Hz: motion until 7 s, static until 13 s, motion until 20 s
  for (std::uint64_t i = 0; i < 200; ++i) {
    const std::uint64_t ts = 1000 + i * 100;
    const bool still = i >= 70 && i <= 130;
    DepthFrame f = flat_frame(ts, 1500 + (still ? 0 : int(rng.below(400))));
    for (auto& p : f.pixels) p = pack_depth_pixel((p >> 3) + int(rng.below(3)), 0);
    frames.push_back(std::move(f));
  }
  const auto found = still_frames(frames);
  REQUIRE(found.size() == 1);
  CHECK(found[0].first_frame >= 69);
  CHECK(found[0].first_frame <= 71);
  CHECK(found[0].last_frame >= 129);
  CHECK(found[0].last_frame <= 131);
  CHECK(found[0].start_ms == frames[found[0].first_frame].timestamp_ms);
  CHECK(found[0].end_ms == frames[found[0].last_frame].timestamp_ms);
  CHECK(found[0].representative == (found[0].first_frame + found[0].last_frame) / 2);

  // continuous motion has no still interval
  std::vector<DepthFrame> moving;
  for (std::uint64_t i = 0; i < 200; ++i) moving.push_back(flat_frame(i * 100, 1000 + int(i % 2) * 50));
  CHECK(still_frames(moving).empty());
}

TEST_CASE("still frames match a direct scan") {
  Rng rng(31);
  for (int run = 0; run < 60; ++run) {
    std::vector<DepthFrame> frames;
    int depth = 1200;
    for (std::uint64_t i = 0, n = 20 + rng.below(150); i < n; ++i) {
      if (rng.chance(0.08)) depth = 800 + int(rng.below(2000));
      DepthFrame f = flat_frame(i * 100 + rng.below(30), depth, 8, 6);
      for (auto& p : f.pixels) p = pack_depth_pixel(depth + int(rng.below(12)), int(rng.below(3)));
      frames.push_back(std::move(f));
    }
    const double th = rng.uniform(3, 10), min_s = rng.uniform(0.5, 4);
    const auto got = still_frames(frames, th, min_s);
    const auto want = naive_still(frames, th, min_s);
    REQUIRE(got.size() == want.size());
    for (std::size_t i = 0; i < got.size(); ++i) {
      CHECK(got[i].first_frame == want[i].first);
      CHECK(got[i].last_frame == want[i].second);
    }

    StillFrameTracker tracker(th, min_s);
    for (const auto& f : frames) tracker.push(f);
    CHECK(tracker.finish() == got);
  }
  CHECK_THROWS_AS(StillFrameTracker(0.0, 5.0), InputError);
  CHECK_THROWS_AS(StillFrameTracker(8.0, 0.0), InputError);
  CHECK_THROWS_AS(mean_abs_depth_diff(flat_frame(0, 1, 4, 4), flat_frame(0, 1, 4, 5)), InputError);
}

TEST_CASE("occupancy and zones are exact per pixel") {
  Rng rng(77);
  const int w = 10, h = 7, n = 40;
  std::vector<DepthFrame> frames;
  std::vector<int> counts(w * h, 0);
  for (int k = 0; k < n; ++k) {
    DepthFrame f = flat_frame(std::uint64_t(k) * 33, 2000, w, h);
    for (int i = 0; i < w * h; ++i)
      if (rng.chance(double(i) / (w * h))) {
        f.pixels[i] = pack_depth_pixel(1800, 1 + int(rng.below(6)));
        ++counts[i];
      }
    frames.push_back(std::move(f));
  }
  const auto occ = occupancy_map(frames);
  REQUIRE(occ.values.size() == std::size_t(w * h));
  for (int i = 0; i < w * h; ++i) CHECK(occ.values[i] == double(counts[i]) / n);

  OccupancyAccumulator acc;
  for (const auto& f : frames) acc.add(f);
  CHECK(acc.frames() == std::size_t(n));
  CHECK(acc.map() == occ);
  CHECK_THROWS_AS(OccupancyAccumulator{}.map(), InputError);

  // indicator frames: gesture covers column 2, background covers row 1
  std::vector<DepthFrame> g, b;
  for (int k = 0; k < 5; ++k) {
    DepthFrame fg = flat_frame(k, 2000, w, h), fb = flat_frame(k, 2000, w, h);
    for (int y = 0; y < h; ++y) fg.pixels[y * w + 2] = pack_depth_pixel(1000, 1);
    for (int x = 0; x < w; ++x) fb.pixels[1 * w + x] = pack_depth_pixel(1000, 2);
    g.push_back(fg);
    b.push_back(fb);
  }
  const auto zone = gesture_zone(occupancy_map(g), occupancy_map(b));
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      CHECK(zone.at(x, y) >= 0.0);
      CHECK(zone.at(x, y) == ((x == 2 && y != 1) ? 1.0 : 0.0));
    }
  CHECK_THROWS_AS(gesture_zone(occ, OccupancyMap{}), InputError);
}

TEST_CASE("pgm bytes") {
  OccupancyMap m;
  m.width = 2;
  m.height = 1;
  m.values = {0.0, 1.0};
  CHECK(pgm_bytes(m) == std::string("P5\n2 1\n65535\n\x00\x00\xff\xff", 17));
  m.values = {0.5, 2.0};
  const std::string bytes = pgm_bytes(m);
  CHECK(static_cast<unsigned char>(bytes[13]) == 0x80);
  CHECK(static_cast<unsigned char>(bytes[14]) == 0x00);
  CHECK(static_cast<unsigned char>(bytes[15]) == 0xff);
}

TEST_CASE("report json carries every gesture") {
  const auto r = match_detections(std::vector{event("Swipe", 10500), event("Point", 500)}, five_swipes(), 2000.0,
                                  PersonTime{100.0, 80.0});
  const std::string json = report_to_json(r);
  CHECK(json.find("\"Swipe\"") != std::string::npos);
  CHECK(json.find("\"Point\"") != std::string::npos);
  CHECK(r.find("Point")->fp == 1);
  CHECK(r.find("Wave") == nullptr);
  CHECK_FALSE(report_table(r).empty());
}
