#include "commands.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include "json.hpp"

#include "gspot/container.hpp"
#include "gspot/error.hpp"
#include "gspot/eval.hpp"
#include "gspot/pipeline.hpp"
#include "gspot/synth.hpp"
#include "gspot/version.hpp"

namespace gspot::cli {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kSchemaVersion = 1;

ConfigMap load_config(const std::string& path, Context& ctx) {
  if (path.empty()) return {};
  ctx.manifest.config = path;
  return load_config_file(path);
}

std::optional<HandSide> hand_filter(const std::string& hand) {
  if (hand == "both") return std::nullopt;
  return hand_side_from_string(hand);
}

CaptureSession read_skeletons(const std::string& path, Context& ctx) {
  ctx.manifest.inputs.push_back(path);
  return read_session_file(path, ReaderOptions{stream_flags::kSkeleton});
}

std::string read_text(const std::string& path, Context& ctx) {
  ctx.manifest.inputs.push_back(path);
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed: " + path.string());
}

// File outputs get <file>.manifest.json next to them.
void output_file(const std::string& path, Context& ctx) {
  ctx.manifest.outputs.push_back(path);
  if (ctx.manifest.path.empty()) ctx.manifest.path = path + ".manifest.json";
}

void output_dir(const fs::path& dir, Context& ctx) {
  ctx.manifest.path = dir / "manifest.json";
}

void emit(const json& doc, const std::string& table, bool as_json, const std::string& out, Context& ctx) {
  const std::string text = doc.dump(2) + "\n";
  if (!out.empty()) {
    write_text(out, text);
    output_file(out, ctx);
  }
  ctx.out << (as_json ? text : table);
}

}  // namespace

std::string manifest_json(const Manifest& m, double wall_clock_s) {
  json doc = {{"schema_version", kSchemaVersion},
              {"subcommand", m.subcommand},
              {"arguments", m.arguments},
              {"inputs", m.inputs},
              {"outputs", m.outputs},
              {"config", m.config.empty() ? json(nullptr) : json(m.config)},
              {"seed", m.seed ? json(*m.seed) : json(nullptr)},
              {"toolkit_version", std::string(kToolkitVersion)},
              {"wall_clock_s", wall_clock_s}};
  return doc.dump(2) + "\n";
}

// ---------------------------------------------------------------------------

void cmd_synth(const SynthArgs& a, Context& ctx) {
  SynthConfig cfg = synth_config_from(load_config(a.config, ctx));
  if (a.seed) cfg.seed = *a.seed;
  validate(cfg);
  ctx.manifest.seed = cfg.seed;
  const fs::path dir = a.out;
  fs::create_directories(dir);
  const AnnotationTrack truth = generate_session_files(cfg, dir);
  ctx.manifest.outputs = {(dir / "session.bgac").string(), (dir / "annotations.json").string()};
  output_dir(dir, ctx);
  ctx.out << "wrote " << (dir / "session.bgac").string() << " and " << truth.items.size()
          << " annotations\n";
}

// ---------------------------------------------------------------------------

void cmd_train(const TrainArgs& a, Context& ctx) {
  if (a.sessions.size() != a.annotations.size())
    throw InputError("give one --annotations file per --session");
  TrainSettings settings = train_settings_from(load_config(a.config, ctx));
  if (a.states) {
    if (*a.states < 1) throw InputError("--states must be at least 1");
    settings.n_states = *a.states;
  }
  if (a.seed) settings.seed = *a.seed;
  ctx.manifest.seed = settings.seed;
  const auto only = hand_filter(a.hand);

  std::vector<LabeledExample> examples;
  std::vector<std::string> annotated;
  for (std::size_t i = 0; i < a.sessions.size(); ++i) {
    const AnnotationTrack truth = annotations_from_json(read_text(a.annotations[i], ctx));
    if (truth.items.empty()) throw InputError(a.annotations[i] + " contains no annotations");
    for (const auto& item : truth.items)
      if (std::find(annotated.begin(), annotated.end(), item.gesture_name) == annotated.end())
        annotated.push_back(item.gesture_name);
    const CaptureSession session = read_skeletons(a.sessions[i], ctx);
    const auto streams = observation_streams(session.frames, settings.features, only);
    auto got = collect_examples(streams, truth);
    examples.insert(examples.end(), std::make_move_iterator(got.begin()), std::make_move_iterator(got.end()));
  }
  const std::vector<std::string> gestures = a.gestures.empty() ? annotated : a.gestures;
  for (const auto& g : gestures)
    if (std::find(annotated.begin(), annotated.end(), g) == annotated.end())
      throw InputError("gesture '" + g + "' does not appear in the annotations");

  const TrainReport report = train_network(examples, gestures, settings);

  save_network_file(report.network, a.out);
  output_file(a.out, ctx);

  json variants = json::array();
  std::ostringstream table;
  table << std::left << std::setw(18) << "gesture" << std::setw(10) << "variant" << std::right
        << std::setw(7) << "train" << std::setw(9) << "heldout" << std::setw(7) << "iters" << "\n";
  for (const auto& v : report.variants) {
    variants.push_back({{"gesture_name", v.gesture_name},
                        {"variant", v.variant_name},
                        {"train_count", v.train_count},
                        {"heldout_count", v.heldout_count},
                        {"iterations", v.iterations},
                        {"converged", v.converged}});
    table << std::left << std::setw(18) << v.gesture_name << std::setw(10) << v.variant_name << std::right
          << std::setw(7) << v.train_count << std::setw(9) << v.heldout_count << std::setw(7) << v.iterations
          << "\n";
  }
  table << "held-out accuracy: " << std::fixed << std::setprecision(1) << 100.0 * report.heldout_accuracy()
        << "% (" << report.heldout_correct << "/" << report.heldout_total << ")\n";
  table << "network: " << a.out << " (" << report.network.variants.size() << " variants, "
        << settings.n_states << " states each)\n";
  json doc = {{"schema_version", kSchemaVersion},
              {"network", a.out},
              {"n_states", settings.n_states},
              {"seed", settings.seed},
              {"variants", variants},
              {"heldout_total", report.heldout_total},
              {"heldout_correct", report.heldout_correct},
              {"heldout_accuracy", report.heldout_accuracy()}};
  ctx.out << (a.json ? doc.dump(2) + "\n" : table.str());
}

// ---------------------------------------------------------------------------

void cmd_spot(const SpotArgs& a, Context& ctx) {
  ctx.manifest.inputs.push_back(a.network);
  const GestureSpottingNetwork net = load_network_file(a.network);
  if (!a.config.empty()) {
    const FeatureConfig wanted = feature_config_from(load_config(a.config, ctx), net.features);
    if (wanted != net.features)
      throw InputError("feature configuration differs from the one the network was trained with");
  }
  const CaptureSession session = read_skeletons(a.session, ctx);
  const auto streams = observation_streams(session.frames, net.features, hand_filter(a.hand));
  const auto events = spot_streams(net, streams);
  const std::string text = detections_to_json(events);
  if (a.out.empty()) {
    ctx.out << text;
  } else {
    write_text(a.out, text);
    output_file(a.out, ctx);
    ctx.out << events.size() << " detections written to " << a.out << "\n";
  }
}

// ---------------------------------------------------------------------------

void cmd_eval(const EvalArgs& a, Context& ctx) {
  if (!(a.window_ms >= 0.0)) throw InputError("--window-ms must be nonnegative");
  const auto events = detections_from_json(read_text(a.detections, ctx));
  const AnnotationTrack truth = annotations_from_json(read_text(a.annotations, ctx));
  PersonTime pt;
  if (!a.session.empty()) pt = person_time(read_skeletons(a.session, ctx).frames);
  const ScoreReport report = match_detections(events, truth, a.window_ms, pt);
  emit(json::parse(report_to_json(report)), report_table(report), a.json, a.out, ctx);
}

// ---------------------------------------------------------------------------

namespace {

GestureSpottingNetwork restrict_network(const GestureSpottingNetwork& net, const std::vector<std::string>& keep) {
  if (keep.empty()) return net;
  std::vector<GestureVariant> variants;
  for (const auto& g : keep) {
    bool found = false;
    for (const auto& v : net.variants)
      if (v.gesture_name == g) {
        variants.push_back(v);
        found = true;
      }
    if (!found) throw InputError("network has no gesture '" + g + "'");
  }
  return make_network(std::move(variants), net.config, net.features);
}

}  // namespace

void cmd_compare(const CompareArgs& a, Context& ctx) {
  ctx.manifest.inputs.push_back(a.network_a);
  ctx.manifest.inputs.push_back(a.network_b);
  const auto net_a = restrict_network(load_network_file(a.network_a), a.gestures_a);
  const auto net_b = restrict_network(load_network_file(a.network_b), a.gestures_b);
  if (net_a.features != net_b.features)
    throw InputError("the two networks use different feature configurations");
  AnnotationTrack truth;
  if (!a.annotations.empty()) truth = annotations_from_json(read_text(a.annotations, ctx));
  const CaptureSession session = read_skeletons(a.session, ctx);
  const auto streams = observation_streams(session.frames, net_a.features, hand_filter(a.hand));
  const auto report = compare_gesture_sets(net_a, net_b, streams, truth, person_time(session.frames));
  emit(json::parse(comparison_to_json(report)), comparison_table(report), a.json, a.out, ctx);
}

// ---------------------------------------------------------------------------

namespace {

// 16-bit P5 of the depth channel, maxval 8191.
std::string depth_pgm(const DepthFrame& f) {
  std::string out = "P5\n" + std::to_string(f.width) + " " + std::to_string(f.height) + "\n" +
                    std::to_string(kMaxDepthMm) + "\n";
  out.reserve(out.size() + f.pixels.size() * 2);
  for (std::uint16_t p : f.pixels) {
    const std::uint16_t d = unpack_depth_pixel(p).depth_mm;
    out.push_back(static_cast<char>(d >> 8));
    out.push_back(static_cast<char>(d & 0xff));
  }
  return out;
}

template <class Fn>
void for_each_depth(const std::string& path, Fn&& fn) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  SessionReader reader(in, ReaderOptions{stream_flags::kDepth});
  while (auto f = reader.next())
    if (auto* d = std::get_if<DepthFrame>(&*f)) fn(*d);
}

}  // namespace

void cmd_stillframes(const StillArgs& a, Context& ctx) {
  ctx.manifest.inputs.push_back(a.session);
  StillFrameTracker tracker(a.threshold_mm, a.min_seconds);
  std::size_t n_frames = 0;
  for_each_depth(a.session, [&](const DepthFrame& f) {
    tracker.push(f);
    ++n_frames;
  });
  const auto intervals = tracker.finish();

  std::vector<std::string> images(intervals.size());
  if (!a.out.empty()) {
    const fs::path dir = a.out;
    fs::create_directories(dir);
    std::map<std::size_t, std::size_t> wanted;  // frame index -> interval
    for (std::size_t i = 0; i < intervals.size(); ++i) {
      wanted[intervals[i].representative] = i;
      char name[32];
      std::snprintf(name, sizeof name, "still_%03zu.pgm", i);
      images[i] = (dir / name).string();
    }
    std::size_t index = 0;
    if (!wanted.empty())
      for_each_depth(a.session, [&](const DepthFrame& f) {
        if (auto it = wanted.find(index); it != wanted.end()) {
          write_text(images[it->second], depth_pgm(f));
          ctx.manifest.outputs.push_back(images[it->second]);
        }
        ++index;
      });
  }

  json list = json::array();
  std::ostringstream table;
  table << intervals.size() << " still intervals in " << n_frames << " depth frames (threshold "
        << a.threshold_mm << " mm, min " << a.min_seconds << " s)\n";
  for (std::size_t i = 0; i < intervals.size(); ++i) {
    const auto& s = intervals[i];
    const double dur = static_cast<double>(s.end_ms - s.start_ms) / 1000.0;
    list.push_back({{"first_frame", s.first_frame},
                    {"last_frame", s.last_frame},
                    {"start_ms", s.start_ms},
                    {"end_ms", s.end_ms},
                    {"duration_s", dur},
                    {"representative_frame", s.representative},
                    {"image", images[i].empty() ? json(nullptr) : json(images[i])}});
    table << "  frames " << s.first_frame << "-" << s.last_frame << "  " << s.start_ms << "-" << s.end_ms
          << " ms  (" << std::fixed << std::setprecision(1) << dur << " s)\n";
  }
  json doc = {{"schema_version", kSchemaVersion},
              {"threshold_mm", a.threshold_mm},
              {"min_seconds", a.min_seconds},
              {"depth_frames", n_frames},
              {"intervals", list}};
  if (!a.out.empty()) {
    const fs::path summary = fs::path(a.out) / "stillframes.json";
    write_text(summary, doc.dump(2) + "\n");
    ctx.manifest.outputs.push_back(summary.string());
    output_dir(a.out, ctx);
  }
  ctx.out << (a.json ? doc.dump(2) + "\n" : table.str());
}

// ---------------------------------------------------------------------------

void cmd_zones(const ZonesArgs& a, Context& ctx) {
  const AnnotationTrack truth = annotations_from_json(read_text(a.annotations, ctx));
  std::vector<std::pair<double, double>> spans;
  for (const auto& item : truth.items)
    if (a.gesture.empty() || item.gesture_name == a.gesture) spans.emplace_back(item.start_ms, item.end_ms);
  if (spans.empty())
    throw InputError(a.gesture.empty() ? "no annotated intervals" : "no intervals for gesture '" + a.gesture + "'");
  std::sort(spans.begin(), spans.end());

  ctx.manifest.inputs.push_back(a.session);
  OccupancyAccumulator gesture, background;
  for_each_depth(a.session, [&](const DepthFrame& f) {
    const double t = static_cast<double>(f.timestamp_ms);
    auto it = std::upper_bound(spans.begin(), spans.end(), std::make_pair(t, std::numeric_limits<double>::infinity()));
    bool inside = false;
    for (auto j = spans.begin(); j != it; ++j)
      if (t <= j->second) {
        inside = true;
        break;
      }
    (inside ? gesture : background).add(f);
  });
  if (gesture.frames() == 0) throw InputError("no depth frames fall inside the annotated intervals");
  if (background.frames() == 0) throw InputError("no depth frames outside the annotated intervals");

  const OccupancyMap g = gesture.map();
  const OccupancyMap b = background.map();
  const OccupancyMap z = gesture_zone(g, b);
  const fs::path dir = a.out;
  fs::create_directories(dir);
  const std::pair<const char*, const OccupancyMap*> maps[] = {
      {"background.pgm", &b}, {"gesture.pgm", &g}, {"zone.pgm", &z}};
  for (const auto& [name, map] : maps) {
    write_pgm(*map, dir / name);
    ctx.manifest.outputs.push_back((dir / name).string());
  }

  std::size_t zone_pixels = 0;
  double zone_max = 0.0, zone_sum = 0.0;
  for (double v : z.values) {
    if (v > 0.0) ++zone_pixels;
    zone_max = std::max(zone_max, v);
    zone_sum += v;
  }
  json doc = {{"schema_version", kSchemaVersion},
              {"gesture", a.gesture.empty() ? json(nullptr) : json(a.gesture)},
              {"width", z.width},
              {"height", z.height},
              {"gesture_frames", gesture.frames()},
              {"background_frames", background.frames()},
              {"zone_pixels", zone_pixels},
              {"zone_max", zone_max},
              {"zone_mean", zone_sum / static_cast<double>(z.values.size())},
              {"maps", {{"background", (dir / "background.pgm").string()},
                        {"gesture", (dir / "gesture.pgm").string()},
                        {"zone", (dir / "zone.pgm").string()}}}};
  write_text(dir / "zones.json", doc.dump(2) + "\n");
  ctx.manifest.outputs.push_back((dir / "zones.json").string());
  output_dir(dir, ctx);

  std::ostringstream table;
  table << "gesture frames " << gesture.frames() << ", background frames " << background.frames() << "\n"
        << "zone: " << zone_pixels << " pixels above background, max " << std::fixed << std::setprecision(3)
        << zone_max << "\n"
        << "maps written to " << dir.string() << "\n";
  ctx.out << (a.json ? doc.dump(2) + "\n" : table.str());
}

// ---------------------------------------------------------------------------

void cmd_inspect(const InspectArgs& a, Context& ctx) {
  ctx.manifest.inputs.push_back(a.session);
  std::ifstream in(a.session, std::ios::binary);
  if (!in) throw IoError("cannot open " + a.session);
  SessionReader reader(in);
  std::map<StreamKind, std::vector<std::uint64_t>> ts;
  std::set<int> skeleton_ids;
  while (auto f = reader.next()) {
    ts[stream_of(*f)].push_back(timestamp_of(*f));
    if (auto* s = std::get_if<SkeletonFrameRecord>(&*f))
      for (const auto& sk : s->skeletons) skeleton_ids.insert(sk.player_id);
  }
  const auto stats = frame_rate_stats(ts);
  const SessionHeader& h = reader.header();

  json streams = json::object();
  std::ostringstream table;
  table << "sensor " << h.sensor_id << ", format v" << h.format_version << ", start " << h.start_epoch_ms
        << " ms since epoch\n";
  for (const auto& [kind, list] : ts) {
    json entry = {{"frames", list.size()}};
    table << std::left << std::setw(10) << to_string(kind) << std::right << std::setw(8) << list.size()
          << " frames";
    if (auto it = stats.find(kind); it != stats.end()) {
      // Nominal rate ignores gaps longer than 1.5x the median (dropped frames).
      double sum = 0.0;
      std::size_t n = 0;
      for (std::size_t i = 1; i < list.size(); ++i) {
        const double gap = static_cast<double>(list[i] - list[i - 1]);
        if (gap <= 1.5 * it->second.median_ms) {
          sum += gap;
          ++n;
        }
      }
      const double nominal = (n > 0 && sum > 0.0) ? 1000.0 * n / sum : 0.0;
      entry["gap_min_ms"] = it->second.min_ms;
      entry["gap_median_ms"] = it->second.median_ms;
      entry["gap_max_ms"] = it->second.max_ms;
      entry["nominal_hz"] = nominal;
      entry["duration_s"] = static_cast<double>(list.back() - list.front()) / 1000.0;
      table << std::fixed << std::setprecision(1) << "  nominal " << nominal << " Hz  gaps "
            << it->second.min_ms << "/" << it->second.median_ms << "/" << it->second.max_ms << " ms";
    }
    table << "\n";
    streams[std::string(to_string(kind))] = entry;
  }
  table << "skeleton ids:";
  for (int id : skeleton_ids) table << " " << id;
  table << "\n";
  for (const auto& w : reader.warnings()) table << "warning: " << w << "\n";

  json flags = json::array();
  if (h.stream_flags & stream_flags::kDepth) flags.push_back("depth");
  if (h.stream_flags & stream_flags::kRgb) flags.push_back("rgb");
  if (h.stream_flags & stream_flags::kSkeleton) flags.push_back("skeleton");
  if (h.stream_flags & stream_flags::kAudioReserved) flags.push_back("audio_reserved");
  json doc = {{"schema_version", kSchemaVersion},
              {"header", {{"format_version", h.format_version},
                          {"sensor_id", h.sensor_id},
                          {"start_epoch_ms", h.start_epoch_ms},
                          {"streams", flags}}},
              {"streams", streams},
              {"skeleton_ids", skeleton_ids},
              {"warnings", reader.warnings()}};
  emit(doc, table.str(), a.json, a.out, ctx);
}

}  // namespace gspot::cli
