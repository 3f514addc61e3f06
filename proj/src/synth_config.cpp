#include <algorithm>
#include <fstream>
#include <sstream>

#include "json.hpp"

#include "gspot/error.hpp"
#include "gspot/synth.hpp"

namespace gspot {

namespace {

using nlohmann::json;

std::string_view kind_name(AnnotationKind k) {
  return k == AnnotationKind::Prompted ? "prompted" : "injected";
}

AnnotationKind kind_from(std::string_view s) {
  if (s == "prompted") return AnnotationKind::Prompted;
  if (s == "injected") return AnnotationKind::Injected;
  throw InputError("unknown annotation kind '" + std::string(s) + "'");
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
  if (v == "0" || v == "false" || v == "no" || v == "off") return false;
  throw InputError("config key '" + key + "' is not a boolean: '" + v + "'");
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream in(s);
  std::string item;
  while (std::getline(in, item, ',')) {
    const auto b = item.find_first_not_of(" \t");
    const auto e = item.find_last_not_of(" \t");
    if (b != std::string::npos) out.push_back(item.substr(b, e - b + 1));
  }
  return out;
}

}  // namespace

std::string annotations_to_json(const AnnotationTrack& track) {
  json items = json::array();
  for (const auto& a : track.items) {
    items.push_back({{"gesture_name", a.gesture_name},
                     {"variant", a.variant_name},
                     {"skeleton_id", a.skeleton_id},
                     {"hand_side", std::string(to_string(a.hand))},
                     {"start_ms", a.start_ms},
                     {"end_ms", a.end_ms},
                     {"kind", std::string(kind_name(a.kind))}});
  }
  json doc = {{"schema_version", kAnnotationSchemaVersion}, {"annotations", items}};
  return doc.dump(2) + "\n";
}

AnnotationTrack annotations_from_json(const std::string& text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(std::string("annotation file is not valid JSON: ") + e.what());
  }
  try {
    if (!doc.is_object()) throw InputError("annotation document must be an object");
    const int version = doc.at("schema_version").get<int>();
    if (version != kAnnotationSchemaVersion)
      throw InputError("unsupported annotation schema_version " + std::to_string(version));
    AnnotationTrack track;
    for (const auto& item : doc.at("annotations")) {
      Annotation a;
      a.gesture_name = item.at("gesture_name").get<std::string>();
      a.variant_name = item.value("variant", std::string{});
      const int sid = item.at("skeleton_id").get<int>();
      if (sid < 1 || sid > 7) throw InputError("skeleton_id out of range: " + std::to_string(sid));
      a.skeleton_id = static_cast<std::uint8_t>(sid);
      a.hand = hand_side_from_string(item.at("hand_side").get<std::string>());
      a.start_ms = item.at("start_ms").get<double>();
      a.end_ms = item.at("end_ms").get<double>();
      if (!(a.end_ms >= a.start_ms)) throw InputError("annotation ends before it starts");
      a.kind = kind_from(item.at("kind").get<std::string>());
      track.items.push_back(std::move(a));
    }
    return track;
  } catch (const json::exception& e) {
    throw InputError(std::string("malformed annotation file: ") + e.what());
  }
}

void write_annotations_file(const AnnotationTrack& track, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << annotations_to_json(track);
  if (!out) throw IoError("write failed: " + path.string());
}

AnnotationTrack read_annotations_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return annotations_from_json(ss.str());
}

std::string_view to_string(Intensity i) {
  switch (i) {
    case Intensity::Quiet: return "quiet";
    case Intensity::Typical: return "typical";
    case Intensity::Boisterous: return "boisterous";
  }
  return "typical";
}

Intensity intensity_from_string(std::string_view s) {
  if (s == "quiet") return Intensity::Quiet;
  if (s == "typical") return Intensity::Typical;
  if (s == "boisterous") return Intensity::Boisterous;
  throw InputError("unknown intensity '" + std::string(s) + "'");
}

void validate(const SynthConfig& cfg) {
  if (!(cfg.duration_s > 0.0)) throw InputError("duration_s must be positive");
  if (cfg.n_skeletons < 1 || cfg.n_skeletons > 2) throw InputError("n_skeletons must be 1 or 2");
  if (cfg.prompts_per_gesture < 0 || cfg.prompts_per_variant < 0)
    throw InputError("prompt counts must be non-negative");
  for (const auto& g : cfg.gestures)
    if (!is_known_gesture(g)) throw InputError("unknown gesture '" + g + "'");
  if (cfg.depth_rate_hz < 0.0 || cfg.rgb_rate_hz < 0.0 || cfg.depth_rate_hz > 120.0 ||
      cfg.rgb_rate_hz > 120.0)
    throw InputError("stream rates must be within [0, 120] Hz");
  if (!(cfg.skeleton_rate_hz > 0.0) || cfg.skeleton_rate_hz > 120.0)
    throw InputError("skeleton_rate_hz must be within (0, 120]");
  if (cfg.frame_drop_prob < 0.0 || cfg.frame_drop_prob >= 1.0)
    throw InputError("frame_drop_prob must be within [0, 1)");
  if (cfg.sensor_noise_m < 0.0) throw InputError("sensor_noise_m must be non-negative");
}

SynthConfig synth_config_from(const ConfigMap& map, SynthConfig base) {
  auto integer = [&](const char* key, int fallback) {
    const double v = config_number(map, key, fallback);
    if (v != static_cast<int>(v)) throw InputError(std::string("config key '") + key + "' must be an integer");
    return static_cast<int>(v);
  };
  base.duration_s = config_number(map, "duration_s", base.duration_s);
  base.n_skeletons = integer("n_skeletons", base.n_skeletons);
  base.prompts_per_gesture = integer("prompts_per_gesture", base.prompts_per_gesture);
  base.prompts_per_variant = integer("prompts_per_variant", base.prompts_per_variant);
  if (auto it = map.find("gestures"); it != map.end()) base.gestures = split_list(it->second);
  if (auto it = map.find("intensity"); it != map.end()) base.intensity = intensity_from_string(it->second);
  if (auto it = map.find("seed"); it != map.end()) {
    try {
      base.seed = std::stoull(it->second);
    } catch (const std::exception&) {
      throw InputError("config key 'seed' is not an unsigned integer");
    }
  }
  base.depth_rate_hz = config_number(map, "depth_rate_hz", base.depth_rate_hz);
  base.rgb_rate_hz = config_number(map, "rgb_rate_hz", base.rgb_rate_hz);
  base.skeleton_rate_hz = config_number(map, "skeleton_rate_hz", base.skeleton_rate_hz);
  base.frame_drop_prob = config_number(map, "frame_drop_prob", base.frame_drop_prob);
  if (auto it = map.find("background_events"); it != map.end())
    base.background_events = parse_bool("background_events", it->second);
  if (auto it = map.find("joint_dropout"); it != map.end())
    base.joint_dropout = parse_bool("joint_dropout", it->second);
  if (auto it = map.find("annotation_kind"); it != map.end()) base.annotation_kind = kind_from(it->second);
  base.sensor_noise_m = config_number(map, "sensor_noise_m", base.sensor_noise_m);
  validate(base);
  return base;
}

SynthConfig training_config(const std::vector<std::string>& gestures, int per_variant,
                            std::uint64_t seed) {
  SynthConfig cfg;
  cfg.gestures = gestures;
  cfg.prompts_per_variant = per_variant;
  cfg.prompts_per_gesture = 0;
  cfg.seed = seed;
  cfg.background_events = false;
  cfg.depth_rate_hz = 0.0;
  cfg.rgb_rate_hz = 0.0;
  cfg.annotation_kind = AnnotationKind::Injected;
  std::size_t n = 0;
  for (const auto& g : gestures) n += variants_of(g).size();
  cfg.duration_s = std::max<double>(10.0, 4.0 * static_cast<double>(n * std::max(per_variant, 0)) + 4.0);
  return cfg;
}

}  // namespace gspot
