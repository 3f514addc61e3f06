#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gspot/container.hpp"
#include "gspot/features.hpp"
#include "gspot/skeleton.hpp"
#include "gspot/vec3.hpp"

namespace gspot {

// ---------------------------------------------------------------------------
// Gesture templates
//
// Paths are expressed relative to the performing shoulder in a side frame:
// +x points away from the body midline (mirrored for the left arm), +y up,
// -z forward toward the sensor.

struct TemplateParams {
  double amplitude_m = 0.0;  // main extent (swipe span, push depth, wave span)
  double duration_ms = 0.0;  // whole performance
  int direction = 0;         // +1 / -1, 0 = chosen per performance
  double hold_ms = 0.0;
  double pause_ms = 0.0;
  double radius_m = 0.0;
  double period_ms = 0.0;
};

struct JitterModel {
  double sensor_noise_m = 0.0005;  // per-frame positional noise added by the session renderer
  double amplitude_scale_lo = 0.88;
  double amplitude_scale_hi = 1.12;
  double duration_scale_lo = 0.85;
  double duration_scale_hi = 1.15;
};

struct GestureTemplate {
  std::string name;
  std::string variant;
  TemplateParams params;
  JitterModel jitter;
};

struct ArmSample {
  double t_ms = 0.0;
  Vec3 hand;
  Vec3 elbow;
};

inline constexpr double kTemplateSampleMs = 10.0;

// Smooth (noise-free) hand and elbow path for one performance; per-performance
// amplitude and duration scales are drawn from the template's jitter model.
std::vector<ArmSample> render_template(const GestureTemplate& tmpl, std::uint64_t seed);

// Catalog: Swipe (straight, bent), AirTap (relax, drop, pullback), Wave,
// Point, PauseSwipe, Circle, VerticalCircling, ForwardUp.
const std::vector<GestureTemplate>& gesture_catalog();
const GestureTemplate& find_template(const std::string& gesture, const std::string& variant);
std::vector<std::string> variants_of(const std::string& gesture);
bool is_known_gesture(const std::string& gesture);

const std::vector<std::string>& original_gestures();  // Swipe, AirTap, Wave, Point
const std::vector<std::string>& proposed_gestures();  // PauseSwipe, Circle, VerticalCircling, ForwardUp
// Redesigned counterpart of an original gesture (and vice versa), if any.
std::optional<std::string> counterpart(const std::string& gesture);

// Minimum performance span enforced at spotting time (Point and Wave: 800 ms).
double required_span_ms(const std::string& gesture);

// Two-link arm solve with the elbow swung down and outward.
Vec3 solve_elbow(Vec3 hand, double upper_m = 0.29, double fore_m = 0.28);

// ---------------------------------------------------------------------------
// Annotations

enum class AnnotationKind : std::uint8_t { Prompted, Injected };

struct Annotation {
  std::string gesture_name;
  std::string variant_name;
  std::uint8_t skeleton_id = 1;
  HandSide hand = HandSide::Right;
  double start_ms = 0.0;
  double end_ms = 0.0;
  AnnotationKind kind = AnnotationKind::Prompted;

  friend bool operator==(const Annotation&, const Annotation&) = default;
};

struct AnnotationTrack {
  std::vector<Annotation> items;

  friend bool operator==(const AnnotationTrack&, const AnnotationTrack&) = default;
};

inline constexpr int kAnnotationSchemaVersion = 1;

std::string annotations_to_json(const AnnotationTrack& track);
AnnotationTrack annotations_from_json(const std::string& text);
void write_annotations_file(const AnnotationTrack& track, const std::filesystem::path& path);
AnnotationTrack read_annotations_file(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Sessions

enum class Intensity : std::uint8_t { Quiet, Typical, Boisterous };

std::string_view to_string(Intensity i);
Intensity intensity_from_string(std::string_view s);

struct SynthConfig {
  double duration_s = 180.0;
  int n_skeletons = 1;
  int prompts_per_gesture = 5;
  int prompts_per_variant = 0;  // when > 0, overrides prompts_per_gesture
  std::vector<std::string> gestures = {"Swipe", "AirTap", "Wave", "Point"};
  Intensity intensity = Intensity::Typical;
  std::uint64_t seed = 1;
  double depth_rate_hz = 30.0;  // 0 disables depth frames
  double rgb_rate_hz = 0.0;     // flat JPEG frames; 0 disables
  double skeleton_rate_hz = 30.0;
  double frame_drop_prob = 0.1;  // per-frame drop chance (15-30 fps jitter)
  bool background_events = true;
  bool joint_dropout = false;
  AnnotationKind annotation_kind = AnnotationKind::Prompted;
  double sensor_noise_m = 0.0005;
};

// Throws InputError on non-positive durations, bad counts, unknown gestures.
void validate(const SynthConfig& cfg);
SynthConfig synth_config_from(const ConfigMap& map, SynthConfig base = {});

// Background-free performance set used for training: each variant of each
// gesture repeated `per_variant` times at a comfortable spacing.
SynthConfig training_config(const std::vector<std::string>& gestures, int per_variant,
                            std::uint64_t seed);

using FrameSink = std::function<void(Frame&&)>;

// Scripted background activity, for reviewing what false positives hit.
enum class BackgroundKind : std::uint8_t { Reach, Gesticulate, TouchFace, LateralReach, Stretch };
std::string_view to_string(BackgroundKind k);

struct BackgroundEvent {
  BackgroundKind kind = BackgroundKind::Reach;
  std::uint8_t skeleton_id = 1;
  HandSide hand = HandSide::Right;
  double start_ms = 0.0;
  double end_ms = 0.0;
};

// Streams frames in time order to `sink` and returns the ground truth.
// Output is a pure function of the config. The scripted background events
// are stored in `background` when given.
AnnotationTrack generate_session(const SynthConfig& cfg, const FrameSink& sink,
                                 std::vector<BackgroundEvent>* background = nullptr);

SessionHeader synth_header(const SynthConfig& cfg);

struct SynthSession {
  CaptureSession session;
  AnnotationTrack annotations;
  std::vector<BackgroundEvent> background;
};

// In-memory variant; intended for skeleton-only or short configs.
SynthSession generate_session(const SynthConfig& cfg);

// Writes <dir>/session.bgac and <dir>/annotations.json. Returns the track.
AnnotationTrack generate_session_files(const SynthConfig& cfg, const std::filesystem::path& dir);

// Seated body at rest with a single performance of `tmpl` starting at
// lead_ms; no background events. Returns a uniformly timed skeleton track
// (no frame drops) and the performance interval.
struct IsolatedPerformance {
  std::vector<TimedSkeleton> track;
  Annotation annotation;
};
IsolatedPerformance render_isolated_performance(const GestureTemplate& tmpl, std::uint64_t seed,
                                                double lead_ms = 1000.0, double tail_ms = 1000.0,
                                                double sensor_noise_m = 0.0005);

// Coarse player-masked depth image of the given bodies (pinhole projection,
// capsules around bones, static room behind).
DepthFrame render_depth(std::span<const Skeleton> bodies, std::uint64_t timestamp_ms,
                        std::uint16_t width = kDefaultWidth, std::uint16_t height = kDefaultHeight);

}  // namespace gspot
