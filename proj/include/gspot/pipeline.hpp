#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gspot/container.hpp"
#include "gspot/features.hpp"
#include "gspot/gsn.hpp"
#include "gspot/hmm.hpp"
#include "gspot/synth.hpp"

namespace gspot {

// Observation sequences of one (skeleton, hand) pair.
struct HandStream {
  std::uint8_t skeleton_id = 1;
  HandSide hand = HandSide::Right;
  std::vector<ObservationSequence> sequences;
};

// One stream per skeleton id and hand, ordered by (skeleton, hand).
// `only` restricts to a single hand.
std::vector<HandStream> observation_streams(std::span<const Frame> frames, const FeatureConfig& cfg,
                                            std::optional<HandSide> only = std::nullopt);
std::vector<HandStream> observation_streams(const std::map<std::uint8_t, std::vector<TimedSkeleton>>& tracks,
                                            const FeatureConfig& cfg,
                                            std::optional<HandSide> only = std::nullopt);

struct LabeledExample {
  std::string gesture_name;
  std::string variant_name;
  std::vector<int> symbols;
};

// Symbols inside each annotated interval. Annotations whose interval does not
// fall inside a single tracked sequence are skipped; the count is returned in
// `skipped` when given.
std::vector<LabeledExample> collect_examples(std::span<const HandStream> streams,
                                             const AnnotationTrack& truth,
                                             std::size_t* skipped = nullptr);

struct TrainSettings {
  int n_states = 4;
  std::uint64_t seed = 1;
  double heldout_fraction = 0.1;
  int min_examples = 10;
  // Quantile of training state run lengths used as each state's minimum
  // stay when spotting; 0 disables the constraint.
  double stay_quantile = 0.1;
  TrainOptions hmm;
  SpottingConfig spotting;
  FeatureConfig features;
};

// Applies feature keys plus min_len_frames, refractory_ms, emission_floor,
// min_margin, stay_quantile, heldout_fraction, min_examples and n_states.
TrainSettings train_settings_from(const ConfigMap& map, TrainSettings base = {});

struct VariantTrainingSummary {
  std::string gesture_name;
  std::string variant_name;
  std::size_t train_count = 0;
  std::size_t heldout_count = 0;
  int iterations = 0;
  bool converged = false;
};

struct TrainReport {
  GestureSpottingNetwork network;
  std::vector<VariantTrainingSummary> variants;
  std::size_t heldout_total = 0;
  std::size_t heldout_correct = 0;

  // Gesture-level accuracy on the held-out split; 0 when nothing was held out.
  double heldout_accuracy() const {
    return heldout_total == 0 ? 0.0 : static_cast<double>(heldout_correct) / heldout_total;
  }
};

// Trains one left-to-right HMM per (gesture, variant) present in `examples`
// for every gesture in `gestures`, holding out a seeded fraction of each
// variant's examples for isolated classification. Throws InputError when a
// requested gesture has no examples and InsufficientDataError when a variant
// has fewer than settings.min_examples.
TrainReport train_network(std::span<const LabeledExample> examples,
                          const std::vector<std::string>& gestures, const TrainSettings& settings);

struct SpottedEvent {
  std::uint8_t skeleton_id = 1;
  HandSide hand = HandSide::Right;
  DetectionEvent event;

  friend bool operator==(const SpottedEvent&, const SpottedEvent&) = default;
};

// Runs one spotting engine per stream; events are ordered by end time.
std::vector<SpottedEvent> spot_streams(const GestureSpottingNetwork& network,
                                       std::span<const HandStream> streams);

struct PersonTime {
  double total_s = 0.0;    // session span times number of skeletons seen
  double tracked_s = 0.0;  // time each skeleton was actually present
};

// Gaps longer than break_ms do not count as tracked time.
PersonTime person_time(std::span<const Frame> frames, double break_ms = 500.0);

std::string detections_to_json(std::span<const SpottedEvent> events);
std::vector<SpottedEvent> detections_from_json(const std::string& text);

inline constexpr int kDetectionSchemaVersion = 1;

}  // namespace gspot
