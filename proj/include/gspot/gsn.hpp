#pragma once

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "gspot/features.hpp"
#include "gspot/hmm.hpp"

namespace gspot {

struct GestureVariant {
  std::string gesture_name;
  std::string variant_name;
  HmmModel model;
  // Minimum candidate segment span before this variant may fire (0 = none).
  double min_span_ms = 0.0;
  // Minimum frames a spotting path spends in each state; empty means 1.
  std::vector<int> min_stay;

  friend bool operator==(const GestureVariant&, const GestureVariant&) = default;
};

struct SpottingConfig {
  int min_len_frames = 6;
  double refractory_ms = 1000.0;
  double emission_floor = 1e-5;
  double min_margin = 0.0;  // log-likelihood margin a detection must exceed

  friend bool operator==(const SpottingConfig&, const SpottingConfig&) = default;
};

struct GestureSpottingNetwork {
  std::vector<GestureVariant> variants;
  HmmModel threshold;  // ergodic; empty when there are no variants
  SpottingConfig config;
  FeatureConfig features;

  // Gesture names in first-appearance order.
  std::vector<std::string> gesture_names() const;

  friend bool operator==(const GestureSpottingNetwork&, const GestureSpottingNetwork&) = default;
};

// Self-transition used for `state` by the threshold model and the spotter.
// Equal to A[state][state], except that an absorbing state of a multi-state
// model takes the mean self-transition of the model's other states.
double effective_self_transition(const HmmModel& model, int state);

// Per-state minimum stay from Viterbi alignments of training sequences: the
// given quantile of each state's run length, at least 1. Sequences without
// a path ending in the final state are skipped.
std::vector<int> minimum_stays(const HmmModel& model, std::span<const std::vector<int>> sequences,
                               double quantile);

// Ergodic model with one state per gesture state. Each copy keeps its source
// self-transition and emission row; the remaining mass is split uniformly
// over the other threshold states. Self-transitions follow
// effective_self_transition, so the trained (absorbing) final state of a
// left-to-right model does not trap threshold paths. Uniform initial
// distribution.
HmmModel build_threshold_model(std::span<const GestureVariant> variants);

GestureSpottingNetwork make_network(std::vector<GestureVariant> variants,
                                    SpottingConfig config = {}, FeatureConfig features = {});

struct DetectionEvent {
  std::string gesture_name;
  std::string variant_name;
  double start_ms = 0.0;
  double end_ms = 0.0;
  double log_likelihood_margin = 0.0;

  friend bool operator==(const DetectionEvent&, const DetectionEvent&) = default;
};

// Online spotter for one (skeleton, hand) stream. Every model is advanced
// with the max-product (Viterbi) forward recursion and all states share one
// per-frame scale (the largest score of any state), so gesture and threshold
// scores compare directly. A gesture's first state is entered every frame
// with the best threshold score of the previous frame; each state carries
// the start frame of its best path. A gesture's final state loops with its
// effective self-transition; the remainder is the implicit exit.
//
// A state with minimum stay d is unrolled into a chain of d copies that share
// its emission and self-transition, so paths leaving it sooner are dropped
// and the others keep their probability.
//
// A variant fires at frame t when its final state outscores every threshold
// state, the candidate segment has at least min_len_frames frames and spans
// at least the variant's min_span_ms, and t is at least refractory_ms past
// the last emission of the same gesture. Among variants of one gesture
// firing together, the largest margin wins. A detection clears the scores of
// all variants of its gesture.
class SpottingEngine {
 public:
  explicit SpottingEngine(const GestureSpottingNetwork& network);

  // Starts a new contiguous sequence; the refractory memory persists.
  void begin_sequence();
  std::vector<DetectionEvent> push(int symbol, double t_ms);
  std::vector<DetectionEvent> run(const ObservationSequence& obs);

 private:
  const GestureSpottingNetwork& net_;
  std::vector<double> thr_, thr_next_;
  std::vector<std::vector<double>> score_, score_next_;
  std::vector<std::vector<std::int64_t>> start_, start_next_;
  struct Unrolled {
    std::vector<int> state;        // model state of each chain slot
    std::vector<int> first, last;  // slot range of each model state
    std::vector<double> stay;      // self-transition used for each model state
  };
  std::vector<Unrolled> unrolled_;
  std::vector<double> frame_ms_;
  std::int64_t frame_ = 0;
  std::map<std::string, double> last_emit_ms_;
};

std::vector<DetectionEvent> spot(const GestureSpottingNetwork& network,
                                 const ObservationSequence& obs);

struct Classification {
  std::string gesture_name;
  std::string variant_name;
  double log_likelihood = 0.0;
};

// Argmax of the forward likelihood over variants; ties go to the earlier
// variant. Throws InputError for an empty variant list or sequence.
Classification classify_isolated(std::span<const GestureVariant> variants, std::span<const int> obs);

// "GSN1" binary format, little-endian, probabilities as raw IEEE doubles.
void save_network(const GestureSpottingNetwork& network, std::ostream& sink);
GestureSpottingNetwork load_network(std::istream& source);
void save_network_file(const GestureSpottingNetwork& network, const std::filesystem::path& path);
GestureSpottingNetwork load_network_file(const std::filesystem::path& path);

}  // namespace gspot
