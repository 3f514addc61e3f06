#include "gspot/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include "gspot/error.hpp"
#include "gspot/log.hpp"
#include "gspot/rng.hpp"
#include "json.hpp"

namespace gspot {

std::vector<HandStream> observation_streams(const std::map<std::uint8_t, std::vector<TimedSkeleton>>& tracks,
                                            const FeatureConfig& cfg, std::optional<HandSide> only) {
  std::vector<HandStream> out;
  for (const auto& [pid, track] : tracks) {
    for (HandSide side : {HandSide::Left, HandSide::Right}) {
      if (only && *only != side) continue;
      HandStream s;
      s.skeleton_id = pid;
      s.hand = side;
      if (track.size() >= 2) s.sequences = extract_sequences(std::span(track), side, cfg);
      out.push_back(std::move(s));
    }
  }
  return out;
}

std::vector<HandStream> observation_streams(std::span<const Frame> frames, const FeatureConfig& cfg,
                                            std::optional<HandSide> only) {
  return observation_streams(skeleton_tracks(frames), cfg, only);
}

std::vector<LabeledExample> collect_examples(std::span<const HandStream> streams,
                                             const AnnotationTrack& truth, std::size_t* skipped) {
  std::vector<LabeledExample> out;
  std::size_t missed = 0;
  for (const Annotation& a : truth.items) {
    bool found = false;
    for (const HandStream& s : streams) {
      if (s.skeleton_id != a.skeleton_id || s.hand != a.hand) continue;
      for (const ObservationSequence& seq : s.sequences) {
        if (seq.empty() || seq.start_ms() > a.start_ms || seq.end_ms() < a.end_ms) continue;
        LabeledExample ex{a.gesture_name, a.variant_name, {}};
        for (std::size_t i = 0; i < seq.size(); ++i)
          if (seq.t_ms[i] >= a.start_ms && seq.t_ms[i] <= a.end_ms) ex.symbols.push_back(seq.symbols[i]);
        if (ex.symbols.size() >= 2) {
          out.push_back(std::move(ex));
          found = true;
        }
        break;
      }
    }
    if (!found) ++missed;
  }
  if (missed > 0) log::warn(std::to_string(missed) + " annotations had no complete tracked sequence");
  if (skipped != nullptr) *skipped = missed;
  return out;
}

TrainSettings train_settings_from(const ConfigMap& map, TrainSettings base) {
  base.features = feature_config_from(map, base.features);
  auto integer = [&](const char* key, int fallback) {
    const double v = config_number(map, key, fallback);
    if (v != std::floor(v) || v < 0 || v > 1e6) throw InputError(std::string(key) + " must be a non-negative integer");
    return static_cast<int>(v);
  };
  SpottingConfig& sp = base.spotting;
  sp.min_len_frames = integer("min_len_frames", sp.min_len_frames);
  sp.refractory_ms = config_number(map, "refractory_ms", sp.refractory_ms);
  sp.emission_floor = config_number(map, "emission_floor", sp.emission_floor);
  sp.min_margin = config_number(map, "min_margin", sp.min_margin);
  base.hmm.emission_floor = sp.emission_floor;
  base.stay_quantile = config_number(map, "stay_quantile", base.stay_quantile);
  base.heldout_fraction = config_number(map, "heldout_fraction", base.heldout_fraction);
  base.min_examples = integer("min_examples", base.min_examples);
  base.n_states = integer("n_states", base.n_states);
  if (!(sp.refractory_ms >= 0.0)) throw InputError("refractory_ms must be non-negative");
  if (!(sp.emission_floor > 0.0 && sp.emission_floor < 1.0)) throw InputError("emission_floor must be in (0, 1)");
  if (!(base.stay_quantile >= 0.0 && base.stay_quantile <= 1.0)) throw InputError("stay_quantile must be in [0, 1]");
  if (!(base.heldout_fraction >= 0.0 && base.heldout_fraction < 1.0))
    throw InputError("heldout_fraction must be in [0, 1)");
  if (base.n_states < 1) throw InputError("n_states must be positive");
  return base;
}

TrainReport train_network(std::span<const LabeledExample> examples,
                          const std::vector<std::string>& gestures, const TrainSettings& settings) {
  if (gestures.empty()) throw InputError("no gestures requested");
  if (settings.n_states < 1) throw InputError("n_states must be positive");
  if (settings.heldout_fraction < 0.0 || settings.heldout_fraction >= 1.0)
    throw InputError("heldout_fraction must be within [0, 1)");

  struct Group {
    std::string gesture, variant;
    std::vector<std::vector<int>> seqs;
  };
  std::vector<Group> groups;
  for (const auto& g : gestures) {
    bool any = false;
    for (const auto& ex : examples) {
      if (ex.gesture_name != g) continue;
      any = true;
      auto it = std::find_if(groups.begin(), groups.end(),
                             [&](const Group& gr) { return gr.gesture == g && gr.variant == ex.variant_name; });
      if (it == groups.end()) {
        groups.push_back({g, ex.variant_name, {}});
        it = groups.end() - 1;
      }
      it->seqs.push_back(ex.symbols);
    }
    if (!any) throw InputError("no training examples for gesture '" + g + "'");
  }

  Rng rng(settings.seed);
  TrainReport report;
  std::vector<GestureVariant> variants;
  std::vector<std::pair<std::string, std::vector<int>>> heldout;
  for (auto& gr : groups) {
    const std::size_t n = gr.seqs.size();
    if (n < static_cast<std::size_t>(settings.min_examples))
      throw InsufficientDataError(gr.gesture + "/" + gr.variant + " has " + std::to_string(n) +
                                  " examples; at least " + std::to_string(settings.min_examples) + " needed");
    if (n < 80) log::warn(gr.gesture + "/" + gr.variant + ": only " + std::to_string(n) + " examples (80 recommended)");
    for (std::size_t i = n; i > 1; --i) std::swap(gr.seqs[i - 1], gr.seqs[rng.below(i)]);
    const auto n_hold = static_cast<std::size_t>(settings.heldout_fraction * static_cast<double>(n));
    std::vector<std::vector<int>> train(gr.seqs.begin() + static_cast<std::ptrdiff_t>(n_hold), gr.seqs.end());
    for (std::size_t i = 0; i < n_hold; ++i) heldout.emplace_back(gr.gesture, gr.seqs[i]);

    TrainResult tr = baum_welch_train(train, settings.n_states, Topology::LeftToRight, rng.bits(),
                                      kAlphabetSize, settings.hmm);
    report.variants.push_back({gr.gesture, gr.variant, train.size(), n_hold, tr.iterations, tr.converged});
    std::vector<int> stays;
    if (settings.stay_quantile > 0.0) stays = minimum_stays(tr.model, train, settings.stay_quantile);
    variants.push_back({gr.gesture, gr.variant, std::move(tr.model), required_span_ms(gr.gesture),
                        std::move(stays)});
  }

  report.network = make_network(std::move(variants), settings.spotting, settings.features);
  for (const auto& [gesture, seq] : heldout) {
    const Classification c = classify_isolated(report.network.variants, seq);
    ++report.heldout_total;
    if (c.gesture_name == gesture) ++report.heldout_correct;
  }
  return report;
}

std::vector<SpottedEvent> spot_streams(const GestureSpottingNetwork& network,
                                       std::span<const HandStream> streams) {
  std::vector<SpottedEvent> out;
  for (const HandStream& s : streams) {
    SpottingEngine engine(network);
    for (const ObservationSequence& seq : s.sequences) {
      engine.begin_sequence();
      for (std::size_t i = 0; i < seq.size(); ++i)
        for (auto& e : engine.push(seq.symbols[i], seq.t_ms[i])) out.push_back({s.skeleton_id, s.hand, std::move(e)});
    }
  }
  std::stable_sort(out.begin(), out.end(), [](const SpottedEvent& a, const SpottedEvent& b) {
    return a.event.end_ms < b.event.end_ms;
  });
  return out;
}

PersonTime person_time(std::span<const Frame> frames, double break_ms) {
  std::map<std::uint8_t, std::vector<double>> seen;
  std::optional<double> first, last;
  for (const Frame& f : frames) {
    const auto* rec = std::get_if<SkeletonFrameRecord>(&f);
    if (rec == nullptr) continue;
    const double t = static_cast<double>(rec->timestamp_ms);
    if (!first) first = t;
    last = t;
    for (const auto& s : rec->skeletons) seen[s.player_id].push_back(t);
  }
  PersonTime pt;
  if (!first) return pt;
  pt.total_s = (*last - *first) / 1000.0 * static_cast<double>(seen.size());
  for (const auto& [pid, ts] : seen)
    for (std::size_t i = 1; i < ts.size(); ++i)
      if (ts[i] - ts[i - 1] <= break_ms) pt.tracked_s += (ts[i] - ts[i - 1]) / 1000.0;
  return pt;
}

std::string detections_to_json(std::span<const SpottedEvent> events) {
  nlohmann::json items = nlohmann::json::array();
  for (const auto& e : events) {
    items.push_back({{"gesture_name", e.event.gesture_name},
                     {"variant", e.event.variant_name},
                     {"skeleton_id", e.skeleton_id},
                     {"hand_side", std::string(to_string(e.hand))},
                     {"start_ms", e.event.start_ms},
                     {"end_ms", e.event.end_ms},
                     {"log_likelihood_margin", e.event.log_likelihood_margin}});
  }
  nlohmann::json doc = {{"schema_version", kDetectionSchemaVersion}, {"detections", items}};
  return doc.dump(2) + "\n";
}

std::vector<SpottedEvent> detections_from_json(const std::string& text) {
  try {
    const auto doc = nlohmann::json::parse(text);
    if (doc.at("schema_version").get<int>() != kDetectionSchemaVersion)
      throw InputError("unsupported detections schema_version");
    std::vector<SpottedEvent> out;
    for (const auto& item : doc.at("detections")) {
      SpottedEvent e;
      e.event.gesture_name = item.at("gesture_name").get<std::string>();
      e.event.variant_name = item.value("variant", std::string{});
      const int sid = item.at("skeleton_id").get<int>();
      if (sid < 0 || sid > 7) throw InputError("skeleton_id out of range");
      e.skeleton_id = static_cast<std::uint8_t>(sid);
      e.hand = hand_side_from_string(item.at("hand_side").get<std::string>());
      e.event.start_ms = item.at("start_ms").get<double>();
      e.event.end_ms = item.at("end_ms").get<double>();
      e.event.log_likelihood_margin = item.value("log_likelihood_margin", 0.0);
      out.push_back(std::move(e));
    }
    return out;
  } catch (const nlohmann::json::exception& e) {
    throw InputError(std::string("malformed detections file: ") + e.what());
  }
}

}  // namespace gspot
