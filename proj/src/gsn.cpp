#include "gspot/gsn.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <iterator>
#include <limits>
#include <ostream>

#include "bytes.hpp"
#include "gspot/error.hpp"

namespace gspot {

std::vector<std::string> GestureSpottingNetwork::gesture_names() const {
  std::vector<std::string> names;
  for (const auto& v : variants)
    if (std::find(names.begin(), names.end(), v.gesture_name) == names.end())
      names.push_back(v.gesture_name);
  return names;
}

double effective_self_transition(const HmmModel& model, int state) {
  const double stay = model.a(state, state);
  if (stay < 1.0 || model.n_states < 2) return stay;
  double sum = 0.0;
  for (int j = 0; j < model.n_states; ++j)
    if (j != state) sum += model.a(j, j);
  return std::min(sum / (model.n_states - 1), 1.0);
}

std::vector<int> minimum_stays(const HmmModel& model, std::span<const std::vector<int>> sequences,
                               double quantile) {
  if (!(quantile >= 0.0 && quantile <= 1.0)) throw InputError("stay quantile must be in [0, 1]");
  std::vector<std::vector<int>> runs(static_cast<std::size_t>(model.n_states));
  for (const auto& seq : sequences) {
    if (seq.empty()) continue;
    const std::vector<int> path = viterbi_path(model, seq, model.topology == Topology::LeftToRight);
    if (path.empty()) continue;
    std::vector<int> count(model.n_states, 0);
    for (int st : path) ++count[st];
    for (int i = 0; i < model.n_states; ++i)
      if (count[i] > 0) runs[i].push_back(count[i]);
  }
  std::vector<int> out(model.n_states, 1);
  for (int i = 0; i < model.n_states; ++i) {
    auto& r = runs[i];
    if (r.empty()) continue;
    std::sort(r.begin(), r.end());
    const auto at = static_cast<std::size_t>(quantile * static_cast<double>(r.size() - 1));
    out[i] = std::max(1, r[at]);
  }
  return out;
}

HmmModel build_threshold_model(std::span<const GestureVariant> variants) {
  if (variants.empty()) throw InputError("threshold model needs at least one gesture variant");
  const int n_symbols = variants.front().model.n_symbols;
  int total = 0;
  for (const auto& v : variants) {
    if (v.model.n_symbols != n_symbols)
      throw InputError("gesture variants disagree on alphabet size");
    total += v.model.n_states;
  }
  HmmModel thr;
  thr.n_states = total;
  thr.n_symbols = n_symbols;
  thr.topology = Topology::Ergodic;
  const auto k = static_cast<std::size_t>(total);
  thr.initial.assign(k, 1.0 / total);
  thr.transitions.assign(k * k, 0.0);
  thr.emissions.reserve(k * n_symbols);

  int row = 0;
  for (const auto& v : variants) {
    for (int i = 0; i < v.model.n_states; ++i, ++row) {
      const auto src = v.model.emission_row(i);
      thr.emissions.insert(thr.emissions.end(), src.begin(), src.end());
      if (total == 1) {
        thr.a(row, row) = 1.0;
        continue;
      }
      const double stay = effective_self_transition(v.model, i);
      const double spread = (1.0 - stay) / (total - 1);
      for (int j = 0; j < total; ++j) thr.a(row, j) = j == row ? stay : spread;
    }
  }
  return thr;
}

GestureSpottingNetwork make_network(std::vector<GestureVariant> variants, SpottingConfig config,
                                    FeatureConfig features) {
  GestureSpottingNetwork net;
  net.variants = std::move(variants);
  net.config = config;
  net.features = features;
  if (!net.variants.empty()) net.threshold = build_threshold_model(net.variants);
  return net;
}

// ---------------------------------------------------------------------------

SpottingEngine::SpottingEngine(const GestureSpottingNetwork& network) : net_(network) {
  thr_.assign(net_.threshold.n_states, 0.0);
  thr_next_ = thr_;
  for (const auto& v : net_.variants) {
    const int n = v.model.n_states;
    if (!v.min_stay.empty() && v.min_stay.size() != static_cast<std::size_t>(n))
      throw InputError("variant " + v.gesture_name + "/" + v.variant_name +
                       " has a min_stay list of the wrong length");
    Unrolled u;
    for (int i = 0; i < n; ++i) {
      const int d = v.min_stay.empty() ? 1 : std::max(1, v.min_stay[i]);
      u.first.push_back(static_cast<int>(u.state.size()));
      u.state.insert(u.state.end(), d, i);
      u.last.push_back(static_cast<int>(u.state.size()) - 1);
      u.stay.push_back(i == n - 1 ? effective_self_transition(v.model, i) : v.model.a(i, i));
    }
    score_.emplace_back(u.state.size(), 0.0);
    start_.emplace_back(u.state.size(), 0);
    unrolled_.push_back(std::move(u));
  }
  score_next_ = score_;
  start_next_ = start_;
}

void SpottingEngine::begin_sequence() {
  frame_ = 0;
  frame_ms_.clear();
}

std::vector<DetectionEvent> SpottingEngine::push(int symbol, double t_ms) {
  const HmmModel& thr = net_.threshold;
  const int k_states = thr.n_states;
  if (k_states == 0) return {};
  if (symbol < 0 || symbol >= thr.n_symbols)
    throw RangeError("observation symbol " + std::to_string(symbol) + " outside alphabet");

  frame_ms_.push_back(t_ms);
  const bool first = frame_ == 0;

  // Max-product recursion: each state keeps its best path score and the start
  // frame of that path. Gestures are entered from the best threshold path.
  double entry = 0.0;
  if (first) {
    for (int k = 0; k < k_states; ++k) {
      thr_next_[k] = thr.initial[k] * thr.b(k, symbol);
      entry = std::max(entry, thr.initial[k]);
    }
  } else {
    for (int k = 0; k < k_states; ++k) entry = std::max(entry, thr_[k]);
    for (int k = 0; k < k_states; ++k) {
      double best = 0.0;
      for (int j = 0; j < k_states; ++j) best = std::max(best, thr_[j] * thr.a(j, k));
      thr_next_[k] = best * thr.b(k, symbol);
    }
  }

  for (std::size_t v = 0; v < net_.variants.size(); ++v) {
    const HmmModel& m = net_.variants[v].model;
    const Unrolled& u = unrolled_[v];
    const auto& prev = score_[v];
    const auto& prev_start = start_[v];
    auto& cur = score_next_[v];
    auto& cur_start = start_next_[v];
    for (int j = 0; j < m.n_states; ++j) {
      const double emit = m.b(j, symbol);
      // Chain head: entered from the threshold or from the exit slot of another state.
      {
        double best = entry * m.initial[j];
        std::int64_t from = frame_;
        if (!first) {
          for (int i = 0; i < m.n_states; ++i) {
            if (i == j) continue;
            const double c = prev[u.last[i]] * m.a(i, j);
            if (c > best) {
              best = c;
              from = prev_start[u.last[i]];
            }
          }
          if (u.first[j] == u.last[j]) {
            const double c = prev[u.last[j]] * u.stay[j];
            if (c > best) {
              best = c;
              from = prev_start[u.last[j]];
            }
          }
        }
        cur[u.first[j]] = best * emit;
        cur_start[u.first[j]] = from;
      }
      for (int slot = u.first[j] + 1; slot <= u.last[j]; ++slot) {
        double best = 0.0;
        std::int64_t from = frame_;
        if (!first) {
          best = prev[slot - 1] * u.stay[j];
          from = prev_start[slot - 1];
          if (slot == u.last[j] && prev[slot] * u.stay[j] > best) {
            best = prev[slot] * u.stay[j];
            from = prev_start[slot];
          }
        }
        cur[slot] = best * emit;
        cur_start[slot] = from;
      }
    }
  }

  double scale = 0.0;
  for (double v : thr_next_) scale = std::max(scale, v);
  for (const auto& s : score_next_)
    for (double v : s) scale = std::max(scale, v);
  if (scale > 0.0) {
    for (double& v : thr_next_) v /= scale;
    for (auto& s : score_next_)
      for (double& v : s) v /= scale;
  }
  thr_.swap(thr_next_);
  score_.swap(score_next_);
  start_.swap(start_next_);

  const double thr_max = *std::max_element(thr_.begin(), thr_.end());
  std::vector<DetectionEvent> fired;
  std::map<std::string, std::size_t> by_gesture;
  for (std::size_t v = 0; v < net_.variants.size(); ++v) {
    const GestureVariant& gv = net_.variants[v];
    const int last = unrolled_[v].last.back();
    const double final_score = score_[v][last];
    if (!(final_score > thr_max)) continue;
    const std::int64_t start = start_[v][last];
    if (frame_ - start + 1 < net_.config.min_len_frames) continue;
    const double start_ms = frame_ms_[static_cast<std::size_t>(start)];
    if (t_ms - start_ms < gv.min_span_ms) continue;
    if (!(t_ms > start_ms)) continue;
    const auto it = last_emit_ms_.find(gv.gesture_name);
    if (it != last_emit_ms_.end() && t_ms - it->second < net_.config.refractory_ms) continue;

    const double margin = thr_max > 0.0 ? std::log(final_score) - std::log(thr_max)
                                        : std::numeric_limits<double>::infinity();
    if (!(margin > net_.config.min_margin)) continue;
    DetectionEvent ev{gv.gesture_name, gv.variant_name, start_ms, t_ms, margin};
    const auto [slot, inserted] = by_gesture.try_emplace(gv.gesture_name, fired.size());
    if (inserted) {
      fired.push_back(std::move(ev));
    } else if (margin > fired[slot->second].log_likelihood_margin) {
      fired[slot->second] = std::move(ev);
    }
  }
  // A detection consumes its candidate: every variant of the gesture restarts
  // from the threshold path on the next frame.
  for (const auto& ev : fired) {
    last_emit_ms_[ev.gesture_name] = ev.end_ms;
    for (std::size_t v = 0; v < net_.variants.size(); ++v)
      if (net_.variants[v].gesture_name == ev.gesture_name) std::fill(score_[v].begin(), score_[v].end(), 0.0);
  }
  ++frame_;
  return fired;
}

std::vector<DetectionEvent> SpottingEngine::run(const ObservationSequence& obs) {
  begin_sequence();
  std::vector<DetectionEvent> out;
  for (std::size_t t = 0; t < obs.size(); ++t) {
    auto ev = push(obs.symbols[t], obs.t_ms[t]);
    std::move(ev.begin(), ev.end(), std::back_inserter(out));
  }
  return out;
}

std::vector<DetectionEvent> spot(const GestureSpottingNetwork& network,
                                 const ObservationSequence& obs) {
  SpottingEngine engine(network);
  return engine.run(obs);
}

Classification classify_isolated(std::span<const GestureVariant> variants, std::span<const int> obs) {
  if (variants.empty()) throw InputError("classification needs at least one gesture variant");
  Classification best{variants.front().gesture_name, variants.front().variant_name,
                      forward_log_likelihood(variants.front().model, obs)};
  for (std::size_t v = 1; v < variants.size(); ++v) {
    const double ll = forward_log_likelihood(variants[v].model, obs);
    if (ll > best.log_likelihood) best = {variants[v].gesture_name, variants[v].variant_name, ll};
  }
  return best;
}

// ---------------------------------------------------------------------------

namespace {

constexpr char kMagic[] = "GSN1";
constexpr std::uint32_t kNetworkVersion = 1;

void put_model(detail::ByteWriter& w, const HmmModel& m) {
  w.u8(static_cast<std::uint8_t>(m.topology));
  w.u32(static_cast<std::uint32_t>(m.n_states));
  w.u32(static_cast<std::uint32_t>(m.n_symbols));
  for (double v : m.initial) w.f64(v);
  for (double v : m.transitions) w.f64(v);
  for (double v : m.emissions) w.f64(v);
}

HmmModel get_model(detail::ByteReader& r) {
  HmmModel m;
  const std::uint8_t topo = r.u8();
  if (topo > 1) throw FormatError("unknown model topology");
  m.topology = static_cast<Topology>(topo);
  m.n_states = static_cast<int>(r.u32());
  m.n_symbols = static_cast<int>(r.u32());
  const auto n = static_cast<std::size_t>(m.n_states);
  const auto s = static_cast<std::size_t>(m.n_symbols);
  if (n > 100000 || s > 1000000 || (n + n * n + n * s) * 8 > r.remaining())
    throw FormatError("model dimensions exceed file size");
  m.initial.resize(n);
  m.transitions.resize(n * n);
  m.emissions.resize(n * s);
  for (double& v : m.initial) v = r.f64();
  for (double& v : m.transitions) v = r.f64();
  for (double& v : m.emissions) v = r.f64();
  return m;
}

}  // namespace

void save_network(const GestureSpottingNetwork& net, std::ostream& sink) {
  detail::ByteWriter w;
  w.tag(kMagic);
  w.u32(kNetworkVersion);
  w.f64(net.features.radius_threshold_m);
  w.f64(net.features.speed_threshold_mps);
  w.f64(net.features.resample_hz);
  w.u32(static_cast<std::uint32_t>(net.config.min_len_frames));
  w.f64(net.config.refractory_ms);
  w.f64(net.config.emission_floor);
  w.f64(net.config.min_margin);
  w.u32(static_cast<std::uint32_t>(net.variants.size()));
  for (const auto& v : net.variants) {
    w.str(v.gesture_name);
    w.str(v.variant_name);
    w.f64(v.min_span_ms);
    w.u32(static_cast<std::uint32_t>(v.min_stay.size()));
    for (int d : v.min_stay) w.u32(static_cast<std::uint32_t>(d));
    put_model(w, v.model);
  }
  put_model(w, net.threshold);
  sink.write(reinterpret_cast<const char*>(w.buffer().data()),
             static_cast<std::streamsize>(w.size()));
  if (!sink) throw IoError("failed to write network");
}

GestureSpottingNetwork load_network(std::istream& source) {
  const std::vector<std::uint8_t> data((std::istreambuf_iterator<char>(source)),
                                       std::istreambuf_iterator<char>());
  if (data.size() < 8 || !std::equal(data.begin(), data.begin() + 4, kMagic))
    throw FormatError("not a gesture network file (bad magic)");
  detail::ByteReader r(data, 0);
  r.bytes(4);
  const std::uint32_t version = r.u32();
  if (version != kNetworkVersion)
    throw FormatError("unsupported network file version " + std::to_string(version));
  try {
    GestureSpottingNetwork net;
    net.features.radius_threshold_m = r.f64();
    net.features.speed_threshold_mps = r.f64();
    net.features.resample_hz = r.f64();
    net.config.min_len_frames = static_cast<int>(r.u32());
    net.config.refractory_ms = r.f64();
    net.config.emission_floor = r.f64();
    net.config.min_margin = r.f64();
    const std::uint32_t count = r.u32();
    for (std::uint32_t i = 0; i < count; ++i) {
      GestureVariant v;
      v.gesture_name = r.str();
      v.variant_name = r.str();
      v.min_span_ms = r.f64();
      const std::uint32_t stays = r.u32();
      if (stays > r.remaining() / 4) throw FormatError("min_stay list exceeds file size");
      for (std::uint32_t k = 0; k < stays; ++k) v.min_stay.push_back(static_cast<int>(r.u32()));
      v.model = get_model(r);
      if (!v.min_stay.empty() && v.min_stay.size() != static_cast<std::size_t>(v.model.n_states))
        throw FormatError("min_stay list does not match the model size");
      net.variants.push_back(std::move(v));
    }
    net.threshold = get_model(r);
    if (r.remaining() != 0) throw FormatError("trailing bytes after network");
    return net;
  } catch (const CorruptStreamError& e) {
    throw FormatError(std::string("truncated network file: ") + e.what());
  }
}

void save_network_file(const GestureSpottingNetwork& network, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  save_network(network, out);
}

GestureSpottingNetwork load_network_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return load_network(in);
}

}  // namespace gspot
