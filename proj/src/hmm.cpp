#include "gspot/hmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "gspot/error.hpp"
#include "gspot/rng.hpp"

namespace gspot {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

bool row_ok(std::span<const double> row, double tol) {
  double sum = 0.0;
  for (double v : row) {
    if (!(v >= 0.0) || !std::isfinite(v)) return false;
    sum += v;
  }
  return std::abs(sum - 1.0) <= tol;
}

void check_symbols(const HmmModel& model, std::span<const int> obs) {
  for (int o : obs)
    if (o < 0 || o >= model.n_symbols)
      throw RangeError("observation symbol " + std::to_string(o) + " outside alphabet of " +
                       std::to_string(model.n_symbols));
}

}  // namespace

bool is_stochastic(const HmmModel& m, double tol) {
  const auto n = static_cast<std::size_t>(m.n_states);
  if (m.initial.size() != n || m.transitions.size() != n * n ||
      m.emissions.size() != n * static_cast<std::size_t>(m.n_symbols))
    return false;
  if (n == 0) return true;
  if (!row_ok(m.initial, tol)) return false;
  for (int i = 0; i < m.n_states; ++i) {
    if (!row_ok(std::span(m.transitions).subspan(i * n, n), tol)) return false;
    if (!row_ok(m.emission_row(i), tol)) return false;
    if (m.topology == Topology::LeftToRight) {
      for (int j = 0; j < m.n_states; ++j)
        if ((j < i || j > i + 1) && m.a(i, j) != 0.0) return false;
    }
  }
  if (m.topology == Topology::LeftToRight) {
    if (m.initial[0] != 1.0) return false;
  }
  return true;
}

double forward_log_likelihood(const HmmModel& model, std::span<const int> obs) {
  if (obs.empty()) throw InputError("forward pass needs a non-empty sequence");
  check_symbols(model, obs);
  const int n = model.n_states;
  if (n == 0) return kNegInf;
  std::vector<double> alpha(n), next(n);
  double log_l = 0.0;
  for (int i = 0; i < n; ++i) alpha[i] = model.initial[i] * model.b(i, obs[0]);
  for (std::size_t t = 0;; ++t) {
    const double c = std::accumulate(alpha.begin(), alpha.end(), 0.0);
    if (!(c > 0.0)) return kNegInf;
    log_l += std::log(c);
    for (double& v : alpha) v /= c;
    if (t + 1 == obs.size()) break;
    const int o = obs[t + 1];
    for (int j = 0; j < n; ++j) {
      double s = 0.0;
      for (int i = 0; i < n; ++i) s += alpha[i] * model.a(i, j);
      next[j] = s * model.b(j, o);
    }
    alpha.swap(next);
  }
  return log_l;
}

std::vector<int> viterbi_path(const HmmModel& model, std::span<const int> obs, bool end_in_final) {
  if (obs.empty()) throw InputError("viterbi needs a non-empty sequence");
  check_symbols(model, obs);
  const int n = model.n_states;
  if (n == 0) return {};
  auto lg = [](double p) { return p > 0.0 ? std::log(p) : kNegInf; };
  const std::size_t t_len = obs.size();
  std::vector<double> delta(n), next(n);
  std::vector<int> back(t_len * static_cast<std::size_t>(n), 0);
  for (int i = 0; i < n; ++i) delta[i] = lg(model.initial[i]) + lg(model.b(i, obs[0]));
  for (std::size_t t = 1; t < t_len; ++t) {
    for (int j = 0; j < n; ++j) {
      double best = kNegInf;
      int arg = 0;
      for (int i = 0; i < n; ++i) {
        const double c = delta[i] + lg(model.a(i, j));
        if (c > best) {
          best = c;
          arg = i;
        }
      }
      next[j] = best + lg(model.b(j, obs[t]));
      back[t * n + j] = arg;
    }
    delta.swap(next);
  }
  int state = end_in_final ? n - 1 : static_cast<int>(std::max_element(delta.begin(), delta.end()) - delta.begin());
  if (delta[state] == kNegInf) return {};
  std::vector<int> path(t_len);
  for (std::size_t t = t_len; t-- > 0;) {
    path[t] = state;
    if (t > 0) state = back[t * n + state];
  }
  return path;
}

HmmModel initial_model(int n_states, Topology topology, std::uint64_t seed, int n_symbols) {
  if (n_states < 1) throw InputError("model needs at least one state");
  if (n_symbols < 1) throw InputError("model needs at least one symbol");
  Rng rng(seed);
  HmmModel m;
  m.n_states = n_states;
  m.n_symbols = n_symbols;
  m.topology = topology;
  const auto n = static_cast<std::size_t>(n_states);
  m.initial.assign(n, 0.0);
  m.transitions.assign(n * n, 0.0);
  m.emissions.assign(n * static_cast<std::size_t>(n_symbols), 0.0);

  auto normalize = [](std::span<double> row) {
    const double s = std::accumulate(row.begin(), row.end(), 0.0);
    for (double& v : row) v /= s;
  };

  if (topology == Topology::LeftToRight) {
    m.initial[0] = 1.0;
    for (int i = 0; i < n_states; ++i) {
      if (i + 1 < n_states) {
        m.a(i, i) = 0.6;
        m.a(i, i + 1) = 0.4;
      } else {
        m.a(i, i) = 1.0;
      }
    }
  } else {
    for (double& v : m.initial) v = 1.0 + rng.uniform(-0.01, 0.01);
    normalize(m.initial);
    for (double& v : m.transitions) v = 1.0 + rng.uniform(-0.01, 0.01);
    for (int i = 0; i < n_states; ++i) normalize(std::span(m.transitions).subspan(i * n, n));
  }
  for (double& v : m.emissions) v = 1.0 + rng.uniform(-0.01, 0.01);
  for (int i = 0; i < n_states; ++i)
    normalize(std::span(m.emissions).subspan(i * static_cast<std::size_t>(n_symbols), n_symbols));
  return m;
}

bool floored_ml_row(std::span<const double> counts, double floor, std::span<double> row) {
  const std::size_t m = counts.size();
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  if (!(total > 0.0)) return false;
  if (floor <= 0.0) {
    for (std::size_t k = 0; k < m; ++k) row[k] = counts[k] / total;
    return true;
  }
  if (floor * static_cast<double>(m) >= 1.0) {
    std::fill(row.begin(), row.end(), 1.0 / static_cast<double>(m));
    return true;
  }
  // Water-filling: entries whose scaled count falls under the floor are
  // pinned to it; the rest share the remaining mass proportionally.
  std::vector<char> pinned(m);
  std::size_t n_pinned = 0;
  for (std::size_t k = 0; k < m; ++k) {
    pinned[k] = counts[k] <= 0.0;
    n_pinned += pinned[k];
  }
  double scale = 0.0;
  while (true) {
    double free_sum = 0.0;
    for (std::size_t k = 0; k < m; ++k)
      if (!pinned[k]) free_sum += counts[k];
    scale = free_sum / (1.0 - static_cast<double>(n_pinned) * floor);
    bool moved = false;
    for (std::size_t k = 0; k < m; ++k) {
      if (!pinned[k] && counts[k] / scale < floor) {
        pinned[k] = 1;
        ++n_pinned;
        moved = true;
      }
    }
    if (!moved) break;
  }
  for (std::size_t k = 0; k < m; ++k) row[k] = pinned[k] ? floor : counts[k] / scale;
  return true;
}

namespace {

struct Accumulator {
  explicit Accumulator(const HmmModel& m)
      : initial(m.n_states, 0.0),
        trans(std::size_t(m.n_states) * m.n_states, 0.0),
        emit(std::size_t(m.n_states) * m.n_symbols, 0.0) {}
  std::vector<double> initial;
  std::vector<double> trans;
  std::vector<double> emit;
};

// E-step for one sequence. Returns the sequence's objective, or -inf if the
// sequence is impossible (nothing accumulated then).
double accumulate(const HmmModel& m, std::span<const int> obs, bool end_in_final,
                  Accumulator& acc) {
  const int n = m.n_states;
  const std::size_t len = obs.size();
  std::vector<double> alpha(len * n), beta(len * n), scale(len);

  for (int i = 0; i < n; ++i) alpha[i] = m.initial[i] * m.b(i, obs[0]);
  for (std::size_t t = 0; t < len; ++t) {
    double* at = &alpha[t * n];
    if (t > 0) {
      const double* prev = &alpha[(t - 1) * n];
      for (int j = 0; j < n; ++j) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += prev[i] * m.a(i, j);
        at[j] = s * m.b(j, obs[t]);
      }
    }
    double c = 0.0;
    for (int i = 0; i < n; ++i) c += at[i];
    if (!(c > 0.0)) return kNegInf;
    scale[t] = c;
    for (int i = 0; i < n; ++i) at[i] /= c;
  }

  double objective = 0.0;
  for (double c : scale) objective += std::log(c);
  if (end_in_final) {
    const double end_mass = alpha[(len - 1) * n + (n - 1)];
    if (!(end_mass > 0.0)) return kNegInf;
    objective += std::log(end_mass);
  }

  // Beta is renormalized per frame; gamma and xi are normalized per frame
  // below, so any per-frame scale cancels.
  for (int i = 0; i < n; ++i) beta[(len - 1) * n + i] = (!end_in_final || i == n - 1) ? 1.0 : 0.0;
  for (std::size_t t = len - 1; t-- > 0;) {
    const double* bn = &beta[(t + 1) * n];
    double* bt = &beta[t * n];
    double s = 0.0;
    for (int i = 0; i < n; ++i) {
      double v = 0.0;
      for (int j = 0; j < n; ++j) v += m.a(i, j) * m.b(j, obs[t + 1]) * bn[j];
      bt[i] = v;
      s += v;
    }
    for (int i = 0; i < n; ++i) bt[i] /= s;
  }

  std::vector<double> gamma(n), xi(std::size_t(n) * n);
  for (std::size_t t = 0; t < len; ++t) {
    double g_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      gamma[i] = alpha[t * n + i] * beta[t * n + i];
      g_sum += gamma[i];
    }
    for (int i = 0; i < n; ++i) {
      const double g = gamma[i] / g_sum;
      if (t == 0) acc.initial[i] += g;
      acc.emit[std::size_t(i) * m.n_symbols + obs[t]] += g;
    }
    if (t + 1 == len) break;
    double x_sum = 0.0;
    for (int i = 0; i < n; ++i) {
      const double ai = alpha[t * n + i];
      for (int j = 0; j < n; ++j) {
        const double v = ai * m.a(i, j) * m.b(j, obs[t + 1]) * beta[(t + 1) * n + j];
        xi[std::size_t(i) * n + j] = v;
        x_sum += v;
      }
    }
    for (std::size_t k = 0; k < xi.size(); ++k) acc.trans[k] += xi[k] / x_sum;
  }
  return objective;
}

}  // namespace

namespace {

// Cut every sequence into n_states equal runs and use the symbol counts of
// run i as the starting emissions of state i.
void segment_emissions(HmmModel& m, std::span<const std::vector<int>> sequences, double floor) {
  const auto n = static_cast<std::size_t>(m.n_states);
  const auto k = static_cast<std::size_t>(m.n_symbols);
  std::vector<double> counts(n * k, 0.0);
  for (const auto& s : sequences)
    for (std::size_t t = 0; t < s.size(); ++t)
      counts[t * n / s.size() * k + static_cast<std::size_t>(s[t])] += 1.0;
  for (std::size_t i = 0; i < n; ++i)
    floored_ml_row(std::span<const double>(counts).subspan(i * k, k), floor,
                   std::span(m.emissions).subspan(i * k, k));
}

}  // namespace

TrainResult baum_welch_train(std::span<const std::vector<int>> sequences, int n_states,
                             Topology topology, std::uint64_t seed, int n_symbols,
                             const TrainOptions& options) {
  if (sequences.empty()) throw InputError("training needs at least one sequence");
  for (const auto& s : sequences) {
    if (s.size() < static_cast<std::size_t>(n_states))
      throw InputError("training sequence of length " + std::to_string(s.size()) +
                       " is shorter than the " + std::to_string(n_states) + "-state model");
  }
  TrainResult result{initial_model(n_states, topology, seed, n_symbols), {}, 0, false};
  HmmModel& m = result.model;
  for (const auto& s : sequences) check_symbols(m, s);
  if (topology == Topology::LeftToRight) segment_emissions(m, sequences, options.emission_floor);

  const bool end_in_final = topology == Topology::LeftToRight;
  const auto n = static_cast<std::size_t>(n_states);

  for (int iter = 0;; ++iter) {
    Accumulator acc(m);
    double total = 0.0;
    for (const auto& s : sequences) {
      const double ll = accumulate(m, s, end_in_final, acc);
      if (ll == kNegInf) throw InputError("training sequence has zero probability under the model");
      total += ll;
    }
    result.log_likelihood_trace.push_back(total);

    if (iter > 0) {
      const double prev = result.log_likelihood_trace[iter - 1];
      const double gain = total - prev;
      const double rel = std::abs(prev) > 1e-300 ? gain / std::abs(prev) : gain;
      if (rel < options.tolerance) {
        result.converged = true;
        break;
      }
    }
    if (iter == options.max_iterations) break;

    // M-step.
    for (std::size_t i = 0; i < n; ++i) {
      const auto row = std::span(acc.trans).subspan(i * n, n);
      const double s = std::accumulate(row.begin(), row.end(), 0.0);
      if (s > 0.0)
        for (std::size_t j = 0; j < n; ++j) m.transitions[i * n + j] = row[j] / s;
    }
    if (topology == Topology::Ergodic) {
      const double s = std::accumulate(acc.initial.begin(), acc.initial.end(), 0.0);
      for (std::size_t i = 0; i < n; ++i) m.initial[i] = acc.initial[i] / s;
    }
    const auto ms = static_cast<std::size_t>(n_symbols);
    for (std::size_t i = 0; i < n; ++i) {
      floored_ml_row(std::span(acc.emit).subspan(i * ms, ms), options.emission_floor,
                     std::span(m.emissions).subspan(i * ms, ms));
    }
    result.iterations = iter + 1;
  }
  return result;
}

}  // namespace gspot
