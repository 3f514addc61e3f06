#include <catch_amalgamated.hpp>

#include <cmath>
#include <numeric>

#include "gspot/error.hpp"
#include "gspot/features.hpp"
#include "gspot/hmm.hpp"
#include "gspot/synth.hpp"
#include "hmm_oracle.hpp"

using namespace gspot;

namespace {

HmmModel one_state(int n_symbols, int symbol, double p) {
  HmmModel m;
  m.n_states = 1;
  m.n_symbols = n_symbols;
  m.initial = {1.0};
  m.transitions = {1.0};
  m.emissions.assign(n_symbols, (1.0 - p) / (n_symbols - 1));
  m.emissions[symbol] = p;
  return m;
}

std::vector<int> sample(const HmmModel& m, Rng& rng, int len) {
  auto draw = [&](std::span<const double> row) {
    double u = rng.uniform(), acc = 0;
    for (std::size_t k = 0; k < row.size(); ++k) {
      acc += row[k];
      if (u < acc) return static_cast<int>(k);
    }
    return static_cast<int>(row.size() - 1);
  };
  std::vector<int> out;
  int s = draw(m.initial);
  for (int t = 0; t < len; ++t) {
    out.push_back(draw(m.emission_row(s)));
    s = draw(std::span(m.transitions).subspan(std::size_t(s) * m.n_states, m.n_states));
  }
  return out;
}

// Symbols of one synthetic performance, right hand.
std::vector<int> performance_symbols(const GestureTemplate& tmpl, std::uint64_t seed) {
  const auto perf = render_isolated_performance(tmpl, seed);
  const auto seqs = extract_sequences(std::span<const TimedSkeleton>(perf.track), HandSide::Right, FeatureConfig{});
  std::vector<int> out;
  for (const auto& s : seqs)
    for (std::size_t i = 0; i < s.size(); ++i)
      if (s.t_ms[i] >= perf.annotation.start_ms && s.t_ms[i] <= perf.annotation.end_ms) out.push_back(s.symbols[i]);
  return out;
}

}  // namespace

TEST_CASE("forward likelihood of one-state models") {
  const HmmModel sure = one_state(4, 2, 1.0);
  CHECK(forward_log_likelihood(sure, std::vector<int>{2, 2, 2}) == Catch::Approx(0.0).margin(1e-15));
  const HmmModel half = one_state(3, 0, 0.5);
  CHECK(forward_log_likelihood(half, std::vector<int>{0, 0, 0}) == Catch::Approx(3 * std::log(0.5)).epsilon(1e-12));
  CHECK(forward_log_likelihood(sure, std::vector<int>{1}) == -std::numeric_limits<double>::infinity());
}

TEST_CASE("forward likelihood rejects bad input") {
  const HmmModel m = one_state(4, 0, 0.7);
  CHECK_THROWS_AS(forward_log_likelihood(m, std::vector<int>{}), InputError);
  CHECK_THROWS_AS(forward_log_likelihood(m, std::vector<int>{4}), RangeError);
  CHECK_THROWS_AS(forward_log_likelihood(m, std::vector<int>{-1}), RangeError);
}

TEST_CASE("forward likelihood equals the brute-force path sum") {
  Rng rng(101);
  for (int i = 0; i < 100; ++i) {
    const int n = 1 + static_cast<int>(rng.below(4));
    const int k = 2 + static_cast<int>(rng.below(7));
    const HmmModel m = testing::random_hmm(rng, n, k);
    std::vector<int> obs(1 + rng.below(6));
    for (int& o : obs) o = static_cast<int>(rng.below(k));
    const double want = testing::brute_force_log_likelihood(m, obs);
    const double got = forward_log_likelihood(m, obs);
    if (std::isinf(want)) {
      CHECK(std::isinf(got));
    } else {
      CHECK(std::abs(got - want) < 1e-9);
    }
  }
}

TEST_CASE("forward pass stays finite on a million frames") {
  const HmmModel m = one_state(kAlphabetSize, 5, 0.9);
  std::vector<int> obs(1'000'000, 5);
  const double ll = forward_log_likelihood(m, obs);
  CHECK(ll == Catch::Approx(1e6 * std::log(0.9)).epsilon(1e-9));
}

TEST_CASE("viterbi path") {
  HmmModel m = initial_model(3, Topology::LeftToRight, 1, 4);
  // state i emits symbol i
  for (int s = 0; s < 3; ++s)
    for (int k = 0; k < 4; ++k) m.b(s, k) = (k == s) ? 0.97 : 0.01;
  const std::vector<int> obs = {0, 0, 1, 1, 1, 2};
  CHECK(viterbi_path(m, obs) == std::vector<int>{0, 0, 1, 1, 1, 2});
  CHECK(viterbi_path(m, obs, true).back() == 2);
  // too short to reach the final state of a left-to-right model
  CHECK(viterbi_path(m, std::vector<int>{0, 1}, true).empty());
}

TEST_CASE("initial models are stochastic with left-to-right structure") {
  for (int n = 1; n <= 6; ++n) {
    const HmmModel m = initial_model(n, Topology::LeftToRight, 3);
    CHECK(is_stochastic(m));
    CHECK(m.initial[0] == 1.0);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j)
        if (j < i || j > i + 1) CHECK(m.a(i, j) == 0.0);
    CHECK(is_stochastic(initial_model(n, Topology::Ergodic, 3)));
  }
}

TEST_CASE("floored maximum-likelihood row") {
  std::vector<double> counts = {10, 0, 0, 5};
  std::vector<double> row(4);
  REQUIRE(floored_ml_row(counts, 0.01, row));
  CHECK(std::accumulate(row.begin(), row.end(), 0.0) == Catch::Approx(1.0).epsilon(1e-12));
  CHECK(row[1] == Catch::Approx(0.01));
  CHECK(row[2] == Catch::Approx(0.01));
  CHECK(row[0] / row[3] == Catch::Approx(2.0));
  for (double v : row) CHECK(v >= 0.01 - 1e-15);

  std::vector<double> zeros(4, 0.0), keep = {0.1, 0.2, 0.3, 0.4};
  CHECK_FALSE(floored_ml_row(zeros, 0.01, keep));
  CHECK(keep[3] == 0.4);
}

TEST_CASE("Baum-Welch never lowers the objective") {
  Rng rng(55);
  for (int run = 0; run < 20; ++run) {
    const int k = 2 + static_cast<int>(rng.below(7));
    const HmmModel gen = testing::random_hmm(rng, 3, k);
    std::vector<std::vector<int>> seqs;
    for (int s = 0; s < 5; ++s) seqs.push_back(sample(gen, rng, 8 + static_cast<int>(rng.below(20))));
    for (Topology topo : {Topology::LeftToRight, Topology::Ergodic}) {
      const auto r = baum_welch_train(seqs, 3, topo, 1000 + run, k);
      CHECK(is_stochastic(r.model, 1e-9));
      CHECK(r.iterations <= 200);
      for (std::size_t i = 1; i < r.log_likelihood_trace.size(); ++i)
        CHECK(r.log_likelihood_trace[i] - r.log_likelihood_trace[i - 1] >= -1e-8);
      if (topo == Topology::LeftToRight)
        for (int i = 0; i < 3; ++i)
          for (int j = 0; j < 3; ++j)
            if (j < i || j > i + 1) CHECK(r.model.a(i, j) == 0.0);
    }
  }
}

TEST_CASE("Baum-Welch is deterministic for a seed") {
  Rng rng(8);
  const HmmModel gen = testing::random_hmm(rng, 4, 6);
  std::vector<std::vector<int>> seqs;
  for (int s = 0; s < 6; ++s) seqs.push_back(sample(gen, rng, 20));
  for (Topology topo : {Topology::LeftToRight, Topology::Ergodic}) {
    const auto a = baum_welch_train(seqs, 4, topo, 99, 6);
    const auto b = baum_welch_train(seqs, 4, topo, 99, 6);
    CHECK(a.model == b.model);
    CHECK(a.log_likelihood_trace == b.log_likelihood_trace);
  }
}

TEST_CASE("Baum-Welch input checks") {
  std::vector<std::vector<int>> none;
  CHECK_THROWS_AS(baum_welch_train(none, 4, Topology::LeftToRight, 1, 8), InputError);
  std::vector<std::vector<int>> short_seq = {{1, 2, 3}};
  CHECK_THROWS_AS(baum_welch_train(short_seq, 4, Topology::LeftToRight, 1, 8), InputError);
  std::vector<std::vector<int>> bad = {{1, 2, 9, 3}};
  CHECK_THROWS_AS(baum_welch_train(bad, 4, Topology::LeftToRight, 1, 8), RangeError);
}

TEST_CASE("a repeated symbol concentrates the emissions") {
  std::vector<std::vector<int>> seqs = {std::vector<int>(40, 3)};
  SECTION("small alphabet") {
    const auto r = baum_welch_train(seqs, 4, Topology::LeftToRight, 5, 8);
    for (int s = 0; s < 4; ++s) CHECK(r.model.b(s, 3) >= 0.99);
  }
  SECTION("full alphabet reaches the floored maximum") {
    const double floor = TrainOptions{}.emission_floor;
    const auto r = baum_welch_train(seqs, 4, Topology::LeftToRight, 5);
    for (int s = 0; s < 4; ++s) CHECK(r.model.b(s, 3) == Catch::Approx(1.0 - (kAlphabetSize - 1) * floor).epsilon(1e-9));
  }
}

TEST_CASE("trained swipe model beats a uniform model on held-out swipes") {
  const auto& tmpl = find_template("Swipe", "straight");
  std::vector<std::vector<int>> train, held;
  for (std::uint64_t i = 0; i < 88; ++i) (i % 11 == 0 ? held : train).push_back(performance_symbols(tmpl, 500 + i));
  REQUIRE(train.size() == 80);
  const auto r = baum_welch_train(train, 4, Topology::LeftToRight, 1);
  HmmModel uniform = r.model;
  std::fill(uniform.emissions.begin(), uniform.emissions.end(), 1.0 / kAlphabetSize);
  for (const auto& h : held) CHECK(forward_log_likelihood(r.model, h) > forward_log_likelihood(uniform, h));
}
