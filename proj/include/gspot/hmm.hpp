#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "gspot/features.hpp"

namespace gspot {

enum class Topology : std::uint8_t { LeftToRight = 0, Ergodic = 1 };

// Discrete-emission HMM. Matrices are dense and row-major.
struct HmmModel {
  int n_states = 0;
  int n_symbols = kAlphabetSize;
  Topology topology = Topology::LeftToRight;
  std::vector<double> initial;      // n_states
  std::vector<double> transitions;  // n_states x n_states
  std::vector<double> emissions;    // n_states x n_symbols

  double a(int i, int j) const { return transitions[std::size_t(i) * n_states + j]; }
  double& a(int i, int j) { return transitions[std::size_t(i) * n_states + j]; }
  double b(int i, int k) const { return emissions[std::size_t(i) * n_symbols + k]; }
  double& b(int i, int k) { return emissions[std::size_t(i) * n_symbols + k]; }
  std::span<const double> emission_row(int i) const {
    return std::span(emissions).subspan(std::size_t(i) * n_symbols, n_symbols);
  }

  friend bool operator==(const HmmModel&, const HmmModel&) = default;
};

// Rows of A and B and the initial vector each sum to 1 within `tol`, entries
// are nonnegative, and left-to-right models respect their band structure.
bool is_stochastic(const HmmModel& model, double tol = 1e-9);

// log P(obs | model) by the scaled forward recursion. Returns -inf when the
// sequence is impossible. Throws RangeError for symbols outside the alphabet
// and InputError for an empty sequence.
double forward_log_likelihood(const HmmModel& model, std::span<const int> obs);

// Most likely state path. With end_in_final the path must end in the last
// state. Returns an empty path when no path has nonzero probability.
std::vector<int> viterbi_path(const HmmModel& model, std::span<const int> obs,
                              bool end_in_final = false);

struct TrainOptions {
  double emission_floor = 1e-5;
  int max_iterations = 200;
  double tolerance = 1e-6;  // relative improvement that stops training
};

struct TrainResult {
  HmmModel model;
  // Training objective of each successive model; the last entry belongs to
  // the returned model. For left-to-right models the objective is
  // log P(obs, final state reached at the last frame).
  std::vector<double> log_likelihood_trace;
  int iterations = 0;
  bool converged = false;
};

// Deterministic starting point: left-to-right rows 0.6 stay / 0.4 advance
// (final state absorbing), ergodic rows uniform with jitter; emissions
// uniform with +-1% seeded jitter.
HmmModel initial_model(int n_states, Topology topology, std::uint64_t seed,
                       int n_symbols = kAlphabetSize);

// Multi-sequence Baum-Welch. Left-to-right models start from emissions
// counted over an equal-length segmentation of the sequences and are trained
// with the sequence end tied to the final state. The emission update is the floored
// maximum-likelihood row (every entry >= floor, summing to one), so each
// iteration remains a generalized EM step and the objective never drops.
TrainResult baum_welch_train(std::span<const std::vector<int>> sequences, int n_states,
                             Topology topology, std::uint64_t seed, int n_symbols = kAlphabetSize,
                             const TrainOptions& options = {});

// Maximizes sum_k counts[k] log p[k] subject to p[k] >= floor, sum p = 1.
// Returns false (leaving `row` untouched) if all counts are zero.
bool floored_ml_row(std::span<const double> counts, double floor, std::span<double> row);

}  // namespace gspot
