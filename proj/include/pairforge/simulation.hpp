#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pairforge/dataset.hpp"

namespace pairforge {

/// Abstract reward process of one agent pair: the referee prefers its
/// candidate with probability win_prob, and a winning candidate earns
/// dual_mean. Ties are not modelled.
struct SyntheticPairProfile {
  AgentPair pair;
  double win_prob = 0.0;
  double dual_mean = 0.0;

  double expected_reward() const { return win_prob * dual_mean; }
};

/// Profiles laid out as a 1 x P grid: pair (0, i) for the i-th entry.
std::vector<SyntheticPairProfile> make_profiles(std::span<const std::pair<double, double>> win_and_dual);

/// Parse "0.6:0.8,0.1:0.3x9" (win:dual, optional xN repeat) into profiles.
std::vector<SyntheticPairProfile> parse_profiles(std::string_view spec);

struct SimulationOptions {
  std::size_t iterations = 70000;
  double beta = 0.05;
  std::uint64_t rng_seed = 0;
  std::size_t stride = 1;              // record every stride-th iteration
  std::size_t pairs_per_iteration = 1;  // M
};

struct Trajectory {
  std::vector<AgentPair> pairs;
  std::vector<std::uint64_t> iterations;    // recorded iteration numbers (1-based)
  std::vector<std::vector<double>> points;  // points[t][i] = probability of pairs[i]
  std::vector<double> final_probs;
  /// First iteration from which the highest-expected-reward pair holds the
  /// strictly largest probability until the end; nullopt if it never does.
  std::optional<std::uint64_t> crossover;
};

/// Run the evolution loop against synthetic rewards, starting uniform.
Trajectory simulate_evolution(std::span<const SyntheticPairProfile> profiles, const SimulationOptions& options);

/// `iteration,pair,probability` rows.
void write_trajectory_csv(std::ostream& out, const Trajectory& trajectory);

struct SweepCell {
  double beta = 0.05;
  std::string profile_set;
  std::vector<SyntheticPairProfile> profiles;
};

struct SweepRow {
  double beta = 0.0;
  std::string profile_set;
  std::uint64_t seed = 0;
  std::vector<double> final_probs;
  std::size_t dominant = 0;  // index of the highest expected reward profile
  AgentPair dominant_pair;
  std::optional<std::uint64_t> crossover;

  bool operator==(const SweepRow&) const = default;
};

/// One simulation per (cell, seed), rows in cell-major order.
std::vector<SweepRow> sweep_serial(std::span<const SweepCell> cells, std::size_t iterations,
                                   std::span<const std::uint64_t> seeds);
std::vector<SweepRow> sweep_parallel(std::span<const SweepCell> cells, std::size_t iterations,
                                     std::span<const std::uint64_t> seeds);

/// beta,profile_set,seed,dominant_pair,dominant_final,weakest_final,crossover_iteration,final_probs
void write_sweep_csv(std::ostream& out, std::span<const SweepRow> rows);
/// Per (beta, profile_set): seeds, mean dominant_final, mean weakest_final, mean crossover.
void write_sweep_means_csv(std::ostream& out, std::span<const SweepRow> rows);

}  // namespace pairforge
