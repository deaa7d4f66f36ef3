#pragma once

#include <cstddef>
#include <cstdint>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "pairforge/dataset.hpp"

namespace pairforge {

struct Reward {
  AgentPair pair;
  double pi = 0.0;
};

/// Sampling distribution over (instruction agent, response agent) pairs.
///
/// Base pairs are invoked for every seed outside of sampling, so they hold
/// no probability mass and are never rewarded. All other entries start
/// uniform and evolve by p += beta * pi followed by renormalization.
class PairMatrix {
 public:
  /// Throws ConfigError if no non-base pair remains or beta is negative.
  static PairMatrix init_uniform(std::vector<std::string> instruction_agents, std::vector<std::string> response_agents,
                                 std::vector<AgentPair> base_pairs, double beta);

  std::size_t rows() const { return instruction_agents_.size(); }
  std::size_t cols() const { return response_agents_.size(); }
  const std::vector<std::string>& instruction_agents() const { return instruction_agents_; }
  const std::vector<std::string>& response_agents() const { return response_agents_; }
  const std::vector<AgentPair>& base_pairs() const { return base_pairs_; }
  double beta() const { return beta_; }
  std::uint64_t update_count() const { return update_count_; }

  bool contains(AgentPair pair) const;
  bool is_base(AgentPair pair) const;
  double prob(AgentPair pair) const;
  /// Non-base pairs in row-major order.
  const std::vector<AgentPair>& non_base_pairs() const { return non_base_; }
  double total() const;

  /// One evolution step. Every reward must name a non-base pair and carry
  /// pi in [0, 1] (ContractError otherwise, matrix untouched). Always bumps
  /// update_count; with zero total reward the probabilities are unchanged.
  void apply_reward(std::span<const Reward> rewards);

  Json to_json() const;
  static PairMatrix from_json(const Json& j);

  /// Append one `update_count,pair,probability` row per non-base pair.
  void write_trajectory_rows(std::ostream& out) const;

  bool operator==(const PairMatrix&) const = default;

 private:
  std::size_t offset(AgentPair pair) const { return static_cast<std::size_t>(pair.instruction) * cols() + static_cast<std::size_t>(pair.response); }
  void index_pairs();

  std::vector<std::string> instruction_agents_;
  std::vector<std::string> response_agents_;
  std::vector<AgentPair> base_pairs_;
  std::vector<double> probs_;  // row-major, base entries are 0
  std::vector<AgentPair> non_base_;
  double beta_ = 0.05;
  std::uint64_t update_count_ = 0;
};

struct PairDraw {
  std::string seed_id;
  std::vector<AgentPair> sampled;  // pool draws first, then the rest
  std::size_t from_memory = 0;
  std::uint64_t rng_seed = 0;

  bool operator==(const PairDraw&) const = default;
};

/// Draw `m` distinct non-base pairs: first min(l, |pool|) from the memory
/// pool with probabilities renormalized over the pool, then the remainder
/// from all other non-base pairs renormalized over what is left. A subset
/// whose probabilities have all underflowed to 0 is drawn uniformly.
/// Deterministic in `rng_seed`.
PairDraw sample_pairs(const PairMatrix& matrix, std::size_t m, std::span<const AgentPair> memory_pool, std::size_t l,
                      std::uint64_t rng_seed, std::string seed_id = {});

}  // namespace pairforge
