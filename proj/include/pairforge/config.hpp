#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "pairforge/dataset.hpp"
#include "pairforge/gateway.hpp"

namespace pairforge {

enum class RewardMode { all, winner };
/// Which instruction the referee sees as the user question.
enum class RefereeQuestion { candidate, base, seed };
enum class ReplayMode { off, record, replay };

struct PipelinePaths {
  std::filesystem::path seed;
  std::filesystem::path out_dir = ".";
  // Unset artifact paths default to fixed names under out_dir.
  std::filesystem::path output;
  std::filesystem::path candidate_log;
  std::filesystem::path checkpoint;
  std::filesystem::path trajectory;
  std::filesystem::path replay_log;

  std::filesystem::path output_path() const;
  std::filesystem::path candidate_log_path() const;
  std::filesystem::path checkpoint_path() const;
  std::filesystem::path trajectory_path() const;
  std::filesystem::path replay_log_path() const;
};

struct TemplatePaths {
  std::filesystem::path referee_system;
  std::filesystem::path referee_user;
  std::filesystem::path rewrite;
  std::filesystem::path respond;
};

struct PipelineConfig {
  std::vector<AgentId> agents;
  std::vector<std::string> instruction_agents;
  std::vector<std::string> response_agents;
  std::vector<AgentPair> base_pairs;
  std::string referee;
  std::string scorer_small;
  std::string scorer_large;
  std::string embedder;

  std::size_t pairs_per_seed = 10;              // M
  std::optional<std::size_t> memory_draws;      // l; default min(n, M/2)
  std::size_t memory_query_size = 5;            // n
  double beta = 0.05;
  double tau = 0.5;
  std::size_t bank_capacity = 10000;            // C
  std::size_t workers = 1;                      // W
  std::uint64_t seed = 0;
  std::size_t embedding_dim = 64;
  RewardMode reward_mode = RewardMode::all;
  RefereeQuestion referee_question = RefereeQuestion::candidate;
  int referee_orderings = 2;

  TemplatePaths templates;
  PipelinePaths paths;
  RetryPolicy retry;
  std::size_t max_in_flight = 8;
  std::size_t checkpoint_every = 50;
  std::size_t trajectory_stride = 1;
  std::size_t progress_every = 100;
  ReplayMode replay = ReplayMode::off;

  std::size_t effective_memory_draws() const;
  const AgentId& agent(std::string_view name) const;
  /// Throws ConfigError naming the first offending field.
  void validate() const;
};

/// A documented override key.
struct OverrideKey {
  std::string key;          // dotted JSON path, e.g. "M" or "paths.output"
  std::string description;
};
const std::vector<OverrideKey>& override_keys();
/// PAIRFORGE_<KEY> with dots as underscores, upper-cased.
std::string override_env_name(std::string_view key);

/// Set `key` (a documented override key) in a raw config document. The
/// value is parsed as JSON when possible and kept as a string otherwise.
void apply_override(Json& doc, std::string_view key, std::string_view value);
/// Apply "key=value" strings in order.
void apply_overrides(Json& doc, const std::vector<std::string>& assignments);
/// Apply PAIRFORGE_* environment variables for every documented key.
void apply_env_overrides(Json& doc);

/// Read a config file. Relative paths inside it resolve against its directory.
Json load_config_document(const std::filesystem::path& path);
PipelineConfig config_from_json(const Json& doc);
Json config_to_json(const PipelineConfig& config);

/// Hash of every setting that changes results; stored in checkpoints.
std::string config_fingerprint(const PipelineConfig& config);

/// A small all-mock configuration (used by `pairforge run --demo` and tests).
Json demo_config_document(std::size_t instruction_agents = 2, std::size_t response_agents = 2);

}  // namespace pairforge
