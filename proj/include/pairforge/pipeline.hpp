#pragma once

#include <atomic>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pairforge/config.hpp"
#include "pairforge/dataset.hpp"
#include "pairforge/gateway.hpp"
#include "pairforge/memory_bank.hpp"
#include "pairforge/pair_matrix.hpp"
#include "pairforge/scoring.hpp"

namespace pairforge {

struct RunCounts {
  std::uint64_t processed = 0;
  std::uint64_t base_fallbacks = 0;        // seeds whose output is the base sample
  std::uint64_t referee_parse_failures = 0;
  std::uint64_t dropped_candidates = 0;
  std::uint64_t seed_fallbacks = 0;        // base generation failed, seed text used as anchor

  bool operator==(const RunCounts&) const = default;
};

/// Everything committed so far: the evolving distribution, the memory bank
/// and the next seed to commit.
struct PipelineState {
  PairMatrix matrix;
  MemoryBank bank;
  std::size_t cursor = 0;
  RunCounts counts;
};

/// Decisions made for a seed before any generation: the instruction
/// embedding, the memory pool and the pair draw. Plans are drawn against a
/// committed state and stored in checkpoints for seeds still in flight.
struct SeedPlan {
  std::size_t index = 0;
  std::vector<double> embedding;
  std::vector<AgentPair> pool;
  PairDraw draw;
  std::uint64_t matrix_version = 0;  // update_count of the matrix used for the draw

  bool operator==(const SeedPlan&) const = default;
};

/// Result of generating and scoring one seed, ready to commit.
struct SeedOutcome {
  std::size_t index = 0;
  OutputRecord record;
  std::vector<CandidateRecord> candidates;  // base candidates first, then the M sampled pairs
  std::vector<Reward> rewards;
  std::optional<MemoryEntry> admission;     // winner to offer the memory bank
  bool base_fallback = false;
  bool seed_fallback = false;
  std::uint64_t referee_parse_failures = 0;
  std::uint64_t dropped = 0;
  std::vector<std::string> events;
};

struct PipelineCheckpoint {
  std::string fingerprint;
  std::uint64_t master_seed = 0;
  PipelineState state;
  std::vector<SeedPlan> pending;  // plans of seeds in flight when the run stopped
  std::uint64_t output_bytes = 0;
  std::uint64_t log_bytes = 0;
  std::uint64_t trajectory_bytes = 0;
  bool complete = false;

  Json to_json() const;
  static PipelineCheckpoint from_json(const Json& j);
  static PipelineCheckpoint load(const std::filesystem::path& path);
  /// Atomic: write to a temp file, then rename.
  void save(const std::filesystem::path& path) const;
};

/// The rewrite and respond prompts. Slots: {instruction}, {response}.
struct GenerationTemplates {
  std::string rewrite;
  std::string respond;

  static GenerationTemplates builtin();
};

/// Binds a validated configuration to a gateway and runs the per-seed steps.
class Pipeline {
 public:
  Pipeline(PipelineConfig config, Gateway& gateway);

  const PipelineConfig& config() const { return config_; }
  PipelineState initial_state() const;

  /// Embed the instruction, query the memory pool and draw M pairs.
  SeedPlan plan(const InstructionSample& sample, std::size_t index, const PipelineState& state) const;
  /// Generate base and sampled candidates, score them and select the winner.
  /// Pure given the plan; thread-safe.
  SeedOutcome execute(const InstructionSample& sample, const SeedPlan& plan) const;
  /// Apply rewards, offer the winner to the memory bank, advance the cursor.
  void commit(const SeedOutcome& outcome, PipelineState& state) const;

  /// plan + execute + commit.
  SeedOutcome process_seed(const InstructionSample& sample, std::size_t index, PipelineState& state) const;

  std::uint64_t seed_for(std::size_t index) const;

 private:
  Prompt rewrite_prompt(const InstructionSample& sample) const;
  Prompt respond_prompt(std::string_view instruction, const InstructionSample& sample) const;
  CandidateRecord generate_candidate(const InstructionSample& sample, AgentPair pair, int index, bool is_base,
                                     std::uint64_t seed) const;

  PipelineConfig config_;
  Gateway& gateway_;
  RefereeTemplate referee_template_;
  GenerationTemplates generation_templates_;
};

enum class RunStatus { completed, aborted };

struct RunOptions {
  bool resume = false;
  /// Abort (resumably) after this many seeds were committed in this call.
  std::optional<std::size_t> stop_after;
  const std::atomic<bool>* cancel = nullptr;
  std::function<void(const std::string&)> progress;
};

struct RunResult {
  RunStatus status = RunStatus::completed;
  std::string abort_reason;
  RunCounts counts;
  std::size_t cursor = 0;
  std::size_t total = 0;
};

/// The whole loop over the seed dataset with checkpointing. Output goes to
/// `<output>.partial` and is renamed into place once every seed is done.
RunResult run_pipeline(const PipelineConfig& config, Gateway& gateway, const RunOptions& options = {});

/// Gateway wired for a configuration (mock + http backends, retry policy,
/// replay recording or replaying).
std::unique_ptr<Gateway> make_gateway(const PipelineConfig& config);

/// Rebuild output records from a candidate log by exhaustive argmax over
/// each seed's candidates; the seed dataset supplies the echoed fields.
std::vector<OutputRecord> reselect_from_log(const std::vector<CandidateRecord>& log,
                                            const std::vector<InstructionSample>& seeds);

/// Total multiply-accumulates: sum over models of macs * pairs * samples.
/// Throws PreconditionError on negative inputs.
double estimate_compute(const std::map<std::string, double>& macs_per_sample, double pairs_invoked, double samples);

}  // namespace pairforge
