#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "pairforge/dataset.hpp"
#include "pairforge/gateway.hpp"

namespace pairforge {

// ------------------------------------------------------------ difficulty

/// IFD from two scoring calls over the same response. Throws IntegrityError
/// if the token sequences differ and PreconditionError if they are empty.
double ifd_from_logprobs(const TokenLogprobs& conditioned, const TokenLogprobs& unconditioned);

/// Score `response` with and without `instruction` as context and return
/// its instruction-following difficulty under `scorer`.
double compute_ifd(Gateway& gateway, const AgentId& scorer, std::string_view instruction, std::string_view response);

struct IfdPair {
  double small = 0.0;
  double large = 0.0;
};

/// Batch-normalized difficulty gap between the target (small) and
/// reference (large) scorer.
struct DualModelScoreBatch {
  std::string seed_id;
  std::vector<double> diffs;    // small - large, unclamped
  double max_diff = 0.0;
  std::vector<double> pi_dual;  // max(0, diff) / max_diff, or all 0 when max_diff <= 0
};

DualModelScoreBatch compute_dual_scores(std::span<const IfdPair> candidates, std::string seed_id = {});

// ------------------------------------------------------------ referee

/// Marker found in a referee completion.
enum class VerdictLabel { a_better, b_better, tie };
/// Verdict after undoing the presentation order.
enum class Preference { base_better, candidate_better, tie };

std::string_view to_string(VerdictLabel label);
std::string_view to_string(Preference pref);

/// Last `[[A]]`, `[[B]]` or `[[C]]` marker in `raw` (letter case-insensitive).
std::optional<VerdictLabel> parse_verdict(std::string_view raw);

/// Map a verdict to a preference. Unswapped: base is A, candidate is B.
Preference to_preference(VerdictLabel label, bool swapped);
/// 0 for base_better, 1 for candidate_better, 0.5 for tie.
double preference_score(Preference pref);
/// Agreeing orderings keep their preference; disagreement is a tie.
Preference combine_orderings(Preference first, Preference second);

/// Pairwise-judge prompt with `<question>`, `<answer_a>` and `<answer_b>`
/// slots in the user template.
struct RefereeTemplate {
  std::string system;
  std::string user;

  static RefereeTemplate builtin();
  static RefereeTemplate load(const std::filesystem::path& system_path, const std::filesystem::path& user_path);
  Prompt render(std::string_view question, std::string_view answer_a, std::string_view answer_b) const;
};

/// Fill `{slot}`-style or `<slot>`-style placeholders in one pass; inserted
/// values are never rescanned.
std::string fill_slots(std::string_view tmpl, std::span<const std::pair<std::string_view, std::string_view>> slots);

struct OrderingVerdict {
  std::string raw;
  VerdictLabel parsed = VerdictLabel::tie;
  bool swapped = false;
  bool parse_failed = false;  // no marker after one retry; parsed forced to tie
};

struct Verdict {
  std::vector<OrderingVerdict> orderings;
  Preference outcome = Preference::tie;
  double pi_llm = 0.5;
  int orderings_used = 0;
  bool parse_failed = false;
};

/// Ask the referee to compare base and candidate, once per ordering.
Verdict referee_compare(Gateway& gateway, const AgentId& referee, const RefereeTemplate& tmpl, std::string_view question,
                        std::string_view base_answer, std::string_view candidate_answer, std::uint64_t seed,
                        int orderings = 2);

// ------------------------------------------------------------ selection

struct Selection {
  OutputRecord record;
  std::optional<std::size_t> winner;  // index into the batch; nullopt = base kept
  bool empty_batch = false;
};

/// Set pi_composite = pi_llm * pi_dual on every candidate and pick the
/// highest one (lowest index on ties). When nothing scores above zero the
/// base sample is returned with provenance "base". Dropped candidates are
/// ignored.
Selection compose_and_select(std::span<CandidateRecord> batch, const CandidateRecord& base);

}  // namespace pairforge
