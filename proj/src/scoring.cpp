#include "pairforge/scoring.hpp"

#include <algorithm>
#include <cctype>

#include "pairforge/error.hpp"
#include "pairforge/hashing.hpp"
#include "pairforge/kernels.hpp"

namespace pairforge {

double ifd_from_logprobs(const TokenLogprobs& conditioned, const TokenLogprobs& unconditioned) {
  if (conditioned.tokens.empty() || unconditioned.tokens.empty()) {
    throw PreconditionError("IFD needs at least one response token");
  }
  if (conditioned.tokens.size() != unconditioned.tokens.size()) {
    throw IntegrityError("conditioned and unconditioned scoring returned " + std::to_string(conditioned.tokens.size()) +
                         " and " + std::to_string(unconditioned.tokens.size()) + " tokens");
  }
  if (conditioned.tokens != unconditioned.tokens) {
    throw IntegrityError("conditioned and unconditioned scoring tokenized the response differently");
  }
  return kernels::ifd(conditioned.logprobs, unconditioned.logprobs);
}

double compute_ifd(Gateway& gateway, const AgentId& scorer, std::string_view instruction, std::string_view response) {
  if (trim(response).empty()) throw PreconditionError("cannot compute IFD of an empty response");
  auto conditioned = gateway.score_logprobs(scorer, instruction, response);
  auto unconditioned = gateway.score_logprobs(scorer, {}, response);
  return ifd_from_logprobs(conditioned, unconditioned);
}

DualModelScoreBatch compute_dual_scores(std::span<const IfdPair> candidates, std::string seed_id) {
  if (candidates.empty()) throw PreconditionError("dual-model scoring needs a non-empty batch");
  DualModelScoreBatch batch;
  batch.seed_id = std::move(seed_id);
  batch.diffs.reserve(candidates.size());
  for (const auto& c : candidates) {
    if (!(c.small > 0.0) || !(c.large > 0.0)) throw PreconditionError("IFD values must be positive");
    batch.diffs.push_back(c.small - c.large);
  }
  batch.max_diff = *std::max_element(batch.diffs.begin(), batch.diffs.end());
  batch.pi_dual.assign(candidates.size(), 0.0);
  if (batch.max_diff > 0.0) {
    for (std::size_t i = 0; i < batch.diffs.size(); ++i) {
      // The argmax divides by itself, so it is exactly 1.
      batch.pi_dual[i] = batch.diffs[i] > 0.0 ? batch.diffs[i] / batch.max_diff : 0.0;
    }
  }
  return batch;
}

std::string_view to_string(VerdictLabel label) {
  switch (label) {
    case VerdictLabel::a_better: return "A";
    case VerdictLabel::b_better: return "B";
    case VerdictLabel::tie: return "C";
  }
  return "?";
}

std::string_view to_string(Preference pref) {
  switch (pref) {
    case Preference::base_better: return "base";
    case Preference::candidate_better: return "candidate";
    case Preference::tie: return "tie";
  }
  return "?";
}

std::optional<VerdictLabel> parse_verdict(std::string_view raw) {
  std::optional<VerdictLabel> last;
  for (std::size_t i = 0; i + 5 <= raw.size(); ++i) {
    if (raw[i] != '[' || raw[i + 1] != '[' || raw[i + 3] != ']' || raw[i + 4] != ']') continue;
    switch (std::toupper(static_cast<unsigned char>(raw[i + 2]))) {
      case 'A': last = VerdictLabel::a_better; break;
      case 'B': last = VerdictLabel::b_better; break;
      case 'C': last = VerdictLabel::tie; break;
      default: break;
    }
  }
  return last;
}

Preference to_preference(VerdictLabel label, bool swapped) {
  if (label == VerdictLabel::tie) return Preference::tie;
  bool a = label == VerdictLabel::a_better;
  // Unswapped: A is the base. Swapped: A is the candidate.
  return a != swapped ? Preference::base_better : Preference::candidate_better;
}

double preference_score(Preference pref) {
  switch (pref) {
    case Preference::base_better: return 0.0;
    case Preference::candidate_better: return 1.0;
    case Preference::tie: return 0.5;
  }
  return 0.5;
}

Preference combine_orderings(Preference first, Preference second) { return first == second ? first : Preference::tie; }

// Default pairwise-judge prompt, kept byte-identical to
// templates/v1/referee_system.txt and templates/v1/referee_user.txt.
RefereeTemplate RefereeTemplate::builtin() {
  return {
      "Please act as an impartial judge and evaluate the quality of the responses provided by three AI assistants to "
      "the user question displayed below. You should choose the assistant that follows the user's instructions and "
      "answers the user's question best. Your evaluation should consider factors such as the helpfulness, relevance, "
      "accuracy, depth, creativity, and level of detail of their responses. Begin your evaluation by comparing the two "
      "responses and provide a short explanation. Avoid any position biases and ensure that the order in which the "
      "responses were presented does not influence your decision. Do not allow the length of the responses to "
      "influence your evaluation. Do not favor certain names of the assistants. Be as objective as possible. After "
      "providing your explanation, output your final verdict by strictly following this format: \"[[A]]\" if "
      "assistant A is the bset, \"[[B]]\" if assistant B is the bset, and \"[[C]]\" for a tie.",
      "[User Question]\n"
      "<question>\n"
      "[The Start of Assistant A's Answer]\n"
      "<answer_a>\n"
      "[The End of Assistant A's Answer]\n"
      "[The Start of Assistant B's Answer]\n"
      "<answer_b>\n"
      "[The End of Assistant B's Answer]\n"
      "[Final Verdict]:",
  };
}

RefereeTemplate RefereeTemplate::load(const std::filesystem::path& system_path, const std::filesystem::path& user_path) {
  auto strip_final_newline = [](std::string s) {
    if (!s.empty() && s.back() == '\n') s.pop_back();
    return s;
  };
  RefereeTemplate t{strip_final_newline(read_file(system_path)), strip_final_newline(read_file(user_path))};
  for (auto slot : {"<question>", "<answer_a>", "<answer_b>"}) {
    if (t.user.find(slot) == std::string::npos) {
      throw ConfigError("referee template '" + user_path.string() + "' lacks the " + slot + " slot");
    }
  }
  return t;
}

std::string fill_slots(std::string_view tmpl, std::span<const std::pair<std::string_view, std::string_view>> slots) {
  std::string out;
  out.reserve(tmpl.size());
  std::size_t i = 0;
  while (i < tmpl.size()) {
    bool matched = false;
    for (const auto& [key, value] : slots) {
      if (tmpl.compare(i, key.size(), key) == 0) {
        out += value;
        i += key.size();
        matched = true;
        break;
      }
    }
    if (!matched) out += tmpl[i++];
  }
  return out;
}

Prompt RefereeTemplate::render(std::string_view question, std::string_view answer_a, std::string_view answer_b) const {
  const std::pair<std::string_view, std::string_view> slots[] = {
      {"<question>", question}, {"<answer_a>", answer_a}, {"<answer_b>", answer_b}};
  return {system, fill_slots(user, slots)};
}

Verdict referee_compare(Gateway& gateway, const AgentId& referee, const RefereeTemplate& tmpl, std::string_view question,
                        std::string_view base_answer, std::string_view candidate_answer, std::uint64_t seed,
                        int orderings) {
  if (trim(question).empty() || trim(base_answer).empty() || trim(candidate_answer).empty()) {
    throw PreconditionError("referee comparison needs non-empty question and answers");
  }
  if (orderings != 1 && orderings != 2) throw ConfigError("referee orderings must be 1 or 2");

  Verdict verdict;
  for (int o = 0; o < orderings; ++o) {
    OrderingVerdict ov;
    ov.swapped = o == 1;
    Prompt prompt = ov.swapped ? tmpl.render(question, candidate_answer, base_answer)
                               : tmpl.render(question, base_answer, candidate_answer);
    std::uint64_t call_seed = derive_seed(seed, static_cast<std::uint64_t>(o));
    ov.raw = gateway.generate(referee, prompt, call_seed);
    auto parsed = parse_verdict(ov.raw);
    if (!parsed) {
      ov.raw = gateway.generate(referee, prompt, derive_seed(call_seed, 1));
      parsed = parse_verdict(ov.raw);
    }
    if (parsed) {
      ov.parsed = *parsed;
    } else {
      ov.parsed = VerdictLabel::tie;
      ov.parse_failed = true;
      verdict.parse_failed = true;
    }
    verdict.orderings.push_back(std::move(ov));
  }
  verdict.orderings_used = orderings;
  verdict.outcome = to_preference(verdict.orderings[0].parsed, false);
  if (orderings == 2) {
    verdict.outcome = combine_orderings(verdict.outcome, to_preference(verdict.orderings[1].parsed, true));
  }
  verdict.pi_llm = preference_score(verdict.outcome);
  return verdict;
}

Selection compose_and_select(std::span<CandidateRecord> batch, const CandidateRecord& base) {
  Selection sel;
  sel.empty_batch = batch.empty();
  double best = 0.0;
  for (std::size_t i = 0; i < batch.size(); ++i) {
    auto& c = batch[i];
    if (c.status != CandidateStatus::ok) {
      c.pi_composite = 0.0;
      continue;
    }
    c.pi_composite = c.pi_llm * c.pi_dual;
    if (c.pi_composite > best) {
      best = c.pi_composite;
      sel.winner = i;
    }
  }
  const CandidateRecord& chosen = sel.winner ? batch[*sel.winner] : base;
  sel.record.seed_id = base.seed_id;
  sel.record.instruction = chosen.instruction;
  sel.record.response = chosen.response;
  sel.record.score = sel.winner ? best : 0.0;
  if (sel.winner) sel.record.provenance = chosen.pair;
  return sel;
}

}  // namespace pairforge
