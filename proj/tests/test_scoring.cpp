#include <cmath>
#include <deque>
#include <mutex>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pairforge/error.hpp"
#include "pairforge/scoring.hpp"
#include "test_support.hpp"

using namespace pairforge;

namespace {

AgentId agent(std::string name, Role role) {
  AgentId a;
  a.name = std::move(name);
  a.role = role;
  a.model = "m-" + a.name;
  return a;
}

TokenLogprobs lp(std::vector<std::string> t, std::vector<double> v) { return {std::move(t), std::move(v)}; }

// Returns canned referee completions in order.
class ScriptedBackend final : public Backend {
 public:
  explicit ScriptedBackend(std::vector<std::string> replies) : replies_(replies.begin(), replies.end()) {}
  std::string generate(const AgentId&, const Prompt& prompt, std::uint64_t) override {
    std::lock_guard lock(mu_);
    prompts.push_back(prompt);
    auto r = replies_.front();
    replies_.pop_front();
    return r;
  }
  TokenLogprobs score(const AgentId&, std::string_view, std::string_view) override { return {}; }
  std::vector<double> embed(const AgentId&, std::string_view) override { return {}; }
  std::vector<Prompt> prompts;

 private:
  std::mutex mu_;
  std::deque<std::string> replies_;
};

}  // namespace

TEST_CASE("IFD: identical logprobs give 1") {
  auto a = lp({"x", "y"}, {-1.0, -2.0});
  CHECK(ifd_from_logprobs(a, a) == doctest::Approx(1.0));
}

TEST_CASE("IFD: hand computed value") {
  // mean(uncond) = -2, mean(cond) = -1  ->  exp(-1)
  auto c = lp({"a", "b"}, {-0.5, -1.5});
  auto u = lp({"a", "b"}, {-1.0, -3.0});
  CHECK(ifd_from_logprobs(c, u) == doctest::Approx(std::exp(-1.0)).epsilon(1e-15));
}

TEST_CASE("IFD: token mismatch and empty input") {
  CHECK_THROWS_AS(ifd_from_logprobs(lp({"a"}, {-1}), lp({"a", "b"}, {-1, -1})), IntegrityError);
  CHECK_THROWS_AS(ifd_from_logprobs(lp({"a"}, {-1}), lp({"b"}, {-1})), IntegrityError);
  CHECK_THROWS_AS(ifd_from_logprobs(lp({}, {}), lp({}, {})), PreconditionError);
}

TEST_CASE("IFD: random sequences agree with the oracle") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> d(-8.0, 0.0);
  for (int trial = 0; trial < 200; ++trial) {
    std::size_t n = 1 + rng() % 50;
    TokenLogprobs c, u;
    for (std::size_t i = 0; i < n; ++i) {
      c.tokens.push_back("t" + std::to_string(i));
      c.logprobs.push_back(d(rng));
      u.logprobs.push_back(d(rng));
    }
    u.tokens = c.tokens;
    double want = oracle::ifd(c.logprobs, u.logprobs);
    CHECK(std::abs(ifd_from_logprobs(c, u) - want) <= 1e-12 * std::abs(want));
  }
}

TEST_CASE("compute_ifd through the mock gateway") {
  auto gw = Gateway::mock_only();
  auto s = agent("s", Role::scorer_small);
  s.mock.logprob_mode = LogprobMode::uniform;
  CHECK(compute_ifd(gw, s, "instr", "a b c") == doctest::Approx(1.0));
  auto h = agent("h", Role::scorer_large);
  h.mock.conditioned_shift = 0.5;
  double v = compute_ifd(gw, h, "instr", "alpha beta gamma");
  std::vector<double> c, u;
  for (auto t : {"alpha", "beta", "gamma"}) {
    c.push_back(MockBackend::token_logprob(h, t, true));
    u.push_back(MockBackend::token_logprob(h, t, false));
  }
  CHECK(v == doctest::Approx(oracle::ifd(c, u)).epsilon(1e-12));
  CHECK_THROWS_AS(compute_ifd(gw, s, "instr", " "), PreconditionError);
}

TEST_CASE("dual scores: normalization") {
  IfdPair a[] = {{0.9, 0.5}, {0.6, 0.4}, {0.3, 0.7}};
  auto b = compute_dual_scores(a, "s");
  CHECK(b.seed_id == "s");
  CHECK(b.max_diff == doctest::Approx(0.4));
  CHECK(b.pi_dual[0] == 1.0);
  CHECK(b.pi_dual[1] == doctest::Approx(0.5));
  CHECK(b.pi_dual[2] == 0.0);
}

TEST_CASE("dual scores: no positive diff gives all zeros") {
  IfdPair a[] = {{0.5, 0.5}, {0.2, 0.7}};
  auto b = compute_dual_scores(a);
  CHECK(b.pi_dual == std::vector<double>{0.0, 0.0});
  IfdPair one[] = {{0.8, 0.3}};
  CHECK(compute_dual_scores(one).pi_dual == std::vector<double>{1.0});
  CHECK_THROWS_AS(compute_dual_scores({}), PreconditionError);
  IfdPair bad[] = {{0.0, 0.3}};
  CHECK_THROWS_AS(compute_dual_scores(bad), PreconditionError);
}

TEST_CASE("verdict parsing") {
  CHECK(parse_verdict("blah [[A]]") == VerdictLabel::a_better);
  CHECK(parse_verdict("[[b]] in the end") == VerdictLabel::b_better);
  CHECK(parse_verdict("first [[A]] then [[C]]") == VerdictLabel::tie);
  CHECK_FALSE(parse_verdict("no marker [A] [[D]] [[ A ]]").has_value());
  CHECK_FALSE(parse_verdict("").has_value());
}

TEST_CASE("preference truth table matches the oracle") {
  for (auto first : {VerdictLabel::a_better, VerdictLabel::b_better, VerdictLabel::tie}) {
    for (auto second : {VerdictLabel::a_better, VerdictLabel::b_better, VerdictLabel::tie}) {
      auto got = combine_orderings(to_preference(first, false), to_preference(second, true));
      CHECK(preference_score(got) == oracle::pi_llm(to_string(first)[0], to_string(second)[0]));
    }
  }
}

TEST_CASE("fill_slots does not rescan inserted values") {
  const std::pair<std::string_view, std::string_view> slots[] = {{"<question>", "<answer_a>"}, {"<answer_a>", "X"}};
  CHECK(fill_slots("<question>|<answer_a>", slots) == "<answer_a>|X");
}

TEST_CASE("builtin referee template and the shipped files agree") {
  const std::filesystem::path dir = std::filesystem::path(PAIRFORGE_SOURCE_DIR) / "templates" / "v1";
  auto t = RefereeTemplate::builtin();
  CHECK(testing_support::slurp(dir / "referee_system.txt") == t.system + "\n");
  CHECK(testing_support::slurp(dir / "referee_user.txt") == t.user + "\n");
  auto loaded = RefereeTemplate::load(dir / "referee_system.txt", dir / "referee_user.txt");
  CHECK(loaded.system == t.system);
  CHECK(loaded.user == t.user);
  auto p = t.render("Q?", "aa", "bb");
  CHECK(p.user.find("[User Question]\nQ?\n[The Start of Assistant A's Answer]\naa\n") == 0);
}

TEST_CASE("referee template without slots is rejected") {
  testing_support::TempDir dir;
  testing_support::write_text(dir / "s.txt", "judge");
  testing_support::write_text(dir / "u.txt", "<question> <answer_a>");
  CHECK_THROWS_AS(RefereeTemplate::load(dir / "s.txt", dir / "u.txt"), ConfigError);
}

TEST_CASE("referee_compare: both orderings presented with answers swapped") {
  auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{"[[B]]", "[[A]]"});
  Gateway gw(backend, nullptr);
  auto v = referee_compare(gw, agent("r", Role::referee), RefereeTemplate::builtin(), "Q", "BASE", "CAND", 1);
  REQUIRE(backend->prompts.size() == 2);
  CHECK(backend->prompts[0].user.find("A's Answer]\nBASE\n") != std::string::npos);
  CHECK(backend->prompts[1].user.find("A's Answer]\nCAND\n") != std::string::npos);
  CHECK(v.outcome == Preference::candidate_better);
  CHECK(v.pi_llm == 1.0);
  CHECK(v.orderings_used == 2);
  CHECK_FALSE(v.parse_failed);
}

TEST_CASE("referee_compare: disagreement is a tie") {
  auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{"[[B]]", "[[B]]"});
  Gateway gw(backend, nullptr);
  auto v = referee_compare(gw, agent("r", Role::referee), RefereeTemplate::builtin(), "Q", "x", "y", 1);
  CHECK(v.outcome == Preference::tie);
  CHECK(v.pi_llm == 0.5);
}

TEST_CASE("referee_compare: unparseable verdict retried once then counted as a tie") {
  auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{"hmm", "[[A]]", "no", "still no"});
  Gateway gw(backend, nullptr);
  auto v = referee_compare(gw, agent("r", Role::referee), RefereeTemplate::builtin(), "Q", "x", "y", 1);
  CHECK(backend->prompts.size() == 4);
  CHECK_FALSE(v.orderings[0].parse_failed);
  CHECK(v.orderings[1].parse_failed);
  CHECK(v.parse_failed);
  // ordering 1 prefers the base, ordering 2 is a forced tie -> disagreement
  CHECK(v.outcome == Preference::tie);
}

TEST_CASE("referee_compare: single ordering") {
  auto backend = std::make_shared<ScriptedBackend>(std::vector<std::string>{"[[A]]"});
  Gateway gw(backend, nullptr);
  auto v = referee_compare(gw, agent("r", Role::referee), RefereeTemplate::builtin(), "Q", "x", "y", 1, 1);
  CHECK(v.pi_llm == 0.0);
  CHECK(v.orderings_used == 1);
}

TEST_CASE("compose_and_select: argmax with lowest-index ties") {
  std::vector<CandidateRecord> batch(3);
  for (int i = 0; i < 3; ++i) {
    batch[i].seed_id = "s";
    batch[i].pair = {0, i};
    batch[i].instruction = "i" + std::to_string(i);
    batch[i].response = "r" + std::to_string(i);
  }
  batch[0].pi_llm = 0.5, batch[0].pi_dual = 0.5;
  batch[1].pi_llm = 1.0, batch[1].pi_dual = 0.5;
  batch[2].pi_llm = 0.5, batch[2].pi_dual = 1.0;
  CandidateRecord base;
  base.seed_id = "s";
  base.is_base = true;
  base.instruction = "bi";
  base.response = "br";
  auto sel = compose_and_select(batch, base);
  CHECK(batch[0].pi_composite == 0.25);
  REQUIRE(sel.winner.has_value());
  CHECK(*sel.winner == 1);
  CHECK(sel.record.score == 0.5);
  CHECK(sel.record.provenance == AgentPair{0, 1});
  CHECK(sel.record.instruction == "i1");
}

TEST_CASE("compose_and_select: all zero falls back to the base") {
  std::vector<CandidateRecord> batch(2);
  batch[0].pi_llm = 1.0;  // pi_dual 0
  batch[1].pi_dual = 1.0;  // pi_llm 0
  CandidateRecord base;
  base.seed_id = "s";
  base.instruction = "bi";
  base.response = "br";
  auto sel = compose_and_select(batch, base);
  CHECK_FALSE(sel.winner.has_value());
  CHECK(sel.record.score == 0.0);
  CHECK(sel.record.provenance_string() == "base");
  CHECK(sel.record.response == "br");
  auto empty = compose_and_select({}, base);
  CHECK(empty.empty_batch);
}

TEST_CASE("compose_and_select: dropped candidates never win") {
  std::vector<CandidateRecord> batch(2);
  batch[0].pi_llm = 1.0, batch[0].pi_dual = 1.0, batch[0].status = CandidateStatus::dropped;
  batch[1].pi_llm = 0.5, batch[1].pi_dual = 0.2;
  CandidateRecord base;
  auto sel = compose_and_select(batch, base);
  CHECK(*sel.winner == 1);
  CHECK(batch[0].pi_composite == 0.0);
}
