#include <atomic>

#include "doctest.h"
#include "pairforge/error.hpp"
#include "pairforge/pipeline.hpp"
#include "test_support.hpp"

using namespace pairforge;
using testing_support::slurp;
using testing_support::TempDir;

namespace {

PipelineConfig demo_config(const TempDir& dir, int seeds, const std::string& out = "out") {
  testing_support::write_text(dir / "seed.jsonl", testing_support::seed_lines(seeds));
  Json doc = demo_config_document(3, 3);
  doc["M"] = 4;
  doc["tau"] = 0.2;
  doc["checkpoint_every"] = 3;
  doc["paths"] = {{"seed", (dir / "seed.jsonl").string()}, {"out_dir", (dir / out).string()}};
  return config_from_json(doc);
}

struct Artifacts {
  std::string output, log, trajectory;
  bool operator==(const Artifacts&) const = default;
};

Artifacts artifacts(const PipelineConfig& c) {
  return {slurp(c.paths.output_path()), slurp(c.paths.candidate_log_path()), slurp(c.paths.trajectory_path())};
}

Artifacts run_fresh(PipelineConfig c) {
  auto gw = Gateway::mock_only();
  auto r = run_pipeline(c, gw);
  REQUIRE(r.status == RunStatus::completed);
  return artifacts(c);
}

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }

// Mock backend that fails selected operations.
class FaultyBackend final : public Backend {
 public:
  std::function<void(const AgentId&, const std::string& op)> hook;
  std::string generate(const AgentId& a, const Prompt& p, std::uint64_t seed) override {
    if (hook) hook(a, "generate");
    return inner_.generate(a, p, seed);
  }
  TokenLogprobs score(const AgentId& a, std::string_view c, std::string_view t) override {
    if (hook) hook(a, "score");
    return inner_.score(a, c, t);
  }
  std::vector<double> embed(const AgentId& a, std::string_view t) override {
    if (hook) hook(a, "embed");
    return inner_.embed(a, t);
  }

 private:
  MockBackend inner_;
};

}  // namespace

TEST_CASE("end to end: artifact shapes") {
  TempDir dir;
  auto c = demo_config(dir, 12);
  auto a = run_fresh(c);
  CHECK(lines(a.output) == 12);
  CHECK(lines(a.log) == 12 * 5);  // one base + M sampled per seed
  // header + (initial row set + one per update) * 8 sampleable pairs
  CHECK(lines(a.trajectory) == 1 + 13 * 8);
  CHECK_FALSE(std::filesystem::exists(c.paths.output_path().string() + ".partial"));
  auto cp = PipelineCheckpoint::load(c.paths.checkpoint_path());
  CHECK(cp.complete);
  CHECK(cp.state.cursor == 12);
  CHECK(cp.state.matrix.update_count() == 12);
  CHECK(std::abs(cp.state.matrix.total() - 1.0) < 1e-12);

  auto records = load_output_dataset(c.paths.output_path());
  auto log = load_candidate_log(c.paths.candidate_log_path());
  CHECK_NOTHROW(validate_output_records(records, &log));
  std::size_t winners = 0;
  for (const auto& r : records) winners += r.provenance.has_value();
  CHECK(winners > 0);
}

TEST_CASE("end to end: deterministic for a fixed seed, different for another") {
  TempDir d1, d2, d3;
  auto a = run_fresh(demo_config(d1, 8));
  auto b = run_fresh(demo_config(d2, 8));
  CHECK(a == b);
  auto c = demo_config(d3, 8);
  c.seed = 8;
  CHECK_FALSE(run_fresh(c).log == a.log);
}

TEST_CASE("output is reproduced by argmax over the candidate log") {
  TempDir dir;
  auto c = demo_config(dir, 15);
  run_fresh(c);
  auto seeds = load_seed_dataset(c.paths.seed);
  auto rebuilt = reselect_from_log(load_candidate_log(c.paths.candidate_log_path()), seeds);
  std::string text;
  for (const auto& r : rebuilt) text += to_line(r) + "\n";
  CHECK(text == slurp(c.paths.output_path()));
}

TEST_CASE("seed extra fields are echoed") {
  TempDir dir;
  auto c = demo_config(dir, 1);
  testing_support::write_text(c.paths.seed,
                              R"({"id":"x","instruction":"Say hi","response":"Hi there","topic":"greeting"})" "\n");
  run_fresh(c);
  auto recs = load_output_dataset(c.paths.output_path());
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].extra == Json{{"topic", "greeting"}});
}

TEST_CASE("interrupted and resumed run equals an uninterrupted run") {
  for (std::size_t workers : {1u, 3u}) {
    CAPTURE(workers);
    TempDir ref_dir, dir;
    auto ref = demo_config(ref_dir, 20);
    ref.workers = workers;
    auto expected = run_fresh(ref);

    auto c = demo_config(dir, 20);
    c.workers = workers;
    auto gw = Gateway::mock_only();
    RunOptions stop;
    stop.stop_after = 7;
    auto r1 = run_pipeline(c, gw, stop);
    CHECK(r1.status == RunStatus::aborted);
    CHECK(r1.cursor == 7);
    CHECK_FALSE(std::filesystem::exists(c.paths.output_path()));

    RunOptions again;
    again.resume = true;
    again.stop_after = 5;
    CHECK(run_pipeline(c, gw, again).status == RunStatus::aborted);

    RunOptions finish;
    finish.resume = true;
    auto r3 = run_pipeline(c, gw, finish);
    CHECK(r3.status == RunStatus::completed);
    CHECK(r3.cursor == 20);
    CHECK(artifacts(c) == expected);
  }
}

TEST_CASE("worker count is part of the result but runs are reproducible") {
  TempDir a, b;
  auto c1 = demo_config(a, 16);
  auto c2 = demo_config(b, 16);
  c1.workers = c2.workers = 4;
  CHECK(run_fresh(c1) == run_fresh(c2));
}

TEST_CASE("resume of a completed run is a no-op") {
  TempDir dir;
  auto c = demo_config(dir, 5);
  auto first = run_fresh(c);
  auto gw = Gateway::mock_only();
  RunOptions opt;
  opt.resume = true;
  auto r = run_pipeline(c, gw, opt);
  CHECK(r.status == RunStatus::completed);
  CHECK(artifacts(c) == first);
}

TEST_CASE("resume with a different configuration is refused") {
  TempDir dir;
  auto c = demo_config(dir, 6);
  auto gw = Gateway::mock_only();
  RunOptions stop;
  stop.stop_after = 2;
  run_pipeline(c, gw, stop);
  c.beta = 0.1;
  RunOptions resume;
  resume.resume = true;
  CHECK_THROWS_AS(run_pipeline(c, gw, resume), ConfigError);
}

TEST_CASE("cancellation aborts with a checkpoint") {
  TempDir dir;
  auto c = demo_config(dir, 6);
  auto gw = Gateway::mock_only();
  std::atomic<bool> cancel{true};
  RunOptions opt;
  opt.cancel = &cancel;
  auto r = run_pipeline(c, gw, opt);
  CHECK(r.status == RunStatus::aborted);
  CHECK(r.abort_reason == "cancelled");
  CHECK(std::filesystem::exists(c.paths.checkpoint_path()));
}

TEST_CASE("transport failure aborts resumably and the resumed run matches") {
  TempDir ref_dir, dir;
  auto ref = demo_config(ref_dir, 10);
  ref.workers = 2;
  auto expected = run_fresh(ref);

  auto c = demo_config(dir, 10);
  c.workers = 2;

  auto faulty = std::make_shared<FaultyBackend>();
  std::atomic<int> calls{0};
  faulty->hook = [&](const AgentId&, const std::string&) {
    if (++calls == 200) throw TransportError("connection reset");
  };
  Gateway gw(faulty, nullptr, RetryPolicy{0, std::chrono::milliseconds(0), 2.0});
  auto r = run_pipeline(c, gw);
  CHECK(r.status == RunStatus::aborted);
  CHECK(r.abort_reason.find("connection reset") != std::string::npos);

  faulty->hook = nullptr;
  RunOptions resume;
  resume.resume = true;
  CHECK(run_pipeline(c, gw, resume).status == RunStatus::completed);
  CHECK(artifacts(c) == expected);
}

TEST_CASE("failed candidate generation drops the candidate without reward") {
  TempDir dir;
  auto c = demo_config(dir, 4);
  auto faulty = std::make_shared<FaultyBackend>();
  faulty->hook = [](const AgentId& a, const std::string& op) {
    if (op == "generate" && a.name == "responder-2") throw ContentError("refused");
  };
  Gateway gw(faulty, nullptr);
  auto r = run_pipeline(c, gw);
  REQUIRE(r.status == RunStatus::completed);
  CHECK(r.counts.dropped_candidates > 0);
  for (const auto& cand : load_candidate_log(c.paths.candidate_log_path())) {
    if (cand.pair.response == 2) {
      CHECK(cand.status == CandidateStatus::dropped);
      CHECK(cand.reason.find("refused") != std::string::npos);
      CHECK(cand.pi_composite == 0.0);
    }
  }
  auto cp = PipelineCheckpoint::load(c.paths.checkpoint_path());
  // pairs whose responder always fails can only lose mass
  for (int j = 0; j < 3; ++j) CHECK(cp.state.matrix.prob({j, 2}) <= 1.0 / 8.0);
}

TEST_CASE("failed base generation falls back to the seed sample") {
  TempDir dir;
  auto c = demo_config(dir, 3);
  auto faulty = std::make_shared<FaultyBackend>();
  faulty->hook = [](const AgentId& a, const std::string& op) {
    if (op == "generate" && a.name == "responder-0") throw ContentError("down");
  };
  Gateway gw(faulty, nullptr);
  auto r = run_pipeline(c, gw);
  REQUIRE(r.status == RunStatus::completed);
  CHECK(r.counts.seed_fallbacks == 3);
  auto seeds = load_seed_dataset(c.paths.seed);
  for (const auto& cand : load_candidate_log(c.paths.candidate_log_path())) {
    if (!cand.is_base) continue;
    CHECK(cand.seed_fallback);
    CHECK(cand.status == CandidateStatus::ok);
  }
  for (const auto& rec : load_output_dataset(c.paths.output_path())) {
    if (!rec.provenance) {
      auto it = std::find_if(seeds.begin(), seeds.end(), [&](const auto& s) { return s.id == rec.seed_id; });
      CHECK(rec.response == it->response);
    }
  }
}

TEST_CASE("every sampled candidate failing keeps the base") {
  TempDir dir;
  auto c = demo_config(dir, 2);
  auto faulty = std::make_shared<FaultyBackend>();
  // Only the base pair's own agents can generate, so every sampled pair fails.
  faulty->hook = [](const AgentId& a, const std::string& op) {
    if (op == "generate" && a.role != Role::referee && a.name != "rewriter-0" && a.name != "responder-0") {
      throw ContentError("nope");
    }
  };
  c.pairs_per_seed = 8;
  Gateway gw(faulty, nullptr);
  auto r = run_pipeline(c, gw);
  REQUIRE(r.status == RunStatus::completed);
  CHECK(r.counts.dropped_candidates == 2 * 8);
  CHECK(r.counts.base_fallbacks == 2);
}

TEST_CASE("per-seed steps: plan, execute, commit") {
  TempDir dir;
  auto c = demo_config(dir, 1);
  c.tau = 0.0;
  auto gw = Gateway::mock_only();
  Pipeline p(c, gw);
  auto state = p.initial_state();
  auto seeds = load_seed_dataset(c.paths.seed);
  auto plan = p.plan(seeds[0], 0, state);
  CHECK(plan.pool.empty());
  CHECK(plan.draw.sampled.size() == 4);
  CHECK(plan.matrix_version == 0);
  auto o1 = p.execute(seeds[0], plan);
  auto o2 = p.execute(seeds[0], plan);
  CHECK(o1.candidates == o2.candidates);
  CHECK(o1.candidates.front().is_base);
  p.commit(o1, state);
  CHECK(state.cursor == 1);
  CHECK_THROWS_AS(p.commit(o1, state), ContractError);
}

TEST_CASE("memory bank feeds later plans") {
  TempDir dir;
  auto c = demo_config(dir, 1);
  c.tau = 0.0;
  auto gw = Gateway::mock_only();
  Pipeline p(c, gw);
  auto state = p.initial_state();
  InstructionSample s{"a", "Explain sorting algorithms", "Sorting orders items.", Json::object()};
  auto out = p.process_seed(s, 0, state);
  if (out.admission) {
    CHECK(state.bank.size() == 1);
    CHECK(state.bank.entries()[0].admitted_at == 1);
    InstructionSample t{"b", "Explain sorting algorithms please", "Sure.", Json::object()};
    auto plan = p.plan(t, 1, state);
    REQUIRE(plan.pool.size() == 1);
    CHECK(plan.draw.from_memory == 1);
    CHECK(plan.draw.sampled[0] == out.admission->pair);
  } else {
    CHECK(state.bank.size() == 0);
  }
}

TEST_CASE("reward modes") {
  TempDir dir;
  auto c = demo_config(dir, 1);
  auto gw = Gateway::mock_only();
  auto seeds = load_seed_dataset(c.paths.seed);
  Pipeline all(c, gw);
  auto s1 = all.initial_state();
  auto o_all = all.process_seed(seeds[0], 0, s1);
  std::size_t ok = 0;
  for (const auto& cand : o_all.candidates) ok += !cand.is_base && cand.status == CandidateStatus::ok;
  CHECK(o_all.rewards.size() == ok);

  c.reward_mode = RewardMode::winner;
  Pipeline win(c, gw);
  auto s2 = win.initial_state();
  auto o_win = win.process_seed(seeds[0], 0, s2);
  CHECK(o_win.rewards.size() == (o_win.base_fallback ? 0u : 1u));
}

TEST_CASE("referee question modes change what the referee sees") {
  TempDir dir;
  auto c = demo_config(dir, 1);
  auto seeds = load_seed_dataset(c.paths.seed);
  auto rec = std::make_shared<RecordingBackend>(std::make_shared<MockBackend>(), dir / "rec.jsonl");
  Gateway recording(rec, nullptr);
  c.referee_question = RefereeQuestion::seed;
  Pipeline p(c, recording);
  auto st = p.initial_state();
  p.process_seed(seeds[0], 0, st);
  auto text = slurp(dir / "rec.jsonl");
  CHECK(text.find("[User Question]\\n" + seeds[0].instruction + "\\n") != std::string::npos);
}

TEST_CASE("invalid configuration is rejected before any work") {
  TempDir dir;
  auto c = demo_config(dir, 1);
  c.pairs_per_seed = 0;
  auto gw = Gateway::mock_only();
  CHECK_THROWS_WITH_AS(Pipeline(c, gw), "M must be >= 1", ConfigError);
}

TEST_CASE("checkpoint json round trip") {
  TempDir dir;
  auto c = demo_config(dir, 6);
  c.workers = 3;
  auto gw = Gateway::mock_only();
  RunOptions stop;
  stop.stop_after = 2;
  run_pipeline(c, gw, stop);
  auto cp = PipelineCheckpoint::load(c.paths.checkpoint_path());
  CHECK(cp.pending.size() == 2);  // W - 1 seeds in flight at a commit point
  auto back = PipelineCheckpoint::from_json(cp.to_json());
  CHECK(back.pending == cp.pending);
  CHECK(back.state.matrix == cp.state.matrix);
  CHECK(back.state.bank == cp.state.bank);
  CHECK(back.state.counts == cp.state.counts);
  testing_support::write_text(dir / "bad.json", "{");
  CHECK_THROWS_AS(PipelineCheckpoint::load(dir / "bad.json"), ParseError);
}

TEST_CASE("replay mode reproduces a recorded run offline") {
  TempDir d1, d2;
  auto rec = demo_config(d1, 5);
  rec.replay = ReplayMode::record;
  auto gw1 = make_gateway(rec);
  REQUIRE(run_pipeline(rec, *gw1).status == RunStatus::completed);

  auto rep = demo_config(d2, 5);
  rep.replay = ReplayMode::replay;
  rep.paths.replay_log = rec.paths.replay_log_path();
  auto gw2 = make_gateway(rep);
  REQUIRE(run_pipeline(rep, *gw2).status == RunStatus::completed);
  CHECK(artifacts(rep) == artifacts(rec));
}

TEST_CASE("compute estimate") {
  CHECK(estimate_compute({{"m", 4e12}}, 10, 70000) == doctest::Approx(2.8e18));
  CHECK(estimate_compute({{"m", 4e12}}, 5, 70000) == doctest::Approx(1.4e18));
  CHECK(estimate_compute({{"a", 1e3}, {"b", 2e3}}, 2, 10) == 6e4);
  CHECK(estimate_compute({{"m", 4e12}}, 10, 0) == 0.0);
  CHECK_THROWS_AS(estimate_compute({{"m", -1}}, 1, 1), PreconditionError);
  CHECK_THROWS_AS(estimate_compute({{"m", 1}}, -1, 1), PreconditionError);
}
