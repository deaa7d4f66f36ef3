#include "pairforge/pipeline.hpp"

#include <algorithm>
#include <deque>
#include <fstream>
#include <future>

#include "pairforge/error.hpp"
#include "pairforge/hashing.hpp"

namespace pairforge {

namespace fs = std::filesystem;

// ------------------------------------------------------------ checkpoint

namespace {

Json counts_to_json(const RunCounts& c) {
  return {{"processed", c.processed},
          {"base_fallbacks", c.base_fallbacks},
          {"referee_parse_failures", c.referee_parse_failures},
          {"dropped_candidates", c.dropped_candidates},
          {"seed_fallbacks", c.seed_fallbacks}};
}

RunCounts counts_from_json(const Json& j) {
  return {j.at("processed").get<std::uint64_t>(), j.at("base_fallbacks").get<std::uint64_t>(),
          j.at("referee_parse_failures").get<std::uint64_t>(), j.at("dropped_candidates").get<std::uint64_t>(),
          j.at("seed_fallbacks").get<std::uint64_t>()};
}

Json pairs_to_json(const std::vector<AgentPair>& pairs) {
  Json out = Json::array();
  for (auto p : pairs) out.push_back(p.to_string());
  return out;
}

std::vector<AgentPair> pairs_from_json(const Json& j) {
  std::vector<AgentPair> out;
  for (const auto& s : j) out.push_back(AgentPair::parse(s.get<std::string>()));
  return out;
}

Json plan_to_json(const SeedPlan& p) {
  return {{"index", p.index},
          {"embedding", p.embedding},
          {"pool", pairs_to_json(p.pool)},
          {"sampled", pairs_to_json(p.draw.sampled)},
          {"from_memory", p.draw.from_memory},
          {"rng_seed", p.draw.rng_seed},
          {"seed_id", p.draw.seed_id},
          {"matrix_version", p.matrix_version}};
}

SeedPlan plan_from_json(const Json& j) {
  SeedPlan p;
  p.index = j.at("index").get<std::size_t>();
  p.embedding = j.at("embedding").get<std::vector<double>>();
  p.pool = pairs_from_json(j.at("pool"));
  p.draw.sampled = pairs_from_json(j.at("sampled"));
  p.draw.from_memory = j.at("from_memory").get<std::size_t>();
  p.draw.rng_seed = j.at("rng_seed").get<std::uint64_t>();
  p.draw.seed_id = j.at("seed_id").get<std::string>();
  p.matrix_version = j.at("matrix_version").get<std::uint64_t>();
  return p;
}

}  // namespace

Json PipelineCheckpoint::to_json() const {
  Json pend = Json::array();
  for (const auto& p : pending) pend.push_back(plan_to_json(p));
  return {{"version", 1},
          {"fingerprint", fingerprint},
          {"rng", {{"master_seed", master_seed}, {"per_seed", "derive_seed(master_seed, index)"}}},
          {"cursor", state.cursor},
          {"complete", complete},
          {"counts", counts_to_json(state.counts)},
          {"files", {{"output_bytes", output_bytes}, {"log_bytes", log_bytes}, {"trajectory_bytes", trajectory_bytes}}},
          {"pending", pend},
          {"matrix", state.matrix.to_json()},
          {"bank", state.bank.to_json()}};
}

PipelineCheckpoint PipelineCheckpoint::from_json(const Json& j) {
  try {
    if (j.at("version").get<int>() != 1) throw ParseError("unsupported checkpoint version");
    PipelineCheckpoint cp{j.at("fingerprint").get<std::string>(),
                          j.at("rng").at("master_seed").get<std::uint64_t>(),
                          PipelineState{PairMatrix::from_json(j.at("matrix")), MemoryBank::from_json(j.at("bank")),
                                        j.at("cursor").get<std::size_t>(), counts_from_json(j.at("counts"))},
                          {},
                          j.at("files").at("output_bytes").get<std::uint64_t>(),
                          j.at("files").at("log_bytes").get<std::uint64_t>(),
                          j.at("files").at("trajectory_bytes").get<std::uint64_t>(),
                          j.at("complete").get<bool>()};
    for (const auto& p : j.at("pending")) cp.pending.push_back(plan_from_json(p));
    return cp;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("checkpoint: ") + e.what());
  }
}

PipelineCheckpoint PipelineCheckpoint::load(const fs::path& path) {
  Json j;
  try {
    j = Json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("checkpoint '" + path.string() + "' is not valid JSON");
  }
  return from_json(j);
}

void PipelineCheckpoint::save(const fs::path& path) const { write_file_atomic(path, to_json().dump() + "\n"); }

// ------------------------------------------------------------ templates

GenerationTemplates GenerationTemplates::builtin() {
  return {
      "Rewrite the instruction below so that it keeps its intent and difficulty but is phrased in your own words. "
      "Reply with the rewritten instruction only.\n\n"
      "Instruction:\n{instruction}",
      "Write a helpful, accurate and complete response to the instruction below. A reference response to the "
      "original instruction is included; you may use it or improve on it.\n\n"
      "Instruction:\n{instruction}\n\n"
      "Reference response:\n{response}",
  };
}

namespace {

std::string load_template(const fs::path& path) {
  auto text = read_file(path);
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

bool is_fatal(const std::exception& e) {
  return dynamic_cast<const TransportError*>(&e) || dynamic_cast<const ConfigError*>(&e) ||
         dynamic_cast<const IoError*>(&e) || !dynamic_cast<const Error*>(&e);
}

}  // namespace

// ------------------------------------------------------------ pipeline

Pipeline::Pipeline(PipelineConfig config, Gateway& gateway)
    : config_(std::move(config)),
      gateway_(gateway),
      referee_template_(RefereeTemplate::builtin()),
      generation_templates_(GenerationTemplates::builtin()) {
  config_.validate();
  const auto& t = config_.templates;
  if (!t.referee_system.empty() || !t.referee_user.empty()) {
    if (t.referee_system.empty() || t.referee_user.empty()) {
      throw ConfigError("templates.referee_system and templates.referee_user must be set together");
    }
    referee_template_ = RefereeTemplate::load(t.referee_system, t.referee_user);
  }
  if (!t.rewrite.empty()) generation_templates_.rewrite = load_template(t.rewrite);
  if (!t.respond.empty()) generation_templates_.respond = load_template(t.respond);
}

PipelineState Pipeline::initial_state() const {
  return {PairMatrix::init_uniform(config_.instruction_agents, config_.response_agents, config_.base_pairs, config_.beta),
          MemoryBank(config_.embedding_dim, config_.bank_capacity, config_.tau), 0, {}};
}

std::uint64_t Pipeline::seed_for(std::size_t index) const { return derive_seed(config_.seed, index); }

Prompt Pipeline::rewrite_prompt(const InstructionSample& sample) const {
  const std::pair<std::string_view, std::string_view> slots[] = {{"{instruction}", sample.instruction},
                                                                 {"{response}", sample.response}};
  return {{}, fill_slots(generation_templates_.rewrite, slots)};
}

Prompt Pipeline::respond_prompt(std::string_view instruction, const InstructionSample& sample) const {
  const std::pair<std::string_view, std::string_view> slots[] = {{"{instruction}", instruction},
                                                                 {"{response}", sample.response}};
  return {{}, fill_slots(generation_templates_.respond, slots)};
}

SeedPlan Pipeline::plan(const InstructionSample& sample, std::size_t index, const PipelineState& state) const {
  SeedPlan p;
  p.index = index;
  p.embedding = gateway_.embed(config_.agent(config_.embedder), sample.instruction, config_.embedding_dim);
  if (!state.bank.empty()) p.pool = state.bank.query_pool(p.embedding, config_.memory_query_size);
  p.draw = sample_pairs(state.matrix, config_.pairs_per_seed, p.pool, config_.effective_memory_draws(),
                        derive_seed(seed_for(index), 0), sample.id);
  p.matrix_version = state.matrix.update_count();
  return p;
}

CandidateRecord Pipeline::generate_candidate(const InstructionSample& sample, AgentPair pair, int index, bool is_base,
                                             std::uint64_t seed) const {
  CandidateRecord c;
  c.seed_id = sample.id;
  c.index = index;
  c.pair = pair;
  c.is_base = is_base;
  const auto& rewriter = config_.agent(config_.instruction_agents.at(static_cast<std::size_t>(pair.instruction)));
  const auto& responder = config_.agent(config_.response_agents.at(static_cast<std::size_t>(pair.response)));
  try {
    c.instruction = trim(gateway_.generate(rewriter, rewrite_prompt(sample), derive_seed(seed, 1)));
    c.response = trim(gateway_.generate(responder, respond_prompt(c.instruction, sample), derive_seed(seed, 2)));
  } catch (const std::exception& e) {
    if (is_fatal(e)) throw;
    c.status = CandidateStatus::dropped;
    c.reason = std::string("generation: ") + e.what();
  }
  return c;
}

SeedOutcome Pipeline::execute(const InstructionSample& sample, const SeedPlan& plan) const {
  SeedOutcome out;
  out.index = plan.index;
  const std::uint64_t seed = seed_for(plan.index);
  const auto& small = config_.agent(config_.scorer_small);
  const auto& large = config_.agent(config_.scorer_large);
  const auto& referee = config_.agent(config_.referee);

  const int base_count = static_cast<int>(config_.base_pairs.size());
  for (int b = 0; b < base_count; ++b) {
    out.candidates.push_back(generate_candidate(sample, config_.base_pairs[static_cast<std::size_t>(b)], b, true,
                                                derive_seed(seed, 1000 + static_cast<std::uint64_t>(b))));
  }
  for (std::size_t m = 0; m < plan.draw.sampled.size(); ++m) {
    out.candidates.push_back(generate_candidate(sample, plan.draw.sampled[m], base_count + static_cast<int>(m), false,
                                                derive_seed(seed, 1 + m)));
  }

  // The first base candidate anchors the referee comparison. If it could not
  // be generated, the seed sample itself stands in for it.
  CandidateRecord& anchor = out.candidates.front();
  if (anchor.status == CandidateStatus::dropped) {
    out.events.push_back("seed " + sample.id + ": base candidate failed (" + anchor.reason + "); using the seed sample");
    anchor.instruction = sample.instruction;
    anchor.response = sample.response;
    anchor.status = CandidateStatus::ok;
    anchor.seed_fallback = true;
    out.seed_fallback = true;
  }

  for (auto& c : out.candidates) {
    if (c.status != CandidateStatus::ok) continue;
    try {
      c.ifd_small = compute_ifd(gateway_, small, c.instruction, c.response);
      c.ifd_large = compute_ifd(gateway_, large, c.instruction, c.response);
    } catch (const std::exception& e) {
      if (is_fatal(e)) throw;
      c.ifd_small = c.ifd_large = 0.0;
      if (c.is_base) {
        c.reason = std::string("scoring: ") + e.what();  // base scores are informational
      } else {
        c.status = CandidateStatus::dropped;
        c.reason = std::string("scoring: ") + e.what();
      }
    }
  }

  auto sampled = std::span<CandidateRecord>(out.candidates).subspan(static_cast<std::size_t>(base_count));
  for (std::size_t m = 0; m < sampled.size(); ++m) {
    auto& c = sampled[m];
    if (c.status != CandidateStatus::ok) continue;
    std::string_view question = c.instruction;
    if (config_.referee_question == RefereeQuestion::base) question = anchor.instruction;
    if (config_.referee_question == RefereeQuestion::seed) question = sample.instruction;
    try {
      auto verdict = referee_compare(gateway_, referee, referee_template_, question, anchor.response, c.response,
                                     derive_seed(seed, 2000 + m), config_.referee_orderings);
      c.pi_llm = verdict.pi_llm;
      c.referee_parse_failure = verdict.parse_failed;
      if (verdict.parse_failed) {
        ++out.referee_parse_failures;
        out.events.push_back("seed " + sample.id + ": referee verdict unparseable for pair " + c.pair.to_string() +
                             ", counted as a tie");
      }
    } catch (const std::exception& e) {
      if (is_fatal(e)) throw;
      c.status = CandidateStatus::dropped;
      c.reason = std::string("referee: ") + e.what();
    }
  }

  std::vector<IfdPair> ifds;
  std::vector<std::size_t> scored;
  for (std::size_t m = 0; m < sampled.size(); ++m) {
    if (sampled[m].status != CandidateStatus::ok) continue;
    ifds.push_back({sampled[m].ifd_small, sampled[m].ifd_large});
    scored.push_back(m);
  }
  if (!ifds.empty()) {
    auto dual = compute_dual_scores(ifds, sample.id);
    for (std::size_t i = 0; i < scored.size(); ++i) sampled[scored[i]].pi_dual = dual.pi_dual[i];
  } else {
    out.events.push_back("seed " + sample.id + ": every sampled candidate failed; keeping the base sample");
  }

  auto selection = compose_and_select(sampled, anchor);
  out.record = std::move(selection.record);
  out.record.extra = sample.extra;
  out.base_fallback = !selection.winner.has_value();

  for (const auto& c : sampled) {
    if (c.status != CandidateStatus::ok) {
      ++out.dropped;
      continue;
    }
    if (config_.reward_mode == RewardMode::all) out.rewards.push_back({c.pair, c.pi_composite});
  }
  if (selection.winner) {
    const auto& w = sampled[*selection.winner];
    if (config_.reward_mode == RewardMode::winner) out.rewards.push_back({w.pair, w.pi_composite});
    out.admission = MemoryEntry{plan.embedding, w.pair, w.pi_composite, sample.id, 0};
  }
  return out;
}

void Pipeline::commit(const SeedOutcome& outcome, PipelineState& state) const {
  if (outcome.index != state.cursor) {
    throw ContractError("commit of seed " + std::to_string(outcome.index) + " while the cursor is at " +
                        std::to_string(state.cursor));
  }
  state.matrix.apply_reward(outcome.rewards);
  if (outcome.admission) {
    MemoryEntry entry = *outcome.admission;
    entry.admitted_at = state.matrix.update_count();
    state.bank.admit(std::move(entry));
  }
  ++state.counts.processed;
  if (outcome.base_fallback) ++state.counts.base_fallbacks;
  if (outcome.seed_fallback) ++state.counts.seed_fallbacks;
  state.counts.referee_parse_failures += outcome.referee_parse_failures;
  state.counts.dropped_candidates += outcome.dropped;
  ++state.cursor;
}

SeedOutcome Pipeline::process_seed(const InstructionSample& sample, std::size_t index, PipelineState& state) const {
  auto p = plan(sample, index, state);
  auto outcome = execute(sample, p);
  commit(outcome, state);
  return outcome;
}

// ------------------------------------------------------------ run loop

namespace {

std::uint64_t file_size_or_zero(const fs::path& p) {
  std::error_code ec;
  auto size = fs::file_size(p, ec);
  return ec ? 0 : size;
}

void truncate_to(const fs::path& p, std::uint64_t bytes) {
  if (!fs::exists(p)) {
    if (bytes == 0) {
      std::ofstream(p, std::ios::binary);
      return;
    }
    throw IoError("cannot resume: '" + p.string() + "' is missing");
  }
  if (fs::file_size(p) < bytes) throw IoError("cannot resume: '" + p.string() + "' is shorter than the checkpoint");
  fs::resize_file(p, bytes);
}

std::ofstream open_append(const fs::path& p) {
  std::ofstream out(p, std::ios::binary | std::ios::app);
  if (!out) throw IoError("cannot open '" + p.string() + "' for writing");
  return out;
}

fs::path partial_path(const fs::path& output) {
  fs::path p = output;
  p += ".partial";
  return p;
}

}  // namespace

RunResult run_pipeline(const PipelineConfig& config, Gateway& gateway, const RunOptions& options) {
  Pipeline pipe(config, gateway);
  const auto& paths = config.paths;
  const auto seeds = load_seed_dataset(paths.seed);
  const std::string fingerprint = config_fingerprint(config);

  const fs::path output = paths.output_path();
  const fs::path partial = partial_path(output);
  const fs::path log_path = paths.candidate_log_path();
  const fs::path traj_path = paths.trajectory_path();
  const fs::path cp_path = paths.checkpoint_path();
  for (const auto& p : {output, log_path, traj_path, cp_path}) {
    if (p.has_parent_path()) fs::create_directories(p.parent_path());
  }

  RunResult result;
  result.total = seeds.size();
  std::optional<PipelineState> state_holder;
  std::vector<SeedPlan> pending;

  if (options.resume && fs::exists(cp_path)) {
    auto cp = PipelineCheckpoint::load(cp_path);
    if (cp.fingerprint != fingerprint) {
      throw ConfigError("checkpoint '" + cp_path.string() + "' was written with a different configuration");
    }
    if (cp.state.cursor > seeds.size()) throw ConfigError("checkpoint cursor is beyond the seed dataset");
    if (cp.complete && fs::exists(output)) {
      result.counts = cp.state.counts;
      result.cursor = cp.state.cursor;
      return result;
    }
    truncate_to(partial, cp.output_bytes);
    truncate_to(log_path, cp.log_bytes);
    truncate_to(traj_path, cp.trajectory_bytes);
    state_holder.emplace(std::move(cp.state));
    pending = std::move(cp.pending);
  } else {
    state_holder.emplace(pipe.initial_state());
    write_file_atomic(partial, "");
    write_file_atomic(log_path, "");
    std::ostringstream header;
    header << "update_count,pair,probability\n";
    state_holder->matrix.write_trajectory_rows(header);
    write_file_atomic(traj_path, header.str());
    std::error_code ec;
    fs::remove(cp_path, ec);
  }
  PipelineState& state = *state_holder;

  auto out_stream = open_append(partial);
  auto log_stream = open_append(log_path);
  auto traj_stream = open_append(traj_path);

  struct InFlight {
    SeedPlan plan;
    std::future<SeedOutcome> result;
  };
  std::deque<InFlight> window;
  const auto policy = config.workers == 1 ? std::launch::deferred : std::launch::async;
  auto launch = [&](SeedPlan plan) {
    const auto& sample = seeds.at(plan.index);
    auto fut = std::async(policy, [&pipe, &sample, plan] { return pipe.execute(sample, plan); });
    window.push_back({std::move(plan), std::move(fut)});
  };

  auto write_checkpoint = [&](bool complete) {
    out_stream.flush();
    log_stream.flush();
    traj_stream.flush();
    PipelineCheckpoint cp{fingerprint, config.seed, state, {}, file_size_or_zero(partial),
                          file_size_or_zero(log_path), file_size_or_zero(traj_path), complete};
    for (const auto& f : window) cp.pending.push_back(f.plan);
    cp.save(cp_path);
  };

  std::size_t committed = 0;
  auto commit_front = [&] {
    SeedOutcome outcome = window.front().result.get();
    pipe.commit(outcome, state);
    out_stream << to_line(outcome.record) << '\n';
    for (const auto& c : outcome.candidates) log_stream << to_line(c) << '\n';
    if (state.matrix.update_count() % config.trajectory_stride == 0) state.matrix.write_trajectory_rows(traj_stream);
    if (!out_stream || !log_stream || !traj_stream) throw IoError("failed writing run artifacts");
    window.pop_front();
    ++committed;
    if (options.progress) {
      for (const auto& e : outcome.events) options.progress(e);
      if (state.cursor % config.progress_every == 0 || state.cursor == seeds.size()) {
        options.progress("progress: " + std::to_string(state.cursor) + "/" + std::to_string(seeds.size()) +
                         " seeds, base fallbacks " + std::to_string(state.counts.base_fallbacks) +
                         ", referee parse failures " + std::to_string(state.counts.referee_parse_failures));
      }
    }
    if (committed % config.checkpoint_every == 0) write_checkpoint(false);
  };

  std::size_t next = state.cursor;
  for (auto& p : pending) {
    next = std::max(next, p.index + 1);
    launch(std::move(p));
  }

  std::optional<std::string> abort_reason;
  try {
    const std::size_t W = config.workers;
    while (true) {
      // Seed i is drawn against the state that holds every seed <= i - W.
      while (!window.empty() && window.front().plan.index + W <= next) commit_front();
      if (options.cancel && options.cancel->load()) {
        abort_reason = "cancelled";
        break;
      }
      if (options.stop_after && committed >= *options.stop_after && next < seeds.size()) {
        abort_reason = "stopped after " + std::to_string(committed) + " seeds";
        break;
      }
      if (next >= seeds.size()) break;
      launch(pipe.plan(seeds[next], next, state));
      ++next;
    }
    if (!abort_reason) {
      while (!window.empty()) commit_front();
    }
  } catch (const std::exception& e) {
    abort_reason = e.what();
  }

  if (abort_reason) {
    // Let running workers finish; their plans go into the checkpoint and
    // are executed again on resume.
    for (auto& f : window) {
      if (f.result.valid() && f.result.wait_for(std::chrono::seconds(0)) != std::future_status::deferred) {
        f.result.wait();
      }
    }
    write_checkpoint(false);
    result.status = RunStatus::aborted;
    result.abort_reason = *abort_reason;
    result.counts = state.counts;
    result.cursor = state.cursor;
    return result;
  }

  out_stream.close();
  log_stream.close();
  traj_stream.close();
  const auto log = load_candidate_log(log_path);
  validate_output_records(load_output_dataset(partial), &log);
  fs::rename(partial, output);
  write_checkpoint(true);
  result.counts = state.counts;
  result.cursor = state.cursor;
  return result;
}

std::unique_ptr<Gateway> make_gateway(const PipelineConfig& config) {
  std::shared_ptr<Backend> mock = std::make_shared<MockBackend>();
  std::shared_ptr<Backend> http = std::make_shared<HttpBackend>();
  const auto replay_path = config.paths.replay_log_path();
  if (config.replay == ReplayMode::record) {
    mock = std::make_shared<RecordingBackend>(mock, replay_path);
    http = std::make_shared<RecordingBackend>(http, replay_path);
  } else if (config.replay == ReplayMode::replay) {
    auto replay = std::make_shared<ReplayBackend>(replay_path);
    mock = replay;
    http = replay;
  }
  return std::make_unique<Gateway>(mock, http, config.retry, static_cast<std::ptrdiff_t>(config.max_in_flight));
}

std::vector<OutputRecord> reselect_from_log(const std::vector<CandidateRecord>& log,
                                            const std::vector<InstructionSample>& seeds) {
  std::map<std::string, std::vector<const CandidateRecord*>> by_seed;
  for (const auto& c : log) by_seed[c.seed_id].push_back(&c);
  std::vector<OutputRecord> out;
  for (const auto& s : seeds) {
    auto it = by_seed.find(s.id);
    if (it == by_seed.end()) continue;
    const CandidateRecord* anchor = nullptr;
    const CandidateRecord* best = nullptr;
    double best_score = 0.0;
    for (const auto* c : it->second) {
      if (c->is_base) {
        if (!anchor) anchor = c;
        continue;
      }
      if (c->status != CandidateStatus::ok) continue;
      const double composite = c->pi_llm * c->pi_dual;
      if (composite != c->pi_composite) {
        throw ValidationError("seed '" + s.id + "': logged composite differs from pi_llm * pi_dual");
      }
      if (composite > best_score) {
        best_score = composite;
        best = c;
      }
    }
    if (!anchor) throw ValidationError("seed '" + s.id + "': no base candidate in the log");
    const CandidateRecord& chosen = best ? *best : *anchor;
    OutputRecord r{s.id, chosen.instruction, chosen.response, best ? best_score : 0.0, std::nullopt, s.extra};
    if (best) r.provenance = best->pair;
    out.push_back(std::move(r));
  }
  return out;
}

double estimate_compute(const std::map<std::string, double>& macs_per_sample, double pairs_invoked, double samples) {
  if (pairs_invoked < 0.0 || samples < 0.0) throw PreconditionError("pairs and samples must be non-negative");
  double total = 0.0;
  for (const auto& [model, macs] : macs_per_sample) {
    if (macs < 0.0) throw PreconditionError("MACs for model '" + model + "' must be non-negative");
    total += macs * pairs_invoked * samples;
  }
  return total;
}

}  // namespace pairforge
