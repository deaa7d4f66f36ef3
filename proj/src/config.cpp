#include "pairforge/config.hpp"

#include <algorithm>
#include <cctype>
#include <cstdlib>
#include <set>

#include "pairforge/error.hpp"
#include "pairforge/hashing.hpp"

namespace pairforge {

namespace fs = std::filesystem;

namespace {

fs::path or_default(const fs::path& explicit_path, const fs::path& dir, const char* name) {
  return explicit_path.empty() ? dir / name : explicit_path;
}

}  // namespace

fs::path PipelinePaths::output_path() const { return or_default(output, out_dir, "output.jsonl"); }
fs::path PipelinePaths::candidate_log_path() const { return or_default(candidate_log, out_dir, "candidates.jsonl"); }
fs::path PipelinePaths::checkpoint_path() const { return or_default(checkpoint, out_dir, "checkpoint.json"); }
fs::path PipelinePaths::trajectory_path() const { return or_default(trajectory, out_dir, "trajectory.csv"); }
fs::path PipelinePaths::replay_log_path() const { return or_default(replay_log, out_dir, "replay.jsonl"); }

std::size_t PipelineConfig::effective_memory_draws() const {
  return memory_draws ? *memory_draws : std::min(memory_query_size, pairs_per_seed / 2);
}

const AgentId& PipelineConfig::agent(std::string_view name) const {
  auto it = std::find_if(agents.begin(), agents.end(), [&](const AgentId& a) { return a.name == name; });
  if (it == agents.end()) throw ConfigError("unknown agent '" + std::string(name) + "'");
  return *it;
}

void PipelineConfig::validate() const {
  auto fail = [](const std::string& msg) { throw ConfigError(msg); };
  if (pairs_per_seed < 1) fail("M must be >= 1");
  if (effective_memory_draws() > pairs_per_seed) fail("l must be <= M");
  if (memory_query_size < 1) fail("n must be >= 1");
  if (workers < 1) fail("workers must be >= 1");
  if (!(beta > 0.0)) fail("beta must be > 0");
  if (!(tau >= 0.0 && tau <= 1.0)) fail("tau must be in [0,1]");
  if (bank_capacity < 1) fail("capacity must be >= 1");
  if (embedding_dim < 1) fail("embedding_dim must be >= 1");
  if (referee_orderings != 1 && referee_orderings != 2) fail("referee_orderings must be 1 or 2");
  if (max_in_flight < 1) fail("max_in_flight must be >= 1");
  if (checkpoint_every < 1) fail("checkpoint_every must be >= 1");
  if (trajectory_stride < 1) fail("trajectory_stride must be >= 1");
  if (progress_every < 1) fail("progress_every must be >= 1");
  if (retry.max_retries < 0) fail("retry.max_retries must be >= 0");

  std::set<std::string> names;
  for (const auto& a : agents) {
    if (a.name.empty()) fail("agents: every agent needs a name");
    if (!names.insert(a.name).second) fail("agents: duplicate agent name '" + a.name + "'");
    if (a.backend == BackendKind::http && a.endpoint.empty()) fail("agents." + a.name + ": http agent needs an endpoint");
  }
  auto check_role = [&](const std::string& field, const std::string& name, Role role) {
    if (name.empty()) fail(field + " is not set");
    const auto& a = agent(name);
    if (a.role != role) fail(field + ": agent '" + name + "' has role " + std::string(to_string(a.role)));
  };
  if (instruction_agents.empty()) fail("instruction_agents is empty");
  if (response_agents.empty()) fail("response_agents is empty");
  for (const auto& n : instruction_agents) check_role("instruction_agents", n, Role::instruction_rewriter);
  for (const auto& n : response_agents) check_role("response_agents", n, Role::response_generator);
  check_role("referee", referee, Role::referee);
  check_role("scorer_small", scorer_small, Role::scorer_small);
  check_role("scorer_large", scorer_large, Role::scorer_large);
  check_role("embedder", embedder, Role::embedder);
  if (scorer_small == scorer_large || agent(scorer_small).model == agent(scorer_large).model) {
    fail("scorer_small and scorer_large must be distinct models");
  }

  if (base_pairs.empty()) fail("base_pairs is empty");
  std::set<AgentPair> base;
  for (auto bp : base_pairs) {
    if (bp.instruction < 0 || static_cast<std::size_t>(bp.instruction) >= instruction_agents.size() ||
        bp.response < 0 || static_cast<std::size_t>(bp.response) >= response_agents.size()) {
      fail("base_pairs: pair " + bp.to_string() + " is outside the roster");
    }
    base.insert(bp);
  }
  const std::size_t sampleable = instruction_agents.size() * response_agents.size() - base.size();
  if (sampleable < 1) fail("base_pairs leave no pair to sample");
  if (pairs_per_seed > sampleable) {
    fail("M=" + std::to_string(pairs_per_seed) + " exceeds the " + std::to_string(sampleable) + " non-base pairs");
  }
  if (paths.seed.empty()) fail("paths.seed is not set");
}

// ------------------------------------------------------------ overrides

const std::vector<OverrideKey>& override_keys() {
  static const std::vector<OverrideKey> keys{
      {"M", "agent pairs sampled per seed sample (>= 1)"},
      {"l", "pairs drawn from the memory pool (<= M; default min(n, M/2))"},
      {"n", "memory-bank neighbours queried per seed"},
      {"beta", "evolution rate of the pair distribution (> 0)"},
      {"tau", "minimum composite score for memory-bank admission"},
      {"capacity", "memory-bank capacity (FIFO eviction)"},
      {"workers", "seed samples processed concurrently"},
      {"seed", "master random seed"},
      {"embedding_dim", "embedding dimension expected from the embedder"},
      {"reward_mode", "all | winner: which sampled pairs are rewarded"},
      {"referee_question", "candidate | base | seed: instruction shown to the referee"},
      {"referee_orderings", "1 or 2 referee calls per comparison"},
      {"referee", "name of the referee agent"},
      {"scorer_small", "name of the target (small) scoring agent"},
      {"scorer_large", "name of the reference (large) scoring agent"},
      {"embedder", "name of the embedding agent"},
      {"max_in_flight", "concurrent requests per backend"},
      {"checkpoint_every", "seeds between checkpoint writes"},
      {"trajectory_stride", "evolution updates between trajectory rows"},
      {"progress_every", "seeds between progress lines on stderr"},
      {"replay", "off | record | replay: gateway request log mode"},
      {"retry.max_retries", "retries after a transport failure"},
      {"retry.backoff_ms", "first retry delay in milliseconds (doubles each retry)"},
      {"retry.backoff_factor", "multiplier between consecutive retry delays"},
      {"paths.seed", "seed dataset (JSONL)"},
      {"paths.out_dir", "directory for artifacts without an explicit path"},
      {"paths.output", "output dataset (default <out_dir>/output.jsonl)"},
      {"paths.candidate_log", "candidate audit log (default <out_dir>/candidates.jsonl)"},
      {"paths.checkpoint", "checkpoint file (default <out_dir>/checkpoint.json)"},
      {"paths.trajectory", "pair probability trajectory (default <out_dir>/trajectory.csv)"},
      {"paths.replay_log", "gateway replay log (default <out_dir>/replay.jsonl)"},
      {"templates.referee_system", "referee system prompt file"},
      {"templates.referee_user", "referee user template file"},
      {"templates.rewrite", "instruction rewriting template file"},
      {"templates.respond", "response generation template file"},
  };
  return keys;
}

std::string override_env_name(std::string_view key) {
  std::string out = "PAIRFORGE_";
  for (char c : key) out += c == '.' ? '_' : static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return out;
}

void apply_override(Json& doc, std::string_view key, std::string_view value) {
  const auto& keys = override_keys();
  if (std::none_of(keys.begin(), keys.end(), [&](const OverrideKey& k) { return k.key == key; })) {
    throw ConfigError("unknown override key '" + std::string(key) + "'");
  }
  Json parsed;
  try {
    parsed = Json::parse(value);
    if (parsed.is_object() || parsed.is_array()) parsed = std::string(value);
  } catch (const nlohmann::json::exception&) {
    parsed = std::string(value);
  }
  Json* node = &doc;
  std::string_view rest = key;
  while (true) {
    auto dot = rest.find('.');
    std::string part(rest.substr(0, dot));
    if (dot == std::string_view::npos) {
      (*node)[part] = parsed;
      break;
    }
    if (!node->contains(part) || !(*node)[part].is_object()) (*node)[part] = Json::object();
    node = &(*node)[part];
    rest = rest.substr(dot + 1);
  }
}

void apply_overrides(Json& doc, const std::vector<std::string>& assignments) {
  for (const auto& a : assignments) {
    auto eq = a.find('=');
    if (eq == std::string::npos) throw ConfigError("override '" + a + "' is not key=value");
    apply_override(doc, trim(a.substr(0, eq)), a.substr(eq + 1));
  }
}

void apply_env_overrides(Json& doc) {
  for (const auto& k : override_keys()) {
    if (const char* v = std::getenv(override_env_name(k.key).c_str())) apply_override(doc, k.key, v);
  }
}

// ------------------------------------------------------------ parsing

namespace {

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  try {
    return it->get<T>();
  } catch (const nlohmann::json::exception&) {
    throw ConfigError(std::string("field '") + key + "' has the wrong type");
  }
}

std::size_t get_count(const Json& j, const char* key, std::size_t fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  if (!it->is_number_integer() && !it->is_number_unsigned()) {
    throw ConfigError(std::string(key) + " must be an integer");
  }
  auto v = it->get<long long>();
  if (v < 0) throw ConfigError(std::string(key) + " must be >= 0");
  return static_cast<std::size_t>(v);
}

LogprobMode parse_logprob_mode(const std::string& s) {
  if (s == "hash") return LogprobMode::hash;
  if (s == "uniform") return LogprobMode::uniform;
  throw ConfigError("mock.logprobs must be hash or uniform");
}

RefereePolicy parse_referee_policy(const std::string& s) {
  if (s == "hash") return RefereePolicy::hash;
  if (s == "longer") return RefereePolicy::longer;
  if (s == "A") return RefereePolicy::always_a;
  if (s == "B") return RefereePolicy::always_b;
  if (s == "C") return RefereePolicy::always_c;
  throw ConfigError("mock.referee_policy must be hash, longer, A, B or C");
}

std::string referee_policy_name(RefereePolicy p) {
  switch (p) {
    case RefereePolicy::hash: return "hash";
    case RefereePolicy::longer: return "longer";
    case RefereePolicy::always_a: return "A";
    case RefereePolicy::always_b: return "B";
    case RefereePolicy::always_c: return "C";
  }
  return "hash";
}

AgentId agent_from_json(const Json& j, std::size_t embedding_dim) {
  if (!j.is_object()) throw ConfigError("agents: every entry must be an object");
  AgentId a;
  a.name = get_or<std::string>(j, "name", "");
  a.role = parse_role(get_or<std::string>(j, "role", ""));
  a.backend = parse_backend(get_or<std::string>(j, "backend", "mock"));
  a.model = get_or<std::string>(j, "model", a.name);
  a.endpoint = get_or<std::string>(j, "endpoint", "");
  a.api_key_env = get_or<std::string>(j, "api_key_env", "");
  a.bos_text = get_or<std::string>(j, "bos_text", "");
  a.temperature = get_or<double>(j, "temperature", 0.7);
  a.mock.embedding_dim = embedding_dim;
  if (auto it = j.find("mock"); it != j.end()) {
    const Json& m = *it;
    a.mock.generation_template = get_or<std::string>(m, "template", a.mock.generation_template);
    a.mock.words_min = get_or<int>(m, "words_min", a.mock.words_min);
    a.mock.words_max = get_or<int>(m, "words_max", a.mock.words_max);
    a.mock.logprob_mode = parse_logprob_mode(get_or<std::string>(m, "logprobs", "hash"));
    a.mock.uniform_logprob = get_or<double>(m, "uniform_value", a.mock.uniform_logprob);
    a.mock.logprob_min = get_or<double>(m, "logprob_min", a.mock.logprob_min);
    a.mock.logprob_max = get_or<double>(m, "logprob_max", a.mock.logprob_max);
    a.mock.conditioned_shift = get_or<double>(m, "conditioned_shift", a.mock.conditioned_shift);
    a.mock.referee_policy = parse_referee_policy(get_or<std::string>(m, "referee_policy", "hash"));
    a.mock.embedding_dim = get_count(m, "dim", embedding_dim);
  }
  return a;
}

Json agent_to_json(const AgentId& a) {
  return {{"name", a.name},
          {"role", to_string(a.role)},
          {"backend", to_string(a.backend)},
          {"model", a.model},
          {"endpoint", a.endpoint},
          {"api_key_env", a.api_key_env},
          {"bos_text", a.bos_text},
          {"temperature", a.temperature},
          {"mock",
           {{"template", a.mock.generation_template},
            {"words_min", a.mock.words_min},
            {"words_max", a.mock.words_max},
            {"logprobs", a.mock.logprob_mode == LogprobMode::hash ? "hash" : "uniform"},
            {"uniform_value", a.mock.uniform_logprob},
            {"logprob_min", a.mock.logprob_min},
            {"logprob_max", a.mock.logprob_max},
            {"conditioned_shift", a.mock.conditioned_shift},
            {"referee_policy", referee_policy_name(a.mock.referee_policy)},
            {"dim", a.mock.embedding_dim}}}};
}

const std::set<std::string>& top_level_keys() {
  static const std::set<std::string> keys{
      "agents", "instruction_agents", "response_agents", "base_pairs", "referee", "scorer_small", "scorer_large",
      "embedder", "M", "l", "n", "beta", "tau", "capacity", "workers", "seed", "embedding_dim", "reward_mode",
      "referee_question", "referee_orderings", "templates", "paths", "retry", "max_in_flight", "checkpoint_every",
      "trajectory_stride", "progress_every", "replay"};
  return keys;
}

int index_of(const std::vector<std::string>& names, const std::string& name, const char* field) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw ConfigError(std::string("base_pairs: '") + name + "' is not one of the " + field);
  return static_cast<int>(it - names.begin());
}

void resolve_relative(Json& section, const fs::path& dir) {
  if (!section.is_object()) return;
  for (auto& [key, value] : section.items()) {
    if (!value.is_string()) continue;
    fs::path p(value.get<std::string>());
    if (!p.empty() && p.is_relative()) value = (dir / p).lexically_normal().string();
  }
}

}  // namespace

Json load_config_document(const fs::path& path) {
  Json doc;
  try {
    doc = Json::parse(read_file(path));
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config '" + path.string() + "' is not valid JSON: " + e.what());
  } catch (const IoError& e) {
    throw ConfigError(e.what());
  }
  if (!doc.is_object()) throw ConfigError("config '" + path.string() + "' must be a JSON object");
  const fs::path dir = path.parent_path().empty() ? fs::path(".") : path.parent_path();
  if (doc.contains("paths")) resolve_relative(doc["paths"], dir);
  if (doc.contains("templates")) resolve_relative(doc["templates"], dir);
  return doc;
}

PipelineConfig config_from_json(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("config must be a JSON object");
  for (auto& [key, value] : doc.items()) {
    if (!top_level_keys().count(key)) throw ConfigError("unknown config field '" + key + "'");
  }
  PipelineConfig c;
  c.pairs_per_seed = get_count(doc, "M", c.pairs_per_seed);
  if (doc.contains("l") && !doc["l"].is_null()) c.memory_draws = get_count(doc, "l", 0);
  c.memory_query_size = get_count(doc, "n", c.memory_query_size);
  c.beta = get_or<double>(doc, "beta", c.beta);
  c.tau = get_or<double>(doc, "tau", c.tau);
  c.bank_capacity = get_count(doc, "capacity", c.bank_capacity);
  c.workers = get_count(doc, "workers", c.workers);
  c.seed = get_or<std::uint64_t>(doc, "seed", c.seed);
  c.embedding_dim = get_count(doc, "embedding_dim", c.embedding_dim);
  c.max_in_flight = get_count(doc, "max_in_flight", c.max_in_flight);
  c.checkpoint_every = get_count(doc, "checkpoint_every", c.checkpoint_every);
  c.trajectory_stride = get_count(doc, "trajectory_stride", c.trajectory_stride);
  c.progress_every = get_count(doc, "progress_every", c.progress_every);
  c.referee_orderings = get_or<int>(doc, "referee_orderings", c.referee_orderings);

  auto mode = get_or<std::string>(doc, "reward_mode", "all");
  if (mode == "all") c.reward_mode = RewardMode::all;
  else if (mode == "winner") c.reward_mode = RewardMode::winner;
  else throw ConfigError("reward_mode must be all or winner");

  auto question = get_or<std::string>(doc, "referee_question", "candidate");
  if (question == "candidate") c.referee_question = RefereeQuestion::candidate;
  else if (question == "base") c.referee_question = RefereeQuestion::base;
  else if (question == "seed") c.referee_question = RefereeQuestion::seed;
  else throw ConfigError("referee_question must be candidate, base or seed");

  auto replay = get_or<std::string>(doc, "replay", "off");
  if (replay == "off") c.replay = ReplayMode::off;
  else if (replay == "record") c.replay = ReplayMode::record;
  else if (replay == "replay") c.replay = ReplayMode::replay;
  else throw ConfigError("replay must be off, record or replay");

  if (auto it = doc.find("agents"); it != doc.end()) {
    if (!it->is_array()) throw ConfigError("agents must be an array");
    for (const auto& a : *it) c.agents.push_back(agent_from_json(a, c.embedding_dim));
  }
  c.instruction_agents = get_or<std::vector<std::string>>(doc, "instruction_agents", {});
  c.response_agents = get_or<std::vector<std::string>>(doc, "response_agents", {});
  c.referee = get_or<std::string>(doc, "referee", "");
  c.scorer_small = get_or<std::string>(doc, "scorer_small", "");
  c.scorer_large = get_or<std::string>(doc, "scorer_large", "");
  c.embedder = get_or<std::string>(doc, "embedder", "");
  if (auto it = doc.find("base_pairs"); it != doc.end()) {
    if (!it->is_array()) throw ConfigError("base_pairs must be an array");
    for (const auto& bp : *it) {
      if (bp.is_array() && bp.size() == 2 && bp[0].is_string() && bp[1].is_string()) {
        c.base_pairs.push_back({index_of(c.instruction_agents, bp[0].get<std::string>(), "instruction_agents"),
                                index_of(c.response_agents, bp[1].get<std::string>(), "response_agents")});
      } else if (bp.is_string()) {
        c.base_pairs.push_back(AgentPair::parse(bp.get<std::string>()));
      } else {
        throw ConfigError("base_pairs entries must be [instruction_agent, response_agent] or \"j:k\"");
      }
    }
  }

  if (auto it = doc.find("templates"); it != doc.end()) {
    c.templates.referee_system = get_or<std::string>(*it, "referee_system", "");
    c.templates.referee_user = get_or<std::string>(*it, "referee_user", "");
    c.templates.rewrite = get_or<std::string>(*it, "rewrite", "");
    c.templates.respond = get_or<std::string>(*it, "respond", "");
  }
  if (auto it = doc.find("paths"); it != doc.end()) {
    c.paths.seed = get_or<std::string>(*it, "seed", "");
    c.paths.out_dir = get_or<std::string>(*it, "out_dir", ".");
    c.paths.output = get_or<std::string>(*it, "output", "");
    c.paths.candidate_log = get_or<std::string>(*it, "candidate_log", "");
    c.paths.checkpoint = get_or<std::string>(*it, "checkpoint", "");
    c.paths.trajectory = get_or<std::string>(*it, "trajectory", "");
    c.paths.replay_log = get_or<std::string>(*it, "replay_log", "");
  }
  if (auto it = doc.find("retry"); it != doc.end()) {
    c.retry.max_retries = get_or<int>(*it, "max_retries", c.retry.max_retries);
    c.retry.initial_backoff = std::chrono::milliseconds(get_count(*it, "backoff_ms", 1000));
    c.retry.backoff_factor = get_or<double>(*it, "backoff_factor", c.retry.backoff_factor);
  }
  return c;
}

Json config_to_json(const PipelineConfig& c) {
  Json agents = Json::array();
  for (const auto& a : c.agents) agents.push_back(agent_to_json(a));
  Json base = Json::array();
  for (auto bp : c.base_pairs) base.push_back(bp.to_string());
  Json doc = {{"agents", agents},
              {"instruction_agents", c.instruction_agents},
              {"response_agents", c.response_agents},
              {"base_pairs", base},
              {"referee", c.referee},
              {"scorer_small", c.scorer_small},
              {"scorer_large", c.scorer_large},
              {"embedder", c.embedder},
              {"M", c.pairs_per_seed},
              {"l", c.effective_memory_draws()},
              {"n", c.memory_query_size},
              {"beta", c.beta},
              {"tau", c.tau},
              {"capacity", c.bank_capacity},
              {"workers", c.workers},
              {"seed", c.seed},
              {"embedding_dim", c.embedding_dim},
              {"reward_mode", c.reward_mode == RewardMode::all ? "all" : "winner"},
              {"referee_question", c.referee_question == RefereeQuestion::candidate ? "candidate"
                                   : c.referee_question == RefereeQuestion::base    ? "base"
                                                                                    : "seed"},
              {"referee_orderings", c.referee_orderings},
              {"templates",
               {{"referee_system", c.templates.referee_system.string()},
                {"referee_user", c.templates.referee_user.string()},
                {"rewrite", c.templates.rewrite.string()},
                {"respond", c.templates.respond.string()}}},
              {"paths",
               {{"seed", c.paths.seed.string()},
                {"out_dir", c.paths.out_dir.string()},
                {"output", c.paths.output.string()},
                {"candidate_log", c.paths.candidate_log.string()},
                {"checkpoint", c.paths.checkpoint.string()},
                {"trajectory", c.paths.trajectory.string()},
                {"replay_log", c.paths.replay_log.string()}}},
              {"retry",
               {{"max_retries", c.retry.max_retries},
                {"backoff_ms", c.retry.initial_backoff.count()},
                {"backoff_factor", c.retry.backoff_factor}}},
              {"max_in_flight", c.max_in_flight},
              {"checkpoint_every", c.checkpoint_every},
              {"trajectory_stride", c.trajectory_stride},
              {"progress_every", c.progress_every},
              {"replay", c.replay == ReplayMode::off ? "off" : c.replay == ReplayMode::record ? "record" : "replay"}};
  return doc;
}

std::string config_fingerprint(const PipelineConfig& config) {
  Json doc = config_to_json(config);
  // Settings that do not change results.
  for (auto key : {"paths", "retry", "max_in_flight", "checkpoint_every", "progress_every", "replay"}) doc.erase(key);
  return to_hex(hash_fields(doc.dump()));
}

Json demo_config_document(std::size_t instruction_agents, std::size_t response_agents) {
  Json agents = Json::array();
  Json ins = Json::array(), res = Json::array();
  for (std::size_t j = 0; j < instruction_agents; ++j) {
    std::string name = "rewriter-" + std::to_string(j);
    agents.push_back({{"name", name}, {"role", "instruction_rewriter"}, {"backend", "mock"},
                      {"mock", {{"words_min", 6}, {"words_max", 14 + 4 * j}}}});
    ins.push_back(name);
  }
  for (std::size_t k = 0; k < response_agents; ++k) {
    std::string name = "responder-" + std::to_string(k);
    agents.push_back({{"name", name}, {"role", "response_generator"}, {"backend", "mock"},
                      {"mock", {{"words_min", 10 + 5 * k}, {"words_max", 30 + 10 * k}}}});
    res.push_back(name);
  }
  agents.push_back({{"name", "judge"}, {"role", "referee"}, {"backend", "mock"}, {"mock", {{"referee_policy", "longer"}}}});
  agents.push_back({{"name", "small"}, {"role", "scorer_small"}, {"backend", "mock"}, {"model", "mock-small"}});
  agents.push_back({{"name", "large"}, {"role", "scorer_large"}, {"backend", "mock"}, {"model", "mock-large"},
                    {"mock", {{"conditioned_shift", 0.4}}}});
  agents.push_back({{"name", "embed"}, {"role", "embedder"}, {"backend", "mock"}, {"model", "mock-embed"}});
  return {{"agents", agents},
          {"instruction_agents", ins},
          {"response_agents", res},
          {"base_pairs", Json::array({Json::array({ins[0], res[0]})})},
          {"referee", "judge"},
          {"scorer_small", "small"},
          {"scorer_large", "large"},
          {"embedder", "embed"},
          {"M", 2},
          {"n", 5},
          {"beta", 0.05},
          {"tau", 0.5},
          {"capacity", 10000},
          {"workers", 1},
          {"seed", 7},
          {"embedding_dim", 32},
          {"retry", {{"max_retries", 3}, {"backoff_ms", 1000}}},
          {"paths", {{"out_dir", "."}}}};
}

}  // namespace pairforge
