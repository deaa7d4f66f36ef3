#include "pairforge/gateway.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <thread>

#include <httplib.h>

#include "pairforge/error.hpp"
#include "pairforge/hashing.hpp"

namespace pairforge {

std::string to_hex(std::uint64_t value) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[static_cast<std::size_t>(i)] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

namespace {

constexpr std::array<std::pair<Role, std::string_view>, 6> kRoles{{
    {Role::instruction_rewriter, "instruction_rewriter"},
    {Role::response_generator, "response_generator"},
    {Role::referee, "referee"},
    {Role::scorer_small, "scorer_small"},
    {Role::scorer_large, "scorer_large"},
    {Role::embedder, "embedder"},
}};

}  // namespace

std::string_view to_string(Role role) {
  for (auto& [r, name] : kRoles) {
    if (r == role) return name;
  }
  return "unknown";
}

Role parse_role(std::string_view text) {
  for (auto& [r, name] : kRoles) {
    if (name == text) return r;
  }
  throw ConfigError("unknown agent role '" + std::string(text) + "'");
}

std::string_view to_string(BackendKind kind) { return kind == BackendKind::http ? "http" : "mock"; }

BackendKind parse_backend(std::string_view text) {
  if (text == "http") return BackendKind::http;
  if (text == "mock") return BackendKind::mock;
  throw ConfigError("unknown backend '" + std::string(text) + "'");
}

void TokenLogprobs::validate() const {
  if (tokens.size() != logprobs.size()) throw IntegrityError("token and logprob counts differ");
  if (tokens.empty()) throw IntegrityError("no tokens scored");
  for (double lp : logprobs) {
    if (!(lp <= 0.0)) throw IntegrityError("logprob " + std::to_string(lp) + " is positive or NaN");
  }
}

// ---------------------------------------------------------------- mock

namespace {

constexpr std::array<std::string_view, 48> kWords{
    "data",    "model",   "explain", "step",    "careful",  "detail",  "example", "result",
    "reason",  "answer",  "simple",  "complex", "analysis", "method",  "proof",   "value",
    "system",  "design",  "tradeoff", "measure", "describe", "compare", "list",    "context",
    "first",   "second",  "finally", "because", "therefore", "however", "consider", "note",
    "graph",   "vector",  "matrix",  "story",   "poem",     "code",    "function", "test",
    "history", "science", "policy",  "market",  "energy",   "health",  "travel",  "music"};

std::string replace_all(std::string text, std::string_view key, std::string_view value) {
  std::size_t pos = 0;
  while ((pos = text.find(key, pos)) != std::string::npos) {
    text.replace(pos, key.size(), value);
    pos += value.size();
  }
  return text;
}

std::string pseudo_words(const AgentId& agent, const Prompt& prompt, std::uint64_t seed) {
  Rng rng(hash_fields(agent.name, prompt.system, prompt.user, std::to_string(seed)));
  int lo = std::max(1, agent.mock.words_min);
  int hi = std::max(lo, agent.mock.words_max);
  auto count = lo + static_cast<int>(rng() % static_cast<std::uint64_t>(hi - lo + 1));
  std::string out;
  for (int i = 0; i < count; ++i) {
    if (i) out += ' ';
    out += kWords[rng() % kWords.size()];
  }
  return out;
}

// Pull the text between two markers of the referee template.
std::string_view between(std::string_view text, std::string_view open, std::string_view close) {
  auto a = text.find(open);
  if (a == std::string_view::npos) return {};
  a += open.size();
  auto b = text.find(close, a);
  if (b == std::string_view::npos) return {};
  return text.substr(a, b - a);
}

std::string mock_verdict(const AgentId& agent, const Prompt& prompt, std::uint64_t seed) {
  auto h = hash_fields(agent.name, prompt.system, prompt.user, std::to_string(seed));
  char marker = 'C';
  switch (agent.mock.referee_policy) {
    case RefereePolicy::always_a: marker = 'A'; break;
    case RefereePolicy::always_b: marker = 'B'; break;
    case RefereePolicy::always_c: marker = 'C'; break;
    case RefereePolicy::hash: marker = "ABC"[h % 3]; break;
    case RefereePolicy::longer: {
      auto a = trim(between(prompt.user, "[The Start of Assistant A's Answer]", "[The End of Assistant A's Answer]"));
      auto b = trim(between(prompt.user, "[The Start of Assistant B's Answer]", "[The End of Assistant B's Answer]"));
      marker = a.size() > b.size() ? 'A' : (b.size() > a.size() ? 'B' : 'C');
      break;
    }
  }
  return "Assessment " + to_hex(h).substr(0, 8) + ": after comparing both answers, my verdict is [[" + marker + "]]";
}

}  // namespace

std::vector<std::string> MockBackend::tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::size_t i = 0;
  auto is_space = [](char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; };
  while (i < text.size()) {
    while (i < text.size() && is_space(text[i])) ++i;
    std::size_t start = i;
    while (i < text.size() && !is_space(text[i])) ++i;
    if (i > start) tokens.emplace_back(text.substr(start, i - start));
  }
  return tokens;
}

double MockBackend::token_logprob(const AgentId& agent, std::string_view token, bool has_context) {
  const auto& m = agent.mock;
  if (m.logprob_mode == LogprobMode::uniform) return m.uniform_logprob;
  double u = unit_interval(hash_fields(agent.model, token, has_context ? "1" : "0"));
  double lp = -(m.logprob_min + (m.logprob_max - m.logprob_min) * u);
  if (has_context) lp = std::min(0.0, lp + m.conditioned_shift);
  return lp;
}

std::string MockBackend::generate(const AgentId& agent, const Prompt& prompt, std::uint64_t seed) {
  if (agent.role == Role::referee) return mock_verdict(agent, prompt, seed);
  std::string out = agent.mock.generation_template;
  out = replace_all(out, "{name}", agent.name);
  out = replace_all(out, "{model}", agent.model);
  out = replace_all(out, "{seed}", std::to_string(seed));
  out = replace_all(out, "{hash}", to_hex(fnv1a64(prompt.user)));
  if (out.find("{words}") != std::string::npos) out = replace_all(out, "{words}", pseudo_words(agent, prompt, seed));
  return out;
}

TokenLogprobs MockBackend::score(const AgentId& agent, std::string_view context, std::string_view continuation) {
  TokenLogprobs out;
  out.tokens = tokenize(continuation);
  out.logprobs.reserve(out.tokens.size());
  bool has_context = !context.empty();
  for (const auto& t : out.tokens) out.logprobs.push_back(token_logprob(agent, t, has_context));
  return out;
}

std::vector<double> MockBackend::embed(const AgentId& agent, std::string_view text) {
  const std::size_t d = agent.mock.embedding_dim;
  std::vector<double> v(d, 0.0);
  for (const auto& token : tokenize(text)) {
    for (std::size_t i = 0; i < d; ++i) {
      v[i] += 2.0 * unit_interval(hash_fields(agent.model, token, std::to_string(i))) - 1.0;
    }
  }
  double norm = 0.0;
  for (double x : v) norm += x * x;
  norm = std::sqrt(norm);
  if (norm > 0.0) {
    for (double& x : v) x /= norm;
  }
  return v;
}

// ---------------------------------------------------------------- http

namespace {

std::size_t utf8_length(std::string_view s) {
  std::size_t n = 0;
  for (unsigned char c : s) {
    if ((c & 0xc0) != 0x80) ++n;
  }
  return n;
}

}  // namespace

Json HttpBackend::post(const AgentId& agent, const std::string& path, const Json& body) const {
  if (agent.endpoint.empty()) throw ConfigError("agent '" + agent.name + "' has no endpoint");
  httplib::Client client(agent.endpoint);
  client.set_connection_timeout(timeout_);
  client.set_read_timeout(timeout_);
  client.set_write_timeout(timeout_);
  httplib::Headers headers;
  if (!agent.api_key_env.empty()) {
    if (const char* key = std::getenv(agent.api_key_env.c_str())) {
      headers.emplace("Authorization", std::string("Bearer ") + key);
    }
  }
  auto res = client.Post(path, headers, body.dump(), "application/json");
  if (!res) {
    throw TransportError(agent.name + ": " + path + ": " + httplib::to_string(res.error()));
  }
  if (res->status == 429 || res->status >= 500) {
    throw TransportError(agent.name + ": " + path + ": HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw PermanentError(agent.name + ": " + path + ": HTTP " + std::to_string(res->status) + ": " + res->body);
  }
  try {
    return Json::parse(res->body);
  } catch (const nlohmann::json::exception&) {
    throw ContentError(agent.name + ": " + path + ": response is not JSON");
  }
}

std::string HttpBackend::generate(const AgentId& agent, const Prompt& prompt, std::uint64_t seed) {
  Json messages = Json::array();
  if (!prompt.system.empty()) messages.push_back({{"role", "system"}, {"content", prompt.system}});
  messages.push_back({{"role", "user"}, {"content", prompt.user}});
  Json body = {{"model", agent.model}, {"messages", messages}, {"seed", seed}, {"temperature", agent.temperature}};
  Json res = post(agent, "/v1/chat/completions", body);
  try {
    return res.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception&) {
    throw ContentError(agent.name + ": chat completion without message content");
  }
}

TokenLogprobs HttpBackend::score(const AgentId& agent, std::string_view context, std::string_view continuation) {
  std::string prefix(context.empty() ? std::string_view(agent.bos_text) : context);
  Json body = {{"model", agent.model},
               {"prompt", prefix + std::string(continuation)},
               {"max_tokens", 0},
               {"echo", true},
               {"logprobs", 0},
               {"temperature", 0.0}};
  Json res = post(agent, "/v1/completions", body);
  TokenLogprobs out;
  try {
    const Json& lp = res.at("choices").at(0).at("logprobs");
    if (lp.is_null()) throw CapabilityError(agent.name + ": backend does not return logprobs");
    const Json& tokens = lp.at("tokens");
    const Json& values = lp.at("token_logprobs");
    const Json& offsets = lp.at("text_offset");
    if (tokens.size() != values.size() || tokens.size() != offsets.size()) {
      throw IntegrityError(agent.name + ": logprob arrays differ in length");
    }
    const std::size_t start = utf8_length(prefix);
    for (std::size_t i = 0; i < tokens.size(); ++i) {
      if (offsets[i].get<std::size_t>() < start) continue;
      if (values[i].is_null()) {
        throw CapabilityError(agent.name + ": no logprob for leading token; configure bos_text");
      }
      out.tokens.push_back(tokens[i].get<std::string>());
      out.logprobs.push_back(values[i].get<double>());
    }
  } catch (const nlohmann::json::exception&) {
    throw ContentError(agent.name + ": completion response without logprobs");
  }
  return out;
}

std::vector<double> HttpBackend::embed(const AgentId& agent, std::string_view text) {
  Json res = post(agent, "/v1/embeddings", {{"model", agent.model}, {"input", std::string(text)}});
  try {
    return res.at("data").at(0).at("embedding").get<std::vector<double>>();
  } catch (const nlohmann::json::exception&) {
    throw ContentError(agent.name + ": embeddings response without a vector");
  }
}

// ---------------------------------------------------------------- replay

Json generate_request(const AgentId& agent, const Prompt& prompt, std::uint64_t seed) {
  return {{"op", "generate"}, {"agent", agent.name}, {"model", agent.model},
          {"system", prompt.system}, {"user", prompt.user}, {"seed", seed}};
}

Json score_request(const AgentId& agent, std::string_view context, std::string_view continuation) {
  return {{"op", "score"}, {"agent", agent.name}, {"model", agent.model},
          {"context", std::string(context)}, {"continuation", std::string(continuation)}};
}

Json embed_request(const AgentId& agent, std::string_view text) {
  return {{"op", "embed"}, {"agent", agent.name}, {"model", agent.model}, {"text", std::string(text)}};
}

RecordingBackend::RecordingBackend(std::shared_ptr<Backend> inner, const std::filesystem::path& path)
    : inner_(std::move(inner)), path_(path) {}

void RecordingBackend::append(const Json& request, const Json& response) {
  Json line = {{"request", request}, {"response", response}};
  std::lock_guard lock(mu_);
  std::ofstream out(path_, std::ios::app | std::ios::binary);
  if (!out) throw IoError("cannot append to replay log '" + path_.string() + "'");
  out << line.dump() << '\n';
}

std::string RecordingBackend::generate(const AgentId& agent, const Prompt& prompt, std::uint64_t seed) {
  auto text = inner_->generate(agent, prompt, seed);
  append(generate_request(agent, prompt, seed), {{"text", text}});
  return text;
}

TokenLogprobs RecordingBackend::score(const AgentId& agent, std::string_view context, std::string_view continuation) {
  auto lp = inner_->score(agent, context, continuation);
  append(score_request(agent, context, continuation), {{"tokens", lp.tokens}, {"logprobs", lp.logprobs}});
  return lp;
}

std::vector<double> RecordingBackend::embed(const AgentId& agent, std::string_view text) {
  auto v = inner_->embed(agent, text);
  append(embed_request(agent, text), {{"embedding", v}});
  return v;
}

ReplayBackend::ReplayBackend(const std::filesystem::path& path) {
  std::istringstream in(read_file(path));
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    try {
      Json j = Json::parse(line);
      responses_[j.at("request").dump()] = j.at("response");
    } catch (const nlohmann::json::exception&) {
      throw ParseError("replay log line " + std::to_string(line_no) + ": malformed entry");
    }
  }
}

const Json& ReplayBackend::lookup(const Json& request) const {
  auto it = responses_.find(request.dump());
  if (it == responses_.end()) {
    throw CapabilityError("replay log has no response for " + request.at("op").get<std::string>() + " on agent '" +
                          request.at("agent").get<std::string>() + "'");
  }
  return it->second;
}

std::string ReplayBackend::generate(const AgentId& agent, const Prompt& prompt, std::uint64_t seed) {
  return lookup(generate_request(agent, prompt, seed)).at("text").get<std::string>();
}

TokenLogprobs ReplayBackend::score(const AgentId& agent, std::string_view context, std::string_view continuation) {
  const Json& r = lookup(score_request(agent, context, continuation));
  return {r.at("tokens").get<std::vector<std::string>>(), r.at("logprobs").get<std::vector<double>>()};
}

std::vector<double> ReplayBackend::embed(const AgentId& agent, std::string_view text) {
  return lookup(embed_request(agent, text)).at("embedding").get<std::vector<double>>();
}

// ---------------------------------------------------------------- gateway

Gateway::Gateway(std::shared_ptr<Backend> mock, std::shared_ptr<Backend> http, RetryPolicy retry,
                 std::ptrdiff_t max_in_flight)
    : retry_(retry), sleep_([](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); }) {
  if (max_in_flight < 1) throw ConfigError("max_in_flight must be >= 1");
  if (retry.max_retries < 0) throw ConfigError("retry.max_retries must be >= 0");
  mock_ = {std::move(mock), std::make_unique<std::counting_semaphore<>>(max_in_flight)};
  http_ = {std::move(http), std::make_unique<std::counting_semaphore<>>(max_in_flight)};
}

Gateway Gateway::mock_only() { return Gateway(std::make_shared<MockBackend>(), nullptr); }

Gateway::Lane& Gateway::lane(const AgentId& agent) {
  Lane& l = agent.backend == BackendKind::mock ? mock_ : http_;
  if (!l.backend) {
    throw ConfigError("agent '" + agent.name + "' uses the " + std::string(to_string(agent.backend)) +
                      " backend, which is not configured");
  }
  return l;
}

template <typename Fn>
auto Gateway::with_retries(const AgentId& agent, const char* op, Fn&& fn) -> decltype(fn(std::declval<Backend&>())) {
  Lane& l = lane(agent);
  auto backoff = retry_.initial_backoff;
  for (int attempt = 0;; ++attempt) {
    calls_.fetch_add(1);
    try {
      l.slots->acquire();
      struct Release {
        std::counting_semaphore<>* s;
        ~Release() { s->release(); }
      } release{l.slots.get()};
      return fn(*l.backend);
    } catch (const TransportError& e) {
      if (attempt >= retry_.max_retries) throw;
      retries_.fetch_add(1);
      if (log_) {
        log_("retry " + std::to_string(attempt + 1) + "/" + std::to_string(retry_.max_retries) + " " + op + " on '" +
             agent.name + "' after " + std::to_string(backoff.count()) + "ms: " + e.what());
      }
      sleep_(backoff);
      backoff = std::chrono::milliseconds(
          static_cast<std::chrono::milliseconds::rep>(static_cast<double>(backoff.count()) * retry_.backoff_factor));
    }
  }
}

std::string Gateway::generate(const AgentId& agent, const Prompt& prompt, std::uint64_t seed) {
  if (agent.role != Role::instruction_rewriter && agent.role != Role::response_generator && agent.role != Role::referee) {
    throw ContractError("agent '" + agent.name + "' with role " + std::string(to_string(agent.role)) + " cannot generate");
  }
  auto text = with_retries(agent, "generate", [&](Backend& b) { return b.generate(agent, prompt, seed); });
  if (trim(text).empty()) throw ContentError("agent '" + agent.name + "' returned an empty completion");
  return text;
}

TokenLogprobs Gateway::score_logprobs(const AgentId& agent, std::string_view context, std::string_view continuation) {
  if (agent.role != Role::scorer_small && agent.role != Role::scorer_large) {
    throw ContractError("agent '" + agent.name + "' is not a scorer");
  }
  if (trim(continuation).empty()) throw PreconditionError("cannot score an empty continuation");
  auto lp = with_retries(agent, "score", [&](Backend& b) { return b.score(agent, context, continuation); });
  lp.validate();
  return lp;
}

std::vector<double> Gateway::embed(const AgentId& agent, std::string_view text, std::size_t expected_dim) {
  if (agent.role != Role::embedder) throw ContractError("agent '" + agent.name + "' is not an embedder");
  if (trim(text).empty()) throw PreconditionError("cannot embed empty text");
  auto v = with_retries(agent, "embed", [&](Backend& b) { return b.embed(agent, text); });
  if (v.size() != expected_dim) {
    throw IntegrityError("agent '" + agent.name + "' returned a " + std::to_string(v.size()) +
                         "-dimensional embedding, expected " + std::to_string(expected_dim));
  }
  return v;
}

}  // namespace pairforge
