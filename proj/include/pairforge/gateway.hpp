#pragma once

#include <atomic>
#include <chrono>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <semaphore>
#include <string>
#include <string_view>
#include <vector>

#include "pairforge/dataset.hpp"

namespace pairforge {

enum class Role { instruction_rewriter, response_generator, referee, scorer_small, scorer_large, embedder };
enum class BackendKind { http, mock };

std::string_view to_string(Role role);
Role parse_role(std::string_view text);
std::string_view to_string(BackendKind kind);
BackendKind parse_backend(std::string_view text);

enum class LogprobMode { hash, uniform };
enum class RefereePolicy { hash, longer, always_a, always_b, always_c };

/// Knobs of the deterministic mock backend. Ignored for http agents.
struct MockSettings {
  /// Generation template. Placeholders: {name} {model} {seed} {hash} {words}.
  /// {hash} is the FNV-1a 64 hash of the user prompt as 16 lowercase hex
  /// digits; {words} is a pseudo-random word run seeded by
  /// (name, system prompt, user prompt, seed).
  std::string generation_template = "{words}";
  int words_min = 8;
  int words_max = 40;

  LogprobMode logprob_mode = LogprobMode::hash;
  double uniform_logprob = -2.0;
  /// hash mode: token logprob = -(min + (max - min) * u), u drawn from
  /// (model, token, context-present flag).
  double logprob_min = 0.05;
  double logprob_max = 6.0;
  /// Added to conditioned logprobs (clamped to <= 0). Positive values model a
  /// scorer that benefits more from the instruction.
  double conditioned_shift = 0.0;

  RefereePolicy referee_policy = RefereePolicy::hash;

  std::size_t embedding_dim = 64;
};

struct AgentId {
  std::string name;
  Role role = Role::response_generator;
  BackendKind backend = BackendKind::mock;
  std::string endpoint;     // http only, e.g. "http://127.0.0.1:8000"
  std::string model;
  std::string api_key_env;  // name of the environment variable holding the bearer token
  /// Text prepended when scoring with an empty context on backends that
  /// need a non-empty prompt; its tokens are excluded from the scored span.
  std::string bos_text;
  double temperature = 0.7;
  MockSettings mock;
};

struct TokenLogprobs {
  std::vector<std::string> tokens;
  std::vector<double> logprobs;

  /// Throws IntegrityError unless sizes match, are >= 1 and all logprobs <= 0.
  void validate() const;
  bool operator==(const TokenLogprobs&) const = default;
};

struct Prompt {
  std::string system;  // may be empty
  std::string user;
};

/// Raw capability provider. Implementations do not retry and do not check
/// roles; Gateway does both.
class Backend {
 public:
  virtual ~Backend() = default;
  virtual std::string generate(const AgentId& agent, const Prompt& prompt, std::uint64_t seed) = 0;
  /// Logprobs of `continuation` given `context` (possibly empty).
  virtual TokenLogprobs score(const AgentId& agent, std::string_view context, std::string_view continuation) = 0;
  virtual std::vector<double> embed(const AgentId& agent, std::string_view text) = 0;
};

/// Pure-function backend used by tests, CI and offline runs.
class MockBackend final : public Backend {
 public:
  std::string generate(const AgentId& agent, const Prompt& prompt, std::uint64_t seed) override;
  TokenLogprobs score(const AgentId& agent, std::string_view context, std::string_view continuation) override;
  std::vector<double> embed(const AgentId& agent, std::string_view text) override;

  /// Whitespace tokenizer the mock scorer uses.
  static std::vector<std::string> tokenize(std::string_view text);
  /// The logprob the hash-mode mock assigns to one token.
  static double token_logprob(const AgentId& agent, std::string_view token, bool has_context);
};

/// OpenAI-compatible HTTP backend:
///   generate -> POST {endpoint}/v1/chat/completions
///   score    -> POST {endpoint}/v1/completions with echo + logprobs, max_tokens 0
///   embed    -> POST {endpoint}/v1/embeddings
/// Status mapping: connection failure, 5xx and 429 -> TransportError; other
/// 4xx -> PermanentError; malformed body -> ContentError.
class HttpBackend final : public Backend {
 public:
  explicit HttpBackend(std::chrono::seconds timeout = std::chrono::seconds(120)) : timeout_(timeout) {}
  std::string generate(const AgentId& agent, const Prompt& prompt, std::uint64_t seed) override;
  TokenLogprobs score(const AgentId& agent, std::string_view context, std::string_view continuation) override;
  std::vector<double> embed(const AgentId& agent, std::string_view text) override;

 private:
  Json post(const AgentId& agent, const std::string& path, const Json& body) const;
  std::chrono::seconds timeout_;
};

/// Appends every request/response of the wrapped backend to a JSONL file.
class RecordingBackend final : public Backend {
 public:
  RecordingBackend(std::shared_ptr<Backend> inner, const std::filesystem::path& path);
  std::string generate(const AgentId& agent, const Prompt& prompt, std::uint64_t seed) override;
  TokenLogprobs score(const AgentId& agent, std::string_view context, std::string_view continuation) override;
  std::vector<double> embed(const AgentId& agent, std::string_view text) override;

 private:
  void append(const Json& request, const Json& response);
  std::shared_ptr<Backend> inner_;
  std::filesystem::path path_;
  std::mutex mu_;
};

/// Serves responses from a file written by RecordingBackend. Unknown
/// requests raise CapabilityError.
class ReplayBackend final : public Backend {
 public:
  explicit ReplayBackend(const std::filesystem::path& path);
  std::string generate(const AgentId& agent, const Prompt& prompt, std::uint64_t seed) override;
  TokenLogprobs score(const AgentId& agent, std::string_view context, std::string_view continuation) override;
  std::vector<double> embed(const AgentId& agent, std::string_view text) override;
  std::size_t size() const { return responses_.size(); }

 private:
  const Json& lookup(const Json& request) const;
  std::map<std::string, Json> responses_;
};

/// Request keys shared by the recorder and the replayer.
Json generate_request(const AgentId& agent, const Prompt& prompt, std::uint64_t seed);
Json score_request(const AgentId& agent, std::string_view context, std::string_view continuation);
Json embed_request(const AgentId& agent, std::string_view text);

struct RetryPolicy {
  int max_retries = 3;
  std::chrono::milliseconds initial_backoff{1000};
  double backoff_factor = 2.0;
};

/// Role-checked, retrying, concurrency-capped access to the backends.
/// Safe to call from many threads.
class Gateway {
 public:
  Gateway(std::shared_ptr<Backend> mock, std::shared_ptr<Backend> http, RetryPolicy retry = {},
          std::ptrdiff_t max_in_flight = 8);

  /// Convenience: mock-only gateway.
  static Gateway mock_only();

  std::string generate(const AgentId& agent, const Prompt& prompt, std::uint64_t seed);
  TokenLogprobs score_logprobs(const AgentId& agent, std::string_view context, std::string_view continuation);
  std::vector<double> embed(const AgentId& agent, std::string_view text, std::size_t expected_dim);

  std::uint64_t retries() const { return retries_.load(); }
  std::uint64_t calls() const { return calls_.load(); }

  /// Receives one line per retry and similar events.
  void set_log_sink(std::function<void(const std::string&)> sink) { log_ = std::move(sink); }
  /// Replaces the sleep between retries (tests).
  void set_sleeper(std::function<void(std::chrono::milliseconds)> sleeper) { sleep_ = std::move(sleeper); }

 private:
  struct Lane {
    std::shared_ptr<Backend> backend;
    std::unique_ptr<std::counting_semaphore<>> slots;
  };
  Lane& lane(const AgentId& agent);
  template <typename Fn>
  auto with_retries(const AgentId& agent, const char* op, Fn&& fn) -> decltype(fn(std::declval<Backend&>()));

  Lane mock_;
  Lane http_;
  RetryPolicy retry_;
  std::atomic<std::uint64_t> retries_{0};
  std::atomic<std::uint64_t> calls_{0};
  std::function<void(const std::string&)> log_;
  std::function<void(std::chrono::milliseconds)> sleep_;
};

}  // namespace pairforge
