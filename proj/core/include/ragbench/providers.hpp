#pragma once

#include <chrono>
#include <cstdint>
#include <deque>
#include <functional>
#include <memory>
#include <mutex>
#include <string>
#include <vector>

#include "ragbench/types.hpp"

namespace ragbench {

struct ChatMessage {
  enum class Role { system, user, assistant };
  Role role = Role::user;
  std::string content;
};

ChatMessage system_message(std::string content);
ChatMessage user_message(std::string content);

/// Connection settings for one embedding or chat endpoint. The API key is
/// read from the environment variable named in `api_key_env`, never from
/// config files.
struct ProviderProfile {
  std::string endpoint;  // e.g. http://localhost:8080
  std::string model;
  std::string api_key_env = "RAG_BENCH_API_KEY";
  double timeout_seconds = 30.0;
  int max_retries = 2;
  double rate_limit = 0.0;  // requests/second, 0 disables limiting
};

/// Embedding service: one vector per input text, order preserved,
/// all vectors of equal dimension.
class Embedder {
 public:
  virtual ~Embedder() = default;
  virtual std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) = 0;

  EmbeddingVector embed(const std::string& text);
};

/// Chat-completion service. Returns the first candidate's text content.
class ChatProvider {
 public:
  virtual ~ChatProvider() = default;
  virtual std::string chat(const std::vector<ChatMessage>& messages, double temperature,
                           int max_tokens) = 0;
};

/// Enforces `limit` acquisitions per sliding 1-second window. Shared by all
/// requests issued through one client, across threads. The clock is
/// injectable so the contract is testable without real sleeps.
class RateLimiter {
 public:
  using Clock = std::function<std::chrono::steady_clock::time_point()>;
  using Sleeper = std::function<void(std::chrono::milliseconds)>;

  explicit RateLimiter(double limit_per_second, Clock clock = {}, Sleeper sleeper = {});

  void acquire();

 private:
  double limit_;
  Clock clock_;
  Sleeper sleeper_;
  std::mutex mu_;
  std::deque<std::chrono::steady_clock::time_point> issued_;
};

/// POST {endpoint}/v1/embeddings with {"model","input":[...]}. Responses are
/// reordered by their "index" field. Transient 429/5xx responses retry with
/// exponential backoff (base 500 ms, x2, jitter) up to max_retries.
class HttpEmbedder : public Embedder {
 public:
  explicit HttpEmbedder(ProviderProfile profile);
  ~HttpEmbedder() override;

  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// POST {endpoint}/v1/chat/completions. Temperature and max_tokens are
/// forwarded verbatim in the request body.
class HttpChatProvider : public ChatProvider {
 public:
  explicit HttpChatProvider(ProviderProfile profile);
  ~HttpChatProvider() override;

  std::string chat(const std::vector<ChatMessage>& messages, double temperature,
                   int max_tokens) override;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

/// Hashes character 3-grams of the normalized text into `dim` signed
/// buckets, then L2-normalizes. Identical text gives an identical vector on
/// every platform for a fixed seed; morphologically related strings share
/// 3-grams, so they land closer than unrelated ones.
EmbeddingVector deterministic_embed(const std::string& text, std::size_t dim,
                                    std::uint64_t seed);

/// Offline stand-in for an embedding service, backed by deterministic_embed.
class DeterministicEmbedder : public Embedder {
 public:
  DeterministicEmbedder(std::size_t dim, std::uint64_t seed) : dim_(dim), seed_(seed) {}

  std::vector<EmbeddingVector> embed_batch(const std::vector<std::string>& texts) override;

  std::size_t dim() const { return dim_; }

 private:
  std::size_t dim_;
  std::uint64_t seed_;
};

/// Scripted chat double: replays queued replies in order and records every
/// request for inspection. When the queue runs dry it either cycles
/// (cycle=true) or fails the call.
class ScriptedChatProvider : public ChatProvider {
 public:
  explicit ScriptedChatProvider(std::vector<std::string> replies, bool cycle = false)
      : replies_(std::move(replies)), cycle_(cycle) {}

  std::string chat(const std::vector<ChatMessage>& messages, double temperature,
                   int max_tokens) override;

  struct Call {
    std::vector<ChatMessage> messages;
    double temperature;
    int max_tokens;
  };
  const std::vector<Call>& calls() const { return calls_; }

 private:
  std::vector<std::string> replies_;
  bool cycle_;
  std::size_t next_ = 0;
  std::vector<Call> calls_;
  std::mutex mu_;
};

/// Deterministic chat double for offline sweeps: derives a reply from a hash
/// of the conversation and the seed, so identical runs produce identical
/// transcripts. Replies with a bare option number, which is what the MCQA
/// prompt asks for.
class HashAnswerChatProvider : public ChatProvider {
 public:
  explicit HashAnswerChatProvider(std::uint64_t seed, int n_options = 4)
      : seed_(seed), n_options_(n_options) {}

  std::string chat(const std::vector<ChatMessage>& messages, double temperature,
                   int max_tokens) override;

 private:
  std::uint64_t seed_;
  int n_options_;
};

}  // namespace ragbench
