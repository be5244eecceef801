#include "ragbench/providers.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <random>
#include <thread>

#include <httplib.h>
#include <json.hpp>

#include "ragbench/error.hpp"
#include "ragbench/text.hpp"

namespace ragbench {

using nlohmann::json;

ChatMessage system_message(std::string content) {
  return ChatMessage{ChatMessage::Role::system, std::move(content)};
}

ChatMessage user_message(std::string content) {
  return ChatMessage{ChatMessage::Role::user, std::move(content)};
}

EmbeddingVector Embedder::embed(const std::string& text) {
  auto batch = embed_batch({text});
  return std::move(batch.front());
}

namespace {

const char* role_name(ChatMessage::Role role) {
  switch (role) {
    case ChatMessage::Role::system: return "system";
    case ChatMessage::Role::user: return "user";
    case ChatMessage::Role::assistant: return "assistant";
  }
  return "user";
}

std::string body_excerpt(const std::string& body) {
  constexpr std::size_t kMax = 200;
  if (body.size() <= kMax) return body;
  return body.substr(0, kMax) + "...";
}

bool transient_status(int status) { return status == 429 || (status >= 500 && status < 600); }

/// Shared request loop: retries transient failures with exponential backoff
/// (base 500 ms, x2 per attempt, uniform jitter in [0.5, 1.0] of the step).
class HttpClientBase {
 public:
  explicit HttpClientBase(ProviderProfile profile)
      : profile_(std::move(profile)),
        limiter_(profile_.rate_limit),
        jitter_rng_(std::random_device{}()) {
    if (profile_.timeout_seconds <= 0)
      throw Error(ErrorCode::InvalidConfig, "provider timeout must be positive");
    if (profile_.max_retries < 0)
      throw Error(ErrorCode::InvalidConfig, "provider max_retries must be >= 0");
    client_ = std::make_unique<httplib::Client>(profile_.endpoint);
    const auto secs = static_cast<time_t>(profile_.timeout_seconds);
    const auto usecs =
        static_cast<time_t>((profile_.timeout_seconds - static_cast<double>(secs)) * 1e6);
    client_->set_connection_timeout(secs, usecs);
    client_->set_read_timeout(secs, usecs);
    client_->set_write_timeout(secs, usecs);
    if (const char* key = std::getenv(profile_.api_key_env.c_str())) {
      if (*key) client_->set_bearer_token_auth(key);
    }
  }

  json post_json(const std::string& path, const json& body) {
    const std::string payload = body.dump();
    for (int attempt = 0;; ++attempt) {
      limiter_.acquire();
      auto res = client_->Post(path, payload, "application/json");
      if (!res) {
        const auto err = res.error();
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read ||
            err == httplib::Error::Write) {
          if (attempt < profile_.max_retries) {
            backoff(attempt);
            continue;
          }
          throw Error(ErrorCode::Timeout, profile_.endpoint + path);
        }
        throw Error(ErrorCode::ProviderError,
                    profile_.endpoint + path + ": " + httplib::to_string(err));
      }
      if (res->status == 200) {
        try {
          return json::parse(res->body);
        } catch (const json::exception& e) {
          throw Error(ErrorCode::ProviderError,
                      std::string("unparseable response body: ") + e.what());
        }
      }
      if (transient_status(res->status) && attempt < profile_.max_retries) {
        backoff(attempt);
        continue;
      }
      throw Error(ErrorCode::ProviderError, "HTTP " + std::to_string(res->status) + " from " +
                                                path + ": " + body_excerpt(res->body));
    }
  }

  const ProviderProfile& profile() const { return profile_; }

 private:
  void backoff(int attempt) {
    const double step = 500.0 * std::pow(2.0, attempt);
    std::uniform_real_distribution<double> jitter(0.5, 1.0);
    double ms;
    {
      std::lock_guard<std::mutex> lock(rng_mu_);
      ms = step * jitter(jitter_rng_);
    }
    std::this_thread::sleep_for(std::chrono::milliseconds(static_cast<long>(ms)));
  }

  ProviderProfile profile_;
  RateLimiter limiter_;
  std::unique_ptr<httplib::Client> client_;
  std::mt19937_64 jitter_rng_;
  std::mutex rng_mu_;
};

}  // namespace

RateLimiter::RateLimiter(double limit_per_second, Clock clock, Sleeper sleeper)
    : limit_(limit_per_second),
      clock_(clock ? std::move(clock) : [] { return std::chrono::steady_clock::now(); }),
      sleeper_(sleeper ? std::move(sleeper) : [](std::chrono::milliseconds d) {
        std::this_thread::sleep_for(d);
      }) {}

void RateLimiter::acquire() {
  if (limit_ <= 0.0) return;
  const auto window = std::chrono::seconds(1);
  const auto max_in_window = static_cast<std::size_t>(limit_);
  std::unique_lock<std::mutex> lock(mu_);
  for (;;) {
    const auto now = clock_();
    while (!issued_.empty() && now - issued_.front() >= window) issued_.pop_front();
    if (issued_.size() < std::max<std::size_t>(max_in_window, 1)) {
      issued_.push_back(now);
      return;
    }
    const auto wait = std::chrono::duration_cast<std::chrono::milliseconds>(
        issued_.front() + window - now);
    lock.unlock();
    sleeper_(std::max(wait, std::chrono::milliseconds(1)));
    lock.lock();
  }
}

// ---------------------------------------------------------------------------
// HTTP embedder

struct HttpEmbedder::Impl : HttpClientBase {
  using HttpClientBase::HttpClientBase;
};

HttpEmbedder::HttpEmbedder(ProviderProfile profile)
    : impl_(std::make_unique<Impl>(std::move(profile))) {}

HttpEmbedder::~HttpEmbedder() = default;

std::vector<EmbeddingVector> HttpEmbedder::embed_batch(const std::vector<std::string>& texts) {
  if (texts.empty())
    throw Error(ErrorCode::Precondition, "embed_batch requires at least one text");
  for (const auto& t : texts)
    if (t.empty()) throw Error(ErrorCode::Precondition, "embed_batch texts must be non-empty");

  json body;
  body["model"] = impl_->profile().model;
  body["input"] = texts;
  const json res = impl_->post_json("/v1/embeddings", body);

  if (!res.contains("data") || !res["data"].is_array() || res["data"].size() != texts.size())
    throw Error(ErrorCode::ProviderError,
                "embeddings response has wrong arity: " + body_excerpt(res.dump()));

  std::vector<EmbeddingVector> out(texts.size());
  std::vector<bool> seen(texts.size(), false);
  for (const auto& item : res["data"]) {
    if (!item.contains("index") || !item.contains("embedding"))
      throw Error(ErrorCode::ProviderError, "embeddings item missing index/embedding");
    const auto idx = item["index"].get<std::size_t>();
    if (idx >= texts.size() || seen[idx])
      throw Error(ErrorCode::ProviderError, "embeddings index out of range or duplicated");
    seen[idx] = true;
    out[idx].values = item["embedding"].get<std::vector<float>>();
  }

  const std::size_t dim = out.front().values.size();
  for (const auto& v : out) {
    if (v.values.size() != dim)
      throw Error(ErrorCode::DimensionMismatch,
                  "embedding dims differ within one batch (" + std::to_string(dim) + " vs " +
                      std::to_string(v.values.size()) + ")");
    for (float x : v.values)
      if (!std::isfinite(x))
        throw Error(ErrorCode::ProviderError, "non-finite value in embedding");
  }
  return out;
}

// ---------------------------------------------------------------------------
// HTTP chat

struct HttpChatProvider::Impl : HttpClientBase {
  using HttpClientBase::HttpClientBase;
};

HttpChatProvider::HttpChatProvider(ProviderProfile profile)
    : impl_(std::make_unique<Impl>(std::move(profile))) {}

HttpChatProvider::~HttpChatProvider() = default;

std::string HttpChatProvider::chat(const std::vector<ChatMessage>& messages, double temperature,
                                   int max_tokens) {
  if (messages.empty())
    throw Error(ErrorCode::Precondition, "chat requires at least one message");
  if (temperature < 0.0 || temperature > 1.0)
    throw Error(ErrorCode::Precondition, "temperature must lie in [0, 1]");
  for (const auto& m : messages) {
    if (m.role != ChatMessage::Role::assistant && m.content.empty())
      throw Error(ErrorCode::Precondition, "user/system messages must carry content");
  }

  json body;
  body["model"] = impl_->profile().model;
  body["messages"] = json::array();
  for (const auto& m : messages) {
    body["messages"].push_back({{"role", role_name(m.role)}, {"content", m.content}});
  }
  body["temperature"] = temperature;
  body["max_tokens"] = max_tokens;

  const json res = impl_->post_json("/v1/chat/completions", body);
  if (!res.contains("choices") || !res["choices"].is_array() || res["choices"].empty())
    throw Error(ErrorCode::EmptyCompletion, "no choices in completion response");
  const auto& first = res["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content"))
    throw Error(ErrorCode::EmptyCompletion, "choice carries no message content");
  auto content = first["message"]["content"].get<std::string>();
  if (content.empty()) throw Error(ErrorCode::EmptyCompletion, "empty completion text");
  return content;
}

// ---------------------------------------------------------------------------
// Offline doubles

EmbeddingVector deterministic_embed(const std::string& raw, std::size_t dim,
                                    std::uint64_t seed) {
  if (dim < 2) throw Error(ErrorCode::Precondition, "embedding dim must be >= 2");
  const auto cps = text::utf8_decode(text::normalize(raw));

  std::vector<double> acc(dim, 0.0);
  auto bump = [&](std::string_view gram) {
    const std::uint64_t h = text::fnv1a64(gram, 0xcbf29ce484222325ULL ^ seed);
    const std::size_t bucket = static_cast<std::size_t>(h % dim);
    acc[bucket] += (h >> 63) ? -1.0 : 1.0;
  };

  if (cps.size() < 3) {
    bump(text::utf8_encode(cps));
  } else {
    for (std::size_t i = 0; i + 3 <= cps.size(); ++i) {
      std::string gram;
      for (std::size_t j = i; j < i + 3; ++j) gram += text::utf8_encode(cps[j]);
      bump(gram);
    }
  }

  double norm2 = 0.0;
  for (double x : acc) norm2 += x * x;
  if (norm2 < 1e-12) {
    // All grams cancelled (or text was empty): fall back to a unit basis
    // vector picked by the seed so the result is still valid and distinct.
    acc.assign(dim, 0.0);
    acc[seed % dim] = 1.0;
    norm2 = 1.0;
  }
  const double inv = 1.0 / std::sqrt(norm2);

  EmbeddingVector v;
  v.values.resize(dim);
  for (std::size_t i = 0; i < dim; ++i) v.values[i] = static_cast<float>(acc[i] * inv);
  return v;
}

std::vector<EmbeddingVector> DeterministicEmbedder::embed_batch(
    const std::vector<std::string>& texts) {
  if (texts.empty())
    throw Error(ErrorCode::Precondition, "embed_batch requires at least one text");
  std::vector<EmbeddingVector> out;
  out.reserve(texts.size());
  for (const auto& t : texts) out.push_back(deterministic_embed(t, dim_, seed_));
  return out;
}

std::string ScriptedChatProvider::chat(const std::vector<ChatMessage>& messages,
                                       double temperature, int max_tokens) {
  std::lock_guard<std::mutex> lock(mu_);
  calls_.push_back({messages, temperature, max_tokens});
  if (next_ >= replies_.size()) {
    if (!cycle_ || replies_.empty())
      throw Error(ErrorCode::ProviderError, "scripted provider exhausted its replies");
    next_ = 0;
  }
  return replies_[next_++];
}

std::string HashAnswerChatProvider::chat(const std::vector<ChatMessage>& messages,
                                         double temperature, int max_tokens) {
  (void)temperature;
  (void)max_tokens;
  std::uint64_t h = seed_;
  for (const auto& m : messages) h = text::fnv1a64(m.content, h);
  const int choice = 1 + static_cast<int>(h % static_cast<std::uint64_t>(n_options_));
  return std::to_string(choice);
}

}  // namespace ragbench
