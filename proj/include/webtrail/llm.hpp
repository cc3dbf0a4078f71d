#pragma once

#include "webtrail/chat.hpp"
#include "webtrail/embedding.hpp"

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace webtrail::llm {

inline constexpr std::size_t kMaxStopTokens = 4;

struct CompletionRequest {
  std::vector<ChatMessage> messages;
  double temperature = 0.0;  // greedy decoding by default
  std::vector<std::string> stop;
  std::size_t max_output_tokens = 512;
  std::string model_id;
};

/// Throws Error("invariant-violation") on empty messages or > 4 stop entries.
void validate_request(const CompletionRequest& req);

/// Cuts `text` before the earliest occurrence of any stop string.
std::string truncate_at_stop(std::string text, std::span<const std::string> stop);

/// Chat-completion plus embedding access. complete() applies stop-token
/// truncation uniformly; embed() requires non-empty text.
class Backend {
public:
  virtual ~Backend() = default;

  std::string complete(const CompletionRequest& req);
  EmbeddingVector embed(std::string_view text);

protected:
  virtual std::string complete_impl(const CompletionRequest& req) = 0;
  virtual EmbeddingVector embed_impl(std::string_view text) = 0;
};

/// Deterministic test backend. Completion matchers, in precedence order:
/// exact prompt hash, then substring over the rendered transcript (first
/// listed wins), then sequence entries consumed in order exactly once.
/// Unmatched requests throw Error("unmatched-script").
///
/// Embeddings come from the text table when present, otherwise from the
/// hash-derived construction at default_dim.
class ScriptedBackend final : public Backend {
public:
  explicit ScriptedBackend(std::size_t default_dim = 64);
  ScriptedBackend(ScriptedBackend&& other) noexcept;
  ScriptedBackend& operator=(ScriptedBackend&& other) noexcept;

  void add_exact(std::uint64_t hash, std::string response, std::string note = "");
  void add_exact(std::span<const ChatMessage> messages, std::string response,
                 std::string note = "");
  void add_substring(std::string needle, std::string response, std::string note = "");
  void add_sequence(std::string response);
  void set_embedding(std::string_view text, std::vector<float> values);

  std::size_t default_dim() const { return default_dim_; }
  void set_default_dim(std::size_t dim) { default_dim_ = dim; }

  /// Loads fixtures/scripts/*.yaml (see docs/formats.md for the schema).
  static ScriptedBackend load_yaml(const std::filesystem::path& path);
  /// Deterministic emission: exact entries sorted by hash, substrings and
  /// sequences in insertion order, embeddings sorted by text hash.
  void save_yaml(const std::filesystem::path& path) const;

  std::size_t completion_calls() const { return completion_calls_.load(); }
  std::size_t embedding_calls() const { return embedding_calls_.load(); }

private:
  std::string complete_impl(const CompletionRequest& req) override;
  EmbeddingVector embed_impl(std::string_view text) override;

  struct ExactEntry {
    std::uint64_t hash;
    std::string response;
    std::string note;
  };
  struct SubstringEntry {
    std::string needle;
    std::string response;
    std::string note;
  };
  struct EmbeddingEntry {
    std::string text;
    std::vector<float> values;
  };

  std::size_t default_dim_;
  std::map<std::uint64_t, ExactEntry> exact_;
  std::vector<SubstringEntry> substrings_;
  std::vector<std::string> sequence_;
  std::map<std::uint64_t, EmbeddingEntry> embeddings_;  // keyed by fnv1a64(text)
  std::size_t sequence_next_ = 0;
  mutable std::mutex mutex_;
  std::atomic<std::size_t> completion_calls_{0};
  std::atomic<std::size_t> embedding_calls_{0};
};

/// HTTP chat-completion client; wire format documented in docs/wire-format.md.
/// Retries transient failures (connect errors, 5xx) with exponential backoff.
class HttpBackend final : public Backend {
public:
  struct Config {
    std::string base_url;     // e.g. "http://localhost:8089"
    std::string api_key;      // sent as a bearer token when non-empty
    std::string model;        // chat model id
    std::string embed_model;  // embedding model id
    int timeout_seconds = 60;
    int max_attempts = 3;
    int backoff_initial_ms = 500;
  };

  explicit HttpBackend(Config config);

  /// Reads LLM_API_BASE, LLM_API_KEY, LLM_MODEL, EMBED_MODEL.
  static HttpBackend from_env();

  const Config& config() const { return config_; }

private:
  std::string complete_impl(const CompletionRequest& req) override;
  EmbeddingVector embed_impl(std::string_view text) override;

  std::string post_json(const std::string& path, const std::string& body);

  Config config_;
};

}  // namespace webtrail::llm
