#include "webtrail/llm.hpp"

#include "webtrail/error.hpp"

#include <json.hpp>
#include <yaml-cpp/yaml.h>

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <thread>

// httplib is included only here to keep the header light.
#include <httplib.h>

namespace webtrail::llm {

using nlohmann::json;

void validate_request(const CompletionRequest& req) {
  if (req.messages.empty()) {
    throw Error("invariant-violation", "completion request has no messages");
  }
  if (req.stop.size() > kMaxStopTokens) {
    throw Error("invariant-violation", "stop list exceeds " + std::to_string(kMaxStopTokens) +
                                           " entries");
  }
}

std::string truncate_at_stop(std::string text, std::span<const std::string> stop) {
  std::size_t cut = text.size();
  for (const std::string& token : stop) {
    if (token.empty()) continue;
    std::size_t at = text.find(token);
    if (at != std::string::npos && at < cut) cut = at;
  }
  text.resize(cut);
  return text;
}

std::string Backend::complete(const CompletionRequest& req) {
  validate_request(req);
  return truncate_at_stop(complete_impl(req), req.stop);
}

EmbeddingVector Backend::embed(std::string_view text) {
  if (text.empty()) {
    throw Error("invariant-violation", "embed requires non-empty text");
  }
  EmbeddingVector v = embed_impl(text);
  check_finite(v);
  return v;
}

ScriptedBackend::ScriptedBackend(std::size_t default_dim) : default_dim_(default_dim) {}

ScriptedBackend::ScriptedBackend(ScriptedBackend&& other) noexcept
    : default_dim_(other.default_dim_),
      exact_(std::move(other.exact_)),
      substrings_(std::move(other.substrings_)),
      sequence_(std::move(other.sequence_)),
      embeddings_(std::move(other.embeddings_)),
      sequence_next_(other.sequence_next_),
      completion_calls_(other.completion_calls_.load()),
      embedding_calls_(other.embedding_calls_.load()) {}

ScriptedBackend& ScriptedBackend::operator=(ScriptedBackend&& other) noexcept {
  if (this != &other) {
    default_dim_ = other.default_dim_;
    exact_ = std::move(other.exact_);
    substrings_ = std::move(other.substrings_);
    sequence_ = std::move(other.sequence_);
    embeddings_ = std::move(other.embeddings_);
    sequence_next_ = other.sequence_next_;
    completion_calls_ = other.completion_calls_.load();
    embedding_calls_ = other.embedding_calls_.load();
  }
  return *this;
}

void ScriptedBackend::add_exact(std::uint64_t hash, std::string response, std::string note) {
  std::lock_guard lock(mutex_);
  exact_[hash] = ExactEntry{hash, std::move(response), std::move(note)};
}

void ScriptedBackend::add_exact(std::span<const ChatMessage> messages, std::string response,
                                std::string note) {
  add_exact(prompt_hash(messages), std::move(response), std::move(note));
}

void ScriptedBackend::add_substring(std::string needle, std::string response, std::string note) {
  std::lock_guard lock(mutex_);
  substrings_.push_back({std::move(needle), std::move(response), std::move(note)});
}

void ScriptedBackend::add_sequence(std::string response) {
  std::lock_guard lock(mutex_);
  sequence_.push_back(std::move(response));
}

void ScriptedBackend::set_embedding(std::string_view text, std::vector<float> values) {
  std::lock_guard lock(mutex_);
  std::uint64_t key = fnv1a64(text);
  embeddings_[key] = EmbeddingEntry{std::string(text), std::move(values)};
}

std::string ScriptedBackend::complete_impl(const CompletionRequest& req) {
  completion_calls_.fetch_add(1);
  std::uint64_t hash = prompt_hash(req.messages);
  std::lock_guard lock(mutex_);
  if (auto it = exact_.find(hash); it != exact_.end()) {
    return it->second.response;
  }
  std::string transcript = render_transcript(req.messages);
  for (const SubstringEntry& entry : substrings_) {
    if (transcript.find(entry.needle) != std::string::npos) {
      return entry.response;
    }
  }
  if (sequence_next_ < sequence_.size()) {
    return sequence_[sequence_next_++];
  }
  std::string head = transcript.substr(0, 160);
  throw Error("unmatched-script",
              "no matcher for prompt hash " + prompt_hash_hex(req.messages) +
                  "; transcript starts: " + head);
}

EmbeddingVector ScriptedBackend::embed_impl(std::string_view text) {
  embedding_calls_.fetch_add(1);
  std::lock_guard lock(mutex_);
  if (auto it = embeddings_.find(fnv1a64(text)); it != embeddings_.end()) {
    return EmbeddingVector{it->second.values};
  }
  return hash_embedding(text, default_dim_);
}

namespace {

std::uint64_t parse_hash_hex(const std::string& text) {
  if (text.empty()) throw Error("corrupt-manifest", "empty hash in script file");
  return std::strtoull(text.c_str(), nullptr, 16);
}

std::string hash_to_hex(std::uint64_t hash) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash));
  return std::string(buf);
}

}  // namespace

ScriptedBackend ScriptedBackend::load_yaml(const std::filesystem::path& path) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw Error("corrupt-manifest", "cannot load script " + path.string() + ": " + e.what());
  }
  ScriptedBackend backend;
  if (root["embeddings"]) {
    const YAML::Node& emb = root["embeddings"];
    if (emb["dim"]) backend.set_default_dim(emb["dim"].as<std::size_t>());
    for (const YAML::Node& entry : emb["entries"]) {
      std::vector<float> values;
      for (const YAML::Node& v : entry["values"]) values.push_back(v.as<float>());
      backend.set_embedding(entry["text"].as<std::string>(), std::move(values));
    }
  }
  for (const YAML::Node& entry : root["completions"]) {
    std::string match = entry["match"].as<std::string>();
    std::string response = entry["response"].as<std::string>();
    // responses are stored newline-trimmed (literal blocks pick up a trailing
    // newline from YAML clip chomping)
    while (!response.empty() && response.back() == '\n') response.pop_back();
    std::string note = entry["note"] ? entry["note"].as<std::string>() : "";
    if (match == "exact_hash") {
      backend.add_exact(parse_hash_hex(entry["value"].as<std::string>()), std::move(response),
                        std::move(note));
    } else if (match == "substring") {
      backend.add_substring(entry["value"].as<std::string>(), std::move(response),
                            std::move(note));
    } else if (match == "sequence") {
      backend.add_sequence(std::move(response));
    } else {
      throw Error("corrupt-manifest", "unknown matcher '" + match + "' in " + path.string());
    }
  }
  return backend;
}

void ScriptedBackend::save_yaml(const std::filesystem::path& path) const {
  std::lock_guard lock(mutex_);
  auto check_trimmed = [&](const std::string& response) {
    if (!response.empty() && response.back() == '\n') {
      throw Error("invariant-violation",
                  "script responses are stored newline-trimmed; refusing to write one that "
                  "ends with a newline");
    }
  };
  for (const auto& [hash, entry] : exact_) check_trimmed(entry.response);
  for (const SubstringEntry& entry : substrings_) check_trimmed(entry.response);
  for (const std::string& response : sequence_) check_trimmed(response);
  YAML::Emitter out;
  out << YAML::BeginMap;
  out << YAML::Key << "completions" << YAML::Value << YAML::BeginSeq;
  for (const auto& [hash, entry] : exact_) {
    out << YAML::BeginMap;
    out << YAML::Key << "match" << YAML::Value << "exact_hash";
    out << YAML::Key << "value" << YAML::Value << hash_to_hex(hash);
    if (!entry.note.empty()) out << YAML::Key << "note" << YAML::Value << entry.note;
    out << YAML::Key << "response" << YAML::Value << YAML::Literal << entry.response;
    out << YAML::EndMap;
  }
  for (const SubstringEntry& entry : substrings_) {
    out << YAML::BeginMap;
    out << YAML::Key << "match" << YAML::Value << "substring";
    out << YAML::Key << "value" << YAML::Value << entry.needle;
    if (!entry.note.empty()) out << YAML::Key << "note" << YAML::Value << entry.note;
    out << YAML::Key << "response" << YAML::Value << YAML::Literal << entry.response;
    out << YAML::EndMap;
  }
  for (const std::string& response : sequence_) {
    out << YAML::BeginMap;
    out << YAML::Key << "match" << YAML::Value << "sequence";
    out << YAML::Key << "response" << YAML::Value << YAML::Literal << response;
    out << YAML::EndMap;
  }
  out << YAML::EndSeq;
  if (!embeddings_.empty()) {
    out << YAML::Key << "embeddings" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "dim" << YAML::Value << default_dim_;
    out << YAML::Key << "entries" << YAML::Value << YAML::BeginSeq;
    for (const auto& [key, entry] : embeddings_) {
      out << YAML::BeginMap;
      out << YAML::Key << "text" << YAML::Value << entry.text;
      out << YAML::Key << "values" << YAML::Value << YAML::Flow << YAML::BeginSeq;
      for (float v : entry.values) out << v;
      out << YAML::EndSeq;
      out << YAML::EndMap;
    }
    out << YAML::EndSeq;
    out << YAML::EndMap;
  }
  out << YAML::EndMap;
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream file(path, std::ios::binary);
  if (!file) throw Error("missing-file", "cannot write " + path.string());
  file << out.c_str() << "\n";
}

HttpBackend::HttpBackend(Config config) : config_(std::move(config)) {
  if (config_.base_url.empty()) {
    throw Error("invariant-violation", "HttpBackend requires a base URL");
  }
}

HttpBackend HttpBackend::from_env() {
  auto get = [](const char* name) {
    const char* v = std::getenv(name);
    return v == nullptr ? std::string() : std::string(v);
  };
  Config config;
  config.base_url = get("LLM_API_BASE");
  config.api_key = get("LLM_API_KEY");
  config.model = get("LLM_MODEL");
  config.embed_model = get("EMBED_MODEL");
  return HttpBackend(std::move(config));
}

std::string HttpBackend::post_json(const std::string& path, const std::string& body) {
  int backoff_ms = config_.backoff_initial_ms;
  std::string last_error;
  for (int attempt = 1; attempt <= config_.max_attempts; ++attempt) {
    httplib::Client client(config_.base_url);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    httplib::Headers headers;
    if (!config_.api_key.empty()) {
      headers.emplace("Authorization", "Bearer " + config_.api_key);
    }
    auto result = client.Post(path, headers, body, "application/json");
    if (result) {
      if (result->status == 200) return result->body;
      if (result->status == 429) {
        std::string retry_after = result->get_header_value("Retry-After");
        throw Error("rate-limit", "retry-after=" + (retry_after.empty() ? "?" : retry_after));
      }
      if (result->status >= 500) {
        last_error = "HTTP " + std::to_string(result->status);
      } else {
        throw Error("backend-error", "HTTP " + std::to_string(result->status) + ": " +
                                         result->body.substr(0, 200));
      }
    } else {
      last_error = httplib::to_string(result.error());
    }
    if (attempt < config_.max_attempts) {
      std::this_thread::sleep_for(std::chrono::milliseconds(backoff_ms));
      backoff_ms *= 2;
    }
  }
  throw Error("network-failure", "after " + std::to_string(config_.max_attempts) +
                                     " attempts: " + last_error);
}

std::string HttpBackend::complete_impl(const CompletionRequest& req) {
  json body;
  body["model"] = req.model_id.empty() ? config_.model : req.model_id;
  body["temperature"] = req.temperature;
  body["max_tokens"] = req.max_output_tokens;
  body["stop"] = req.stop;
  body["messages"] = json::array();
  for (const ChatMessage& m : req.messages) {
    body["messages"].push_back({{"role", to_string(m.role)}, {"content", m.content}});
  }
  std::string response = post_json("/v1/chat/completions", body.dump());
  json j;
  try {
    j = json::parse(response);
  } catch (const json::parse_error& e) {
    throw Error("backend-error", std::string("completion response is not JSON: ") + e.what());
  }
  if (!j.contains("choices") || !j["choices"].is_array() || j["choices"].empty()) {
    throw Error("backend-error", "completion response has no choices");
  }
  const json& first = j["choices"][0];
  if (!first.contains("message") || !first["message"].contains("content")) {
    throw Error("backend-error", "completion choice has no message content");
  }
  return first["message"]["content"].get<std::string>();
}

EmbeddingVector HttpBackend::embed_impl(std::string_view text) {
  json body;
  body["model"] = config_.embed_model;
  body["input"] = std::string(text);
  std::string response = post_json("/v1/embeddings", body.dump());
  json j;
  try {
    j = json::parse(response);
  } catch (const json::parse_error& e) {
    throw Error("backend-error", std::string("embedding response is not JSON: ") + e.what());
  }
  if (!j.contains("data") || !j["data"].is_array() || j["data"].empty() ||
      !j["data"][0].contains("embedding")) {
    throw Error("backend-error", "embedding response has no data[0].embedding");
  }
  EmbeddingVector v;
  for (const json& x : j["data"][0]["embedding"]) {
    v.values.push_back(x.get<float>());
  }
  return v;
}

}  // namespace webtrail::llm
