#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "webtrail/chat.hpp"
#include "webtrail/error.hpp"
#include "webtrail/llm.hpp"

#include "support.hpp"

#include <json.hpp>

#include <atomic>
#include <filesystem>
#include <thread>

#include <httplib.h>

using namespace webtrail;
using namespace webtrail::llm;
using nlohmann::json;

namespace {

CompletionRequest simple_request(const std::string& text) {
  CompletionRequest req;
  req.messages = {user_message(text)};
  return req;
}

}  // namespace

TEST_CASE("exact-hash matches return the scripted text verbatim") {
  ScriptedBackend backend;
  CompletionRequest req = simple_request("hello");
  backend.add_exact(req.messages, "scripted response");
  CHECK(backend.complete(req) == "scripted response");
}

TEST_CASE("stop tokens truncate the completion") {
  ScriptedBackend backend;
  CompletionRequest req = simple_request("x");
  req.stop = {"Observation:", "> Role: User"};
  backend.add_exact(req.messages, "the Action\nObservation: leak");
  std::string out = backend.complete(req);
  CHECK(out == "the Action\n");
  for (const std::string& stop : req.stop) {
    CHECK(out.find(stop) == std::string::npos);
  }
}

TEST_CASE("matcher precedence: exact over substring over sequence") {
  ScriptedBackend backend;
  CompletionRequest req = simple_request("unique marker text");
  backend.add_sequence("from-sequence");
  backend.add_substring("marker", "from-substring");
  CHECK(backend.complete(req) == "from-substring");
  backend.add_exact(req.messages, "from-exact");
  CHECK(backend.complete(req) == "from-exact");

  // first listed substring wins
  ScriptedBackend second;
  second.add_substring("marker", "first");
  second.add_substring("marker text", "second");
  CHECK(second.complete(req) == "first");
}

TEST_CASE("sequence entries are consumed in order exactly once") {
  ScriptedBackend backend;
  backend.add_sequence("one");
  backend.add_sequence("two");
  CHECK(backend.complete(simple_request("a")) == "one");
  CHECK(backend.complete(simple_request("b")) == "two");
  CHECK_THROWS_AS(backend.complete(simple_request("c")), Error);
  try {
    backend.complete(simple_request("c"));
  } catch (const Error& e) {
    CHECK(e.kind() == "unmatched-script");
  }
}

TEST_CASE("the gateway never mutates request messages") {
  ScriptedBackend backend;
  CompletionRequest req = simple_request("echo check");
  req.stop = {"zzz"};
  backend.add_exact(req.messages, "resp");
  CompletionRequest copy = req;
  backend.complete(req);
  CHECK(req.messages == copy.messages);
  CHECK(req.stop == copy.stop);
}

TEST_CASE("request validation enforces the stop limit and non-empty messages") {
  ScriptedBackend backend;
  CompletionRequest empty;
  CHECK_THROWS_AS(backend.complete(empty), Error);
  CompletionRequest req = simple_request("x");
  req.stop = {"a", "b", "c", "d", "e"};
  CHECK_THROWS_AS(backend.complete(req), Error);
}

TEST_CASE("hash embeddings are deterministic and collision-free at fixture scale") {
  ScriptedBackend backend(64);
  EmbeddingVector a1 = backend.embed("same text");
  EmbeddingVector a2 = backend.embed("same text");
  CHECK(a1 == a2);
  CHECK(a1.dim() == 64);
  EmbeddingVector b = backend.embed("different text");
  CHECK(euclidean_distance(a1, b) > 0.0);
  for (float v : a1.values) {
    CHECK(v >= -1.0f);
    CHECK(v < 1.0f);
  }
}

TEST_CASE("table-backed embeddings return the stored vector exactly") {
  ScriptedBackend backend(4);
  backend.set_embedding("known", {1.0f, 2.0f, 3.0f, 4.0f});
  EmbeddingVector v = backend.embed("known");
  CHECK(v.values == std::vector<float>{1.0f, 2.0f, 3.0f, 4.0f});
  CHECK_THROWS_AS(backend.embed(""), Error);
}

TEST_CASE("yaml scripts round trip through save and load") {
  ScriptedBackend backend(8);
  CompletionRequest req = simple_request("prompt one");
  backend.add_exact(req.messages, "```\nagent.type('ls')\nagent.press('enter')\n```", "note-1");
  backend.add_substring("needle", "sub-response");
  backend.add_sequence("seq-response");
  backend.set_embedding("text-a", {0.5f, -0.5f, 0.0f, 1.0f, 0.0f, 0.0f, 0.0f, 0.25f});

  auto path = std::filesystem::temp_directory_path() / "webtrail_script_test.yaml";
  backend.save_yaml(path);
  ScriptedBackend loaded = ScriptedBackend::load_yaml(path);
  CHECK(loaded.default_dim() == 8);
  CHECK(loaded.complete(req) == "```\nagent.type('ls')\nagent.press('enter')\n```");
  CHECK(loaded.complete(simple_request("has needle inside")) == "sub-response");
  CHECK(loaded.complete(simple_request("anything else")) == "seq-response");
  CHECK(loaded.embed("text-a").values ==
        std::vector<float>{0.5f, -0.5f, 0.0f, 1.0f, 0.0f, 0.0f, 0.0f, 0.25f});
  std::filesystem::remove(path);
}

TEST_CASE("prompt hashing and transcripts are stable") {
  std::vector<ChatMessage> messages = {system_message("sys"), user_message("u"),
                                       assistant_message("a")};
  CHECK(prompt_hash(messages) == prompt_hash(messages));
  std::string transcript = render_transcript(messages);
  CHECK(transcript == "> Role: System\nsys\n> Role: User\nu\n> Role: Assistant\na");
  std::string json_text = messages_to_json(messages);
  CHECK(messages_from_json(json_text) == messages);
}

TEST_CASE("http backend speaks the documented wire format") {
  httplib::Server server;
  std::atomic<int> chat_calls{0};
  std::atomic<int> flaky_calls{0};
  json last_chat_body;
  std::mutex body_mutex;

  server.Post("/v1/chat/completions", [&](const httplib::Request& req, httplib::Response& res) {
    {
      std::lock_guard lock(body_mutex);
      last_chat_body = json::parse(req.body);
    }
    ++chat_calls;
    json out = {{"choices", json::array({{{"message",
                                           {{"role", "assistant"},
                                            {"content", "hello Observation: trailing"}}}}})}};
    res.set_content(out.dump(), "application/json");
  });
  server.Post("/v1/embeddings", [&](const httplib::Request&, httplib::Response& res) {
    json out = {{"data", json::array({{{"embedding", {0.25, -0.5, 0.75}}}})}};
    res.set_content(out.dump(), "application/json");
  });
  httplib::Server flaky_server;
  flaky_server.Post("/v1/chat/completions",
                    [&](const httplib::Request&, httplib::Response& res) {
                      if (++flaky_calls < 3) {
                        res.status = 500;
                        return;
                      }
                      json out = {{"choices",
                                   json::array({{{"message", {{"content", "finally worked"}}}}})}};
                      res.set_content(out.dump(), "application/json");
                    });
  httplib::Server limited_server;
  limited_server.Post("/v1/chat/completions",
                      [&](const httplib::Request&, httplib::Response& res) {
                        res.status = 429;
                        res.set_header("Retry-After", "7");
                      });

  int port = server.bind_to_any_port("127.0.0.1");
  int flaky_port = flaky_server.bind_to_any_port("127.0.0.1");
  int limited_port = limited_server.bind_to_any_port("127.0.0.1");
  std::thread server_thread([&]() { server.listen_after_bind(); });
  std::thread flaky_thread([&]() { flaky_server.listen_after_bind(); });
  std::thread limited_thread([&]() { limited_server.listen_after_bind(); });
  server.wait_until_ready();
  flaky_server.wait_until_ready();
  limited_server.wait_until_ready();

  HttpBackend::Config config;
  config.base_url = "http://127.0.0.1:" + std::to_string(port);
  config.model = "test-model";
  config.embed_model = "test-embed";
  config.api_key = "secret";
  config.backoff_initial_ms = 5;
  config.max_attempts = 3;

  SUBCASE("completion posts the documented fields and truncates at stop") {
    HttpBackend backend(config);
    CompletionRequest req;
    req.messages = {system_message("s"), user_message("u")};
    req.stop = {"Observation:"};
    req.max_output_tokens = 99;
    std::string out = backend.complete(req);
    CHECK(out == "hello ");
    std::lock_guard lock(body_mutex);
    CHECK(last_chat_body["model"] == "test-model");
    CHECK(last_chat_body["temperature"] == 0.0);
    CHECK(last_chat_body["max_tokens"] == 99);
    CHECK(last_chat_body["stop"] == json::array({"Observation:"}));
    CHECK(last_chat_body["messages"][0]["role"] == "system");
    CHECK(last_chat_body["messages"][1]["content"] == "u");
  }

  SUBCASE("embeddings come back as vectors") {
    HttpBackend backend(config);
    EmbeddingVector v = backend.embed("text");
    CHECK(v.values == std::vector<float>{0.25f, -0.5f, 0.75f});
  }

  SUBCASE("transient 5xx responses are retried with backoff") {
    HttpBackend::Config flaky = config;
    flaky.base_url = "http://127.0.0.1:" + std::to_string(flaky_port);
    HttpBackend backend(flaky);
    CHECK(backend.complete(simple_request("x")) == "finally worked");
    CHECK(flaky_calls == 3);
  }

  SUBCASE("rate limits surface the retry-after hint") {
    HttpBackend::Config limited = config;
    limited.base_url = "http://127.0.0.1:" + std::to_string(limited_port);
    HttpBackend backend(limited);
    try {
      backend.complete(simple_request("x"));
      FAIL("expected a rate-limit error");
    } catch (const Error& e) {
      CHECK(e.kind() == "rate-limit");
      CHECK(std::string(e.what()).find("retry-after=7") != std::string::npos);
    }
  }

  SUBCASE("persistent connection failures exhaust retries") {
    HttpBackend::Config dead = config;
    dead.base_url = "http://127.0.0.1:1";  // nothing listens here
    dead.backoff_initial_ms = 1;
    HttpBackend backend(dead);
    try {
      backend.complete(simple_request("x"));
      FAIL("expected a network failure");
    } catch (const Error& e) {
      CHECK(e.kind() == "network-failure");
      CHECK(std::string(e.what()).find("3 attempts") != std::string::npos);
    }
  }

  server.stop();
  flaky_server.stop();
  limited_server.stop();
  server_thread.join();
  flaky_thread.join();
  limited_thread.join();
}

TEST_CASE("http configuration is read from the environment") {
  setenv("LLM_API_BASE", "http://127.0.0.1:9999", 1);
  setenv("LLM_API_KEY", "key-from-env", 1);
  setenv("LLM_MODEL", "chat-model", 1);
  setenv("EMBED_MODEL", "embed-model", 1);
  HttpBackend backend = HttpBackend::from_env();
  CHECK(backend.config().base_url == "http://127.0.0.1:9999");
  CHECK(backend.config().api_key == "key-from-env");
  CHECK(backend.config().model == "chat-model");
  CHECK(backend.config().embed_model == "embed-model");
  unsetenv("LLM_API_BASE");
  unsetenv("LLM_API_KEY");
  unsetenv("LLM_MODEL");
  unsetenv("EMBED_MODEL");
}

TEST_CASE("the golden first-action prompt replays against the shipped terminal script") {
  ScriptedBackend backend = ScriptedBackend::load_yaml(testsupport::fixture_dir() /
                                                       "scripts/terminal.yaml");
  std::string golden = testsupport::read_fixture("prompts/terminal_step2.json");
  CompletionRequest req;
  req.messages = messages_from_json(golden);
  req.stop = {"Observation:", "> Role: User"};
  CHECK(backend.complete(req) == "```\nagent.type('ls')\nagent.press('enter')\n```");
}
