#include "webtrail/chat.hpp"

#include "webtrail/error.hpp"

#include <json.hpp>

#include <cstdio>

namespace webtrail {

using nlohmann::json;

std::string to_string(Role role) {
  switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
  }
  throw Error("invariant-violation", "unknown role");
}

Role role_from_string(std::string_view s) {
  if (s == "system") return Role::System;
  if (s == "user") return Role::User;
  if (s == "assistant") return Role::Assistant;
  throw Error("invariant-violation", "role: unknown value '" + std::string(s) + "'");
}

std::string messages_to_json(std::span<const ChatMessage> messages) {
  json j = json::array();
  for (const ChatMessage& m : messages) {
    json entry;
    entry["role"] = to_string(m.role);
    entry["content"] = m.content;
    j.push_back(std::move(entry));
  }
  return j.dump();
}

std::vector<ChatMessage> messages_from_json(std::string_view text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw Error("malformed-record", std::string("message list: ") + e.what());
  }
  if (!j.is_array()) throw Error("malformed-record", "message list: expected array");
  std::vector<ChatMessage> messages;
  for (const json& entry : j) {
    if (!entry.is_object() || !entry.contains("role") || !entry.contains("content")) {
      throw Error("malformed-record", "message list: expected {role, content} objects");
    }
    messages.push_back(
        {role_from_string(entry["role"].get<std::string>()), entry["content"].get<std::string>()});
  }
  return messages;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::uint64_t prompt_hash(std::span<const ChatMessage> messages) {
  return fnv1a64(messages_to_json(messages));
}

std::string prompt_hash_hex(std::span<const ChatMessage> messages) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx",
                static_cast<unsigned long long>(prompt_hash(messages)));
  return std::string(buf);
}

std::string render_transcript(std::span<const ChatMessage> messages) {
  std::string out;
  for (std::size_t i = 0; i < messages.size(); ++i) {
    if (i > 0) out.push_back('\n');
    switch (messages[i].role) {
      case Role::System: out += "> Role: System"; break;
      case Role::User: out += "> Role: User"; break;
      case Role::Assistant: out += "> Role: Assistant"; break;
    }
    out.push_back('\n');
    out += messages[i].content;
  }
  return out;
}

}  // namespace webtrail
