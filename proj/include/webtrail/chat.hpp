#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace webtrail {

enum class Role { System, User, Assistant };

std::string to_string(Role role);
Role role_from_string(std::string_view s);

struct ChatMessage {
  Role role = Role::User;
  std::string content;

  bool operator==(const ChatMessage&) const = default;
};

inline ChatMessage system_message(std::string content) {
  return {Role::System, std::move(content)};
}
inline ChatMessage user_message(std::string content) { return {Role::User, std::move(content)}; }
inline ChatMessage assistant_message(std::string content) {
  return {Role::Assistant, std::move(content)};
}

/// Canonical JSON array text for a message list: sorted keys, compact, UTF-8.
/// Used for golden prompt fixtures and prompt hashing.
std::string messages_to_json(std::span<const ChatMessage> messages);
std::vector<ChatMessage> messages_from_json(std::string_view text);

/// FNV-1a 64-bit hash over the canonical JSON text.
std::uint64_t prompt_hash(std::span<const ChatMessage> messages);
std::string prompt_hash_hex(std::span<const ChatMessage> messages);

/// Human-readable transcript rendering:
///   > Role: User
///   <content>
/// Substring script matchers run against this form.
std::string render_transcript(std::span<const ChatMessage> messages);

std::uint64_t fnv1a64(std::string_view bytes);

}  // namespace webtrail
