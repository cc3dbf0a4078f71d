#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace webtrail {

/// Fixed-length embedding with all-finite values.
struct EmbeddingVector {
  std::vector<float> values;

  std::size_t dim() const { return values.size(); }

  bool operator==(const EmbeddingVector&) const = default;
};

/// Throws Error("invariant-violation") on non-finite values.
void check_finite(const EmbeddingVector& v);

/// Throws Error("dimension-mismatch") when dims differ.
double euclidean_distance(const EmbeddingVector& a, const EmbeddingVector& b);

inline constexpr std::uint64_t kDefaultEmbeddingKey = 0x9e3779b97f4a7c15ull;

/// Deterministic text embedding for scripted backends: a keyed 64-bit hash
/// chain (FNV-1a seed, splitmix64 steps), each state mapped to [-1, 1).
EmbeddingVector hash_embedding(std::string_view text, std::size_t dim,
                               std::uint64_t key = kDefaultEmbeddingKey);

std::uint64_t splitmix64(std::uint64_t& state);

}  // namespace webtrail
