#include "webtrail/embedding.hpp"

#include "webtrail/chat.hpp"
#include "webtrail/error.hpp"

#include <cmath>

namespace webtrail {

void check_finite(const EmbeddingVector& v) {
  for (float x : v.values) {
    if (!std::isfinite(x)) {
      throw Error("invariant-violation", "embedding contains a non-finite value");
    }
  }
}

double euclidean_distance(const EmbeddingVector& a, const EmbeddingVector& b) {
  if (a.dim() != b.dim()) {
    throw Error("dimension-mismatch", "embedding dims " + std::to_string(a.dim()) + " vs " +
                                          std::to_string(b.dim()));
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < a.values.size(); ++i) {
    double d = static_cast<double>(a.values[i]) - static_cast<double>(b.values[i]);
    sum += d * d;
  }
  return std::sqrt(sum);
}

std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

EmbeddingVector hash_embedding(std::string_view text, std::size_t dim, std::uint64_t key) {
  EmbeddingVector v;
  v.values.reserve(dim);
  std::uint64_t state = fnv1a64(text) ^ key;
  for (std::size_t i = 0; i < dim; ++i) {
    std::uint64_t bits = splitmix64(state);
    // top 53 bits -> [0, 1) -> [-1, 1)
    double unit = static_cast<double>(bits >> 11) / 9007199254740992.0;
    v.values.push_back(static_cast<float>(unit * 2.0 - 1.0));
  }
  return v;
}

}  // namespace webtrail
