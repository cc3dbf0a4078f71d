#pragma once

#include "webtrail/abstraction.hpp"
#include "webtrail/embedding.hpp"
#include "webtrail/model.hpp"

#include <deque>
#include <filesystem>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

namespace webtrail::memory {

/// One key -> value pair of the exemplar store: an embedded metadata string
/// mapped to the exemplars and abstraction prompts of a task group.
struct MemoryEntry {
  std::string key_text;
  EmbeddingVector key;
  std::string group_id;
  std::vector<Trajectory> exemplars;
  std::vector<abstraction::AbstractionPrompt> abstraction_prompts;
  std::uint64_t insertion_index = 0;
};

struct RetrievalResult {
  const MemoryEntry* entry = nullptr;
  double distance = 0.0;
};

/// Append-only exemplar memory over exact brute-force Euclidean retrieval.
/// Concurrent readers with a single writer; retrieval never observes a
/// partially inserted entry.
class MemoryIndex {
public:
  explicit MemoryIndex(std::size_t dim);
  MemoryIndex(MemoryIndex&& other) noexcept;
  MemoryIndex& operator=(MemoryIndex&& other) noexcept;

  std::size_t dim() const { return dim_; }
  std::size_t size() const;

  /// Appends an entry. Errors: "dimension-mismatch",
  /// "unsuccessful-exemplar" (only successful trajectories are admissible).
  void insert(std::string key_text, EmbeddingVector key, std::string group_id,
              std::vector<Trajectory> exemplars,
              std::vector<abstraction::AbstractionPrompt> prompts);

  /// The n nearest entries, ascending by Euclidean distance, ties broken by
  /// insertion order. Errors: "empty-index", "dimension-mismatch".
  std::vector<RetrievalResult> retrieve_topn(const EmbeddingVector& query, std::size_t n) const;

  /// All exemplars of a group, deduplicated, in first-insertion order.
  std::vector<Trajectory> exemplars_for_group(const std::string& group_id) const;
  std::vector<abstraction::AbstractionPrompt> prompts_for_group(const std::string& group_id) const;

  bool contains_key_text(const std::string& key_text) const;

  /// Snapshot of entries for reporting; order is insertion order.
  std::vector<const MemoryEntry*> entries() const;

private:
  std::size_t dim_;
  std::deque<MemoryEntry> entries_;  // deque keeps element pointers stable
  mutable std::shared_mutex mutex_;
};

/// The most common group among the results; on a frequency tie, the group of
/// the nearest tied result (earlier result wins an exact distance tie).
/// Errors: "empty-results".
std::string resolve_majority(std::span<const RetrievalResult> results);

/// MiniWoB-style metadata: description + '\n' + initial HTML.
std::string build_metadata_miniwob(const TaskSpec& task, const RawState& initial_state);

/// Mind2Web-style metadata: "website: {w}\ndomain: {d}\ntask: {t}".
/// Errors: "missing-field" naming the absent key.
std::string build_metadata_mind2web(const TaskSpec& task);

/// Directory layout: manifest.json + keys.f32le + exemplars.jsonl.
/// load(persist(x)) == x and re-persisting produces identical bytes.
void persist(const MemoryIndex& index, const std::filesystem::path& dir);

/// Errors: "missing-file", "corrupt-manifest", "dimension-mismatch".
MemoryIndex load(const std::filesystem::path& dir);

inline constexpr int kMemorySchemaVersion = 1;

}  // namespace webtrail::memory
