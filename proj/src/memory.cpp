#include "webtrail/memory.hpp"

#include "webtrail/error.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstring>
#include <fstream>
#include <map>
#include <mutex>
#include <sstream>

namespace webtrail::memory {

using nlohmann::json;

MemoryIndex::MemoryIndex(std::size_t dim) : dim_(dim) {
  if (dim == 0) throw Error("invariant-violation", "embedding dimension must be positive");
}

// deque move keeps element addresses stable, so retrieval results taken from
// the source before the move are not invalidated by it
MemoryIndex::MemoryIndex(MemoryIndex&& other) noexcept
    : dim_(other.dim_), entries_(std::move(other.entries_)) {}

MemoryIndex& MemoryIndex::operator=(MemoryIndex&& other) noexcept {
  if (this != &other) {
    dim_ = other.dim_;
    entries_ = std::move(other.entries_);
  }
  return *this;
}

std::size_t MemoryIndex::size() const {
  std::shared_lock lock(mutex_);
  return entries_.size();
}

void MemoryIndex::insert(std::string key_text, EmbeddingVector key, std::string group_id,
                         std::vector<Trajectory> exemplars,
                         std::vector<abstraction::AbstractionPrompt> prompts) {
  if (key.dim() != dim_) {
    throw Error("dimension-mismatch", "key dim " + std::to_string(key.dim()) +
                                          " != index dim " + std::to_string(dim_));
  }
  check_finite(key);
  if (group_id.empty()) {
    throw Error("invariant-violation", "group_id must be non-empty");
  }
  for (const Trajectory& t : exemplars) {
    if (t.outcome != Outcome::Success) {
      throw Error("unsuccessful-exemplar",
                  "trajectory '" + t.task.id + "' has outcome " + to_string(t.outcome));
    }
    if (t.steps.empty()) {
      throw Error("invariant-violation", "stored exemplar '" + t.task.id + "' has no steps");
    }
  }
  std::unique_lock lock(mutex_);
  MemoryEntry entry;
  entry.key_text = std::move(key_text);
  entry.key = std::move(key);
  entry.group_id = std::move(group_id);
  entry.exemplars = std::move(exemplars);
  entry.abstraction_prompts = std::move(prompts);
  entry.insertion_index = entries_.size();
  entries_.push_back(std::move(entry));
}

std::vector<RetrievalResult> MemoryIndex::retrieve_topn(const EmbeddingVector& query,
                                                        std::size_t n) const {
  if (n == 0) throw Error("invariant-violation", "n must be positive");
  if (query.dim() != dim_) {
    throw Error("dimension-mismatch", "query dim " + std::to_string(query.dim()) +
                                          " != index dim " + std::to_string(dim_));
  }
  std::shared_lock lock(mutex_);
  if (entries_.empty()) throw Error("empty-index", "retrieval over an empty memory");
  std::vector<RetrievalResult> all;
  all.reserve(entries_.size());
  for (const MemoryEntry& entry : entries_) {
    all.push_back({&entry, euclidean_distance(query, entry.key)});
  }
  std::sort(all.begin(), all.end(), [](const RetrievalResult& a, const RetrievalResult& b) {
    if (a.distance != b.distance) return a.distance < b.distance;
    return a.entry->insertion_index < b.entry->insertion_index;
  });
  if (all.size() > n) all.resize(n);
  return all;
}

std::vector<Trajectory> MemoryIndex::exemplars_for_group(const std::string& group_id) const {
  std::shared_lock lock(mutex_);
  std::vector<Trajectory> out;
  std::vector<std::string> seen;  // canonical bytes of already collected exemplars
  for (const MemoryEntry& entry : entries_) {
    if (entry.group_id != group_id) continue;
    for (const Trajectory& t : entry.exemplars) {
      std::string bytes = serialize_trajectory(t);
      if (std::find(seen.begin(), seen.end(), bytes) != seen.end()) continue;
      seen.push_back(std::move(bytes));
      out.push_back(t);
    }
  }
  return out;
}

std::vector<abstraction::AbstractionPrompt> MemoryIndex::prompts_for_group(
    const std::string& group_id) const {
  std::shared_lock lock(mutex_);
  std::vector<abstraction::AbstractionPrompt> out;
  std::vector<std::string> seen;
  for (const MemoryEntry& entry : entries_) {
    if (entry.group_id != group_id) continue;
    for (const abstraction::AbstractionPrompt& prompt : entry.abstraction_prompts) {
      std::string bytes = abstraction::abstraction_prompt_to_json(prompt);
      if (std::find(seen.begin(), seen.end(), bytes) != seen.end()) continue;
      seen.push_back(std::move(bytes));
      out.push_back(prompt);
    }
  }
  return out;
}

bool MemoryIndex::contains_key_text(const std::string& key_text) const {
  std::shared_lock lock(mutex_);
  for (const MemoryEntry& entry : entries_) {
    if (entry.key_text == key_text) return true;
  }
  return false;
}

std::vector<const MemoryEntry*> MemoryIndex::entries() const {
  std::shared_lock lock(mutex_);
  std::vector<const MemoryEntry*> out;
  out.reserve(entries_.size());
  for (const MemoryEntry& entry : entries_) out.push_back(&entry);
  return out;
}

std::string resolve_majority(std::span<const RetrievalResult> results) {
  if (results.empty()) throw Error("empty-results", "majority vote over zero results");
  std::map<std::string, std::size_t> frequency;
  for (const RetrievalResult& r : results) ++frequency[r.entry->group_id];

  const RetrievalResult* best = nullptr;
  std::size_t best_freq = 0;
  for (const RetrievalResult& r : results) {
    std::size_t freq = frequency[r.entry->group_id];
    // higher frequency wins; within a frequency tie the nearest result wins,
    // and equal distances fall back to the earlier result
    if (best == nullptr || freq > best_freq ||
        (freq == best_freq && r.distance < best->distance)) {
      best = &r;
      best_freq = freq;
    }
  }
  return best->entry->group_id;
}

std::string build_metadata_miniwob(const TaskSpec& task, const RawState& initial_state) {
  return task.description + "\n" + initial_state.html;
}

std::string build_metadata_mind2web(const TaskSpec& task) {
  auto field = [&](const char* name) -> const std::string& {
    auto it = task.metadata_fields.find(name);
    if (it == task.metadata_fields.end()) {
      throw Error("missing-field", std::string("metadata_fields.") + name);
    }
    return it->second;
  };
  return "website: " + field("website") + "\ndomain: " + field("domain") +
         "\ntask: " + field("description");
}

namespace {

void write_f32le(std::ostream& out, float value) {
  std::uint32_t bits;
  std::memcpy(&bits, &value, sizeof bits);
  char bytes[4] = {static_cast<char>(bits & 0xFF), static_cast<char>((bits >> 8) & 0xFF),
                   static_cast<char>((bits >> 16) & 0xFF), static_cast<char>((bits >> 24) & 0xFF)};
  out.write(bytes, 4);
}

float read_f32le(const unsigned char* bytes) {
  std::uint32_t bits = static_cast<std::uint32_t>(bytes[0]) |
                       (static_cast<std::uint32_t>(bytes[1]) << 8) |
                       (static_cast<std::uint32_t>(bytes[2]) << 16) |
                       (static_cast<std::uint32_t>(bytes[3]) << 24);
  float value;
  std::memcpy(&value, &bits, sizeof value);
  return value;
}

}  // namespace

void persist(const MemoryIndex& index, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  auto entries = index.entries();

  // exemplar pool deduplicated in first-reference order
  std::vector<std::string> pool;
  std::map<std::string, std::size_t> pool_lines;
  auto pool_line = [&](const Trajectory& t) {
    std::string bytes = serialize_trajectory(t);
    auto it = pool_lines.find(bytes);
    if (it != pool_lines.end()) return it->second;
    std::size_t line = pool.size();
    pool_lines.emplace(bytes, line);
    pool.push_back(std::move(bytes));
    return line;
  };

  json manifest;
  manifest["schema_version"] = kMemorySchemaVersion;
  manifest["dim"] = index.dim();
  manifest["files"] = {{"keys", "keys.f32le"}, {"exemplars", "exemplars.jsonl"}};
  manifest["entries"] = json::array();
  for (const MemoryEntry* entry : entries) {
    json e;
    e["key_text"] = entry->key_text;
    e["group_id"] = entry->group_id;
    e["insertion_index"] = entry->insertion_index;
    e["exemplar_lines"] = json::array();
    for (const Trajectory& t : entry->exemplars) {
      e["exemplar_lines"].push_back(pool_line(t));
    }
    e["abstraction_prompts"] = json::array();
    for (const abstraction::AbstractionPrompt& prompt : entry->abstraction_prompts) {
      e["abstraction_prompts"].push_back(
          json::parse(abstraction::abstraction_prompt_to_json(prompt)));
    }
    manifest["entries"].push_back(std::move(e));
  }

  {
    std::ofstream out(dir / "manifest.json", std::ios::binary);
    if (!out) throw Error("missing-file", "cannot write " + (dir / "manifest.json").string());
    out << manifest.dump() << "\n";
  }
  {
    std::ofstream out(dir / "keys.f32le", std::ios::binary);
    if (!out) throw Error("missing-file", "cannot write " + (dir / "keys.f32le").string());
    for (const MemoryEntry* entry : entries) {
      for (float v : entry->key.values) write_f32le(out, v);
    }
  }
  {
    std::ofstream out(dir / "exemplars.jsonl", std::ios::binary);
    if (!out) throw Error("missing-file", "cannot write " + (dir / "exemplars.jsonl").string());
    for (const std::string& line : pool) out << line << "\n";
  }
}

MemoryIndex load(const std::filesystem::path& dir) {
  auto read_file = [](const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("missing-file", path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
  };

  json manifest;
  try {
    manifest = json::parse(read_file(dir / "manifest.json"));
  } catch (const json::parse_error& e) {
    throw Error("corrupt-manifest", std::string("manifest.json: ") + e.what());
  }
  if (!manifest.is_object() || !manifest.contains("dim") || !manifest.contains("entries")) {
    throw Error("corrupt-manifest", "manifest.json is missing dim/entries");
  }
  if (manifest.value("schema_version", -1) != kMemorySchemaVersion) {
    throw Error("corrupt-manifest", "unsupported memory schema_version");
  }
  std::size_t dim = manifest["dim"].get<std::size_t>();

  std::string keys_name = "keys.f32le";
  std::string exemplars_name = "exemplars.jsonl";
  if (manifest.contains("files")) {
    keys_name = manifest["files"].value("keys", keys_name);
    exemplars_name = manifest["files"].value("exemplars", exemplars_name);
  }

  std::string key_bytes = read_file(dir / keys_name);
  const json& entries = manifest["entries"];
  if (key_bytes.size() != entries.size() * dim * 4) {
    throw Error("dimension-mismatch",
                "keys matrix holds " + std::to_string(key_bytes.size()) + " bytes, expected " +
                    std::to_string(entries.size() * dim * 4) + " for dim " + std::to_string(dim));
  }

  std::vector<Trajectory> pool;
  {
    std::string text = read_file(dir / exemplars_name);
    std::size_t start = 0;
    while (start < text.size()) {
      std::size_t end = text.find('\n', start);
      if (end == std::string::npos) end = text.size();
      if (end > start) pool.push_back(deserialize_trajectory(text.substr(start, end - start)));
      start = end + 1;
    }
  }

  MemoryIndex index(dim);
  const auto* raw = reinterpret_cast<const unsigned char*>(key_bytes.data());
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const json& e = entries[i];
    EmbeddingVector key;
    key.values.reserve(dim);
    for (std::size_t d = 0; d < dim; ++d) {
      key.values.push_back(read_f32le(raw + (i * dim + d) * 4));
    }
    std::vector<Trajectory> exemplars;
    for (const json& line : e.at("exemplar_lines")) {
      std::size_t idx = line.get<std::size_t>();
      if (idx >= pool.size()) {
        throw Error("corrupt-manifest", "exemplar line " + std::to_string(idx) + " out of range");
      }
      exemplars.push_back(pool[idx]);
    }
    std::vector<abstraction::AbstractionPrompt> prompts;
    for (const json& p : e.value("abstraction_prompts", json::array())) {
      prompts.push_back(abstraction::abstraction_prompt_from_json_text(p.dump()));
    }
    index.insert(e.at("key_text").get<std::string>(), std::move(key),
                 e.at("group_id").get<std::string>(), std::move(exemplars), std::move(prompts));
  }
  return index;
}

}  // namespace webtrail::memory
