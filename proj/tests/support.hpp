#pragma once

#include "webtrail/embedding.hpp"
#include "webtrail/model.hpp"

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace testsupport {

inline std::filesystem::path fixture_dir() { return WEBTRAIL_FIXTURE_DIR; }

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return buffer.str();
}

/// File content without the conventional trailing newline.
inline std::string read_fixture(const std::string& relative) {
  std::string text = read_file(fixture_dir() / relative);
  if (!text.empty() && text.back() == '\n') text.pop_back();
  return text;
}

inline std::vector<std::string> read_lines(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) lines.push_back(line);
  }
  return lines;
}

/// Small deterministic rng (xorshift-free, splitmix-based).
class Rng {
public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() { return webtrail::splitmix64(state_); }

  std::uint64_t below(std::uint64_t bound) { return next() % bound; }

  double unit() { return static_cast<double>(next() >> 11) / 9007199254740992.0; }

  double in_range(double lo, double hi) { return lo + unit() * (hi - lo); }

private:
  std::uint64_t state_;
};

inline std::string random_text(Rng& rng, std::size_t max_len = 24) {
  static const char* kAlphabet =
      "abcdefghijklmnopqrstuvwxyzABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 _-.'\"\\\n\t<>&";
  static const std::size_t kAlphabetLen = 75;
  std::size_t len = 1 + rng.below(max_len);
  std::string out;
  for (std::size_t i = 0; i < len; ++i) {
    out.push_back(kAlphabet[rng.below(kAlphabetLen)]);
  }
  // sprinkle in some multibyte text
  if (rng.below(4) == 0) out += "\xC3\xA9\xE2\x82\xAC";  // é€
  return out;
}

inline webtrail::Action random_action(Rng& rng) {
  using webtrail::Action;
  switch (rng.below(8)) {
    case 0: return Action::click_xpath("//*[@id='" + std::string(1, char('a' + rng.below(26))) + "']");
    case 1: return Action::type(random_text(rng));
    case 2: {
      const auto& keys = webtrail::allowed_press_keys();
      return Action::press(keys[rng.below(keys.size())]);
    }
    case 3: return Action::click_option("//option[text()='" + std::to_string(rng.below(50)) + "']");
    case 4: return Action::move_mouse("//div");
    case 5: return Action::click(static_cast<long>(rng.below(100000)));
    case 6: return Action::type_by_id(static_cast<long>(rng.below(100000)), random_text(rng));
    default:
      return Action::select_by_id(static_cast<long>(rng.below(100000)), random_text(rng));
  }
}

inline webtrail::Trajectory random_trajectory(Rng& rng) {
  using namespace webtrail;
  Trajectory t;
  t.task.id = "task-" + std::to_string(rng.below(1000000));
  t.task.description = random_text(rng, 60);
  t.task.benchmark_mode =
      rng.below(2) == 0 ? BenchmarkMode::Episodic : BenchmarkMode::StaticDataset;
  std::size_t fields = rng.below(4);
  for (std::size_t i = 0; i < fields; ++i) {
    t.task.metadata_fields["field" + std::to_string(rng.below(10))] = random_text(rng);
  }
  switch (rng.below(3)) {
    case 0: t.outcome = Outcome::Success; break;
    case 1: t.outcome = Outcome::Failure; break;
    default: t.outcome = Outcome::Unknown; break;
  }
  std::size_t steps = rng.below(5);
  for (std::size_t s = 0; s < steps; ++s) {
    Step step;
    step.observation.text = random_text(rng, 120);
    step.observation.source = static_cast<ObservationSource>(rng.below(5));
    step.observation.truncated = rng.below(10) == 0;
    std::size_t actions = 1 + rng.below(4);
    for (std::size_t a = 0; a < actions; ++a) {
      step.action_block.actions.push_back(random_action(rng));
    }
    step.action_block.raw_text = random_text(rng, 80);
    std::size_t comments = rng.below(3);
    for (std::size_t c = 0; c < comments; ++c) {
      step.action_block.comments.push_back(random_text(rng));
    }
    t.steps.push_back(std::move(step));
  }
  return t;
}

}  // namespace testsupport
