#include "webtrail/env.hpp"

#include "webtrail/actions.hpp"
#include "webtrail/embedding.hpp"
#include "webtrail/error.hpp"
#include "webtrail/html.hpp"
#include "webtrail/xpath.hpp"

#include <algorithm>
#include <array>
#include <sstream>

namespace webtrail::env {

namespace {

// ------------------------------------------------------------------ terminal

struct TerminalScenario {
  std::vector<std::string> files;
  std::string extension;  // empty means "no file extension"
  std::string target;
};

const std::vector<TerminalScenario>& terminal_scenarios() {
  static const std::vector<TerminalScenario> scenarios = {
      {{"index.rb", "media.html", "window.gpg"}, ".gpg", "window.gpg"},
      {{"alloy.png", "script.zip", "shark.html", "sudo.gpg"}, ".png", "alloy.png"},
      {{"bash.gpg", "image.gif", "nintendo.py"}, ".py", "nintendo.py"},
      {{"encrypted.sh", "chrome.txt", "search"}, "", "search"},
      {{"photo.jpg", "notes.txt", "backup.zip"}, ".txt", "notes.txt"},
      {{"main.rs", "build.sh", "readme.html"}, ".sh", "build.sh"},
      {{"draft.doc", "music.mp3", "cover.png"}, ".mp3", "music.mp3"},
      {{"data.csv", "chart.svg", "deploy"}, "", "deploy"},
      {{"video.mkv", "subs.srt", "poster.jpg"}, ".srt", "subs.srt"},
      {{"kernel.c", "module.h", "loader.rb"}, ".rb", "loader.rb"},
  };
  return scenarios;
}

class TerminalEnv final : public Environment {
public:
  std::string name() const override { return "terminal"; }

  RawState reset(long seed) override {
    seed_ = seed;
    scenario_ = terminal_scenarios()[static_cast<std::size_t>(seed) % terminal_scenarios().size()];
    files_ = scenario_.files;
    input_buffer_.clear();
    command_log_.clear();
    step_index_ = 0;
    return current_state();
  }

  RawState apply(const Action& action) override {
    ++step_index_;
    switch (action.kind) {
      case ActionKind::Type:
        input_buffer_ += action.text;
        break;
      case ActionKind::Press:
        if (action.key == "enter") execute_command();
        break;
      default:
        break;  // clicks only move focus in this environment
    }
    return current_state();
  }

  RawState current_state() const override {
    return RawState{render(), step_index_, seed_};
  }

  TaskSpec task() const override {
    TaskSpec task;
    task.id = "terminal-seed" + std::to_string(seed_);
    task.description = description();
    task.benchmark_mode = BenchmarkMode::Episodic;
    return task;
  }

  bool succeeded() const override {
    return std::find(files_.begin(), files_.end(), scenario_.target) == files_.end();
  }

private:
  std::string description() const {
    if (scenario_.extension.empty()) {
      return "Use the terminal below to delete a file that has no file extension.";
    }
    return "Use the terminal below to delete a file ending with the extension " +
           scenario_.extension;
  }

  std::string query_html() const {
    if (scenario_.extension.empty()) {
      return "Use the terminal below to delete a file that has <span class=\"bold\">no file "
             "extension</span>.";
    }
    return "Use the terminal below to delete a file ending with the extension <span "
           "class=\"bold\">" +
           scenario_.extension + "</span>";
  }

  void execute_command() {
    std::string command = input_buffer_;
    input_buffer_.clear();
    std::istringstream in(command);
    std::string verb;
    in >> verb;
    std::string output;
    if (verb == "ls") {
      for (std::size_t i = 0; i < files_.size(); ++i) {
        if (i > 0) output += " ";
        output += files_[i];
      }
    } else if (verb == "rm") {
      std::string target;
      in >> target;
      auto it = std::find(files_.begin(), files_.end(), target);
      if (it != files_.end()) {
        files_.erase(it);
      } else {
        output = "rm: cannot remove '" + target + "': No such file or directory";
      }
    } else if (verb == "help") {
      output = "Available commands: ls, rm";
    } else if (!verb.empty()) {
      output = verb + ": command not found";
    }
    command_log_.emplace_back(command, output);
  }

  std::string render() const {
    std::string out;
    out += "<div id=\"wrap\" data-wob_ref=\"2\" data-wob_eps=\"e0\">\n";
    out += "  <div id=\"query\">" + query_html() + "</div>\n";
    out += "  <div id=\"area\" data-wob_ref=\"3\" data-wob_eps=\"e0\"><div data-wob_ref=\"4\" "
           "data-wob_eps=\"e0\">\n";
    out += "<div id=\"terminal\" data-wob_ref=\"5\" data-wob_eps=\"e0\">\n";
    out += "  <div id=\"terminal-header\" data-wob_ref=\"6\" data-wob_eps=\"e0\">terminal</div>\n";
    out += "  <div id=\"terminal-contents\" data-wob_ref=\"7\" data-wob_eps=\"e0\">\n";
    out += "    <div class=\"terminal-output\" data-wob_ref=\"8\" data-wob_eps=\"e0\">\n";
    out += "  <span class=\"output\" data-wob_ref=\"9\" data-wob_eps=\"e0\">Welcome! Type help "
           "for a list of available commands.</span>\n";
    out += "</div><div class=\"terminal-output\" data-wob_ref=\"10\" data-wob_eps=\"e0\">\n";
    out += "  <span class=\"output\" data-wob_ref=\"11\" data-wob_eps=\"e0\">Last login: Sun Sep "
           "24 2023</span>\n";
    int ref = 17;
    for (const auto& [command, output] : command_log_) {
      out += "</div><div class=\"terminal-line\" data-wob_ref=\"" + std::to_string(ref++) +
             "\" data-wob_eps=\"e0\">\n";
      out += "  <span class=\"user\" data-wob_ref=\"" + std::to_string(ref++) +
             "\" data-wob_eps=\"e0\">user$</span>\n";
      out += "  <span class=\"command\" data-wob_ref=\"" + std::to_string(ref++) +
             "\" data-wob_eps=\"e0\">" + command + "</span>\n";
      if (!output.empty()) {
        out += "</div><div class=\"terminal-output\" data-wob_ref=\"" + std::to_string(ref++) +
               "\" data-wob_eps=\"e0\">\n";
        out += "  <span class=\"output\" data-wob_ref=\"" + std::to_string(ref++) +
               "\" data-wob_eps=\"e0\">" + output + "</span>\n";
      }
    }
    out += "</div><div class=\"terminal-line\" data-wob_ref=\"12\" data-wob_eps=\"e0\">\n";
    out += "      <span class=\"user\" data-wob_ref=\"13\" data-wob_eps=\"e0\">user$</span>\n";
    if (command_log_.empty()) {
      out += "      <span id=\"active-input\" class=\"command\"></span>\n";
      out += "      <span id=\"input-flicker\" data-wob_ref=\"14\" data-wob_eps=\"e0\"></span>\n";
    } else {
      out += "      <span id=\"active-input\" class=\"command\" data-wob_ref=\"16\" "
             "data-wob_eps=\"e0\"></span>\n";
      out += "      <span id=\"input-flicker\" data-wob_ref=\"14\" data-wob_eps=\"e0\" "
             "class=\"\"></span>\n";
    }
    out += "    </div>\n";
    out += "  </div>\n";
    out += "</div>\n";
    out += "<input type=\"text\" id=\"terminal-target\" data-wob_ref=\"15\" data-wob_eps=\"e0\">\n";
    out += "</div></div>\n";
    out += "</div>";
    return out;
  }

  long seed_ = 0;
  TerminalScenario scenario_;
  std::vector<std::string> files_;
  std::string input_buffer_;
  std::vector<std::pair<std::string, std::string>> command_log_;
  int step_index_ = 0;
};

// -------------------------------------------------------------- flight-search

class FlightEnv final : public Environment {
public:
  std::string name() const override { return "flight-search"; }

  RawState reset(long seed) override {
    seed_ = seed;
    phase_ = Phase::Form;
    focus_ = Focus::None;
    from_committed_ = false;
    to_committed_ = false;
    typed_.clear();
    datepicker_open_ = false;
    prev_clicks_ = 0;
    day_ = 0;
    booked_price_ = -1;
    step_index_ = 0;
    generate_flights();
    return current_state();
  }

  RawState apply(const Action& action) override {
    ++step_index_;
    if (phase_ == Phase::Done) return current_state();
    switch (action.kind) {
      case ActionKind::Type:
        typed_ = action.text;
        break;
      case ActionKind::Press:
        if (action.key == "enter" && !typed_.empty()) {
          if (focus_ == Focus::From) from_committed_ = true;
          if (focus_ == Focus::To) to_committed_ = true;
        }
        break;
      case ActionKind::ClickXpath:
      case ActionKind::ClickOption:
        handle_click(action.xpath);
        break;
      default:
        break;
    }
    return current_state();
  }

  RawState current_state() const override { return RawState{render(), step_index_, seed_}; }

  TaskSpec task() const override {
    TaskSpec task;
    task.id = "flight-search-seed" + std::to_string(seed_);
    task.description = "Book the cheapest one-way flight from: Anvik, AK to: MOT on 12/23/2016.";
    task.benchmark_mode = BenchmarkMode::Episodic;
    return task;
  }

  bool succeeded() const override {
    return phase_ == Phase::Done && booked_price_ == cheapest_price_;
  }

private:
  enum class Phase { Form, Results, Done };
  enum class Focus { None, From, To, Datepicker };

  struct Flight {
    int price = 0;
    int minutes = 0;
    std::string airline;
  };

  void generate_flights() {
    std::uint64_t rng = 0x5bd1e995u ^ (static_cast<std::uint64_t>(seed_) * 0x100000001b3ull);
    auto next = [&rng]() { return splitmix64(rng); };
    static const std::array<const char*, 6> kAirlines = {"Cardinal", "Cascade", "Keystone",
                                                         "Lakeshore", "Pioneer", "Summit"};
    std::size_t count = 5 + static_cast<std::size_t>(next() % 3);  // 5..7 flights
    flights_.clear();
    std::vector<int> used;
    for (std::size_t i = 0; i < count; ++i) {
      int price = 36 + static_cast<int>(next() % 645);
      while (std::find(used.begin(), used.end(), price) != used.end()) {
        price = 36 + (price - 36 + 1) % 645;
      }
      used.push_back(price);
      Flight flight;
      flight.price = price;
      flight.minutes = 60 + static_cast<int>(next() % 540);  // 1h .. 9h59m
      flight.airline = kAirlines[next() % kAirlines.size()];
      flights_.push_back(flight);
    }
    cheapest_price_ = flights_.front().price;
    for (const Flight& f : flights_) cheapest_price_ = std::min(cheapest_price_, f.price);
  }

  void handle_click(const std::string& xpath_text) {
    xpath::Expression expr;
    try {
      expr = xpath::Expression::parse(xpath_text);
    } catch (const Error&) {
      return;  // malformed target: nothing to click
    }
    html::Document doc = html::Document::parse(render());
    const html::Node* node = expr.first(doc.root());
    if (node == nullptr) return;
    const std::string* id = node->attr("id");
    if (phase_ == Phase::Form) {
      if (id != nullptr && *id == "flight-from") focus_ = Focus::From;
      else if (id != nullptr && *id == "flight-to") focus_ = Focus::To;
      else if (id != nullptr && *id == "datepicker") {
        focus_ = Focus::Datepicker;
        datepicker_open_ = true;
      } else if (node->tag == "a" && datepicker_open_) {
        std::string text = node->own_text();
        if (!text.empty() &&
            std::all_of(text.begin(), text.end(),
                        [](unsigned char c) { return std::isdigit(c); })) {
          day_ = std::stoi(text);
        }
      } else if (const std::string* title = node->attr("title");
                 title != nullptr && *title == "Prev") {
        ++prev_clicks_;
      } else if (id != nullptr && *id == "search") {
        // the task date is 12/23/2016 and the widget opens on December 2016
        if (from_committed_ && to_committed_ && day_ == 23 && prev_clicks_ == 0) {
          phase_ = Phase::Results;
        }
      }
      return;
    }
    if (phase_ == Phase::Results) {
      if (node->tag == "button") {
        const std::string* price = node->attr("data-price");
        if (price != nullptr) {
          booked_price_ = std::stoi(*price);
          phase_ = Phase::Done;
        }
      }
    }
  }

  std::string render_form() const {
    std::string out;
    out += "<div id=\"wrap\" data-wob_ref=\"2\" data-wob_eps=\"e0\">\n";
    out += "  <div id=\"query\">Book the <span class=\"bold\">cheapest</span> one-way flight "
           "from: <span class=\"bold\">Anvik, AK</span> to: <span class=\"bold\">MOT</span> on "
           "<span class=\"bold\">12/23/2016</span>.</div>\n";
    out += "  <div id=\"area\" data-wob_ref=\"3\" data-wob_eps=\"e0\">\n";
    out += "    <div id=\"menu\" data-wob_ref=\"4\" data-wob_eps=\"e0\">\n";
    out += "      <h2 id=\"header-book\" data-wob_ref=\"5\" data-wob_eps=\"e0\">Book Your "
           "One-Way Flight</h2>\n";
    out += "      <div class=\"input-container\" data-wob_ref=\"6\" data-wob_eps=\"e0\"><input "
           "id=\"flight-from\" class=\"flight-input ui-autocomplete-input\" type=\"text\" "
           "placeholder=\"From:\" autocomplete=\"off\" data-wob_ref=\"7\" "
           "data-wob_eps=\"e0\"></div>\n";
    out += "      <div class=\"input-container\" data-wob_ref=\"8\" data-wob_eps=\"e0\"><input "
           "id=\"flight-to\" class=\"flight-input ui-autocomplete-input\" type=\"text\" "
           "placeholder=\"To:\" autocomplete=\"off\" data-wob_ref=\"9\" "
           "data-wob_eps=\"e0\"></div>\n";
    out += "      <div class=\"departure-container\" data-wob_ref=\"10\" data-wob_eps=\"e0\">\n";
    out += "        <div class=\"departure-header\" data-wob_ref=\"11\" "
           "data-wob_eps=\"e0\">Departure Date</div>\n";
    out += "        <div class=\"input-container\" data-wob_ref=\"12\" "
           "data-wob_eps=\"e0\"><input id=\"datepicker\" class=\"flight-input hasDatepicker\" "
           "type=\"text\" readonly=\"\" data-wob_ref=\"13\" data-wob_eps=\"e0\"></div>\n";
    out += "      </div>\n";
    out += "      <div class=\"search-container\" data-wob_ref=\"14\" data-wob_eps=\"e0\">\n";
    out += "        <button id=\"search\" data-wob_ref=\"15\" data-wob_eps=\"e0\">Search</button>\n";
    out += "      </div>\n";
    out += "    </div>\n";
    if (datepicker_open_) {
      out += "    <div id=\"ui-datepicker-div\" class=\"ui-datepicker\" data-wob_ref=\"16\" "
             "data-wob_eps=\"e0\">\n";
      out += "      <a class=\"ui-datepicker-prev\" title=\"Prev\" data-wob_ref=\"17\" "
             "data-wob_eps=\"e0\">Prev</a>\n";
      out += "      <div class=\"ui-datepicker-title\">December 2016</div>\n";
      out += "      <table class=\"ui-datepicker-calendar\"><tbody><tr>";
      for (int day = 1; day <= 31; ++day) {
        out += "<td><a class=\"ui-state-default\">" + std::to_string(day) + "</a></td>";
        if (day % 7 == 0 && day != 31) out += "</tr><tr>";
      }
      out += "</tr></tbody></table>\n";
      out += "    </div>\n";
    }
    out += "  <div id=\"results\" class=\"hide\"></div>\n";
    out += "  </div>\n";
    out += "</div>";
    return out;
  }

  std::string render_results() const {
    std::string out;
    out += "<div id=\"wrap\" data-wob_ref=\"2\" data-wob_eps=\"e0\">\n";
    out += "  <div id=\"query\">Book the <span class=\"bold\">cheapest</span> one-way flight "
           "from: <span class=\"bold\">Anvik, AK</span> to: <span class=\"bold\">MOT</span> on "
           "<span class=\"bold\">12/23/2016</span>.</div>\n";
    out += "  <div id=\"area\" data-wob_ref=\"3\" data-wob_eps=\"e0\">\n";
    out += "  <div id=\"results\" data-wob_ref=\"4\" data-wob_eps=\"e0\">\n";
    out += "    <div id=\"results-header\" data-wob_ref=\"5\" data-wob_eps=\"e0\">We found " +
           std::to_string(flights_.size()) +
           " one-way flights from Anvik, AK (ANV) to Traverse City (MOT) departing on "
           "Friday, December 23, 2016.</div>\n";
    int ref = 6;
    for (std::size_t i = 0; i < flights_.size(); ++i) {
      const Flight& flight = flights_[i];
      int hours = flight.minutes / 60;
      int minutes = flight.minutes % 60;
      std::string row_id = std::to_string(i);
      out += "    <div class=\"flight\" data-flight-index=\"" + row_id + "\" data-wob_ref=\"" +
             std::to_string(ref++) + "\" data-wob_eps=\"e0\">\n";
      out += "      <div class=\"flight-header\" data-wob_ref=\"" + std::to_string(ref++) +
             "\" data-wob_eps=\"e0\">" + flight.airline + " Airlines flight " +
             std::to_string(1200 + static_cast<int>(i) * 37) + "</div>\n";
      out += "      <div class=\"flight-details\" data-wob_ref=\"" + std::to_string(ref++) +
             "\" data-wob_eps=\"e0\">\n";
      out += "        <div class=\"depart-city\">Anvik, AK (ANV)</div>\n";
      out += "        <div class=\"arrive-city\">Traverse City (MOT)</div>\n";
      out += "        <div class=\"time-duration\" data-minutes=\"" +
             std::to_string(flight.minutes) + "\">" + std::to_string(hours) + "h " +
             std::to_string(minutes) + "m</div>\n";
      out += "      </div>\n";
      out += "      <button class=\"flight-price\" data-price=\"" + std::to_string(flight.price) +
             "\" data-wob_ref=\"" + std::to_string(ref++) + "\" data-wob_eps=\"e0\">Book flight "
             "for $" +
             std::to_string(flight.price) + "</button>\n";
      out += "    </div>\n";
    }
    out += "  </div>\n";
    out += "  </div>\n";
    out += "</div>";
    return out;
  }

  std::string render() const {
    if (phase_ == Phase::Form) return render_form();
    return render_results();
  }

  long seed_ = 0;
  Phase phase_ = Phase::Form;
  Focus focus_ = Focus::None;
  bool from_committed_ = false;
  bool to_committed_ = false;
  std::string typed_;
  bool datepicker_open_ = false;
  int prev_clicks_ = 0;
  int day_ = 0;
  std::vector<Flight> flights_;
  int cheapest_price_ = 0;
  int booked_price_ = -1;
  int step_index_ = 0;
};

// ----------------------------------------------------------------- form-fill

struct FormFillScenario {
  std::string word;
  std::vector<std::pair<int, int>> skews;  // (skewX, skewY) per letter
  int margin_left;
  int margin_top;
  int button_margin;
};

const std::vector<FormFillScenario>& form_fill_scenarios() {
  static const std::vector<FormFillScenario> scenarios = {
      {"jrpf", {{-13, 21}, {8, 17}, {-13, 32}, {2, 18}}, 13, 19, 16},
      {"rezp", {{3, -26}, {-4, -21}, {-8, 30}, {-8, -25}}, 13, 14, 18},
      {"aoy", {{8, -24}, {12, -11}, {1, -23}}, 10, 10, 17},
      {"quv", {{-6, 12}, {14, -19}, {0, 25}}, 11, 15, 18},
      {"xkde", {{9, -14}, {-2, 28}, {7, -30}, {-11, 6}}, 12, 17, 16},
      {"mwat", {{-1, 19}, {5, -27}, {13, 11}, {-9, -8}}, 14, 12, 17},
      {"bnis", {{4, -22}, {-12, 16}, {10, 29}, {-5, -13}}, 10, 18, 18},
      {"gthc", {{-7, 24}, {11, -17}, {-3, 8}, {6, -29}}, 13, 11, 16},
  };
  return scenarios;
}

class FormFillEnv final : public Environment {
public:
  std::string name() const override { return "form-fill"; }

  RawState reset(long seed) override {
    seed_ = seed;
    scenario_ =
        form_fill_scenarios()[static_cast<std::size_t>(seed) % form_fill_scenarios().size()];
    typed_.clear();
    focused_ = false;
    submitted_ = false;
    step_index_ = 0;
    return current_state();
  }

  RawState apply(const Action& action) override {
    ++step_index_;
    if (submitted_) return current_state();
    switch (action.kind) {
      case ActionKind::Type:
        if (focused_) typed_ += action.text;
        break;
      case ActionKind::ClickXpath: {
        xpath::Expression expr;
        try {
          expr = xpath::Expression::parse(action.xpath);
        } catch (const Error&) {
          break;
        }
        html::Document doc = html::Document::parse(render());
        const html::Node* node = expr.first(doc.root());
        if (node == nullptr) break;
        const std::string* id = node->attr("id");
        if (id != nullptr && *id == "tt") focused_ = true;
        if (id != nullptr && *id == "subbtn") submitted_ = true;
        break;
      }
      default:
        break;
    }
    return current_state();
  }

  RawState current_state() const override { return RawState{render(), step_index_, seed_}; }

  TaskSpec task() const override {
    TaskSpec task;
    task.id = "form-fill-seed" + std::to_string(seed_);
    task.description = "Type the text below into the text field and press Submit.";
    task.benchmark_mode = BenchmarkMode::Episodic;
    return task;
  }

  bool succeeded() const override { return submitted_ && typed_ == scenario_.word; }

private:
  std::string render() const {
    std::string out;
    out += "<div id=\"wrap\" data-wob_ref=\"2\" data-wob_eps=\"e0\">\n";
    out += "  <div id=\"sol\" class=\"" + scenario_.word +
           "\" data-wob_ref=\"3\" data-wob_eps=\"e0\"></div>\n";
    out += "  <div id=\"query\">Type the text below into the text field and press Submit.</div>\n";
    out += "  <div id=\"area\" data-wob_ref=\"4\" data-wob_eps=\"e0\">\n";
    out += "    <div id=\"captcha\" data-wob_ref=\"5\" data-wob_eps=\"e0\">";
    int ref = 6;
    for (std::size_t i = 0; i < scenario_.word.size(); ++i) {
      out += "<span style=\"transform: skewX(" + std::to_string(scenario_.skews[i].first) +
             "deg) skewY(" + std::to_string(scenario_.skews[i].second) + "deg);\" data-wob_ref=\"" +
             std::to_string(ref++) + "\" data-wob_eps=\"e0\">" + scenario_.word[i] + "</span>";
    }
    out += "</div>\n";
    out += "    <div id=\"form\" style=\"margin-left:" + std::to_string(scenario_.margin_left) +
           "px;margin-top:" + std::to_string(scenario_.margin_top) + "px;\" data-wob_ref=\"" +
           std::to_string(ref++) + "\" data-wob_eps=\"e0\">\n";
    out += "      <input type=\"text\" id=\"tt\" data-wob_ref=\"" + std::to_string(ref++) +
           "\" data-wob_eps=\"e0\">\n";
    out += "      <button id=\"subbtn\" class=\"secondary-action\" style=\"margin-top:" +
           std::to_string(scenario_.button_margin) + "px;\" data-wob_ref=\"" +
           std::to_string(ref++) + "\" data-wob_eps=\"e0\">Submit</button>\n";
    out += "    </div>\n";
    out += "  </div>\n";
    out += "</div>";
    return out;
  }

  long seed_ = 0;
  FormFillScenario scenario_;
  std::string typed_;
  bool focused_ = false;
  bool submitted_ = false;
  int step_index_ = 0;
};

}  // namespace

std::unique_ptr<Environment> make_environment(const std::string& name) {
  if (name == "terminal") return std::make_unique<TerminalEnv>();
  if (name == "flight-search") return std::make_unique<FlightEnv>();
  if (name == "form-fill") return std::make_unique<FormFillEnv>();
  throw Error("unknown-environment", name);
}

const std::vector<std::string>& environment_names() {
  static const std::vector<std::string> names = {"terminal", "flight-search", "form-fill"};
  return names;
}

}  // namespace webtrail::env
