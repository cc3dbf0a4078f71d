// Regenerates the checked-in fixture corpus: exemplar trajectories,
// abstraction prompts, demo packs, the synthetic static dataset, the CLI
// prompt inputs, and the recorded backend scripts. Run from the repo root
// (or pass --root) after changing environments or prompt layouts.

#include "webtrail/abstraction.hpp"
#include "webtrail/actions.hpp"
#include "webtrail/chat.hpp"
#include "webtrail/embedding.hpp"
#include "webtrail/env.hpp"
#include "webtrail/error.hpp"
#include "webtrail/eval.hpp"
#include "webtrail/html.hpp"
#include "webtrail/llm.hpp"
#include "webtrail/memory.hpp"
#include "webtrail/model.hpp"
#include "webtrail/prompting.hpp"

#include <json.hpp>

#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace webtrail;

namespace {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing-file", path.string());
  std::ostringstream buffer;
  buffer << in.rdbuf();
  std::string text = buffer.str();
  if (!text.empty() && text.back() == '\n') text.pop_back();  // html fixtures end with \n
  return text;
}

void write_file(const fs::path& path, const std::string& content) {
  fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("missing-file", "cannot write " + path.string());
  out << content;
}

ActionBlock code_block(const std::string& raw_text) {
  actions::ActionScript script = actions::parse_code_actions("```\n" + raw_text + "\n```");
  ActionBlock block = actions::expand(script);
  block.raw_text = raw_text;
  return block;
}

ActionBlock m2w_block(const std::string& raw_text) {
  ActionBlock block;
  block.actions.push_back(actions::parse_m2w_action(raw_text));
  block.raw_text = raw_text;
  return block;
}

Step make_step(const std::string& obs_text, ObservationSource source, ActionBlock block) {
  Step step;
  step.observation = Observation{obs_text, source, false};
  step.action_block = std::move(block);
  return step;
}

TaskSpec episodic_task(const std::string& id, const std::string& description) {
  TaskSpec task;
  task.id = id;
  task.description = description;
  task.benchmark_mode = BenchmarkMode::Episodic;
  return task;
}

TaskSpec m2w_task(const std::string& id, const std::string& description,
                  const std::string& website, const std::string& domain) {
  TaskSpec task;
  task.id = id;
  task.description = description;
  task.benchmark_mode = BenchmarkMode::StaticDataset;
  task.metadata_fields = {{"website", website}, {"domain", domain}, {"description", description}};
  return task;
}

// --------------------------------------------------------------- exemplars

std::vector<Trajectory> terminal_exemplars() {
  std::vector<Trajectory> out;
  {
    Trajectory t;
    t.task = episodic_task(
        "terminal-png", "Use the terminal below to delete a file ending with the extension .png");
    t.steps.push_back(make_step(
        "Use the terminal below to delete a file ending with the extension .png",
        ObservationSource::Explicit, code_block("agent.type('ls')\nagent.press('enter')")));
    t.steps.push_back(make_step(
        "Use the terminal below to delete a file ending with the extension .png\nuser$ ls\n"
        "alloy.png script.zip shark.html sudo.gpg",
        ObservationSource::Explicit,
        code_block("# Note that it is not allowed to use *.xxx here. alloy.png is the file "
                   "ending with the extension .png. Type the complete filename.\n"
                   "agent.type('rm alloy.png')\nagent.press('enter')")));
    t.outcome = Outcome::Success;
    out.push_back(std::move(t));
  }
  {
    Trajectory t;
    t.task = episodic_task(
        "terminal-py", "Use the terminal below to delete a file ending with the extension .py");
    t.steps.push_back(make_step(
        "Use the terminal below to delete a file ending with the extension .py",
        ObservationSource::Explicit, code_block("agent.type('ls')\nagent.press('enter')")));
    t.steps.push_back(make_step(
        "Use the terminal below to delete a file ending with the extension .py\nuser$ ls\n"
        "bash.gpg image.gif nintendo.py",
        ObservationSource::Explicit,
        code_block("# Note that it is not allowed to use *.xxx here.\n"
                   "# nintendo.py is the file ending with the extension .py. Type the complete "
                   "filename.\n"
                   "agent.type('rm nintendo.py')\nagent.press('enter')")));
    t.outcome = Outcome::Success;
    out.push_back(std::move(t));
  }
  {
    Trajectory t;
    t.task = episodic_task("terminal-noext",
                           "Use the terminal below to delete a file that has no file extension.");
    t.steps.push_back(make_step(
        "Use the terminal below to delete a file that has no file extension.",
        ObservationSource::Explicit, code_block("agent.type('ls')\nagent.press('enter')")));
    t.steps.push_back(make_step(
        "Use the terminal below to delete a file that has no file extension.\nuser$ ls\n"
        "encrypted.sh chrome.txt search",
        ObservationSource::Explicit,
        code_block("# Note that it is not allowed to use *.xxx here.\n"
                   "# search is the file that has no file extension while encrypted.sh and "
                   "chrome.txt are not. Type the complete filename.\n"
                   "agent.type('rm search')\nagent.press(\"enter\")")));
    t.outcome = Outcome::Success;
    out.push_back(std::move(t));
  }
  return out;
}

struct FlightExemplarSpec {
  std::string id;
  std::string task;
  std::string observation;
  std::string action;
  std::string price_observation;
  std::string booking_action;
};

std::vector<Trajectory> flight_exemplars() {
  std::vector<FlightExemplarSpec> specs;
  specs.push_back(
      {"book-flight-1",
       "Book the cheapest one-way flight from: Hartford, CT to: TVC on 10/05/2016.",
       "Type the flight from: 'Hartford, CT' to: '(TVC)' (Hartford, CT is not an airport code. "
       "(TVC) is an airport code.), and select the date 10/05/2016.",
       "# Type the flight from: 'Hartford, CT' to: '(TVC)'\n"
       "agent.click_xpath(\"//*[@id='flight-from']\")\n"
       "agent.type(\"Hartford, CT\")\n"
       "agent.press(\"arrowdown\")\n"
       "agent.press(\"enter\")\n"
       "agent.click_xpath(\"//*[@id='flight-to']\")\n"
       "agent.type(\"(TVC)\")  # For the airport code, you must use parentheses\n"
       "agent.press(\"arrowdown\")\n"
       "agent.press(\"enter\")\n"
       "# Select the date 10/05/2016\n"
       "agent.click_xpath(\"//*[@id='datepicker']\")\n"
       "# Current date: 12/31/2016 (December-October=2). Click on 'Prev' twice\n"
       "for _ in range(2):\n"
       "    agent.click_xpath(\"//*[@title='Prev']\")\n"
       "# Click on the date '5'\n"
       "agent.click_xpath(\"//a[text()='5']\")\n"
       "agent.click_xpath(\"//*[@id='search']\")",
       "The price of the cheapest one-way flight is $92",
       "agent.click_xpath(\"//button[text()='Book flight for $92']\")"});
  specs.push_back(
      {"book-flight-2",
       "Book the shortest one-way flight from: Abilene, TX to: St Petersburg/Clearwater, FL on "
       "10/15/2016.",
       "Type the flight from: 'Abilene, TX' to: 'St Petersburg/Clearwater, FL' (Abilene, TX is "
       "not an airport code. St Petersburg/Clearwater, FL is not an airport code.), and select "
       "the date 10/15/2016.",
       "# Type the flight from: 'Abilene, TX' to: 'St Petersburg/Clearwater, FL'\n"
       "agent.click_xpath(\"//*[@id='flight-from']\")\n"
       "agent.type(\"Abilene, TX\")\n"
       "agent.press(\"arrowdown\")\n"
       "agent.press(\"enter\")\n"
       "agent.click_xpath(\"//*[@id='flight-to']\")\n"
       "agent.type(\"St Petersburg/Clearwater, FL\")\n"
       "agent.press(\"arrowdown\")\n"
       "agent.press(\"enter\")\n"
       "# Select the date 10/15/2016\n"
       "agent.click_xpath(\"//*[@id='datepicker']\")\n"
       "# Current date: 12/31/2016 (December-October=2). Click on 'Prev' twice\n"
       "for _ in range(2):\n"
       "    agent.click_xpath(\"//*[@title='Prev']\")\n"
       "# Click on the date '15'\n"
       "agent.click_xpath(\"//a[text()='15']\")\n"
       "agent.click_xpath(\"//*[@id='search']\")",
       "The price of the shortest one-way flight is $680",
       "agent.click_xpath(\"//button[text()='Book flight for $680']\")"});
  specs.push_back(
      {"book-flight-3",
       "Book the shortest one-way flight from: MNT to: Islip, NY on 11/05/2016.",
       "Type the flight from: '(MNT)' to: 'Islip, NY' ((MNT) is an airport code. Islip, NY is "
       "not an airport code.), and select the date 11/05/2016.",
       "# Type the flight from: '(MNT)' to: 'Islip, NY'\n"
       "agent.click_xpath(\"//*[@id='flight-from']\")\n"
       "agent.type(\"(MNT)\")  # For the airport code, you must use parentheses\n"
       "agent.press(\"arrowdown\")\n"
       "agent.press(\"enter\")\n"
       "agent.click_xpath(\"//*[@id='flight-to']\")\n"
       "agent.type(\"Islip, NY\")\n"
       "agent.press(\"arrowdown\")\n"
       "agent.press(\"enter\")\n"
       "# Select the date 11/05/2016\n"
       "agent.click_xpath(\"//*[@id='datepicker']\")\n"
       "# Current date: 12/31/2016 (December-November=1). Click on 'Prev' once\n"
       "agent.click_xpath(\"//*[@title='Prev']\")\n"
       "# Click on the date '5'\n"
       "agent.click_xpath(\"//a[text()='5']\")\n"
       "agent.click_xpath(\"//*[@id='search']\")",
       "The price of the shortest one-way flight is $341",
       "agent.click_xpath(\"//button[text()='Book flight for $341']\")"});
  specs.push_back(
      {"book-flight-4",
       "Book the cheapest one-way flight from: LKE to: Manhattan, KS on 12/12/2016.",
       "Type the flight from: '(LKE)' to: 'Manhattan, KS' ((LKE) is an airport code. Manhattan, "
       "KS is not an airport code.), and select the date 12/12/2016.",
       "# Type the flight from: '(LKE)' to: 'Manhattan, KS'\n"
       "agent.click_xpath(\"//*[@id='flight-from']\")\n"
       "agent.type(\"(LKE)\")  # For the airport code, you must use parentheses\n"
       "agent.press(\"arrowdown\")\n"
       "agent.press(\"enter\")\n"
       "agent.click_xpath(\"//*[@id='flight-to']\")\n"
       "agent.type(\"Manhattan, KS\")\n"
       "agent.press(\"arrowdown\")\n"
       "agent.press(\"enter\")\n"
       "# Select the date 12/12/2016\n"
       "agent.click_xpath(\"//*[@id='datepicker']\")\n"
       "# Current date: 12/31/2016 (December-December=0). No need to click on 'Prev'\n"
       "# Click on the date '12'\n"
       "agent.click_xpath(\"//a[text()='12']\")\n"
       "agent.click_xpath(\"//*[@id='search']\")",
       "The price of the cheapest one-way flight is $152",
       "agent.click_xpath(\"//button[text()='Book flight for $152']\")"});
  specs.push_back(
      {"book-flight-5",
       "Book the cheapest one-way flight from: WMH to: BTR on 11/16/2016.",
       "Type the flight from: '(WMH)' to: '(BTR)' ((WMH) and (BTR) are airport codes.), and "
       "select the date 11/16/2016.",
       "# Type the flight from: '(WMH)' to: '(BTR)'\n"
       "agent.click_xpath(\"//*[@id='flight-from']\")\n"
       "agent.type(\"(WMH)\")  # For the airport code, you must use parentheses\n"
       "agent.press(\"arrowdown\")\n"
       "agent.press(\"enter\")\n"
       "agent.click_xpath(\"//*[@id='flight-to']\")\n"
       "agent.type(\"(BTR)\")  # For the airport code, you must use parentheses\n"
       "agent.press(\"arrowdown\")\n"
       "agent.press(\"enter\")\n"
       "# Select the date 11/16/2016\n"
       "agent.click_xpath(\"//*[@id='datepicker']\")\n"
       "# Current date: 12/31/2016 (December-November=1). Click on 'Prev' once\n"
       "agent.click_xpath(\"//*[@title='Prev']\")\n"
       "# Click on the date '16'\n"
       "agent.click_xpath(\"//a[text()='16']\")\n"
       "agent.click_xpath(\"//*[@id='search']\")",
       "The price of the cheapest one-way flight is $36",
       "agent.click_xpath(\"//button[text()='Book flight for $36']\")"});

  std::vector<Trajectory> out;
  for (const FlightExemplarSpec& spec : specs) {
    Trajectory t;
    t.task = episodic_task(spec.id, spec.task);
    t.steps.push_back(
        make_step(spec.observation, ObservationSource::Explicit, code_block(spec.action)));
    t.steps.push_back(make_step(spec.price_observation, ObservationSource::ImplicitProgram,
                                code_block(spec.booking_action)));
    t.outcome = Outcome::Success;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Trajectory> form_fill_exemplars(const fs::path& fixtures) {
  std::vector<Trajectory> out;
  struct Spec {
    std::string id;
    std::string html_file;
    std::string word;
  };
  for (const Spec& spec : {Spec{"text-transform-rezp", "text_transform_rezp.html", "rezp"},
                           Spec{"text-transform-aoy", "text_transform_aoy.html", "aoy"}}) {
    Trajectory t;
    t.task = episodic_task(spec.id, "Type the text below into the text field and press Submit.");
    std::string html = read_file(fixtures / "html" / spec.html_file);
    t.steps.push_back(make_step(
        html, ObservationSource::RawPassthrough,
        code_block("agent.click_xpath(\"//*[@id='tt']\")  # Locate the input box by clicking on "
                   "it\n"
                   "agent.type('" +
                   spec.word +
                   "')  # Type the string in the input box\n"
                   "agent.click_xpath(\"//*[@id='subbtn']\")")));
    t.outcome = Outcome::Success;
    out.push_back(std::move(t));
  }
  return out;
}

std::vector<Trajectory> m2w_exemplars() {
  std::vector<Trajectory> out;
  {
    Trajectory t;
    t.task = m2w_task("m2w-remove-ssd", "Remove the SSD on my cart", "newegg", "shopping");
    t.steps.push_back(make_step(
        "<html> <div> <a id=131 shopping cart> <i icon of shopping cart /> <div> <span> 3 "
        "</span> Items </div> <div> $52.97 </div> </a> <ul> <a id=10012 computer peripherals> "
        "<div> Computer Peripherals </div> </a> <a id=10523 electronics> <div> Electronics "
        "</div> </a> </ul> </div> </html>",
        ObservationSource::TopkFilter,
        m2w_block("`CLICK [131]` ([link]  Shopping Cart -> CLICK)")));
    t.steps.push_back(make_step(
        "<html> <div> <div> <img id=18447 kingspec internal solid state drive /> <button "
        "id=18445 button> <i trash /> Remove </button> </div> <div> <a view details> SAMSUNG "
        "980 PRO M.2 2280 2TB PCIe Gen 4.0 x4, NVMe 1.3c Samsung V-NAND Internal Solid State "
        "Drive (SSD) MZ-V8P2T0B/AM </a> <a id=27481> Internal SSDs </a> </div> </div> </html>",
        ObservationSource::TopkFilter,
        m2w_block("`CLICK [18445]` ([button]  trash REMOVE -> CLICK)")));
    t.outcome = Outcome::Success;
    out.push_back(std::move(t));
  }
  {
    Trajectory t;
    t.task = m2w_task("m2w-add-wd-ssd",
                      "Add Western Digital internal SSD with 1TB storage and 8GB Ram DDR to the "
                      "cart.",
                      "newegg", "shopping");
    t.steps.push_back(make_step(
        "<html> <div> <input id=145 search search site /> <ul> <a id=10059 computer "
        "peripherals> <div> Computer Peripherals </div> </a> <a id=10570 electronics> <div> "
        "Electronics </div> </a> </ul> </div> </html>",
        ObservationSource::TopkFilter,
        m2w_block("`CLICK [145]` ([searchbox]  Search Site -> CLICK)")));
    t.steps.push_back(make_step(
        "<html> <div> <input id=36915 search search site /> <ul> <a id=46898 computer "
        "peripherals> <div> Computer Peripherals </div> </a> <a id=47409 electronics> <div> "
        "Electronics </div> </a> </ul> </div> </html>",
        ObservationSource::TopkFilter,
        m2w_block("`TYPE [36915] [Western Digital internal SSD 1 TB]` ([searchbox]  Search Site "
                  "-> TYPE: Western Digital internal SSD 1 TB)")));
    t.outcome = Outcome::Success;
    out.push_back(std::move(t));
  }
  {
    Trajectory t;
    t.task = m2w_task("m2w-upgrade-qty", "Upgrade the count of the current SSD in my cart to 10",
                      "newegg", "shopping");
    t.steps.push_back(make_step(
        "<html> <div> <a id=130 shopping cart> <i icon of shopping cart /> <div> <span> 3 "
        "</span> Items </div> <div> $85.97 </div> </a> <ul> <a id=10016 computer peripherals> "
        "<div> Computer Peripherals </div> </a> <a id=10527 electronics> <div> Electronics "
        "</div> </a> </ul> </div> </html>",
        ObservationSource::TopkFilter,
        m2w_block("`CLICK [130]` ([link]  Shopping Cart -> CLICK)")));
    t.steps.push_back(make_step(
        "<html> <div> <div> <a id=26807> Add </a> <a> Edit </a> <a> Done </a> </div> <div> "
        "<div> <input id=18580 text qty 1 /> <div> Limit 20 </div> </div> <div> <a id=26918> "
        "Add </a> <a> Edit </a> <a> Done </a> </div> </div> </div> </html>",
        ObservationSource::TopkFilter, m2w_block("`TYPE [18580] [10]` ([textbox]  qty -> TYPE: "
                                                 "10)")));
    t.steps.push_back(make_step(
        "<html> <div> <div> <a id=46341> Add </a> <a> Edit </a> <a> Done </a> </div> <div> "
        "<div> <input id=38114 text qty 10 /> <div> Limit 20 </div> </div> <div> <a id=46473> "
        "Add </a> <a> Edit </a> <a> Done </a> </div> </div> </div> </html>",
        ObservationSource::TopkFilter, m2w_block("`CLICK [38114]` ([textbox]  qty -> ENTER)")));
    t.outcome = Outcome::Success;
    out.push_back(std::move(t));
  }
  {
    Trajectory t;
    t.task = m2w_task("m2w-united-oneway", "Book a one-way flight from SFO to JFK on March 3",
                      "united", "travel");
    t.steps.push_back(make_step(
        "<html> <div> <a id=201 one way> One way </a> <input id=205 from airport /> <input "
        "id=207 to airport /> </div> </html>",
        ObservationSource::TopkFilter, m2w_block("`CLICK [201]` ([radio]  One way -> CLICK)")));
    t.steps.push_back(make_step(
        "<html> <div> <input id=305 from airport sfo /> <ul> <li id=311 san francisco sfo> SFO "
        "San Francisco </li> </ul> </div> </html>",
        ObservationSource::TopkFilter,
        m2w_block("`CLICK [311]` ([listitem]  SFO San Francisco -> CLICK)")));
    t.outcome = Outcome::Success;
    out.push_back(std::move(t));
  }
  {
    Trajectory t;
    t.task = m2w_task("m2w-espn-lakers", "Show the latest Lakers box score", "espn", "sports");
    t.steps.push_back(make_step(
        "<html> <div> <input id=401 search search espn /> <a id=405 nba> NBA </a> </div> "
        "</html>",
        ObservationSource::TopkFilter,
        m2w_block("`TYPE [401] [Lakers]` ([searchbox]  Search -> TYPE: Lakers)")));
    t.steps.push_back(make_step(
        "<html> <div> <a id=501 los angeles lakers> Los Angeles Lakers </a> <a id=505 box "
        "score> Box Score </a> </div> </html>",
        ObservationSource::TopkFilter, m2w_block("`CLICK [505]` ([link]  Box Score -> CLICK)")));
    t.outcome = Outcome::Success;
    out.push_back(std::move(t));
  }
  return out;
}

// ------------------------------------------------------ abstraction prompts

abstraction::AbstractionPrompt terminal_explicit_prompt(const fs::path& fixtures) {
  abstraction::AbstractionPrompt prompt;
  prompt.mode = abstraction::PromptMode::Explicit;
  struct Pair {
    std::string file;
    std::string observation;
  };
  for (const Pair& pair :
       {Pair{"terminal_initial_png.html",
             "Use the terminal below to delete a file ending with the extension .png"},
        Pair{"terminal_initial_py.html",
             "Use the terminal below to delete a file ending with the extension .py"},
        Pair{"terminal_initial_noext.html",
             "Use the terminal below to delete a file that has no file extension."}}) {
    RawState state{read_file(fixtures / "html" / pair.file), 0, 0};
    prompt.explicit_pairs.emplace_back(
        std::move(state), Observation{pair.observation, ObservationSource::Explicit, false});
  }
  return prompt;
}

abstraction::AbstractionPrompt flight_explicit_prompt(const fs::path& fixtures) {
  abstraction::AbstractionPrompt prompt;
  prompt.mode = abstraction::PromptMode::Explicit;
  prompt.explicit_pairs.emplace_back(
      RawState{read_file(fixtures / "html" / "flight_form_hartford.html"), 0, 0},
      Observation{"Type the flight from: 'Hartford, CT' to: '(TVC)' (Hartford, CT is not an "
                  "airport code. (TVC) is an airport code.), and select the date 10/05/2016.",
                  ObservationSource::Explicit, false});
  prompt.explicit_pairs.emplace_back(
      RawState{read_file(fixtures / "html" / "flight_form_mnt.html"), 0, 0},
      Observation{"Type the flight from: '(MNT)' to: 'Islip, NY' ((MNT) is an airport code. "
                  "Islip, NY is not an airport code.), and select the date 11/05/2016.",
                  ObservationSource::Explicit, false});
  return prompt;
}

const char* const kImplicitPreamble =
    "Filter the following raw HTML state into a clean observation via code based on the task. "
    "Write code (between three backticks) that assigns the final observation string to a "
    "variable named obs. The helpers select, first, item, count, text, attr, num, str, format "
    "and contains are available; the page is bound to state and the task text to task.";

const char* const kCheapestProgram =
    "# scan the flights and keep the lowest price\n"
    "pref = \"cheapest\"\n"
    "best = 999999999\n"
    "for f in select(\"div.flight\")\n"
    "  p = num(attr(first(select(f, \"button.flight-price\")), \"data-price\"))\n"
    "  if p < best\n"
    "    best = p\n"
    "  end\n"
    "end\n"
    "obs = format(\"The price of the {} one-way flight is ${}.\", pref, best)";

const char* const kShortestProgram =
    "# scan the flights and keep the price of the shortest one\n"
    "pref = \"shortest\"\n"
    "best = 999999999\n"
    "price = 0\n"
    "for f in select(\"div.flight\")\n"
    "  m = num(attr(first(select(f, \"div.time-duration\")), \"data-minutes\"))\n"
    "  if m < best\n"
    "    best = m\n"
    "    price = num(attr(first(select(f, \"button.flight-price\")), \"data-price\"))\n"
    "  end\n"
    "end\n"
    "obs = format(\"The price of the {} one-way flight is ${}.\", pref, price)";

abstraction::AbstractionPrompt flight_implicit_prompt() {
  abstraction::AbstractionPrompt prompt;
  prompt.mode = abstraction::PromptMode::Implicit;
  prompt.instruction_preamble = kImplicitPreamble;
  prompt.implicit_pairs.emplace_back(
      "Book the cheapest one-way flight from: Hartford, CT to: TVC on 10/05/2016.",
      kCheapestProgram);
  prompt.implicit_pairs.emplace_back(
      "Book the shortest one-way flight from: Abilene, TX to: St Petersburg/Clearwater, FL on "
      "10/15/2016.",
      kShortestProgram);
  return prompt;
}

abstraction::AbstractionPrompt flight_failing_implicit_prompt() {
  abstraction::AbstractionPrompt prompt;
  prompt.mode = abstraction::PromptMode::Implicit;
  prompt.instruction_preamble = kImplicitPreamble;
  // both stored programs raise at runtime (the selected class never exists)
  prompt.implicit_pairs.emplace_back(
      "Book the cheapest one-way flight from: Hartford, CT to: TVC on 10/05/2016.",
      "obs = text(first(select(\"div.missing-results\")))");
  return prompt;
}

// --------------------------------------------------------------- demo packs

json demo_record(const std::string& group_id, const TaskSpec& task,
                 const std::string& initial_state_html, const std::vector<Trajectory>& exemplars,
                 const std::vector<abstraction::AbstractionPrompt>& prompts) {
  json j;
  j["group_id"] = group_id;
  json task_json;
  task_json["id"] = task.id;
  task_json["description"] = task.description;
  task_json["benchmark_mode"] = to_string(task.benchmark_mode);
  task_json["metadata_fields"] = json::object();
  for (const auto& [k, v] : task.metadata_fields) task_json["metadata_fields"][k] = v;
  j["task"] = std::move(task_json);
  j["initial_state_html"] = initial_state_html;
  j["exemplars"] = json::array();
  for (const Trajectory& t : exemplars) j["exemplars"].push_back(json::parse(serialize_trajectory(t)));
  j["abstraction_prompts"] = json::array();
  for (const auto& prompt : prompts) {
    j["abstraction_prompts"].push_back(json::parse(abstraction::abstraction_prompt_to_json(prompt)));
  }
  return j;
}

void write_jsonl(const fs::path& path, const std::vector<json>& records) {
  std::string out;
  for (const json& record : records) {
    out += record.dump();
    out += "\n";
  }
  write_file(path, out);
}

// --------------------------------------------------------- synthetic dataset

abstraction::RankedElement ranked(long id, double score, const std::string& snippet) {
  return abstraction::RankedElement{id, score, snippet};
}

eval::StaticRecord static_record(const std::string& id, const std::string& description,
                                 const std::string& website, const std::string& domain,
                                 const std::string& split,
                                 std::vector<eval::StaticStep> steps) {
  eval::StaticRecord record;
  record.task = m2w_task(id, description, website, domain);
  record.split = split;
  record.steps = std::move(steps);
  return record;
}

eval::StepAction gold_click(long id) { return {id, ActionKind::Click, ""}; }
eval::StepAction gold_type(long id, const std::string& value) {
  return {id, ActionKind::TypeById, value};
}
eval::StepAction gold_select(long id, const std::string& value) {
  return {id, ActionKind::SelectById, value};
}

std::vector<eval::StaticRecord> synthetic_dataset() {
  std::vector<eval::StaticRecord> records;

  auto shopping_ranking = [&](long gold_id, const std::string& gold_snippet) {
    return std::vector<abstraction::RankedElement>{
        ranked(gold_id, 6.0, gold_snippet),
        ranked(10010, 4.0, "<a id=10010 computer peripherals> Computer Peripherals </a>"),
        ranked(10521, 3.0, "<a id=10521 electronics> Electronics </a>"),
        ranked(99, 2.0, "<input id=99 search search site />"),
        ranked(104, 1.0, "<i id=104 site menu />"),
        ranked(150, 0.5, "<a id=150 daily deals> Daily Deals </a>"),
    };
  };

  records.push_back(static_record(
      "ct-cheapest-ssd", "Add the cheapest SSD to my cart", "newegg", "shopping", "cross-task",
      {{shopping_ranking(9139, "<a id=9139 computer systems> Computer Systems </a>"),
        gold_click(9139)},
       {shopping_ranking(22001, "<button id=22001 add to cart> Add to Cart </button>"),
        gold_click(22001)}}));
  records.push_back(static_record(
      "ct-search-nvme", "Search for a 1TB NVMe drive", "newegg", "shopping", "cross-task",
      {{shopping_ranking(31001, "<input id=31001 search search site />"), gold_click(31001)},
       {shopping_ranking(31001, "<input id=31001 search search site />"),
        gold_type(31001, "1TB NVMe drive")}}));
  records.push_back(static_record(
      "ct-open-cart", "Open my shopping cart", "newegg", "shopping", "cross-task",
      {{shopping_ranking(131, "<a id=131 shopping cart> Shopping Cart </a>"), gold_click(131)},
       {shopping_ranking(18445, "<button id=18445 button> trash Remove </button>"),
        gold_click(18445)}}));

  auto club_ranking = [&](long gold_id, const std::string& gold_snippet) {
    return std::vector<abstraction::RankedElement>{
        ranked(gold_id, 5.5, gold_snippet),
        ranked(7010, 4.0, "<a id=7010 grocery> Grocery </a>"),
        ranked(7020, 3.0, "<a id=7020 pharmacy> Pharmacy </a>"),
        ranked(7030, 2.0, "<input id=7030 search search samsclub />"),
        ranked(7040, 1.0, "<a id=7040 club finder> Club Finder </a>"),
        ranked(7050, 0.5, "<a id=7050 membership> Membership </a>"),
    };
  };
  records.push_back(static_record(
      "cw-rotisserie", "Find rotisserie chicken near me", "samsclub", "shopping",
      "cross-website",
      {{club_ranking(7030, "<input id=7030 search search samsclub />"), gold_click(7030)},
       {club_ranking(7030, "<input id=7030 search search samsclub />"),
        gold_type(7030, "rotisserie chicken")}}));
  records.push_back(static_record(
      "cw-pickup-time", "Choose a pickup time for my order", "samsclub", "shopping",
      "cross-website",
      {{club_ranking(7101, "<a id=7101 pickup> Pickup </a>"), gold_click(7101)},
       {club_ranking(7115, "<select id=7115 pickup time />"), gold_select(7115, "10:00 AM")}}));
  records.push_back(static_record(
      "cw-membership", "Renew my membership plan", "samsclub", "shopping", "cross-website",
      {{club_ranking(7050, "<a id=7050 membership> Membership </a>"), gold_click(7050)},
       {club_ranking(7210, "<button id=7210 renew now> Renew Now </button>"),
        gold_click(7210)}}));

  auto bank_ranking = [&](long gold_id, const std::string& gold_snippet) {
    return std::vector<abstraction::RankedElement>{
        ranked(gold_id, 5.0, gold_snippet),
        ranked(8010, 4.0, "<a id=8010 accounts> Accounts </a>"),
        ranked(8020, 3.0, "<a id=8020 transfers> Transfers </a>"),
        ranked(8030, 2.0, "<input id=8030 search search chase />"),
        ranked(8040, 1.0, "<a id=8040 statements> Statements </a>"),
        ranked(8050, 0.5, "<a id=8050 support> Support </a>"),
    };
  };
  records.push_back(static_record(
      "cd-balance", "Check my checking account balance", "chase", "finance", "cross-domain",
      {{bank_ranking(8010, "<a id=8010 accounts> Accounts </a>"), gold_click(8010)},
       {bank_ranking(8111, "<a id=8111 checking account> Checking (...4321) </a>"),
        gold_click(8111)}}));
  records.push_back(static_record(
      "cd-transfer", "Transfer 50 dollars to savings", "chase", "finance", "cross-domain",
      {{bank_ranking(8020, "<a id=8020 transfers> Transfers </a>"), gold_click(8020)},
       {bank_ranking(8221, "<input id=8221 amount />"), gold_type(8221, "50")}}));
  records.push_back(static_record(
      "cd-statement", "Download my January statement", "chase", "finance", "cross-domain",
      {{bank_ranking(8040, "<a id=8040 statements> Statements </a>"), gold_click(8040)},
       {bank_ranking(8331, "<select id=8331 statement month />"),
        gold_select(8331, "January")}}));
  return records;
}

// ------------------------------------------------------------ script tables

void add_miniwob_embedding_table(llm::ScriptedBackend& backend) {
  backend.set_default_dim(8);
  struct Center {
    const char* env_name;
    std::size_t axis;
  };
  for (const Center& center : {Center{"terminal", 0}, Center{"flight-search", 1},
                               Center{"form-fill", 2}}) {
    auto environment = env::make_environment(center.env_name);
    for (long seed = 0; seed < 50; ++seed) {
      RawState initial = environment->reset(seed);
      std::string metadata = memory::build_metadata_miniwob(environment->task(), initial);
      std::vector<float> values(8, 0.0f);
      values[center.axis] = 2.0f;
      std::uint64_t state = fnv1a64(metadata);
      for (std::size_t d = 0; d < values.size(); ++d) {
        double unit = static_cast<double>(splitmix64(state) >> 11) / 9007199254740992.0;
        values[d] += static_cast<float>((unit * 2.0 - 1.0) * 0.05);
      }
      backend.set_embedding(metadata, values);
    }
  }
}

void add_m2w_embedding_table(llm::ScriptedBackend& backend,
                             const std::vector<Trajectory>& training,
                             const std::vector<eval::StaticRecord>& dataset) {
  backend.set_default_dim(4);
  // training keys cluster tightly per website
  std::map<std::string, std::size_t> website_axis = {{"newegg", 0}, {"united", 1}, {"espn", 2}};
  std::map<std::string, int> website_count;
  for (const Trajectory& t : training) {
    std::string website = t.task.metadata_fields.at("website");
    std::string metadata = memory::build_metadata_mind2web(t.task);
    std::vector<float> values(4, 0.0f);
    values[website_axis.at(website)] = 10.0f;
    values[3] = 0.01f * static_cast<float>(website_count[website]++);
    backend.set_embedding(metadata, values);
  }
  // queries sit at split-dependent distances from the newegg cluster
  std::map<std::string, float> split_distance = {
      {"cross-task", 0.5f}, {"cross-website", 1.0f}, {"cross-domain", 1.5f}};
  std::map<std::string, int> split_count;
  for (const eval::StaticRecord& record : dataset) {
    std::string metadata = memory::build_metadata_mind2web(record.task);
    std::vector<float> values(4, 0.0f);
    values[0] = 10.0f;
    values[3] = 0.01f * static_cast<float>(split_count[record.split]++);
    values[2] = split_distance.at(record.split);
    backend.set_embedding(metadata, values);
  }
}

// ------------------------------------------------------------ env recording

// Answers requests the way the shipped scripts should, by inspecting the
// prompt itself, and records every (prompt hash, response) pair.
class RecordingBackend final : public llm::Backend {
public:
  using Solver = std::function<std::string(const llm::CompletionRequest&)>;

  RecordingBackend(Solver solver, llm::ScriptedBackend& table)
      : solver_(std::move(solver)), table_(table) {}

  void drain_into(llm::ScriptedBackend& target) {
    for (const auto& [hash, entry] : recorded_) {
      target.add_exact(hash, entry.first, entry.second);
    }
  }

protected:
  std::string complete_impl(const llm::CompletionRequest& req) override {
    std::string response = solver_(req);
    recorded_[prompt_hash(req.messages)] = {response, note_};
    return response;
  }

  EmbeddingVector embed_impl(std::string_view text) override { return table_.embed(text); }

public:
  std::string note_;

private:
  Solver solver_;
  llm::ScriptedBackend& table_;
  std::map<std::uint64_t, std::pair<std::string, std::string>> recorded_;
};

std::string last_user_content(const llm::CompletionRequest& req) {
  for (auto it = req.messages.rbegin(); it != req.messages.rend(); ++it) {
    if (it->role == Role::User) return it->content;
  }
  return "";
}

bool is_action_prompt(const llm::CompletionRequest& req) {
  return !req.messages.empty() && req.messages.front().role == Role::System;
}

std::string last_observation(const llm::CompletionRequest& req) {
  std::string content = last_user_content(req);
  constexpr std::string_view kPrefix = "Observation:\n";
  std::size_t at = content.rfind(kPrefix);
  if (at == std::string::npos) return "";
  std::string obs = content.substr(at + kPrefix.size());
  constexpr std::string_view kSuffix = "\nAction:";
  if (obs.size() >= kSuffix.size() &&
      obs.compare(obs.size() - kSuffix.size(), kSuffix.size(), kSuffix) == 0) {
    obs.resize(obs.size() - kSuffix.size());
  }
  return obs;
}

// the html of the final "State:" block of an explicit abstraction prompt
std::string current_state_block(const llm::CompletionRequest& req) {
  std::string content = last_user_content(req);
  constexpr std::string_view kPrefix = "State:\n";
  std::size_t at = content.rfind(kPrefix);
  if (at == std::string::npos) return "";
  std::string state = content.substr(at + kPrefix.size());
  constexpr std::string_view kSuffix = "\nObservation:";
  if (state.size() >= kSuffix.size() &&
      state.compare(state.size() - kSuffix.size(), kSuffix.size(), kSuffix) == 0) {
    state.resize(state.size() - kSuffix.size());
  }
  return state;
}

std::string terminal_solver(const llm::CompletionRequest& req) {
  if (!is_action_prompt(req)) {
    // explicit abstraction: task line, plus the ls listing once present
    html::Document doc = html::Document::parse(current_state_block(req));
    std::string query;
    std::string listing;
    bool saw_ls = false;
    for (const html::Node* node : doc.elements()) {
      const std::string* id = node->attr("id");
      if (id != nullptr && *id == "query") query = node->text_content();
      const std::string* cls = node->attr("class");
      if (cls != nullptr && *cls == "command" && node->own_text() == "ls") saw_ls = true;
      if (saw_ls && cls != nullptr && *cls == "output") listing = node->own_text();
    }
    if (saw_ls && !listing.empty()) {
      return query + "\nuser$ ls\n" + listing;
    }
    return query;
  }
  std::string observation = last_observation(req);
  if (observation.find("user$ ls") == std::string::npos) {
    return "```\nagent.type('ls')\nagent.press('enter')\n```";
  }
  // delete the file named by the task line
  std::istringstream lines(observation);
  std::string task_line, ls_line, files_line;
  std::getline(lines, task_line);
  std::getline(lines, ls_line);
  std::getline(lines, files_line);
  std::vector<std::string> files;
  {
    std::istringstream in(files_line);
    std::string file;
    while (in >> file) files.push_back(file);
  }
  bool no_extension = task_line.find("no file extension") != std::string::npos;
  std::string extension;
  if (!no_extension) {
    std::size_t at = task_line.rfind(" .");
    extension = task_line.substr(at + 1);
  }
  std::string target;
  for (const std::string& file : files) {
    if (no_extension) {
      if (file.find('.') == std::string::npos) target = file;
    } else if (file.size() > extension.size() &&
               file.compare(file.size() - extension.size(), extension.size(), extension) == 0) {
      target = file;
    }
  }
  std::string reason = no_extension
                           ? "# " + target + " is the file that has no file extension. Type the "
                                             "complete filename.\n"
                           : "# " + target + " is the file ending with the extension " +
                                 extension + ". Type the complete filename.\n";
  return "```\n# Note that it is not allowed to use *.xxx here.\n" + reason + "agent.type('rm " +
         target + "')\nagent.press('enter')\n```";
}

const char* const kAnvikObservation =
    "Type the flight from: 'Anvik, AK' to: '(MOT)' (MOT is an airport code. Anvik, AK is not an "
    "airport code.), and select the date 12/23/2016.";

const char* const kAnvikFormScript =
    "# Type the flight from: 'Anvik, AK' to: '(MOT)'\n"
    "agent.click_xpath(\"//*[@id='flight-from']\")\n"
    "agent.type(\"Anvik, AK\")\n"
    "agent.press(\"arrowdown\")\n"
    "agent.press(\"enter\")\n"
    "agent.click_xpath(\"//*[@id='flight-to']\")\n"
    "agent.type(\"(MOT)\")  # For the airport code, you must use parentheses\n"
    "agent.press(\"arrowdown\")\n"
    "agent.press(\"enter\")\n"
    "# Select the date 12/23/2016\n"
    "agent.click_xpath(\"//*[@id='datepicker']\")\n"
    "# Current date: 12/31/2016 (December-December=0). No need to click on 'Prev'\n"
    "# Click on the date '23'\n"
    "agent.click_xpath(\"//a[text()='23']\")\n"
    "agent.click_xpath(\"//*[@id='search']\")";

int cheapest_price_in(const std::string& html_text) {
  html::Document doc = html::Document::parse(html_text);
  int best = -1;
  for (const html::Node* node : doc.elements()) {
    const std::string* price = node->attr("data-price");
    if (price != nullptr) {
      int value = std::stoi(*price);
      if (best < 0 || value < best) best = value;
    }
  }
  return best;
}

std::string flight_solver(const llm::CompletionRequest& req, bool fallback_mode) {
  std::string first_content = req.messages.front().content;
  if (!is_action_prompt(req)) {
    if (first_content.rfind("Extract only the task-relevant information", 0) == 0) {
      // zero-shot fallback over the raw results page
      std::size_t state_at = first_content.find("State: ");
      std::string html_text = first_content.substr(state_at + 7);
      int price = cheapest_price_in(html_text);
      return "The price of the cheapest one-way flight is $" + std::to_string(price) + ".";
    }
    if (first_content.find("Write code within three backticks") != std::string::npos) {
      // program generation; in fallback mode the produced code raises too
      (void)fallback_mode;
      return "```\nobs = attr(first(select(\"div.flight\")), \"data-missing\")\n```";
    }
    return kAnvikObservation;  // explicit abstraction of the fixed form page
  }
  std::string observation = last_observation(req);
  if (observation.find("Type the flight from:") != std::string::npos) {
    return std::string("```\n") + kAnvikFormScript + "\n```";
  }
  // booking turn: echo the program-computed price
  constexpr std::string_view kPrefix = "The price of the cheapest one-way flight is $";
  std::size_t at = observation.find(kPrefix);
  std::string digits;
  for (std::size_t i = at + kPrefix.size(); i < observation.size(); ++i) {
    if (!std::isdigit(static_cast<unsigned char>(observation[i]))) break;
    digits.push_back(observation[i]);
  }
  return "```\nagent.click_xpath(\"//button[text()='Book flight for $" + digits + "']\")\n```";
}

std::string form_fill_solver(const llm::CompletionRequest& req) {
  std::string observation = last_observation(req);
  html::Document doc = html::Document::parse(observation);
  std::string word;
  for (const html::Node* node : doc.elements()) {
    const std::string* id = node->attr("id");
    if (id != nullptr && *id == "captcha") {
      word = node->text_content();
      std::string compact;
      for (char c : word) {
        if (!std::isspace(static_cast<unsigned char>(c))) compact.push_back(c);
      }
      word = compact;
      break;
    }
  }
  return "```\nagent.click_xpath(\"//*[@id='tt']\")  # Locate the input box by clicking on it\n"
         "agent.type('" +
         word +
         "')  # Type the string in the input box\n"
         "agent.click_xpath(\"//*[@id='subbtn']\")\n```";
}

memory::MemoryIndex ingest_demo_pack(const fs::path& path, llm::Backend& backend) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("missing-file", path.string());
  std::unique_ptr<memory::MemoryIndex> index;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    json j = json::parse(line);
    TaskSpec task;
    task.id = j.at("task").at("id").get<std::string>();
    task.description = j.at("task").at("description").get<std::string>();
    task.benchmark_mode =
        benchmark_mode_from_string(j.at("task").value("benchmark_mode", std::string("episodic")));
    for (auto it = j.at("task").at("metadata_fields").begin();
         it != j.at("task").at("metadata_fields").end(); ++it) {
      task.metadata_fields[it.key()] = it.value().get<std::string>();
    }
    std::string metadata;
    if (task.benchmark_mode == BenchmarkMode::Episodic) {
      RawState initial{j.at("initial_state_html").get<std::string>(), 0, 0};
      metadata = memory::build_metadata_miniwob(task, initial);
    } else {
      metadata = memory::build_metadata_mind2web(task);
    }
    std::vector<Trajectory> exemplars;
    for (const json& t : j.at("exemplars")) {
      exemplars.push_back(deserialize_trajectory(t.dump()));
    }
    std::vector<abstraction::AbstractionPrompt> prompts;
    for (const json& p : j.at("abstraction_prompts")) {
      prompts.push_back(abstraction::abstraction_prompt_from_json_text(p.dump()));
    }
    EmbeddingVector key = backend.embed(metadata);
    if (!index) index = std::make_unique<memory::MemoryIndex>(key.dim());
    index->insert(metadata, std::move(key), j.at("group_id").get<std::string>(),
                  std::move(exemplars), std::move(prompts));
  }
  if (!index) throw Error("invariant-violation", "demo pack " + path.string() + " is empty");
  return std::move(*index);
}

void record_env_script(const fs::path& fixtures, const std::string& env_name,
                       const fs::path& demo_pack, const fs::path& out_path,
                       RecordingBackend::Solver solver) {
  llm::ScriptedBackend table(8);
  add_miniwob_embedding_table(table);
  memory::MemoryIndex memory_index = ingest_demo_pack(demo_pack, table);

  RecordingBackend recorder(std::move(solver), table);
  auto environment = env::make_environment(env_name);
  eval::AgentConfig config;
  for (long seed = 0; seed < 50; ++seed) {
    recorder.note_ = env_name + " seed " + std::to_string(seed);
    eval::EpisodeResult result =
        eval::run_episode(*environment, config, memory_index, recorder, seed);
    if (!result.success) {
      throw Error("invariant-violation",
                  env_name + " seed " + std::to_string(seed) + " failed while recording: " +
                      result.failure_reason.value_or("?"));
    }
  }
  llm::ScriptedBackend script(8);
  add_miniwob_embedding_table(script);
  recorder.drain_into(script);
  script.save_yaml(fixtures / "scripts" / out_path);
  std::cout << "recorded " << (fixtures / "scripts" / out_path).string() << "\n";
}

void record_fallback_script(const fs::path& fixtures) {
  llm::ScriptedBackend table(8);
  add_miniwob_embedding_table(table);
  memory::MemoryIndex memory_index =
      ingest_demo_pack(fixtures / "demos" / "flight_fallback_demos.jsonl", table);
  RecordingBackend recorder([](const llm::CompletionRequest& req) { return flight_solver(req, true); },
                            table);
  auto environment = env::make_environment("flight-search");
  eval::AgentConfig config;
  for (long seed = 0; seed < 5; ++seed) {
    recorder.note_ = "flight-fallback seed " + std::to_string(seed);
    eval::EpisodeResult result =
        eval::run_episode(*environment, config, memory_index, recorder, seed);
    if (!result.success || result.fallback_calls != 1) {
      throw Error("invariant-violation", "fallback recording expected one fallback call, got " +
                                             std::to_string(result.fallback_calls));
    }
  }
  llm::ScriptedBackend script(8);
  add_miniwob_embedding_table(script);
  recorder.drain_into(script);
  script.save_yaml(fixtures / "scripts" / "flight_fallback.yaml");
  std::cout << "recorded " << (fixtures / "scripts" / "flight_fallback.yaml").string() << "\n";
}

Action gold_action(const eval::StepAction& gold) {
  switch (gold.op) {
    case ActionKind::Click: return Action::click(gold.element_id);
    case ActionKind::TypeById: return Action::type_by_id(gold.element_id, gold.value);
    case ActionKind::SelectById: return Action::select_by_id(gold.element_id, gold.value);
    default: throw Error("invariant-violation", "bad gold op");
  }
}

void record_m2w_script(const fs::path& fixtures, const std::vector<Trajectory>& training,
                       const std::vector<eval::StaticRecord>& dataset) {
  llm::ScriptedBackend script(4);
  add_m2w_embedding_table(script, training, dataset);
  memory::MemoryIndex memory_index = ingest_demo_pack(fixtures / "demos" / "m2w_demos.jsonl", script);

  eval::AgentConfig config;
  config.mode = prompting::Mode::Mind2Web;
  for (const eval::StaticRecord& record : dataset) {
    std::string metadata = memory::build_metadata_mind2web(record.task);
    EmbeddingVector query = script.embed(metadata);
    auto retrieved = memory_index.retrieve_topn(query, config.retrieve_n);
    std::vector<Trajectory> exemplars = eval::exemplars_from_retrieval(retrieved);
    for (std::size_t step = 0; step < record.steps.size(); ++step) {
      prompting::PromptBundle bundle =
          eval::build_static_step_prompt(record, step, exemplars, config);
      std::string response = "Action: `" +
                             actions::render_m2w_action(gold_action(record.steps[step].gold)) +
                             "` (oracle echo)";
      script.add_exact(bundle.messages, response,
                       record.task.id + " step " + std::to_string(step));
    }
  }
  script.save_yaml(fixtures / "scripts" / "m2w_oracle.yaml");
  std::cout << "recorded " << (fixtures / "scripts" / "m2w_oracle.yaml").string() << "\n";
}

// current-trajectory input files for `webtrail prompt`
void write_current_fixtures(const fs::path& fixtures) {
  auto current = [&](const TaskSpec& task, const std::vector<Step>& steps,
                     const Observation& pending) {
    json j;
    j["task"] = {{"id", task.id},
                 {"description", task.description},
                 {"benchmark_mode", to_string(task.benchmark_mode)},
                 {"metadata_fields", json::object()}};
    j["steps"] = json::array();
    for (const Step& step : steps) {
      json s;
      s["observation"] = {{"text", step.observation.text},
                          {"source", to_string(step.observation.source)},
                          {"truncated", step.observation.truncated}};
      s["action_block"] = {{"raw_text", step.action_block.raw_text},
                           {"comments", step.action_block.comments}};
      j["steps"].push_back(std::move(s));
    }
    j["pending_observation"] = {{"text", pending.text},
                                {"source", to_string(pending.source)},
                                {"truncated", pending.truncated}};
    return j;
  };

  TaskSpec gpg_task = episodic_task(
      "terminal-gpg", "Use the terminal below to delete a file ending with the extension .gpg");
  Observation gpg_obs{"Use the terminal below to delete a file ending with the extension .gpg",
                      ObservationSource::Explicit, false};
  write_file(fixtures / "currents" / "terminal_step2.json",
             current(gpg_task, {}, gpg_obs).dump() + "\n");

  Step gpg_step = make_step(gpg_obs.text, ObservationSource::Explicit,
                            code_block("agent.type('ls')\nagent.press('enter')"));
  Observation gpg_obs2{
      "Use the terminal below to delete a file ending with the extension .gpg\nuser$ ls\n"
      "index.rb media.html window.gpg",
      ObservationSource::Explicit, false};
  write_file(fixtures / "currents" / "terminal_step4.json",
             current(gpg_task, {gpg_step}, gpg_obs2).dump() + "\n");

  TaskSpec anvik_task = episodic_task(
      "book-flight-anvik",
      "Book the cheapest one-way flight from: Anvik, AK to: MOT on 12/23/2016.");
  Observation anvik_obs{kAnvikObservation, ObservationSource::Explicit, false};
  write_file(fixtures / "currents" / "book_flight_step2.json",
             current(anvik_task, {}, anvik_obs).dump() + "\n");

  Step anvik_step = make_step(anvik_obs.text, ObservationSource::Explicit,
                              code_block(kAnvikFormScript));
  Observation anvik_obs2{"The price of the cheapest one-way flight is $65.",
                         ObservationSource::ImplicitProgram, false};
  write_file(fixtures / "currents" / "book_flight_step4.json",
             current(anvik_task, {anvik_step}, anvik_obs2).dump() + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  fs::path root = ".";
  for (int i = 1; i < argc; ++i) {
    std::string arg = argv[i];
    if (arg == "--root" && i + 1 < argc) root = argv[++i];
  }
  fs::path fixtures = root / "fixtures";
  try {
    // exemplar trajectory files
    auto terminal = terminal_exemplars();
    auto flight = flight_exemplars();
    auto form_fill = form_fill_exemplars(fixtures);
    auto m2w = m2w_exemplars();
    auto write_trajectories = [&](const std::string& name, const std::vector<Trajectory>& list) {
      std::string out;
      for (const Trajectory& t : list) out += serialize_trajectory(t) + "\n";
      write_file(fixtures / "trajectories" / name, out);
    };
    write_trajectories("terminal_exemplars.jsonl", terminal);
    write_trajectories("book_flight_exemplars.jsonl", flight);
    write_trajectories("text_transform_exemplars.jsonl", form_fill);
    write_trajectories("m2w_exemplars.jsonl", m2w);

    // abstraction prompt fixtures
    write_file(fixtures / "abstraction" / "terminal_explicit.json",
               abstraction::abstraction_prompt_to_json(terminal_explicit_prompt(fixtures)) + "\n");
    write_file(fixtures / "abstraction" / "flight_explicit.json",
               abstraction::abstraction_prompt_to_json(flight_explicit_prompt(fixtures)) + "\n");
    write_file(fixtures / "abstraction" / "flight_implicit.json",
               abstraction::abstraction_prompt_to_json(flight_implicit_prompt()) + "\n");
    write_file(fixtures / "abstraction" / "flight_implicit_failing.json",
               abstraction::abstraction_prompt_to_json(flight_failing_implicit_prompt()) + "\n");

    // demo packs: one combined episodic pack plus the fallback and m2w packs
    {
      std::vector<json> records;
      auto add_env_records = [&](const std::string& env_name, const std::string& group,
                                 const std::vector<Trajectory>& exemplars,
                                 const std::vector<abstraction::AbstractionPrompt>& prompts) {
        auto environment = env::make_environment(env_name);
        for (long seed = 0; seed < 5; ++seed) {
          RawState initial = environment->reset(seed);
          records.push_back(
              demo_record(group, environment->task(), initial.html, exemplars, prompts));
        }
      };
      add_env_records("terminal", "terminal", terminal, {terminal_explicit_prompt(fixtures)});
      add_env_records("flight-search", "flight-search", flight,
                      {flight_explicit_prompt(fixtures), flight_implicit_prompt()});
      add_env_records("form-fill", "form-fill", form_fill, {});
      write_jsonl(fixtures / "demos" / "miniwob_demos.jsonl", records);
    }
    {
      std::vector<json> records;
      auto environment = env::make_environment("flight-search");
      for (long seed = 0; seed < 5; ++seed) {
        RawState initial = environment->reset(seed);
        records.push_back(demo_record(
            "flight-search", environment->task(), initial.html, flight,
            {flight_explicit_prompt(fixtures), flight_failing_implicit_prompt()}));
      }
      write_jsonl(fixtures / "demos" / "flight_fallback_demos.jsonl", records);
    }
    {
      std::vector<json> records;
      for (const Trajectory& t : m2w) {
        records.push_back(demo_record(t.task.id, t.task, "", {t}, {}));
      }
      write_jsonl(fixtures / "demos" / "m2w_demos.jsonl", records);
    }

    // synthetic static dataset
    auto dataset = synthetic_dataset();
    eval::save_static_dataset(dataset, fixtures / "datasets" / "m2w_synthetic.jsonl");

    // prompt --current inputs
    write_current_fixtures(fixtures);

    // recorded scripts
    record_env_script(fixtures, "terminal", fixtures / "demos" / "miniwob_demos.jsonl",
                      "terminal.yaml", terminal_solver);
    record_env_script(fixtures, "flight-search", fixtures / "demos" / "miniwob_demos.jsonl",
                      "flight_search.yaml",
                      [](const llm::CompletionRequest& req) { return flight_solver(req, false); });
    record_env_script(fixtures, "form-fill", fixtures / "demos" / "miniwob_demos.jsonl",
                      "form_fill.yaml", form_fill_solver);
    record_fallback_script(fixtures);
    record_m2w_script(fixtures, m2w, dataset);

    std::cout << "fixtures written under " << fixtures.string() << "\n";
  } catch (const std::exception& e) {
    std::cerr << "fixture_gen failed: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
