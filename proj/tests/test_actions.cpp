#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "webtrail/actions.hpp"
#include "webtrail/error.hpp"
#include "webtrail/html.hpp"
#include "webtrail/model.hpp"

#include "support.hpp"

using namespace webtrail;
using namespace webtrail::actions;
using testsupport::Rng;

namespace {

std::string fenced(const std::string& body) { return "```\n" + body + "\n```"; }

}  // namespace

TEST_CASE("terminal response parses to type + press") {
  ActionScript script = parse_code_actions(fenced("agent.type('ls')\nagent.press('enter')"));
  ActionBlock block = expand(script);
  REQUIRE(block.actions.size() == 2);
  CHECK(block.actions[0] == Action::type("ls"));
  CHECK(block.actions[1] == Action::press("enter"));
  CHECK(block.comments.empty());
}

TEST_CASE("counted loops parse into a Loop statement") {
  std::string body =
      "# Current date: 12/31/2016 (December-October=2). Click on 'Prev' twice\n"
      "for _ in range(2):\n"
      "    agent.click_xpath(\"//*[@title='Prev']\")";
  ActionScript script = parse_code_actions(fenced(body));
  REQUIRE(script.statements.size() == 2);
  CHECK(script.statements[0].kind == Statement::Kind::Comment);
  const Statement& loop = script.statements[1];
  CHECK(loop.kind == Statement::Kind::Loop);
  CHECK(loop.loop_count == 2);
  REQUIRE(loop.body.size() == 1);
  CHECK(loop.body[0] == Action::click_xpath("//*[@title='Prev']"));

  ActionBlock block = expand(script);
  REQUIRE(block.actions.size() == 2);
  CHECK(block.actions[0] == block.actions[1]);
}

TEST_CASE("the loop-bearing booking script from the fixture corpus") {
  auto lines = testsupport::read_lines(testsupport::fixture_dir() /
                                       "trajectories/book_flight_exemplars.jsonl");
  REQUIRE(lines.size() == 5);
  Trajectory first = deserialize_trajectory(lines[0]);
  ActionScript script = parse_code_actions(fenced(first.steps[0].action_block.raw_text));
  bool has_loop = false;
  for (const Statement& st : script.statements) {
    if (st.kind == Statement::Kind::Loop) {
      has_loop = true;
      CHECK(st.loop_count == 2);
      REQUIRE(st.body.size() == 1);
      CHECK(st.body[0] == Action::click_xpath("//*[@title='Prev']"));
    }
  }
  CHECK(has_loop);
  // hand count after unrolling: 4 (from) + 4 (to) + 1 (datepicker) + 2 (prev loop)
  // + 1 (day) + 1 (search) = 13 primitive actions
  CHECK(expand(script).actions.size() == 13);
}

TEST_CASE("every assistant fence in the shipped corpus parses") {
  std::size_t parsed = 0;
  for (const char* name :
       {"trajectories/terminal_exemplars.jsonl", "trajectories/book_flight_exemplars.jsonl",
        "trajectories/text_transform_exemplars.jsonl"}) {
    for (const std::string& line : testsupport::read_lines(testsupport::fixture_dir() / name)) {
      Trajectory t = deserialize_trajectory(line);
      for (const Step& step : t.steps) {
        ActionBlock block = expand(parse_code_actions(fenced(step.action_block.raw_text)));
        CHECK(block.actions == step.action_block.actions);
        ++parsed;
      }
    }
  }
  CHECK(parsed == 6 + 10 + 2);

  // a mistyped-but-well-formed response parses too (wrong text, valid grammar)
  std::string failure_response = fenced(
      "agent.click_xpath(\"//*[@id='tt']\")  # Locate the input box by clicking on it\n"
      "agent.type('jrfp')  # Type the string in the input box\n"
      "agent.click_xpath(\"//*[@id='subbtn']\")");
  ActionBlock block = expand(parse_code_actions(failure_response));
  CHECK(block.actions.size() == 3);
  CHECK(block.actions[1] == Action::type("jrfp"));
  CHECK(block.comments.size() == 2);
}

TEST_CASE("parse errors carry kinds and line numbers") {
  auto expect_error = [](const std::string& response, const std::string& kind,
                         const std::string& needle) {
    try {
      parse_code_actions(response);
      FAIL("expected ", kind, " for: ", response);
    } catch (const Error& e) {
      CHECK(e.kind() == kind);
      CHECK(std::string(e.what()).find(needle) != std::string::npos);
    }
  };
  expect_error("no code here", "no-fence", "fence");
  expect_error("```\nagent.type('x')", "no-fence", "never closed");
  expect_error(fenced("agent.scroll('10')"), "unknown-method", "line 2");
  expect_error(fenced("agent.type('unterminated)"), "malformed-literal", "line 2");
  expect_error(fenced("agent.type(42)"), "malformed-literal", "line 2");
  expect_error(fenced("x = 5"), "unsupported-construct", "line 2");
  expect_error(fenced("for _ in range(2):\n    agent.type('a')\nfor i in range(2):\n    "
                      "agent.type('b')"),
               "unsupported-construct", "line 4");
  expect_error(fenced("for _ in range(0):\n    agent.type('a')"), "unsupported-construct",
               ">= 1");
  expect_error(fenced("for _ in range(2):\n    for _ in range(2):\n        agent.type('a')"),
               "unsupported-construct", "nested");
  expect_error(fenced("for _ in range(2):\n    # no comments in bodies\n    agent.type('a')"),
               "unsupported-construct", "comments");
  expect_error(fenced("for _ in range(2):\nagent.type('a')"), "unsupported-construct", "empty");
  expect_error(fenced("agent.press('ctrl+z')"), "invalid-argument", "ctrl+z");
  expect_error(fenced("agent.type('x') trailing"), "unsupported-construct", "trailing");
}

TEST_CASE("only the first fence is parsed") {
  std::string response = "thoughts\n" + fenced("agent.type('first')") + "\nmore\n" +
                         fenced("agent.type('second')");
  ActionBlock block = expand(parse_code_actions(response));
  REQUIRE(block.actions.size() == 1);
  CHECK(block.actions[0] == Action::type("first"));
}

TEST_CASE("language tags and escapes are handled") {
  ActionScript script =
      parse_code_actions("```python\nagent.type('it\\'s \\\\ \\n done')\n```");
  ActionBlock block = expand(script);
  CHECK(block.actions[0] == Action::type("it's \\ \n done"));
}

TEST_CASE("comment-only scripts expand to an empty-block error") {
  ActionScript script = parse_code_actions(fenced("# just a note"));
  CHECK_THROWS_AS(expand(script), Error);
  try {
    expand(script);
  } catch (const Error& e) {
    CHECK(e.kind() == "empty-block");
  }
}

TEST_CASE("expand preserves order and multiset") {
  std::string body =
      "agent.type('a')\nfor _ in range(3):\n    agent.press('enter')\nagent.type('b')";
  ActionBlock block = expand(parse_code_actions(fenced(body)));
  REQUIRE(block.actions.size() == 5);
  CHECK(block.actions[0] == Action::type("a"));
  CHECK(block.actions[1] == Action::press("enter"));
  CHECK(block.actions[3] == Action::press("enter"));
  CHECK(block.actions[4] == Action::type("b"));
}

TEST_CASE("render and re-parse is the identity on generated scripts") {
  Rng rng(777);
  const auto& keys = allowed_press_keys();
  for (int iteration = 0; iteration < 60; ++iteration) {
    ActionScript script;
    std::size_t statements = 1 + rng.below(6);
    for (std::size_t i = 0; i < statements; ++i) {
      Statement st;
      switch (rng.below(3)) {
        case 0: {
          st.kind = Statement::Kind::Call;
          switch (rng.below(5)) {
            case 0: st.action = Action::type(testsupport::random_text(rng)); break;
            case 1: st.action = Action::press(keys[rng.below(keys.size())]); break;
            case 2: st.action = Action::click_xpath("//*[@id='a" + std::to_string(rng.below(9)) + "']"); break;
            case 3: st.action = Action::click_option("//option"); break;
            default: st.action = Action::move_mouse("//div"); break;
          }
          break;
        }
        case 1: {
          st.kind = Statement::Kind::Loop;
          st.loop_count = 1 + static_cast<int>(rng.below(4));
          std::size_t body = 1 + rng.below(3);
          for (std::size_t b = 0; b < body; ++b) {
            st.body.push_back(Action::click_xpath("//a[text()='" + std::to_string(rng.below(31)) + "']"));
          }
          break;
        }
        default: {
          st.kind = Statement::Kind::Comment;
          st.comment = "note " + std::to_string(rng.below(100));
          break;
        }
      }
      script.statements.push_back(std::move(st));
    }
    std::string rendered = render(script);
    ActionScript back = parse_code_actions(rendered);
    CHECK(back == script);
  }
}

TEST_CASE("id-dialect actions parse with rationale ignored") {
  Action click = parse_m2w_action("Action: `CLICK [131]` ([link]  Shopping Cart -> CLICK)");
  CHECK(click == Action::click(131));

  Action type = parse_m2w_action("`TYPE [36915] [Western Digital internal SSD 1 TB]`");
  CHECK(type == Action::type_by_id(36915, "Western Digital internal SSD 1 TB"));

  Action select = parse_m2w_action("`SELECT [8331] [January]` (month picker)");
  CHECK(select == Action::select_by_id(8331, "January"));
}

TEST_CASE("id-dialect error paths") {
  auto expect = [](const std::string& response, const std::string& kind) {
    try {
      parse_m2w_action(response);
      FAIL("expected ", kind);
    } catch (const Error& e) {
      CHECK(e.kind() == kind);
    }
  };
  expect("`CLICK [abc]`", "non-integer-id");
  expect("`CLICK [-3]`", "non-integer-id");
  expect("`TYPE [12]`", "missing-value");
  expect("`SELECT [12]`", "missing-value");
  expect("`HOVER [12]`", "pattern-mismatch");
  expect("`CLICK [12] [extra]`", "pattern-mismatch");
  expect("no backticks at all", "pattern-mismatch");
  expect("`CLICK`", "pattern-mismatch");
}

TEST_CASE("random rationale suffixes never change the parsed action") {
  Rng rng(31337);
  for (int i = 0; i < 200; ++i) {
    long id = static_cast<long>(rng.below(100000));
    std::string base = "`CLICK [" + std::to_string(id) + "]`";
    std::string suffix = " (" + testsupport::random_text(rng, 30) + ")";
    // keep the suffix free of backticks so the span stays unambiguous
    for (char& c : suffix) {
      if (c == '`') c = '.';
    }
    CHECK(parse_m2w_action(base + suffix) == Action::click(id));
  }
}

TEST_CASE("m2w rendering round trips") {
  CHECK(render_m2w_action(Action::click(131)) == "CLICK [131]");
  CHECK(render_m2w_action(Action::type_by_id(5, "x y")) == "TYPE [5] [x y]");
  CHECK(parse_m2w_action("`" + render_m2w_action(Action::select_by_id(7, "v")) + "`") ==
        Action::select_by_id(7, "v"));
}

TEST_CASE("xpath validation against the page fixture") {
  RawState state{testsupport::read_fixture("html/text_transform_jrpf.html"), 0, 0};

  ValidationVerdict ok = validate_against_state(Action::click_xpath("//*[@id='subbtn']"), state);
  CHECK(ok.valid);

  ValidationVerdict miss =
      validate_against_state(Action::click_xpath("//*[@id='does-not-exist']"), state);
  CHECK_FALSE(miss.valid);
  CHECK(miss.reason == "no-match");

  ValidationVerdict bad = validate_against_state(Action::click_xpath("//["), state);
  CHECK_FALSE(bad.valid);
  CHECK(bad.reason.find("bad-xpath") == 0);

  CHECK(validate_against_state(Action::type("anything"), state).valid);
  CHECK(validate_against_state(Action::press("enter"), state).valid);
}

TEST_CASE("multi-match xpath targets the first element in document order") {
  html::Document doc = html::Document::parse(
      "<div><span class=\"q\">one</span><span class=\"q\">two</span>"
      "<span class=\"q\">three</span></div>");
  ValidationVerdict verdict =
      validate_against_state(Action::click_xpath("//span[@class='q']"), doc);
  REQUIRE(verdict.valid);
  REQUIRE(verdict.target != nullptr);
  CHECK(verdict.target->text_content() == "one");
}

TEST_CASE("id-based actions check the observation ids") {
  html::Document doc = html::Document::parse("<div><a id=\"131\">cart</a><a id=\"x9\">no</a></div>");
  CHECK(validate_against_state(Action::click(131), doc).valid);
  ValidationVerdict missing = validate_against_state(Action::click(999), doc);
  CHECK_FALSE(missing.valid);
  CHECK(missing.reason == "unknown-id");
  CHECK(validate_against_state(Action::type_by_id(131, "v"), doc).valid);
}
