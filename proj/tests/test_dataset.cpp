#include "doctest.h"
#include "pairforge/dataset.hpp"
#include "pairforge/error.hpp"
#include "test_support.hpp"

using namespace pairforge;
using testing_support::TempDir;

TEST_CASE("agent pair text round trip") {
  AgentPair p{3, 12};
  CHECK(p.to_string() == "3:12");
  CHECK(AgentPair::parse("3:12") == p);
  CHECK_THROWS_AS(AgentPair::parse("3-12"), ParseError);
  CHECK_THROWS_AS(AgentPair::parse("a:1"), ParseError);
  CHECK_THROWS_AS(AgentPair::parse("-1:2"), ParseError);
}

TEST_CASE("seed dataset: one line, extra fields preserved in order") {
  auto s = parse_seed_dataset(R"({"id":"a","instruction":"Do X","response":"Done","topic":"t","n":3})");
  REQUIRE(s.size() == 1);
  CHECK(s[0].id == "a");
  CHECK(s[0].instruction == "Do X");
  CHECK(s[0].response == "Done");
  CHECK(s[0].extra.dump() == R"({"topic":"t","n":3})");
}

TEST_CASE("seed dataset: blank lines are skipped") {
  auto s = parse_seed_dataset("\n{\"id\":\"a\",\"instruction\":\"i\",\"response\":\"r\"}\n\n  \n"
                              "{\"id\":\"b\",\"instruction\":\"i\",\"response\":\"r\"}\n");
  CHECK(s.size() == 2);
}

TEST_CASE("seed dataset: errors carry the line number") {
  auto message = [](std::string_view text) {
    try {
      parse_seed_dataset(text);
    } catch (const ParseError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  CHECK(message("{\"id\":\"a\",\"instruction\":\"i\",\"response\":\"r\"}\n[1,2]") == "line 2: not an object");
  CHECK(message("{\"id\":\"a\",\"instruction\":\"i\"}") == "line 1: missing field 'response'");
  CHECK(message("{oops") == "line 1: invalid JSON");
  CHECK(message("{\"id\":1,\"instruction\":\"i\",\"response\":\"r\"}") == "line 1: field 'id' is not a string");
}

TEST_CASE("seed dataset: duplicate ids and empty text are validation errors") {
  const std::string line = "{\"id\":\"a\",\"instruction\":\"i\",\"response\":\"r\"}\n";
  CHECK_THROWS_WITH_AS(parse_seed_dataset(line + line), "duplicate id 'a'", ValidationError);
  CHECK_THROWS_AS(parse_seed_dataset("{\"id\":\"z\",\"instruction\":\"\",\"response\":\"r\"}"), ValidationError);
  CHECK_THROWS_AS(parse_seed_dataset("{\"id\":\"z\",\"instruction\":\"i\",\"response\":\"\"}"), ValidationError);
}

TEST_CASE("seed dataset: missing file is an io error") {
  CHECK_THROWS_AS(load_seed_dataset("/nonexistent/dir/seed.jsonl"), IoError);
}

TEST_CASE("output records: key order and provenance") {
  OutputRecord r{"s1", "ins", "res", 0.25, AgentPair{1, 2}, Json::object()};
  r.extra["topic"] = "math";
  CHECK(to_line(r) == R"({"seed_id":"s1","instruction":"ins","response":"res","score":0.25,"provenance":"1:2","topic":"math"})");
  OutputRecord b{"s2", "ins", "res", 0.0, std::nullopt, Json::object()};
  CHECK(b.provenance_string() == "base");
  CHECK(output_record_from_json(to_json(r)) == r);
  CHECK(output_record_from_json(to_json(b)) == b);
}

TEST_CASE("candidate record json round trip") {
  CandidateRecord c;
  c.seed_id = "s";
  c.index = 3;
  c.pair = {1, 0};
  c.instruction = "x";
  c.response = "y";
  c.ifd_small = 0.9;
  c.ifd_large = 0.7;
  c.pi_dual = 1.0;
  c.pi_llm = 0.5;
  c.pi_composite = 0.5;
  c.status = CandidateStatus::dropped;
  c.reason = "generation: boom";
  c.referee_parse_failure = true;
  CHECK(candidate_record_from_json(to_json(c)) == c);
}

TEST_CASE("output validation rules") {
  std::vector<OutputRecord> recs{{"s", "i", "r", 1.5, AgentPair{0, 1}, Json::object()}};
  CHECK_THROWS_AS(validate_output_records(recs, nullptr), ValidationError);
  recs[0].score = 0.0;
  CHECK_THROWS_AS(validate_output_records(recs, nullptr), ValidationError);  // pair with zero score
  recs[0].provenance.reset();
  recs[0].score = 0.3;
  CHECK_THROWS_AS(validate_output_records(recs, nullptr), ValidationError);  // base with score
  recs[0].score = 0.0;
  CHECK_NOTHROW(validate_output_records(recs, nullptr));
  CHECK_THROWS_AS(validate_output_records({}, nullptr), ValidationError);
}

TEST_CASE("output validation against the candidate log") {
  std::vector<CandidateRecord> log(3);
  for (int i = 0; i < 3; ++i) {
    log[i].seed_id = "s";
    log[i].index = i;
    log[i].pair = {0, i};
  }
  log[0].is_base = true;
  log[1].pi_composite = 0.4;
  log[2].pi_composite = 0.4;  // tie: the lower index wins
  std::vector<OutputRecord> recs{{"s", "i", "r", 0.4, AgentPair{0, 1}, Json::object()}};
  CHECK_NOTHROW(validate_output_records(recs, &log));
  recs[0].provenance = AgentPair{0, 2};
  CHECK_THROWS_AS(validate_output_records(recs, &log), ValidationError);
  recs[0].provenance = AgentPair{0, 1};
  recs[0].score = 0.39;
  CHECK_THROWS_AS(validate_output_records(recs, &log), ValidationError);
}

TEST_CASE("output dataset write is atomic and round trips") {
  TempDir dir;
  std::vector<OutputRecord> recs{{"a", "i", "r", 0.0, std::nullopt, Json::object()},
                                 {"b", "i2", "r2", 0.75, AgentPair{2, 3}, Json{{"k", 1}}}};
  auto path = dir / "out.jsonl";
  write_output_dataset(recs, path);
  CHECK(load_output_dataset(path) == recs);
  CHECK_FALSE(std::filesystem::exists(dir / "out.jsonl.tmp"));

  // An invalid batch leaves the previous file untouched.
  auto before = testing_support::slurp(path);
  std::vector<OutputRecord> bad{{"c", "i", "r", 2.0, AgentPair{0, 0}, Json::object()}};
  CHECK_THROWS_AS(write_output_dataset(bad, path), ValidationError);
  CHECK(testing_support::slurp(path) == before);
}

TEST_CASE("trim") {
  CHECK(trim("  a b \n\t") == "a b");
  CHECK(trim("   ") == "");
}
