/*
 * Copyright 2026 the riskscreen authors.
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <set>
#include <sstream>

#include "riskscreen/ingest.hpp"
#include "riskscreen/rng.hpp"

using namespace riskscreen;

namespace {

const char* kHeader =
    "student_id,name,email,consent,letter_grade,repeated_course,gpa\n";

Roster roster_from(const std::string& body) {
  std::istringstream in(std::string(kHeader) + body);
  return parse_roster(in);
}

}  // namespace

TEST_CASE("parse_roster basics") {
  auto r = roster_from(
      "111222333,Alice A,a@x.edu,true,D,true,2.1\n"
      "444555666,Bob B,b@x.edu,false,A,false,3.9\n");
  REQUIRE(r.records.size() == 2);
  CHECK(r.feature_names == std::vector<std::string>{"gpa"});
  CHECK(r.records[0].consent);
  CHECK(r.records[0].letter_grade == Grade::kD);
  CHECK(r.records[0].repeated_course);
  CHECK(!r.records[1].consent);
  CHECK(r.records[1].features[0] == std::optional<std::string>{"3.9"});
}

TEST_CASE("header-only roster is empty, not an error") {
  auto r = roster_from("");
  CHECK(r.records.empty());
}

TEST_CASE("unknown grade token names the row") {
  try {
    roster_from("111222333,A,a@x.edu,true,Z,false,1.0\n");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("Z") != std::string::npos);
    CHECK(msg.find("2") != std::string::npos);  // row context
  }
}

TEST_CASE("missing required column is an error") {
  std::istringstream in("student_id,name,email,consent,letter_grade\nx,y,z,true,A\n");
  CHECK_THROWS_AS(parse_roster(in), DataError);
}

TEST_CASE("duplicate student_id is a hard error") {
  CHECK_THROWS_AS(roster_from("111222333,A,a@x.edu,true,A,false,1\n"
                              "111222333,B,b@x.edu,true,B,false,2\n"),
                  DataError);
}

TEST_CASE("empty cells become missing feature markers") {
  auto r = roster_from("111222333,A,a@x.edu,true,A,false,\n");
  CHECK(!r.records[0].features[0].has_value());
}

TEST_CASE("xlsx rejected with csv-export advice") {
  try {
    load_roster("roster.xlsx");
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("CSV") != std::string::npos);
  }
}

TEST_CASE("grade alphabet round trip; every token parses") {
  for (Grade g : grade_alphabet()) {
    auto parsed = parse_grade(grade_token(g));
    REQUIRE(parsed.has_value());
    CHECK(*parsed == g);
  }
  CHECK(!parse_grade("E").has_value());
  CHECK(!parse_grade("").has_value());
}

TEST_CASE("filter_consent keeps order and warns only when all removed") {
  auto r = roster_from(
      "1112223331,A,a@x.edu,true,A,false,1\n"
      "1112223332,B,b@x.edu,false,A,false,1\n"
      "1112223333,C,c@x.edu,true,A,false,1\n"
      "1112223334,D,d@x.edu,false,A,false,1\n"
      "1112223335,E,e@x.edu,true,A,false,1\n");
  WarningSink w;
  auto kept = filter_consent(r, w);
  REQUIRE(kept.records.size() == 3);
  CHECK(kept.records[0].student_id == "1112223331");
  CHECK(kept.records[1].student_id == "1112223333");
  CHECK(kept.records[2].student_id == "1112223335");
  CHECK(w.empty());

  auto none = roster_from("1112223339,A,a@x.edu,false,A,false,1\n");
  WarningSink w2;
  auto empty = filter_consent(none, w2);
  CHECK(empty.records.empty());
  CHECK(!w2.empty());
}

TEST_CASE("pseudonymize: deterministic, key-sensitive, fixed-length hex") {
  const std::string id = "123456789";
  const auto t1 = pseudonymize_id(id, "key-a");
  const auto t2 = pseudonymize_id(id, "key-a");
  const auto t3 = pseudonymize_id(id, "key-b");
  CHECK(t1 == t2);
  CHECK(t1 != t3);
  CHECK(t1.size() == 16);
  for (char c : t1) CHECK(std::string("0123456789abcdef").find(c) != std::string::npos);
}

TEST_CASE("pseudonymize over 100 key pairs: no collisions for one id") {
  std::set<std::string> tokens;
  for (int i = 0; i < 100; ++i) {
    tokens.insert(pseudonymize_id("987654321", "key" + std::to_string(i)));
  }
  CHECK(tokens.size() == 100);
}

TEST_CASE("token shares no 4-char substring with the raw CWID") {
  Rng rng(42);
  for (int i = 0; i < 1000; ++i) {
    std::string id;
    for (int d = 0; d < 9; ++d) id.push_back(static_cast<char>('0' + rng.below(10)));
    const auto token = pseudonymize_id(id, "scan-key");
    for (std::size_t s = 0; s + 4 <= id.size(); ++s) {
      CHECK(token.find(id.substr(s, 4)) == std::string::npos);
    }
  }
}

TEST_CASE("pseudonymize is injective on a large roster") {
  std::set<std::string> tokens;
  for (int i = 0; i < 20000; ++i) {
    tokens.insert(pseudonymize_id("id" + std::to_string(i), "inj-key"));
  }
  CHECK(tokens.size() == 20000);
}

TEST_CASE("pseudonymize clears name and email and rejects empty key") {
  auto r = roster_from("111222333,Alice A,a@x.edu,true,A,false,1\n");
  auto p = pseudonymize(r, "key");
  CHECK(p.records[0].name.empty());
  CHECK(p.records[0].email.empty());
  CHECK(p.records[0].pseudonymized);
  CHECK_THROWS_AS(pseudonymize(r, ""), ConfigError);
}

TEST_CASE("risk rule: paper semantics") {
  auto r = roster_from(
      "1112223331,A,a@x.edu,true,D,true,1\n"   // D + repeated -> 1
      "1112223332,B,b@x.edu,true,A,false,1\n"  // passing -> 0
      "1112223333,C,c@x.edu,true,F,false,1\n"  // F not repeated, AND rule -> 0
      "1112223334,D,d@x.edu,true,WU,true,1\n"  // WU repeated -> 1
      "1112223335,E,e@x.edu,true,C-,true,1\n"  // passing grade repeated -> 0
  );
  auto labels = derive_at_risk_labels(r, RiskRule{});
  CHECK(labels.labels == std::vector<int>{1, 0, 0, 1, 0});
  CHECK(labels.positive_count() == 2);

  RiskRule disj;
  disj.disjunction = true;
  auto or_labels = derive_at_risk_labels(r, disj);
  CHECK(or_labels.labels == std::vector<int>{1, 0, 1, 1, 1});

  RiskRule no_repeat;
  no_repeat.require_repeat = false;
  auto grade_only = derive_at_risk_labels(r, no_repeat);
  CHECK(grade_only.labels == std::vector<int>{1, 0, 1, 1, 0});
}

TEST_CASE("risk rule rejects empty failing-grade set") {
  auto r = roster_from("111222333,A,a@x.edu,true,A,false,1\n");
  RiskRule rule;
  rule.failing_grades.clear();
  CHECK_THROWS_AS(derive_at_risk_labels(r, rule), ConfigError);
}

TEST_CASE("label derivation commutes with row permutation") {
  auto fwd = roster_from(
      "1112223331,A,a@x.edu,true,D,true,1\n"
      "1112223332,B,b@x.edu,true,A,false,1\n"
      "1112223333,C,c@x.edu,true,F,true,1\n");
  auto rev = roster_from(
      "1112223333,C,c@x.edu,true,F,true,1\n"
      "1112223332,B,b@x.edu,true,A,false,1\n"
      "1112223331,A,a@x.edu,true,D,true,1\n");
  auto lf = derive_at_risk_labels(fwd, RiskRule{});
  auto lr = derive_at_risk_labels(rev, RiskRule{});
  CHECK(lf.labels == std::vector<int>{1, 0, 1});
  CHECK(lr.labels == std::vector<int>{1, 0, 1});
}

TEST_CASE("sidecar schema parsing") {
  std::istringstream in(
      "feature,category,phases\n"
      "GPA,demographic,all\n"
      "Current Score,performance,3\n"
      "Page Views,engagement,1;2;3\n");
  auto schema = parse_sidecar_schema(in);
  REQUIRE(schema.find("GPA") != nullptr);
  CHECK(schema.find("GPA")->phases == std::set<int>{1, 2, 3});
  CHECK(schema.find("Current Score")->phases == std::set<int>{3});
  CHECK(schema.find("Current Score")->category == FeatureCategory::kPerformance);
  CHECK(schema.find("Page Views")->category == FeatureCategory::kEngagement);
  CHECK(schema.find("nope") == nullptr);

  std::istringstream bad("feature,category,phases\nX,banana,all\n");
  CHECK_THROWS_AS(parse_sidecar_schema(bad), DataError);
}

TEST_CASE("contains_identifier substring scan") {
  std::string which;
  CHECK(contains_identifier("report for 123456789 ok", {"123456789"}, &which));
  CHECK(which == "123456789");
  CHECK(!contains_identifier("clean text", {"123456789"}));
  // Identifiers shorter than 3 chars are skipped.
  CHECK(!contains_identifier("a1b2", {"a1"}));
}
