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

#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "riskscreen/preprocess.hpp"

using namespace riskscreen;

namespace {

Roster make_roster(const std::string& extra_header, const std::string& body) {
  std::istringstream in(
      "student_id,name,email,consent,letter_grade,repeated_course," +
      extra_header + "\n" + body);
  return parse_roster(in);
}

SidecarSchema schema_of(const std::string& text) {
  std::istringstream in(text);
  return parse_sidecar_schema(in);
}

}  // namespace

TEST_CASE("numeric pass-through, boolean map, one-hot expansion") {
  auto roster = make_roster(
      "gpa,flagged,action",
      "111222333,A,a@x.edu,true,A,false,3.5,true,NONE\n"
      "444555666,B,b@x.edu,true,B,false,2.0,false,PROBATION\n");
  auto schema = schema_of(
      "feature,category,phases\n"
      "gpa,demographic,all\nflagged,demographic,all\naction,demographic,all\n");
  WarningSink w;
  auto X = encode_features(roster, schema, w);
  REQUIRE(X.cols() == 4);  // gpa, flagged, action=NONE, action=PROBATION
  CHECK(*X.column_index("gpa") == 0);
  CHECK(*X.column_index("flagged") == 1);
  CHECK(X.column(2).name == "action=NONE");
  CHECK(X.column(3).name == "action=PROBATION");
  CHECK(X.column(2).origin == ColumnMeta::Origin::kOneHot);
  CHECK(X.at(0, 0) == doctest::Approx(3.5));
  CHECK(X.at(0, 1) == 1.0);  // boolean true -> 1.0
  CHECK(X.at(1, 1) == 0.0);
  CHECK(X.at(0, 2) == 1.0);
  CHECK(X.at(0, 3) == 0.0);
  CHECK(X.at(1, 3) == 1.0);
}

TEST_CASE("one-hot category order is lexicographic over training values") {
  auto roster = make_roster("c",
                            "1112223331,A,a@x.edu,true,A,false,zeta\n"
                            "1112223332,B,b@x.edu,true,A,false,alpha\n"
                            "1112223333,C,c@x.edu,true,A,false,mid\n");
  auto schema = schema_of("feature,category,phases\nc,demographic,all\n");
  WarningSink w;
  auto X = encode_features(roster, schema, w);
  CHECK(X.column(0).name == "c=alpha");
  CHECK(X.column(1).name == "c=mid");
  CHECK(X.column(2).name == "c=zeta");
}

TEST_CASE("unseen category at transform time: all-zero group plus warning") {
  auto train = make_roster("c", "111222333,A,a@x.edu,true,A,false,known\n");
  auto schema = schema_of("feature,category,phases\nc,demographic,all\n");
  FeatureEncoder enc;
  enc.fit(train, schema);
  auto novel = make_roster("c", "444555666,B,b@x.edu,true,A,false,novel\n");
  WarningSink w;
  auto X = enc.transform(novel, w);
  CHECK(X.at(0, 0) == 0.0);
  CHECK(!w.empty());
}

TEST_CASE("one-hot group sums to 1 for seen values") {
  auto roster = make_roster("c",
                            "1112223331,A,a@x.edu,true,A,false,x\n"
                            "1112223332,B,b@x.edu,true,A,false,y\n");
  auto schema = schema_of("feature,category,phases\nc,demographic,all\n");
  WarningSink w;
  auto X = encode_features(roster, schema, w);
  for (std::size_t r = 0; r < X.rows(); ++r) {
    double sum = 0.0;
    for (std::size_t c = 0; c < X.cols(); ++c) sum += X.at(r, c);
    CHECK(sum == 1.0);
  }
}

TEST_CASE("more than 64 categories is an error") {
  std::string body;
  for (int i = 0; i < 70; ++i) {
    char row[96];
    std::snprintf(row, sizeof row, "90000%04d,N,n@x.edu,true,A,false,cat%03d\n",
                  i, i);
    body += row;
  }
  auto roster = make_roster("c", body);
  auto schema = schema_of("feature,category,phases\nc,demographic,all\n");
  FeatureEncoder enc;
  CHECK_THROWS_AS(enc.fit(roster, schema), DataError);
}

TEST_CASE("missing fitted feature at transform is an error; extras ignored") {
  auto train = make_roster("a,b",
                           "111222333,A,a@x.edu,true,A,false,1,2\n");
  auto schema = schema_of(
      "feature,category,phases\na,demographic,all\nb,demographic,all\n");
  FeatureEncoder enc;
  enc.fit(train, schema);

  auto extra = make_roster("a,b,z",
                           "444555666,B,b@x.edu,true,A,false,3,4,9\n");
  WarningSink w;
  auto X = enc.transform(extra, w);
  CHECK(X.cols() == 2);
  CHECK(X.at(0, 0) == 3.0);

  auto missing = make_roster("a", "777888999,C,c@x.edu,true,A,false,5\n");
  CHECK_THROWS_AS(enc.transform(missing, w), DataError);
}

TEST_CASE("encoder json round trip preserves the mapping") {
  auto train = make_roster("num,cat",
                           "1112223331,A,a@x.edu,true,A,false,1.5,red\n"
                           "1112223332,B,b@x.edu,true,A,false,2.5,blue\n");
  auto schema = schema_of(
      "feature,category,phases\nnum,performance,all\ncat,engagement,all\n");
  FeatureEncoder enc;
  enc.fit(train, schema);
  auto clone = FeatureEncoder::from_json(enc.to_json());
  WarningSink w;
  auto x1 = enc.transform(train, w);
  auto x2 = clone.transform(train, w);
  REQUIRE(x1.cols() == x2.cols());
  for (std::size_t r = 0; r < x1.rows(); ++r) {
    for (std::size_t c = 0; c < x1.cols(); ++c) CHECK(x1.at(r, c) == x2.at(r, c));
  }
}

TEST_CASE("median imputation: [1, missing, 3] -> 2") {
  auto roster = make_roster("v",
                            "1112223331,A,a@x.edu,true,A,false,1.0\n"
                            "1112223332,B,b@x.edu,true,A,false,\n"
                            "1112223333,C,c@x.edu,true,A,false,3.0\n");
  auto schema = schema_of("feature,category,phases\nv,demographic,all\n");
  WarningSink w;
  auto X = encode_features(roster, schema, w);
  CHECK(X.has_missing());
  auto report = impute_missing(X);
  CHECK(!X.has_missing());
  CHECK(X.at(1, 0) == 2.0);
  REQUIRE(report.entries.size() == 1);
  CHECK(report.entries[0].strategy == "median");
  CHECK(report.entries[0].fill_value == 2.0);
  CHECK(report.entries[0].count_filled == 1);
  CHECK(report.total_filled() == 1);
}

TEST_CASE("one-hot missing cells take the column mode") {
  auto roster = make_roster("c",
                            "1112223331,A,a@x.edu,true,A,false,red\n"
                            "1112223332,B,b@x.edu,true,A,false,red\n"
                            "1112223333,C,c@x.edu,true,A,false,blue\n"
                            "1112223334,D,d@x.edu,true,A,false,\n");
  auto schema = schema_of("feature,category,phases\nc,demographic,all\n");
  WarningSink w;
  auto X = encode_features(roster, schema, w);
  auto report = impute_missing(X);
  // Mode of c=red is 1 (two of three observed), of c=blue is 0.
  CHECK(X.at(3, *X.column_index("c=red")) == 1.0);
  CHECK(X.at(3, *X.column_index("c=blue")) == 0.0);
  for (const auto& e : report.entries) {
    if (e.count_filled > 0) CHECK(e.strategy == "mode");
  }
}

TEST_CASE("no missing values: identity and all-zero report") {
  auto roster = make_roster("v", "111222333,A,a@x.edu,true,A,false,1.0\n");
  auto schema = schema_of("feature,category,phases\nv,demographic,all\n");
  WarningSink w;
  auto X = encode_features(roster, schema, w);
  auto report = impute_missing(X);
  CHECK(report.total_filled() == 0);
  CHECK(X.at(0, 0) == 1.0);
}

TEST_CASE("all-missing column error names the column") {
  auto roster = make_roster("gone,ok",
                            "1112223331,A,a@x.edu,true,A,false,,1\n"
                            "1112223332,B,b@x.edu,true,A,false,,2\n");
  auto schema = schema_of(
      "feature,category,phases\ngone,demographic,all\nok,demographic,all\n");
  WarningSink w;
  auto X = encode_features(roster, schema, w);
  try {
    impute_missing(X);
    FAIL("expected DataError");
  } catch (const DataError& e) {
    CHECK(std::string(e.what()).find("gone") != std::string::npos);
  }
}

TEST_CASE("imputation is idempotent") {
  auto roster = make_roster("v",
                            "1112223331,A,a@x.edu,true,A,false,5\n"
                            "1112223332,B,b@x.edu,true,A,false,\n");
  auto schema = schema_of("feature,category,phases\nv,demographic,all\n");
  WarningSink w;
  auto X = encode_features(roster, schema, w);
  impute_missing(X);
  auto snapshot = X.column_values(0);
  auto second = impute_missing(X);
  CHECK(second.total_filled() == 0);
  CHECK(X.column_values(0) == snapshot);
}

TEST_CASE("median convention: average of the two middle order statistics") {
  CHECK(median({4.0, 1.0, 3.0, 2.0}) == 2.5);
  CHECK(median({3.0, 1.0, 2.0}) == 2.0);
  CHECK(median({7.0}) == 7.0);
}

TEST_CASE("standardize: [0,2] fit on itself -> [-1,1]; sigma=0 -> zeros") {
  std::vector<ColumnMeta> cols(2);
  cols[0].name = "a";
  cols[0].source_feature = "a";
  cols[1].name = "const";
  cols[1].source_feature = "const";
  FeatureMatrix X(2, cols);
  X.at(0, 0) = 0.0;
  X.at(1, 0) = 2.0;
  X.at(0, 1) = 7.0;
  X.at(1, 1) = 7.0;
  auto params = fit_standardization(X, {0, 1});
  CHECK(params.mean[0] == 1.0);
  CHECK(params.stddev[0] == 1.0);  // population sigma
  WarningSink w;
  auto Z = standardize(X, params, w);
  CHECK(Z.at(0, 0) == -1.0);
  CHECK(Z.at(1, 0) == 1.0);
  CHECK(Z.at(0, 1) == 0.0);  // sigma=0 rule
  CHECK(!w.empty());
}

TEST_CASE("test rows use train statistics, not their own") {
  std::vector<ColumnMeta> cols(1);
  cols[0].name = "a";
  cols[0].source_feature = "a";
  FeatureMatrix X(4, cols);
  X.at(0, 0) = 0.0;
  X.at(1, 0) = 2.0;
  X.at(2, 0) = 100.0;
  X.at(3, 0) = 200.0;
  auto params = fit_standardization(X, {0, 1});  // train mu=1, sigma=1
  WarningSink w;
  auto Z = standardize(X, params, w);
  CHECK(Z.at(2, 0) == doctest::Approx(99.0));
  CHECK(Z.at(3, 0) == doctest::Approx(199.0));
}

TEST_CASE("standardized training columns have mean 0, variance 1") {
  std::vector<ColumnMeta> cols(1);
  cols[0].name = "a";
  cols[0].source_feature = "a";
  FeatureMatrix X(5, cols);
  const double vals[5] = {3.0, -1.0, 4.0, 1.0, 5.0};
  for (std::size_t r = 0; r < 5; ++r) X.at(r, 0) = vals[r];
  auto params = fit_standardization(X, {0, 1, 2, 3, 4});
  WarningSink w;
  auto Z = standardize(X, params, w);
  double mean = 0.0, var = 0.0;
  for (std::size_t r = 0; r < 5; ++r) mean += Z.at(r, 0);
  mean /= 5;
  for (std::size_t r = 0; r < 5; ++r) var += (Z.at(r, 0) - mean) * (Z.at(r, 0) - mean);
  var /= 5;
  CHECK(std::fabs(mean) < 1e-9);
  CHECK(std::fabs(var - 1.0) < 1e-9);
}

TEST_CASE("destandardize inverts standardize") {
  std::vector<ColumnMeta> cols(1);
  cols[0].name = "a";
  cols[0].source_feature = "a";
  FeatureMatrix X(3, cols);
  X.at(0, 0) = 1.0;
  X.at(1, 0) = 5.0;
  X.at(2, 0) = 9.0;
  auto params = fit_standardization(X, {0, 1, 2});
  WarningSink w;
  auto Z = standardize(X, params, w);
  for (std::size_t r = 0; r < 3; ++r) {
    auto back = destandardize_row(Z.row_values(r), params);
    CHECK(back[0] == doctest::Approx(X.at(r, 0)));
  }
}

TEST_CASE("restricted encoder keeps only the named source features") {
  auto train = make_roster("a,b,c",
                           "111222333,A,a@x.edu,true,A,false,1,2,red\n");
  auto schema = schema_of(
      "feature,category,phases\na,demographic,all\nb,demographic,all\n"
      "c,demographic,all\n");
  FeatureEncoder enc;
  enc.fit(train, schema);
  auto sub = enc.restricted({"a", "c"});
  WarningSink w;
  auto X = sub.transform(train, w);
  CHECK(X.cols() == 2);  // a and c=red
  CHECK(X.column(0).source_feature == "a");
  CHECK(X.column(1).source_feature == "c");
}
