/*
 * Copyright 2026 The forest-recourse Authors.
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

#include <cmath>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "recourse/feature_schema.hpp"
#include "recourse/german_credit.hpp"
#include "test_util.hpp"

namespace recourse {
namespace {

FeatureSchema gender_schema() {
  Attribute age;
  age.name = "age";
  Attribute gender;
  gender.name = "gender";
  gender.kind = AttributeKind::kCategorical;
  gender.categories = {"male", "female"};
  return FeatureSchema({age, gender});
}

// Schema with one numeric attribute and one categorical group of size m.
FeatureSchema group_schema(std::size_t m) {
  Attribute x;
  x.name = "x";
  Attribute g;
  g.name = "g";
  g.kind = AttributeKind::kCategorical;
  for (std::size_t c = 0; c < m; ++c) g.categories.push_back("c" + std::to_string(c));
  return FeatureSchema({x, g});
}

TEST(FeatureSchema, EncodesCategoryAsOneHotBlock) {
  const FeatureSchema s = gender_schema();
  const FeatureVector v = s.encode({{"age", 30.0}, {"gender", std::string("female")}});
  EXPECT_EQ(v.values, (std::vector<double>{30.0, 0.0, 1.0}));
}

TEST(FeatureSchema, DecodeIsInverseOfEncode) {
  const FeatureSchema s = gender_schema();
  const FeatureVector v{{41.5, 1.0, 0.0}};
  const Record r = s.decode(v);
  EXPECT_EQ(std::get<std::string>(r.at("gender")), "male");
  EXPECT_EQ(s.encode(r), v);
}

TEST(FeatureSchema, GermanCreditLayout) {
  const FeatureSchema s = german_credit_schema();
  EXPECT_EQ(s.attributes().size(), 20u);
  EXPECT_EQ(s.numeric_count(), 7u);
  EXPECT_EQ(s.groups().size(), 13u);
  std::size_t group_total = 0;
  for (const auto& g : s.groups()) group_total += g.size();
  EXPECT_EQ(group_total, 56u);
  EXPECT_EQ(s.dimension(), 7u + group_total);
}

TEST(FeatureSchema, EveryIndexOwnedOnceAndGroupsContiguous) {
  const FeatureSchema s = german_credit_schema();
  std::vector<int> owner(s.dimension(), 0);
  for (const auto& a : s.attributes()) {
    if (a.is_numeric()) ++owner[a.offset];
  }
  std::size_t prev_end = 0;
  for (const auto& g : s.groups()) {
    EXPECT_GE(g.size(), 2u);
    EXPECT_GE(g.begin, prev_end);
    for (std::size_t i = g.begin; i < g.begin + g.size(); ++i) ++owner[i];
    prev_end = g.begin + g.size();
  }
  for (int n : owner) EXPECT_EQ(n, 1);
}

TEST(FeatureSchema, GermanRecordRoundTrips) {
  const auto& f = testing::GermanFixture::get();
  for (std::size_t i = 0; i < f.credit.records.size(); i += 37) {
    const Record& r = f.credit.records[i];
    const FeatureVector v = f.credit.schema->encode(r);
    EXPECT_EQ(v.size(), 63u);
    EXPECT_EQ(f.credit.schema->decode(v), r);
    EXPECT_EQ(f.credit.schema->encode(f.credit.schema->decode(v)), v);
  }
}

TEST(FeatureSchema, EncodeErrorsNameTheField) {
  const FeatureSchema s = gender_schema();
  auto message = [&](const Record& r) {
    try {
      s.encode(r);
    } catch (const InputError& e) {
      return std::string(e.what());
    }
    return std::string();
  };
  EXPECT_NE(message({{"age", 1.0}}).find("gender"), std::string::npos);
  EXPECT_NE(message({{"age", 1.0}, {"gender", std::string("other")}}).find("gender"),
            std::string::npos);
  EXPECT_NE(message({{"age", 1.0}, {"gender", std::string("male")}, {"height", 2.0}})
                .find("height"),
            std::string::npos);
  EXPECT_NE(message({{"age", std::string("old")}, {"gender", std::string("male")}})
                .find("age"),
            std::string::npos);
}

TEST(FeatureSchema, DecodeRejectsInvalidBlocks) {
  const FeatureSchema s = gender_schema();
  EXPECT_THROW(s.decode(FeatureVector{{1.0, 0.0, 0.0}}), InconsistentVectorError);
  EXPECT_THROW(s.decode(FeatureVector{{1.0, 1.0, 1.0}}), InconsistentVectorError);
  EXPECT_THROW(s.decode(FeatureVector{{1.0, 0.5, 0.5}}), InconsistentVectorError);
}

TEST(FeatureSchema, RejectsMalformedDeclarations) {
  Attribute g;
  g.name = "g";
  g.kind = AttributeKind::kCategorical;
  g.categories = {"only"};
  EXPECT_THROW(FeatureSchema({g}), InputError);
  Attribute x;
  x.name = "x";
  x.granularity = 0.0;
  EXPECT_THROW(FeatureSchema({x}), InputError);
  x.granularity = 1.0;
  x.bounds = Bounds{5.0, 5.0};
  EXPECT_THROW(FeatureSchema({x}), InputError);
  Attribute y;
  y.name = "x";
  EXPECT_THROW(FeatureSchema({y, y}), InputError);
}

TEST(FeatureSchema, GranularityDefaults) {
  const FeatureSchema s = schema_from_json(json::parse(R"({"attributes": [
      {"name": "count", "kind": "numeric", "integer": true},
      {"name": "ratio", "kind": "numeric", "bounds": [0, 2]},
      {"name": "free", "kind": "numeric"},
      {"name": "step", "kind": "numeric", "granularity": 0.25}]})"));
  EXPECT_EQ(s.attributes()[0].granularity, 1.0);
  EXPECT_DOUBLE_EQ(s.attributes()[1].granularity, 2e-6);
  EXPECT_DOUBLE_EQ(s.attributes()[2].granularity, 1e-6);
  EXPECT_EQ(s.attributes()[3].granularity, 0.25);
}

TEST(FeatureSchema, DocumentRoundTripAndCheckedInFile) {
  const FeatureSchema builtin = german_credit_schema();
  const FeatureSchema parsed = schema_from_json(to_json(builtin));
  EXPECT_EQ(to_json(parsed), to_json(builtin));
  EXPECT_EQ(parsed.hash(), builtin.hash());
  const FeatureSchema file = load_schema(testing::data_path("german_credit.schema.json"));
  EXPECT_EQ(to_json(file), to_json(builtin));
}

TEST(FeatureSchema, SchemaDocumentErrors) {
  EXPECT_THROW(schema_from_json(json::parse(R"({"features": []})")), ParseError);
  EXPECT_THROW(schema_from_json(json::parse(R"({"attributes": [{"kind": "numeric"}]})")),
               ParseError);
  EXPECT_THROW(schema_from_json(json::parse(
                   R"({"attributes": [{"name": "g", "kind": "categorical"}]})")),
               ParseError);
  EXPECT_THROW(schema_from_json(json::parse(
                   R"({"attributes": [{"name": "g", "kind": "ordinal"}]})")),
               ParseError);
}

// --- consistency ------------------------------------------------------------

TEST(Consistency, BothIndicatorsForcedToZeroIsInconsistent) {
  const FeatureSchema s = group_schema(2);
  Hyperrectangle h(s.dimension());
  h[1] = {-kInf, 0.5};
  h[2] = {-kInf, 0.5};
  EXPECT_FALSE(check_consistency(h, s));
}

TEST(Consistency, OneIndicatorForcedToOneOthersAdmitZero) {
  const FeatureSchema s = group_schema(3);
  Hyperrectangle h(s.dimension());
  h[2] = {0.5, kInf};
  EXPECT_TRUE(check_consistency(h, s));
  EXPECT_EQ(admissible_categories(h, s.groups()[0]), (std::vector<std::size_t>{1}));
}

TEST(Consistency, UnconstrainedIsConsistent) {
  const FeatureSchema s = group_schema(4);
  EXPECT_TRUE(check_consistency(Hyperrectangle(s.dimension()), s));
}

TEST(Consistency, TwoIndicatorsForcedToOneIsInconsistent) {
  const FeatureSchema s = group_schema(3);
  Hyperrectangle h(s.dimension());
  h[1] = {0.0, kInf};
  h[3] = {0.0, kInf};
  EXPECT_FALSE(check_consistency(h, s));
}

TEST(Consistency, NumericDimensionsDoNotMatter) {
  const FeatureSchema s = group_schema(2);
  Hyperrectangle h(s.dimension());
  h[0] = {100.0, 200.0};
  EXPECT_TRUE(check_consistency(h, s));
}

// Random interval with endpoints drawn around the 0/1 indicator values.
Interval random_indicator_interval(Rng& rng) {
  static constexpr double kCuts[] = {-kInf, -0.5, 0.0, 0.5, 1.0, 1.5, kInf};
  std::size_t a = uniform_index(rng, 7), b = uniform_index(rng, 7);
  if (a > b) std::swap(a, b);
  return {kCuts[a], kCuts[b]};
}

TEST(Consistency, MonotoneUnderContainment) {
  const FeatureSchema s = group_schema(4);
  Rng rng(7);
  int checked = 0;
  for (int trial = 0; trial < 5000; ++trial) {
    Hyperrectangle small(s.dimension()), large(s.dimension());
    for (std::size_t i = 1; i < s.dimension(); ++i) {
      const Interval inner = random_indicator_interval(rng);
      Interval outer = inner;
      if (uniform_index(rng, 2)) outer.lo = -kInf;
      if (uniform_index(rng, 2)) outer.hi = kInf;
      small[i] = inner;
      large[i] = outer;
    }
    ASSERT_TRUE(small.within(large));
    if (check_consistency(small, s)) {
      ++checked;
      EXPECT_TRUE(check_consistency(large, s));
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Consistency, BoxAroundValidVectorIsConsistent) {
  const FeatureSchema s = group_schema(5);
  Rng rng(11);
  for (int trial = 0; trial < 2000; ++trial) {
    FeatureVector v{std::vector<double>(s.dimension(), 0.0)};
    v[0] = uniform_unit(rng);
    v[1 + uniform_index(rng, 5)] = 1.0;
    Hyperrectangle h(s.dimension());
    for (std::size_t i = 0; i < s.dimension(); ++i) {
      Interval iv = random_indicator_interval(rng);
      if (!iv.contains(v[i])) iv = {v[i] - 0.5, v[i] + 0.25};
      h[i] = iv;
    }
    ASSERT_TRUE(h.contains(v.span()));
    EXPECT_TRUE(check_consistency(h, s));
  }
}

}  // namespace
}  // namespace recourse
