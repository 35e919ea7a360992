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
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "recourse/dataset_io.hpp"
#include "recourse/forest.hpp"
#include "recourse/german_credit.hpp"
#include "test_util.hpp"

namespace recourse {
namespace {

using testing::GermanFixture;
using testing::numeric_schema;
using testing::stump;

// x0 <= 2 ? (x1 <= 5 ? 1 : 0) : 0
Tree two_level(int index) {
  Tree t;
  t.index = index;
  t.nodes = {Node::split(0, 2.0, 1, 2), Node::split(1, 5.0, 3, 4), Node::leaf(0),
             Node::leaf(1), Node::leaf(0)};
  return t;
}

Tree random_tree(Rng& rng, std::size_t dim, int depth, int index) {
  Tree t;
  t.index = index;
  // Breadth-first so children always follow their parent.
  std::vector<int> level{0};
  t.nodes.push_back(Node::leaf(0));
  for (int d = 0; d < depth; ++d) {
    std::vector<int> next;
    for (int id : level) {
      if (d > 0 && uniform_index(rng, 3) == 0) {
        t.nodes[id] = Node::leaf(static_cast<int>(uniform_index(rng, 2)));
        continue;
      }
      const int l = static_cast<int>(t.nodes.size());
      t.nodes[id] = Node::split(static_cast<int>(uniform_index(rng, dim)),
                                static_cast<double>(uniform_index(rng, 11)), l, l + 1);
      t.nodes.push_back(Node::leaf(0));
      t.nodes.push_back(Node::leaf(0));
      next.push_back(l);
      next.push_back(l + 1);
    }
    level = std::move(next);
  }
  for (int id : level) t.nodes[id] = Node::leaf(static_cast<int>(uniform_index(rng, 2)));
  return t;
}

TEST(Tree, ThresholdValueGoesLeft) {
  const Tree t = stump(0, 0, 3.0, 1, 0);
  const double at[] = {3.0};
  const double above[] = {3.0000001};
  EXPECT_EQ(t.classify(at), 1);
  EXPECT_EQ(t.classify(above), 0);
}

TEST(Tree, LeafRegionsFollowPaths) {
  const auto regions = leaf_regions(two_level(0), 2);
  ASSERT_EQ(regions.size(), 3u);
  EXPECT_EQ(regions[0].node_id, 2);
  EXPECT_EQ(regions[0].region[0], (Interval{2.0, kInf}));
  EXPECT_EQ(regions[1].node_id, 3);
  EXPECT_EQ(regions[1].region[0], (Interval{-kInf, 2.0}));
  EXPECT_EQ(regions[1].region[1], (Interval{-kInf, 5.0}));
  EXPECT_EQ(regions[1].label, 1);
  EXPECT_EQ(regions[2].region[1], (Interval{5.0, kInf}));
}

TEST(Tree, LeafRegionsPartitionSpace) {
  Rng rng(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Tree t = random_tree(rng, 3, 4, 0);
    const auto regions = leaf_regions(t, 3);
    EXPECT_EQ(regions.size(), t.leaf_count());
    for (int p = 0; p < 200; ++p) {
      std::vector<double> x(3);
      // Integer points hit the thresholds exactly.
      for (auto& xi : x) xi = static_cast<double>(uniform_index(rng, 13)) - 1.0;
      int owners = 0;
      for (const auto& r : regions) {
        if (r.region.contains(x)) {
          ++owners;
          EXPECT_EQ(r.node_id, t.route(x));
          EXPECT_EQ(r.label, t.classify(x));
        }
      }
      EXPECT_EQ(owners, 1);
    }
  }
}

TEST(Forest, MajorityVoteTiesGoToZero) {
  auto schema = numeric_schema(1);
  const Forest two(schema, {stump(0, 0, 0.0, 1, 0), stump(1, 0, 5.0, 1, 0)});
  EXPECT_EQ(two.predict(FeatureVector{{-1.0}}).label, 1);
  const Prediction tie = two.predict(FeatureVector{{3.0}});
  EXPECT_EQ(tie.votes[0], 1);
  EXPECT_EQ(tie.votes[1], 1);
  EXPECT_EQ(tie.label, 0);
  EXPECT_EQ(two.predict(FeatureVector{{6.0}}).label, 0);
}

TEST(Forest, RejectsDimensionMismatch) {
  const Forest f(numeric_schema(2), {two_level(0)});
  EXPECT_THROW(f.predict(FeatureVector{{1.0}}), InputError);
  EXPECT_THROW(Forest(numeric_schema(1), {}), InputError);
}

TEST(Training, DeterministicAndThreadIndependent) {
  const auto& credit = GermanFixture::get().credit;
  ForestParams p;
  p.trees = 6;
  const std::string a = serialize(train(credit.data, p));
  EXPECT_EQ(serialize(train(credit.data, p)), a);
  p.threads = 4;
  EXPECT_EQ(serialize(train(credit.data, p)), a);
  p.seed = 43;
  EXPECT_NE(serialize(train(credit.data, p)), a);
}

TEST(Training, TreesDifferAndRespectDepth) {
  const auto& f = GermanFixture::get().forest;
  ASSERT_EQ(f.size(), 10u);
  for (std::size_t j = 0; j < f.size(); ++j) {
    EXPECT_EQ(f.trees()[j].index, static_cast<int>(j));
    EXPECT_LE(f.trees()[j].depth(), 12);
    EXPECT_GT(f.trees()[j].leaf_count(), 1u);
  }
  EXPECT_NE(to_json(f)["trees"][0], to_json(f)["trees"][1]);
  EXPECT_EQ(f.metadata().features_per_split, 8);
  EXPECT_EQ(f.metadata().samples, 1000u);
}

TEST(Training, IntegerDataGivesIntegerThresholds) {
  for (const auto& tree : GermanFixture::get().forest.trees()) {
    for (const auto& n : tree.nodes) {
      if (!n.is_leaf()) {
        EXPECT_EQ(n.threshold, std::floor(n.threshold));
      }
    }
  }
}

TEST(Training, DepthLimitAndSingleClass) {
  auto schema = numeric_schema(2);
  Dataset d{schema, {}, {}};
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    const double a = static_cast<double>(uniform_index(rng, 20));
    const double b = static_cast<double>(uniform_index(rng, 20));
    d.rows.push_back(FeatureVector{{a, b}});
    d.labels.push_back((a + b) > 19 ? 1 : 0);
  }
  ForestParams p;
  p.trees = 3;
  p.max_depth = 2;
  const Forest shallow = train(d, p);
  for (const auto& t : shallow.trees()) EXPECT_LE(t.depth(), 2);
  p.max_depth = 0;
  const Forest stumps = train(d, p);
  for (const auto& t : stumps.trees()) EXPECT_EQ(t.nodes.size(), 1u);

  for (auto& y : d.labels) y = 1;
  p.max_depth = 12;
  const Forest single = train(d, p);
  EXPECT_TRUE(single.metadata().single_class);
  EXPECT_EQ(single.predict(FeatureVector{{0.0, 0.0}}).label, 1);
}

TEST(Training, RejectsBadInput) {
  auto schema = numeric_schema(1);
  ForestParams p;
  EXPECT_THROW(train(Dataset{schema, {}, {}}, p), InputError);
  EXPECT_THROW(train(Dataset{schema, {FeatureVector{{1.0}}}, {2}}, p), InputError);
  p.trees = 0;
  EXPECT_THROW(train(Dataset{schema, {FeatureVector{{1.0}}}, {1}}, p), InputError);
}

TEST(Training, CrossValidationIsSeeded) {
  const auto& credit = GermanFixture::get().credit;
  ForestParams p;
  p.trees = 4;
  const auto a = cross_validate(credit.data, p, 3);
  const auto b = cross_validate(credit.data, p, 3);
  ASSERT_EQ(a.fold_accuracy.size(), 3u);
  EXPECT_EQ(a.fold_accuracy, b.fold_accuracy);
  EXPECT_GT(a.mean(), 0.6);
  EXPECT_THROW(cross_validate(credit.data, p, 1), InputError);
}

// --- documents --------------------------------------------------------------

TEST(ForestDocument, RoundTripIsExact) {
  const auto& f = GermanFixture::get().forest;
  const std::string text = serialize(f);
  const Forest back = deserialize(text);
  EXPECT_EQ(serialize(back), text);
  for (const auto& row : GermanFixture::get().credit.data.rows) {
    ASSERT_EQ(back.predict(row).votes, f.predict(row).votes);
  }
}

TEST(ForestDocument, RandomForestsRoundTrip) {
  Rng rng(17);
  auto schema = numeric_schema(3);
  for (int trial = 0; trial < 30; ++trial) {
    std::vector<Tree> trees;
    for (int j = 0; j < 5; ++j) trees.push_back(random_tree(rng, 3, 5, j));
    const Forest f(schema, trees);
    const Forest back = deserialize(serialize(f));
    ASSERT_EQ(back.size(), f.size());
    for (std::size_t j = 0; j < f.size(); ++j) {
      ASSERT_EQ(back.trees()[j].nodes.size(), f.trees()[j].nodes.size());
      for (std::size_t n = 0; n < f.trees()[j].nodes.size(); ++n) {
        const Node& x = f.trees()[j].nodes[n];
        const Node& y = back.trees()[j].nodes[n];
        EXPECT_EQ(x.feature, y.feature);
        EXPECT_EQ(x.threshold, y.threshold);
        EXPECT_EQ(x.left, y.left);
        EXPECT_EQ(x.right, y.right);
        if (x.is_leaf()) {
          EXPECT_EQ(x.label, y.label);
        }
      }
    }
  }
}

TEST(ForestDocument, NonRoundThresholdsSurvive) {
  auto schema = numeric_schema(1);
  const double thr = 0.1 + 0.2;
  const Forest f(schema, {stump(0, 0, thr, 1, 0)});
  const Forest back = deserialize(serialize(f));
  EXPECT_EQ(back.trees()[0].nodes[0].threshold, thr);
}

std::string parse_failure(const json& doc) {
  try {
    forest_from_json(doc);
  } catch (const ParseError& e) {
    return e.what();
  }
  return "";
}

TEST(ForestDocument, ErrorsCarryAPath) {
  const Forest f(numeric_schema(2), {two_level(0), two_level(1)});
  const json good = to_json(f);
  ASSERT_EQ(parse_failure(good), "");

  json j = good;
  j["schema_hash"] = "0000000000000000";
  EXPECT_NE(parse_failure(j).find("schema_hash"), std::string::npos);

  j = good;
  j["k"] = 3;
  EXPECT_NE(parse_failure(j).find("k:"), std::string::npos);

  j = good;
  j["trees"][1]["nodes"][1]["left"] = 0;
  EXPECT_NE(parse_failure(j).find("trees[1].nodes[1].left"), std::string::npos);

  j = good;
  j["trees"][0]["nodes"][0]["right"] = 1;
  EXPECT_NE(parse_failure(j).find("exactly one parent"), std::string::npos);

  j = good;
  j["trees"][0]["nodes"][1]["feature"] = 2;
  EXPECT_NE(parse_failure(j).find("trees[0].nodes[1].feature"), std::string::npos);

  j = good;
  j["trees"][0]["nodes"][2] = {{"leaf", 2}};
  EXPECT_NE(parse_failure(j).find("trees[0].nodes[2].leaf"), std::string::npos);

  j = good;
  j.erase("trees");
  EXPECT_NE(parse_failure(j).find("trees"), std::string::npos);

  EXPECT_THROW(deserialize("{not json"), ParseError);
}

TEST(ForestDocument, ExternalSchemaMustMatch) {
  const Forest f(numeric_schema(2), {two_level(0)});
  EXPECT_NO_THROW(forest_from_json(to_json(f), numeric_schema(2)));
  EXPECT_THROW(forest_from_json(to_json(f), numeric_schema(3)), ParseError);
}

// --- datasets ---------------------------------------------------------------

TEST(GermanCredit, FileShape) {
  const auto& credit = GermanFixture::get().credit;
  ASSERT_EQ(credit.data.size(), 1000u);
  std::size_t good = 0;
  for (int y : credit.data.labels) good += y == 1;
  EXPECT_EQ(good, 700u);
  EXPECT_EQ(std::get<std::string>(credit.records[0].at("checking_status")), "A11");
  EXPECT_EQ(std::get<double>(credit.records[0].at("duration_months")), 6.0);
  EXPECT_EQ(std::get<double>(credit.records[0].at("age_years")), 67.0);
}

TEST(GermanCredit, ParseErrorsNameTheLine) {
  std::istringstream short_row(
      "A11 6 A34 A43 1169 A65 A75 4 A93 A101 4 A121 67 A143 A152 2 A173 1 A192 "
      "A201 1\nA11 6\n");
  try {
    parse_german_credit(short_row);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::istringstream bad_code(
      "A19 6 A34 A43 1169 A65 A75 4 A93 A101 4 A121 67 A143 A152 2 A173 1 A192 "
      "A201 1\n");
  EXPECT_THROW(parse_german_credit(bad_code), ParseError);
  std::istringstream bad_label(
      "A11 6 A34 A43 1169 A65 A75 4 A93 A101 4 A121 67 A143 A152 2 A173 1 A192 "
      "A201 3\n");
  EXPECT_THROW(parse_german_credit(bad_label), ParseError);
}

TEST(CsvDataset, LoadsByHeaderName) {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string path = (dir / "forest_test_dataset.csv").string();
  auto schema = std::make_shared<const FeatureSchema>(schema_from_json(json::parse(
      R"({"attributes": [{"name": "a", "kind": "numeric"},
                         {"name": "c", "kind": "categorical", "categories": ["x", "y"]}]})")));
  {
    std::ofstream out(path);
    out << "label,c,a\n1,y,2.5\n0, x ,-1\n\n";
  }
  const Dataset d = load_csv_dataset(path, schema);
  ASSERT_EQ(d.size(), 2u);
  EXPECT_EQ(d.rows[0].values, (std::vector<double>{2.5, 0.0, 1.0}));
  EXPECT_EQ(d.rows[1].values, (std::vector<double>{-1.0, 1.0, 0.0}));
  EXPECT_EQ(d.labels, (std::vector<int>{1, 0}));
  {
    std::ofstream out(path);
    out << "label,c,a\n1,z,2.5\n";
  }
  try {
    load_csv_dataset(path, schema);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_NE(std::string(e.what()).find("line 2"), std::string::npos);
  }
  std::filesystem::remove(path);
}

}  // namespace
}  // namespace recourse
