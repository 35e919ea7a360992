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

#include <string>
#include <thread>
#include <vector>

#include "gtest/gtest.h"
#include "recourse/service.hpp"
#include "test_util.hpp"

namespace recourse {
namespace {

using testing::GermanFixture;

const RecourseService& german_service() {
  static const RecourseService svc = [] {
    const auto& fx = GermanFixture::get();
    ServiceConfig cfg;
    cfg.default_budget = std::nullopt;
    return RecourseService(fx.forest, fx.costs, cfg);
  }();
  return svc;
}

json record_json(std::size_t row) {
  const auto& fx = GermanFixture::get();
  return to_json(fx.credit.records[row], fx.forest.schema());
}

std::string recourse_body(std::size_t row, const json& extra = json::object()) {
  json req = {{"record", record_json(row)}};
  for (const auto& [k, v] : extra.items()) req[k] = v;
  return req.dump();
}

TEST(Service, SchemaListsAttributesInOrder) {
  const Response r = german_service().get_schema();
  ASSERT_EQ(r.status, 200);
  const json& attrs = r.body["attributes"];
  ASSERT_EQ(attrs.size(), 20u);
  std::size_t categorical = 0;
  for (const auto& a : attrs) categorical += a["kind"] == "categorical";
  EXPECT_EQ(categorical, 13u);
  EXPECT_EQ(attrs[0]["name"], "checking_status");
  EXPECT_EQ(attrs[0]["categories"], (json{"A11", "A12", "A13", "A14"}));
  EXPECT_EQ(r.body["k"], 10);
  const FeatureSchema back = schema_from_json(r.body);
  EXPECT_EQ(back.hash(), german_service().forest().schema().hash());
  EXPECT_EQ(json::parse(r.body.dump()), r.body);
  EXPECT_EQ(r.body["default_costs"]["features"].size(), 7u);
}

TEST(Service, PredictMatchesOffline) {
  const auto& fx = GermanFixture::get();
  for (std::size_t row : {0u, 1u, 7u, 500u, 999u}) {
    const Response r = german_service().post_predict(json{{"record", record_json(row)}}.dump());
    ASSERT_EQ(r.status, 200) << r.body.dump();
    const Prediction p = fx.forest.predict(fx.credit.data.rows[row]);
    EXPECT_EQ(r.body["class"], p.label);
    EXPECT_EQ(r.body["votes"][0].get<int>() + r.body["votes"][1].get<int>(), 10);
    EXPECT_EQ(r.body["votes"][1], p.votes[1]);
  }
}

TEST(Service, PredictErrorsNameTheAttribute) {
  json rec = record_json(0);
  rec["purpose"] = "A499";
  Response r = german_service().post_predict(json{{"record", rec}}.dump());
  EXPECT_EQ(r.status, 400);
  EXPECT_NE(r.body["error"].get<std::string>().find("purpose"), std::string::npos);
  rec = record_json(0);
  rec.erase("age_years");
  r = german_service().post_predict(json{{"record", rec}}.dump());
  EXPECT_EQ(r.status, 400);
  EXPECT_NE(r.body["error"].get<std::string>().find("age_years"), std::string::npos);
  EXPECT_EQ(german_service().post_predict("{oops").status, 400);
  EXPECT_EQ(german_service().post_predict("{}").status, 400);
}

TEST(Service, RecoursePlansVerifiedAndDeterministic) {
  const auto rejected = GermanFixture::get().rejected_rows();
  const std::string body = recourse_body(rejected[0]);
  const Response a = german_service().post_recourse(body);
  const Response b = german_service().post_recourse(body);
  ASSERT_EQ(a.status, 200) << a.body.dump();
  EXPECT_EQ(a.body.dump(), b.body.dump());
  ASSERT_FALSE(a.body["plans"].empty());
  for (const auto& p : a.body["plans"]) {
    EXPECT_EQ(p["verified"], true);
    const Response check = german_service().post_predict(json{{"record", p["record"]}}.dump());
    EXPECT_EQ(check.body["class"], 1);
  }
  EXPECT_EQ(a.body["possibly_suboptimal"], false);
}

TEST(Service, DefaultTargetIsOppositeClass) {
  const auto& fx = GermanFixture::get();
  std::size_t approved = 0;
  while (fx.forest.predict(fx.credit.data.rows[approved]).label != 1) ++approved;
  const Response r = german_service().post_recourse(recourse_body(approved, {{"max_results", 1}}));
  ASSERT_EQ(r.status, 200) << r.body.dump();
  const Response check =
      german_service().post_predict(json{{"record", r.body["plans"][0]["record"]}}.dump());
  EXPECT_EQ(check.body["class"], 0);
  const Response same =
      german_service().post_recourse(recourse_body(approved, {{"target_class", 1}}));
  ASSERT_EQ(same.status, 200);
  EXPECT_EQ(same.body["plans"][0]["total_cost"], 0);
  EXPECT_TRUE(same.body["plans"][0]["changes"].empty());
}

TEST(Service, ImmutableOverrideNeverChanged) {
  const auto rejected = GermanFixture::get().rejected_rows();
  const Response base = german_service().post_recourse(recourse_body(rejected[1]));
  ASSERT_EQ(base.status, 200);
  const std::string changed = base.body["plans"][0]["changes"][0]["attribute"];
  const bool numeric = GermanFixture::get().forest.schema().find(changed)->is_numeric();
  json overrides = numeric
                       ? json{{"features", json::array({{{"feature", changed}, {"type", "immutable"}}})}}
                       : json{{"groups", json::array({{{"group", changed}, {"type", "immutable"}}})}};
  const Response r =
      german_service().post_recourse(recourse_body(rejected[1], {{"cost_overrides", overrides}}));
  ASSERT_TRUE(r.status == 200 || r.status == 422) << r.body.dump();
  for (const auto& p : r.body["plans"]) {
    for (const auto& c : p["changes"]) EXPECT_NE(c["attribute"], changed);
  }
  if (r.status == 200) {
    EXPECT_GE(r.body["plans"][0]["total_cost"].get<double>(),
              base.body["plans"][0]["total_cost"].get<double>());
  }
}

TEST(Service, RaisingAWeightNeverLowersMinimum) {
  const auto rejected = GermanFixture::get().rejected_rows();
  for (std::size_t i = 0; i < 3; ++i) {
    const std::size_t row = rejected[10 + i];
    const Response base = german_service().post_recourse(recourse_body(row, {{"max_results", 1}}));
    ASSERT_EQ(base.status, 200);
    json overrides = {{"features",
                       {{{"feature", "duration_months"}, {"type", "linear"}, {"weight", 5}},
                        {{"feature", "credit_amount"}, {"type", "linear"}, {"weight", 0.01}}}},
                      {"groups", json::array({{{"group", "telephone"}, {"uniform", 4}}})}};
    const Response up = german_service().post_recourse(
        recourse_body(row, {{"max_results", 1}, {"cost_overrides", overrides}}));
    ASSERT_TRUE(up.status == 200 || up.status == 422);
    if (up.status == 200) {
      EXPECT_GE(up.body["plans"][0]["total_cost"].get<double>(),
                base.body["plans"][0]["total_cost"].get<double>());
    }
  }
}

TEST(Service, RecourseInputErrors) {
  const auto& svc = german_service();
  EXPECT_EQ(svc.post_recourse("[]").status, 400);
  EXPECT_EQ(svc.post_recourse(recourse_body(0, {{"target_class", 3}})).status, 400);
  EXPECT_EQ(svc.post_recourse(recourse_body(0, {{"target_class", "yes"}})).status, 400);
  EXPECT_EQ(svc.post_recourse(recourse_body(0, {{"max_results", 0}})).status, 400);
  EXPECT_EQ(svc.post_recourse(recourse_body(0, {{"max_results", 1000}})).status, 400);
  EXPECT_EQ(svc.post_recourse(recourse_body(0, {{"budget_ms", 0}})).status, 400);
  const Response unknown = svc.post_recourse(recourse_body(
      0, {{"cost_overrides",
            {{"features", json::array({{{"feature", "height"}, {"type", "linear"}}})}}}}));
  EXPECT_EQ(unknown.status, 400);
  EXPECT_NE(unknown.body["error"].get<std::string>().find("height"), std::string::npos);
  EXPECT_EQ(svc.post_recourse(recourse_body(0, {{"cost_overrides", {{"features", json::array({5})}}}})).status,
            400);
}

TEST(Service, InfeasibleIs422) {
  auto schema = testing::numeric_schema(1);
  const Forest f(schema, {testing::stump(0, 0, 5.0, 0, 1)});
  const CostModel m(schema, {FeatureCost{Immutable{}}});
  const RecourseService svc(f, m);
  const Response r = svc.post_recourse(R"({"record": {"x0": 0}})");
  EXPECT_EQ(r.status, 422);
  EXPECT_EQ(r.body["status"], "blocked by immutable constraints");
  EXPECT_TRUE(r.body["plans"].empty());
}

TEST(Service, MismatchedDefaultCostsRejected) {
  const Forest f(testing::numeric_schema(1), {testing::stump(0, 0, 5.0, 0, 1)});
  EXPECT_THROW(RecourseService(f, CostModel::unit(testing::numeric_schema(2))), InputError);
}

TEST(Service, HttpRoundTripWithConcurrentClients) {
  httplib::Server server;
  german_service().mount(server);
  const int port = server.bind_to_any_port("127.0.0.1");
  ASSERT_GT(port, 0);
  std::thread listener([&] { server.listen_after_bind(); });
  server.wait_until_ready();

  httplib::Client client("127.0.0.1", port);
  client.set_read_timeout(120, 0);
  auto schema = client.Get("/schema");
  ASSERT_TRUE(schema);
  EXPECT_EQ(schema->status, 200);
  EXPECT_EQ(json::parse(schema->body), german_service().get_schema().body);

  const auto rejected = GermanFixture::get().rejected_rows();
  std::vector<std::string> bodies;
  for (std::size_t i = 0; i < 4; ++i) bodies.push_back(recourse_body(rejected[20 + i], {{"max_results", 2}}));
  std::vector<std::string> expected;
  for (const auto& b : bodies) expected.push_back(german_service().post_recourse(b).body.dump());

  std::vector<std::string> got(bodies.size());
  std::vector<int> status(bodies.size(), 0);
  {
    std::vector<std::jthread> clients;
    for (std::size_t i = 0; i < bodies.size(); ++i) {
      clients.emplace_back([&, i] {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(120, 0);
        if (auto res = c.Post("/recourse", bodies[i], "application/json")) {
          status[i] = res->status;
          got[i] = res->body;
        }
      });
    }
  }
  for (std::size_t i = 0; i < bodies.size(); ++i) {
    EXPECT_EQ(status[i], 200);
    EXPECT_EQ(got[i], expected[i]);
  }

  auto bad = client.Post("/predict", "{\"record\": 1}", "application/json");
  ASSERT_TRUE(bad);
  EXPECT_EQ(bad->status, 400);
  auto missing = client.Get("/nothing");
  ASSERT_TRUE(missing);
  EXPECT_EQ(missing->status, 404);

  server.stop();
  listener.join();
}

}  // namespace
}  // namespace recourse
