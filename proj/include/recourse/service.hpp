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

#pragma once

#include <chrono>
#include <cstddef>
#include <memory>
#include <optional>
#include <string>
#include <utility>

#include "common.hpp"
#include "cost_model.hpp"
#include "feature_schema.hpp"
#include "forest.hpp"
#include "httplib.h"
#include "recourse.hpp"

namespace recourse {

struct ServiceConfig {
  std::size_t max_cliques = 200'000;
  std::optional<std::chrono::milliseconds> default_budget =
      std::chrono::milliseconds(10'000);
  std::size_t threads = 1;
  std::size_t max_results_limit = 100;
};

struct Response {
  int status = 200;
  json body;
};

// Stateless request handlers over an immutable model. Every response is a
// function of the loaded model and the request alone.
class RecourseService {
 public:
  RecourseService(Forest forest, CostModel default_costs, ServiceConfig config = {})
      : forest_(std::move(forest)),
        costs_(std::move(default_costs)),
        config_(config) {
    if (costs_.schema().hash() != forest_.schema().hash()) {
      throw InputError("default cost model does not match the model's schema");
    }
  }

  const Forest& forest() const { return forest_; }

  Response get_schema() const {
    json doc = to_json(forest_.schema());
    doc["k"] = forest_.size();
    doc["default_costs"] = to_json(costs_);
    return {200, std::move(doc)};
  }

  Response post_predict(const std::string& body) const {
    try {
      const json req = parse(body);
      if (!req.contains("record")) return error(400, "missing 'record'");
      const FeatureVector v = forest_.schema().encode(record_from_json(req["record"]));
      const Prediction p = forest_.predict(v);
      return {200, {{"class", p.label}, {"votes", p.votes}}};
    } catch (const InputError& e) {
      return error(400, e.what());
    }
  }

  Response post_recourse(const std::string& body) const {
    RecourseQuery query;
    CostModel costs = costs_;
    try {
      const json req = parse(body);
      if (!req.contains("record")) return error(400, "missing 'record'");
      query.v = forest_.schema().encode(record_from_json(req["record"]));
      query.target_class = req.contains("target_class")
                               ? req["target_class"].get<int>()
                               : 1 - forest_.predict(query.v).label;
      if (query.target_class != 0 && query.target_class != 1) {
        return error(400, "target_class must be 0 or 1");
      }
      query.max_results = req.value("max_results", std::size_t{5});
      if (query.max_results < 1 || query.max_results > config_.max_results_limit) {
        return error(400, "max_results out of range");
      }
      query.budget.max_cliques = config_.max_cliques;
      query.budget.wall_time = config_.default_budget;
      if (req.contains("budget_ms")) {
        const auto ms = req["budget_ms"].get<long long>();
        if (ms <= 0) return error(400, "budget_ms must be positive");
        query.budget.wall_time = std::chrono::milliseconds(ms);
      }
      if (req.contains("cost_overrides") && !req["cost_overrides"].is_null()) {
        costs = merge_costs(costs_, req["cost_overrides"], false);
      }
    } catch (const InputError& e) {
      return error(400, e.what());
    } catch (const json::exception& e) {
      return error(400, e.what());
    }
    SearchOptions options;
    options.threads = config_.threads;
    const RecourseResult r = find_recourse(query, forest_, costs, options);
    json doc = to_json(r, forest_.schema());
    if (r.plans.empty()) {
      return {r.hit_wall_time ? 504 : 422, std::move(doc)};
    }
    return {200, std::move(doc)};
  }

  // Registers the endpoints on `server`.
  void mount(httplib::Server& server) const {
    auto reply = [](httplib::Response& res, const Response& r) {
      res.status = r.status;
      res.set_content(r.body.dump(), "application/json");
    };
    server.Get("/schema", [this, reply](const httplib::Request&, httplib::Response& res) {
      reply(res, get_schema());
    });
    server.Post("/predict", [this, reply](const httplib::Request& req,
                                         httplib::Response& res) {
      reply(res, post_predict(req.body));
    });
    server.Post("/recourse", [this, reply](const httplib::Request& req,
                                          httplib::Response& res) {
      try {
        reply(res, post_recourse(req.body));
      } catch (const std::exception& e) {
        reply(res, error(500, e.what()));
      }
    });
  }

 private:
  static json parse(const std::string& body) {
    try {
      return json::parse(body);
    } catch (const json::parse_error& e) {
      throw InputError(std::string("malformed JSON: ") + e.what());
    }
  }

  static Response error(int status, const std::string& message) {
    return {status, {{"error", message}}};
  }

  Forest forest_;
  CostModel costs_;
  ServiceConfig config_;
};

}  // namespace recourse
