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

// forest-recourse: train decision forests, query predictions, and compute
// minimum-cost recourse plans from the command line.

#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "recourse/clique_engine.hpp"
#include "recourse/cost_model.hpp"
#include "recourse/dataset_io.hpp"
#include "recourse/feature_schema.hpp"
#include "recourse/forest.hpp"
#include "recourse/german_credit.hpp"
#include "recourse/recourse.hpp"
#include "recourse/service.hpp"
#include "recourse/validation.hpp"

namespace {

using namespace recourse;

enum ExitCode : int {
  kOk = 0,
  kInputError = 2,
  kInfeasible = 3,
  kInternal = 4,
};

void require_file(const std::string& path) {
  if (!std::filesystem::is_regular_file(path)) {
    throw InputError("no such file: '" + path + "'");
  }
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw InputError("cannot write '" + path + "'");
  out << text << '\n';
}

// Inline JSON when the argument looks like JSON, otherwise a file path.
json read_instance(const std::string& arg) {
  const auto first = arg.find_first_not_of(" \t\n");
  if (first != std::string::npos && (arg[first] == '{' || arg[first] == '[')) {
    try {
      return json::parse(arg);
    } catch (const json::parse_error& e) {
      throw ParseError(std::string("instance: ") + e.what());
    }
  }
  require_file(arg);
  return read_json_file(arg);
}

Dataset load_training_data(const std::string& data, const std::string& schema) {
  require_file(data);
  if (schema.empty()) return load_german_credit(data).data;
  require_file(schema);
  return load_csv_dataset(data, std::make_shared<FeatureSchema>(load_schema(schema)));
}

struct Options {
  std::uint64_t seed = 42;
  std::size_t threads = 1;
  std::string format = "text";

  // train
  std::string data, schema, out;
  ForestParams params;
  int folds = 3;

  // model queries
  std::string model, costs, instance;
  std::optional<int> target;
  std::size_t max_results = 5;
  std::optional<std::size_t> max_cliques;
  std::optional<long long> time_ms;

  // validate
  std::size_t count = 50;

  // serve
  int port = 8080;
  std::string host = "127.0.0.1";
};

int cmd_train(const Options& o) {
  const Dataset data = load_training_data(o.data, o.schema);
  ForestParams params = o.params;
  params.seed = o.seed;
  params.threads = o.threads;
  const auto start = std::chrono::steady_clock::now();
  const CrossValidation cv = cross_validate(data, params, o.folds);
  std::cout << "seed " << o.seed << ", " << data.size() << " rows, dimension "
            << data.schema->dimension() << ", k=" << params.trees << "\n";
  for (std::size_t f = 0; f < cv.fold_accuracy.size(); ++f) {
    std::cout << "fold " << f + 1 << " accuracy " << cv.fold_accuracy[f] << "\n";
  }
  std::cout << "mean accuracy " << cv.mean() << "\n";
  const Forest forest = train(data, params);
  if (forest.metadata().single_class) {
    std::cerr << "warning: single-class dataset, trees are single leaves\n";
  }
  if (!o.out.empty()) {
    write_file(o.out, serialize(forest));
    std::cout << "model written to " << o.out << "\n";
  }
  const auto secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start);
  std::cout << "elapsed " << secs.count() << " s\n";
  return kOk;
}

Forest load_model(const std::string& path) {
  require_file(path);
  return load_forest(path);
}

int cmd_predict(const Options& o) {
  const Forest forest = load_model(o.model);
  const FeatureVector v = instance_from_json(read_instance(o.instance), forest.schema());
  const Prediction p = forest.predict(v);
  if (o.format == "json") {
    std::cout << json{{"class", p.label}, {"votes", p.votes}}.dump() << "\n";
  } else {
    std::cout << "class " << p.label << " (votes " << p.votes[0] << " / "
              << p.votes[1] << ")\n";
  }
  return kOk;
}

CostModel load_costs(const std::string& path, const Forest& forest) {
  if (path.empty()) return CostModel::unit(forest.schema_ptr());
  require_file(path);
  return load_cost_model(path, forest.schema_ptr());
}

int cmd_recourse(const Options& o) {
  const Forest forest = load_model(o.model);
  const CostModel costs = load_costs(o.costs, forest);
  RecourseQuery q;
  q.v = instance_from_json(read_instance(o.instance), forest.schema());
  q.target_class = o.target.value_or(1 - forest.predict(q.v).label);
  q.max_results = o.max_results;
  q.budget.max_cliques = o.max_cliques;
  if (o.time_ms) q.budget.wall_time = std::chrono::milliseconds(*o.time_ms);
  SearchOptions options;
  options.threads = o.threads;
  const RecourseResult r = find_recourse(q, forest, costs, options);
  if (o.format == "json") {
    json doc = to_json(r, forest.schema());
    doc["seed"] = o.seed;
    std::cout << doc.dump(2) << "\n";
  } else {
    std::cout << "seed " << o.seed << ", target class " << q.target_class << ", "
              << r.stats.graph_nodes << " leaves, " << r.stats.graph_edges
              << " edges, clique size " << r.stats.clique_size << ", "
              << r.stats.cliques_emitted << " cliques\n";
    if (!r.exhausted) std::cout << "budget reached: results possibly suboptimal\n";
    if (r.plans.empty()) std::cout << "no plan: " << status_string(r.status) << "\n";
    for (std::size_t i = 0; i < r.plans.size(); ++i) {
      const auto& plan = r.plans[i];
      std::cout << "plan " << i + 1 << ": total cost " << format_number(plan.total_cost)
                << (plan.verified ? " (verified)" : "") << "\n";
      for (const auto& line : explain_plan(plan, forest.schema())) {
        std::cout << "  " << line << "\n";
      }
    }
  }
  return r.plans.empty() ? kInfeasible : kOk;
}

int cmd_dump_graph(const Options& o) {
  const Forest forest = load_model(o.model);
  const LeafGraph g = build_graph(forest, o.target.value_or(1));
  const std::string text = to_json(g).dump(1);
  if (o.out.empty()) {
    std::cout << text << "\n";
  } else {
    write_file(o.out, text);
    std::cout << g.size() << " nodes, " << g.edge_count() << " edges written to "
              << o.out << "\n";
  }
  return kOk;
}

int cmd_validate(const Options& o) {
  SearchOptions options;
  options.threads = o.threads;
  const auto outcomes = run_validation(o.seed, o.count, options);
  std::size_t matches = 0;
  for (std::size_t i = 0; i < outcomes.size(); ++i) {
    const auto& r = outcomes[i];
    if (r.match()) {
      ++matches;
    } else {
      std::cout << "instance " << i << ": engine " << format_number(r.engine_cost)
                << " vs oracle " << format_number(r.oracle_cost) << "\n";
    }
  }
  std::cout << "seed " << o.seed << ": " << matches << "/" << outcomes.size()
            << " instances match\n";
  return matches == outcomes.size() ? kOk : kInternal;
}

int cmd_serve(const Options& o) {
  Forest forest = load_model(o.model);
  CostModel costs = load_costs(o.costs, forest);
  ServiceConfig config;
  config.threads = o.threads;
  if (o.max_cliques) config.max_cliques = *o.max_cliques;
  if (o.time_ms) config.default_budget = std::chrono::milliseconds(*o.time_ms);
  RecourseService service(std::move(forest), std::move(costs), config);
  httplib::Server server;
  service.mount(server);
  std::cout << "serving on http://" << o.host << ":" << o.port << "\n" << std::flush;
  if (!server.listen(o.host, o.port)) {
    throw InputError("cannot listen on " + o.host + ":" + std::to_string(o.port));
  }
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Minimum-cost recourse for decision forests"};
  app.require_subcommand(1);
  app.fallthrough();
  Options o;
  app.add_option("--seed", o.seed, "Random seed")->capture_default_str();
  app.add_option("--threads", o.threads, "Worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  auto* train = app.add_subcommand("train", "Train a forest with k-fold cross-validation");
  train->add_option("--data", o.data, "Training data (UCI German Credit format, or CSV with --schema)")
      ->required();
  train->add_option("--schema", o.schema, "Schema document for CSV data");
  train->add_option("--out", o.out, "Where to write the model document");
  train->add_option("--trees,-k", o.params.trees, "Number of trees")
      ->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--max-depth", o.params.max_depth)
      ->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--min-leaf", o.params.min_leaf_size)
      ->check(CLI::PositiveNumber)->capture_default_str();
  train->add_option("--features-per-split", o.params.features_per_split,
                    "0 = ceil(sqrt(dimension))")->capture_default_str();
  train->add_option("--folds", o.folds)->check(CLI::Range(2, 100))->capture_default_str();

  auto* predict = app.add_subcommand("predict", "Classify one instance");
  predict->add_option("--model", o.model)->required();
  predict->add_option("--instance", o.instance, "Record/vector JSON or a file holding it")
      ->required();
  predict->add_option("--format", o.format)->check(CLI::IsMember({"text", "json"}));

  auto* recourse = app.add_subcommand("recourse", "Minimum-cost changes that flip the decision");
  recourse->add_option("--model", o.model)->required();
  recourse->add_option("--costs", o.costs, "Cost document (default: unit costs)");
  recourse->add_option("--instance", o.instance)->required();
  recourse->add_option("--target", o.target, "Desired class (default: the opposite one)")
      ->check(CLI::Range(0, 1));
  recourse->add_option("--max-results", o.max_results)
      ->check(CLI::PositiveNumber)->capture_default_str();
  recourse->add_option("--max-cliques", o.max_cliques, "Clique budget")
      ->check(CLI::PositiveNumber);
  recourse->add_option("--time-ms", o.time_ms, "Wall-time budget")->check(CLI::PositiveNumber);
  recourse->add_option("--format", o.format)->check(CLI::IsMember({"text", "json"}));

  auto* dump = app.add_subcommand("dump-graph", "Write the leaf compatibility graph");
  dump->add_option("--model", o.model)->required();
  dump->add_option("--target", o.target, "Leaf class (default 1)")->check(CLI::Range(0, 1));
  dump->add_option("--out", o.out);

  auto* validate = app.add_subcommand("validate", "Cross-check the engine against the brute-force oracle");
  validate->add_option("--count", o.count)->check(CLI::PositiveNumber)->capture_default_str();

  auto* serve = app.add_subcommand("serve", "Run the HTTP service");
  serve->add_option("--model", o.model)->required();
  serve->add_option("--costs", o.costs);
  serve->add_option("--port", o.port)->capture_default_str();
  serve->add_option("--host", o.host)->capture_default_str();
  serve->add_option("--max-cliques", o.max_cliques);
  serve->add_option("--time-ms", o.time_ms, "Default per-request wall-time budget");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  try {
    if (*train) return cmd_train(o);
    if (*predict) return cmd_predict(o);
    if (*recourse) return cmd_recourse(o);
    if (*dump) return cmd_dump_graph(o);
    if (*validate) return cmd_validate(o);
    if (*serve) return cmd_serve(o);
  } catch (const InvariantViolation& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  } catch (const InputError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << "\n";
    return kInternal;
  }
  return kInputError;
}
