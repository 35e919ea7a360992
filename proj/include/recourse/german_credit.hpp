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

#include <fstream>
#include <memory>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include "common.hpp"
#include "feature_schema.hpp"
#include "forest.hpp"

namespace recourse {

// The UCI Statlog German Credit attributes in file column order: 7 integer
// numerics kept raw and 13 qualitative attributes one-hot encoded. Category
// names are the UCI codes.
inline FeatureSchema german_credit_schema() {
  auto numeric = [](std::string name, double lo, double hi) {
    Attribute a;
    a.name = std::move(name);
    a.kind = AttributeKind::kNumeric;
    a.bounds = Bounds{lo, hi};
    a.granularity = 1.0;
    a.integer = true;
    return a;
  };
  auto categorical = [](std::string name, std::vector<std::string> codes,
                        std::vector<std::string> labels) {
    Attribute a;
    a.name = std::move(name);
    a.kind = AttributeKind::kCategorical;
    a.categories = std::move(codes);
    a.labels = std::move(labels);
    return a;
  };
  std::vector<Attribute> attrs;
  attrs.push_back(categorical(
      "checking_status", {"A11", "A12", "A13", "A14"},
      {"< 0 DM", "0 <= ... < 200 DM", ">= 200 DM / salary assignment",
       "no checking account"}));
  attrs.push_back(numeric("duration_months", 1, 120));
  attrs.push_back(categorical(
      "credit_history", {"A30", "A31", "A32", "A33", "A34"},
      {"no credits taken / all paid back duly",
       "all credits at this bank paid back duly",
       "existing credits paid back duly till now",
       "delay in paying off in the past",
       "critical account / other credits existing"}));
  attrs.push_back(categorical(
      "purpose",
      {"A40", "A41", "A42", "A43", "A44", "A45", "A46", "A47", "A48", "A49",
       "A410"},
      {"car (new)", "car (used)", "furniture/equipment", "radio/television",
       "domestic appliances", "repairs", "education", "vacation", "retraining",
       "business", "others"}));
  attrs.push_back(numeric("credit_amount", 0, 100000));
  attrs.push_back(categorical(
      "savings", {"A61", "A62", "A63", "A64", "A65"},
      {"< 100 DM", "100 <= ... < 500 DM", "500 <= ... < 1000 DM", ">= 1000 DM",
       "unknown / no savings account"}));
  attrs.push_back(categorical(
      "employment_since", {"A71", "A72", "A73", "A74", "A75"},
      {"unemployed", "< 1 year", "1 <= ... < 4 years", "4 <= ... < 7 years",
       ">= 7 years"}));
  attrs.push_back(numeric("installment_rate", 1, 4));
  attrs.push_back(categorical(
      "personal_status_sex", {"A91", "A92", "A93", "A94", "A95"},
      {"male: divorced/separated", "female: divorced/separated/married",
       "male: single", "male: married/widowed", "female: single"}));
  attrs.push_back(categorical("other_debtors", {"A101", "A102", "A103"},
                              {"none", "co-applicant", "guarantor"}));
  attrs.push_back(numeric("residence_since", 1, 4));
  attrs.push_back(categorical(
      "property", {"A121", "A122", "A123", "A124"},
      {"real estate", "building society savings / life insurance",
       "car or other", "unknown / no property"}));
  attrs.push_back(numeric("age_years", 18, 100));
  attrs.push_back(categorical("other_installment_plans",
                              {"A141", "A142", "A143"},
                              {"bank", "stores", "none"}));
  attrs.push_back(categorical("housing", {"A151", "A152", "A153"},
                              {"rent", "own", "for free"}));
  attrs.push_back(numeric("existing_credits", 1, 10));
  attrs.push_back(categorical(
      "job", {"A171", "A172", "A173", "A174"},
      {"unemployed / unskilled non-resident", "unskilled resident",
       "skilled employee / official",
       "management / self-employed / highly qualified"}));
  attrs.push_back(numeric("people_liable", 1, 10));
  attrs.push_back(categorical("telephone", {"A191", "A192"},
                              {"none", "yes, registered"}));
  attrs.push_back(categorical("foreign_worker", {"A201", "A202"},
                              {"yes", "no"}));
  return FeatureSchema(std::move(attrs), "german_credit");
}

struct GermanCredit {
  std::shared_ptr<const FeatureSchema> schema;
  Dataset data;
  std::vector<Record> records;
};

// Parses the UCI whitespace format: 20 attribute columns then the label
// (1 = good -> class 1, 2 = bad -> class 0).
inline GermanCredit parse_german_credit(std::istream& in) {
  GermanCredit out;
  out.schema = std::make_shared<FeatureSchema>(german_credit_schema());
  out.data.schema = out.schema;
  const auto& attrs = out.schema->attributes();
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    std::istringstream fields(line);
    std::vector<std::string> cols;
    for (std::string f; fields >> f;) cols.push_back(std::move(f));
    if (cols.empty()) continue;
    const std::string where = "line " + std::to_string(line_no);
    if (cols.size() != attrs.size() + 1) {
      throw ParseError(where + ": expected " + std::to_string(attrs.size() + 1) +
                       " columns, found " + std::to_string(cols.size()));
    }
    Record r;
    for (std::size_t a = 0; a < attrs.size(); ++a) {
      if (attrs[a].is_numeric()) {
        std::size_t used = 0;
        double x = 0.0;
        try {
          x = std::stod(cols[a], &used);
        } catch (const std::exception&) {
          used = 0;
        }
        if (used != cols[a].size()) {
          throw ParseError(where + ": column " + std::to_string(a + 1) +
                           " is not a number");
        }
        r.emplace(attrs[a].name, x);
      } else {
        r.emplace(attrs[a].name, cols[a]);
      }
    }
    int label;
    if (cols.back() == "1") {
      label = 1;
    } else if (cols.back() == "2") {
      label = 0;
    } else {
      throw ParseError(where + ": label must be 1 or 2");
    }
    try {
      out.data.rows.push_back(out.schema->encode(r));
    } catch (const InputError& e) {
      throw ParseError(where + ": " + e.what());
    }
    out.data.labels.push_back(label);
    out.records.push_back(std::move(r));
  }
  return out;
}

inline GermanCredit load_german_credit(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  return parse_german_credit(in);
}

}  // namespace recourse
