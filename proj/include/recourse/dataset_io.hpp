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
#include <vector>

#include "common.hpp"
#include "feature_schema.hpp"
#include "forest.hpp"

namespace recourse {

// Comma-separated rows with a header naming every schema attribute plus a
// `label` column (0 or 1). No quoting.
inline Dataset load_csv_dataset(const std::string& path,
                                std::shared_ptr<const FeatureSchema> schema) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  auto split = [](const std::string& line) {
    std::vector<std::string> out;
    std::stringstream ss(line);
    for (std::string cell; std::getline(ss, cell, ',');) {
      const auto b = cell.find_first_not_of(" \t\r");
      const auto e = cell.find_last_not_of(" \t\r");
      out.push_back(b == std::string::npos ? "" : cell.substr(b, e - b + 1));
    }
    return out;
  };
  std::string line;
  if (!std::getline(in, line)) throw ParseError(path + ": empty file");
  const auto header = split(line);
  std::size_t label_col = header.size();
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (header[c] == "label") label_col = c;
  }
  if (label_col == header.size()) throw ParseError(path + ": no 'label' column");
  Dataset data{schema, {}, {}};
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split(line);
    const std::string where = path + ": line " + std::to_string(line_no);
    if (cells.size() != header.size()) {
      throw ParseError(where + ": expected " + std::to_string(header.size()) +
                       " columns, found " + std::to_string(cells.size()));
    }
    Record r;
    int label = -1;
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c == label_col) {
        if (cells[c] == "0") label = 0;
        if (cells[c] == "1") label = 1;
        continue;
      }
      const Attribute* a = schema->find(header[c]);
      if (a && a->is_numeric()) {
        try {
          r.emplace(header[c], std::stod(cells[c]));
        } catch (const std::exception&) {
          throw ParseError(where + ": '" + header[c] + "' is not a number");
        }
      } else {
        r.emplace(header[c], cells[c]);
      }
    }
    if (label < 0) throw ParseError(where + ": label must be 0 or 1");
    try {
      data.rows.push_back(schema->encode(r));
    } catch (const InputError& e) {
      throw ParseError(where + ": " + e.what());
    }
    data.labels.push_back(label);
  }
  return data;
}

}  // namespace recourse
