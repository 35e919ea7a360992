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

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <unordered_map>
#include <utility>
#include <variant>
#include <vector>

#include "common.hpp"
#include "hyperrectangle.hpp"

namespace recourse {

enum class AttributeKind { kNumeric, kCategorical };

struct Bounds {
  double min = 0.0;
  double max = 0.0;
  friend bool operator==(const Bounds&, const Bounds&) = default;
};

// One user-facing attribute. A numeric attribute occupies one encoded slot; a
// categorical attribute occupies a contiguous one-hot block of
// categories.size() slots.
struct Attribute {
  std::string name;
  AttributeKind kind = AttributeKind::kNumeric;
  std::vector<std::string> categories;
  std::vector<std::string> labels;  // optional display names, parallel
  std::optional<Bounds> bounds;
  double granularity = 1.0;
  bool integer = false;

  std::size_t offset = 0;  // first encoded index
  std::size_t width() const {
    return kind == AttributeKind::kNumeric ? 1 : categories.size();
  }
  bool is_numeric() const { return kind == AttributeKind::kNumeric; }

  const std::string& label(std::size_t category) const {
    return category < labels.size() ? labels[category] : categories[category];
  }
};

enum class FeatureKind { kNumeric, kIndicator };

// One encoded dimension.
struct FeatureSpec {
  std::string name;
  FeatureKind kind = FeatureKind::kNumeric;
  std::optional<Bounds> bounds;
  double granularity = 1.0;
  std::size_t attribute = 0;  // owning Attribute index
};

struct CategoricalGroup {
  std::string name;
  std::vector<std::string> categories;
  std::size_t begin = 0;  // encoded index range [begin, begin + size())
  std::size_t attribute = 0;
  std::size_t size() const { return categories.size(); }
};

// Dense encoded point, length FeatureSchema::dimension().
struct FeatureVector {
  std::vector<double> values;

  std::size_t size() const { return values.size(); }
  double operator[](std::size_t i) const { return values[i]; }
  double& operator[](std::size_t i) { return values[i]; }
  std::span<const double> span() const { return values; }

  friend bool operator==(const FeatureVector&, const FeatureVector&) = default;
  friend auto operator<=>(const FeatureVector& a, const FeatureVector& b) {
    return a.values <=> b.values;
  }
};

using RawValue = std::variant<double, std::string>;
using Record = std::map<std::string, RawValue>;

class FeatureSchema {
 public:
  FeatureSchema() = default;

  // Validates and lays out the attributes in declaration order.
  explicit FeatureSchema(std::vector<Attribute> attributes,
                         std::string name = {})
      : name_(std::move(name)), attributes_(std::move(attributes)) {
    std::size_t offset = 0;
    for (std::size_t a = 0; a < attributes_.size(); ++a) {
      Attribute& attr = attributes_[a];
      if (attr.name.empty()) throw InputError("attribute with empty name");
      if (!by_name_.emplace(attr.name, a).second) {
        throw InputError("duplicate attribute '" + attr.name + "'");
      }
      if (attr.bounds && !(attr.bounds->min < attr.bounds->max)) {
        throw InputError("attribute '" + attr.name + "': bounds min >= max");
      }
      if (!(attr.granularity > 0.0) || !std::isfinite(attr.granularity)) {
        throw InputError("attribute '" + attr.name +
                         "': granularity must be positive");
      }
      attr.offset = offset;
      if (attr.is_numeric()) {
        features_.push_back({attr.name, FeatureKind::kNumeric, attr.bounds,
                             attr.granularity, a});
        numeric_.push_back(a);
      } else {
        if (attr.categories.size() < 2) {
          throw InputError("categorical attribute '" + attr.name +
                           "' needs at least 2 categories");
        }
        if (!attr.labels.empty() &&
            attr.labels.size() != attr.categories.size()) {
          throw InputError("attribute '" + attr.name +
                           "': labels must parallel categories");
        }
        for (std::size_t c = 0; c < attr.categories.size(); ++c) {
          for (std::size_t d = 0; d < c; ++d) {
            if (attr.categories[c] == attr.categories[d]) {
              throw InputError("attribute '" + attr.name +
                               "': duplicate category '" + attr.categories[c] +
                               "'");
            }
          }
          features_.push_back({attr.name + "=" + attr.categories[c],
                               FeatureKind::kIndicator, std::nullopt, 1.0, a});
        }
        groups_.push_back({attr.name, attr.categories, offset, a});
      }
      offset += attr.width();
    }
  }

  const std::string& name() const { return name_; }
  std::size_t dimension() const { return features_.size(); }
  const std::vector<Attribute>& attributes() const { return attributes_; }
  const std::vector<FeatureSpec>& features() const { return features_; }
  const std::vector<CategoricalGroup>& groups() const { return groups_; }
  std::size_t numeric_count() const { return numeric_.size(); }

  const Attribute* find(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    return it == by_name_.end() ? nullptr : &attributes_[it->second];
  }
  std::optional<std::size_t> index_of(std::string_view name) const {
    auto it = by_name_.find(std::string(name));
    if (it == by_name_.end()) return std::nullopt;
    return it->second;
  }

  // Category index of the one-hot block of attribute `a` in `v`.
  std::size_t category_of(const FeatureVector& v, const Attribute& a) const {
    std::size_t hot = a.width();
    double sum = 0.0;
    for (std::size_t c = 0; c < a.width(); ++c) {
      const double x = v[a.offset + c];
      if (x != 0.0 && x != 1.0) {
        throw InconsistentVectorError("attribute '" + a.name +
                                      "': indicator value not 0 or 1");
      }
      sum += x;
      if (x == 1.0) hot = c;
    }
    if (sum != 1.0) {
      throw InconsistentVectorError("attribute '" + a.name +
                                    "': one-hot block does not sum to 1");
    }
    return hot;
  }

  void validate(const FeatureVector& v) const {
    if (v.size() != dimension()) {
      throw InputError("vector dimension " + std::to_string(v.size()) +
                       " does not match schema dimension " +
                       std::to_string(dimension()));
    }
    for (const auto& a : attributes_) {
      if (a.is_numeric()) {
        if (!std::isfinite(v[a.offset])) {
          throw InputError("attribute '" + a.name + "': non-finite value");
        }
      } else {
        category_of(v, a);
      }
    }
  }

  FeatureVector encode(const Record& record) const {
    FeatureVector v{std::vector<double>(dimension(), 0.0)};
    for (const auto& [key, value] : record) {
      if (!find(key)) throw InputError("unknown attribute '" + key + "'");
    }
    for (const auto& a : attributes_) {
      auto it = record.find(a.name);
      if (it == record.end()) {
        throw InputError("missing attribute '" + a.name + "'");
      }
      if (a.is_numeric()) {
        const double* x = std::get_if<double>(&it->second);
        if (!x) {
          throw InputError("attribute '" + a.name + "': expected a number");
        }
        if (!std::isfinite(*x)) {
          throw InputError("attribute '" + a.name + "': non-finite value");
        }
        v[a.offset] = *x;
      } else {
        const std::string* s = std::get_if<std::string>(&it->second);
        if (!s) {
          throw InputError("attribute '" + a.name + "': expected a category");
        }
        std::size_t c = 0;
        while (c < a.categories.size() && a.categories[c] != *s) ++c;
        if (c == a.categories.size()) {
          throw InputError("attribute '" + a.name + "': unknown category '" +
                           *s + "'");
        }
        v[a.offset + c] = 1.0;
      }
    }
    return v;
  }

  Record decode(const FeatureVector& v) const {
    if (v.size() != dimension()) {
      throw InputError("vector dimension does not match schema");
    }
    Record out;
    for (const auto& a : attributes_) {
      if (a.is_numeric()) {
        out.emplace(a.name, v[a.offset]);
      } else {
        out.emplace(a.name, a.categories[category_of(v, a)]);
      }
    }
    return out;
  }

  // Region with every declared numeric bound applied. Bounds are closed
  // [min, max]; the exclusive lower end sits one granularity step below min.
  Hyperrectangle bounding_box() const {
    Hyperrectangle h(dimension());
    for (const auto& a : attributes_) {
      if (a.is_numeric() && a.bounds) {
        h[a.offset] = {a.bounds->min - a.granularity, a.bounds->max};
      }
    }
    return h;
  }

  std::uint64_t hash() const;

 private:
  std::string name_;
  std::vector<Attribute> attributes_;
  std::vector<FeatureSpec> features_;
  std::vector<CategoricalGroup> groups_;
  std::vector<std::size_t> numeric_;
  std::unordered_map<std::string, std::size_t> by_name_;
};

// --- consistency ------------------------------------------------------------

inline bool admits(const Interval& iv, double x) { return iv.contains(x); }

// Categories c of `group` whose one-hot pattern (1 at c, 0 elsewhere) lies in
// `h`, in declaration order.
inline std::vector<std::size_t> admissible_categories(
    const Hyperrectangle& h, const CategoricalGroup& group) {
  std::vector<std::size_t> out;
  const std::size_t m = group.size();
  for (std::size_t c = 0; c < m; ++c) {
    if (!admits(h[group.begin + c], 1.0)) continue;
    bool others_zero = true;
    for (std::size_t o = 0; o < m && others_zero; ++o) {
      if (o != c && !admits(h[group.begin + o], 0.0)) others_zero = false;
    }
    if (others_zero) out.push_back(c);
  }
  return out;
}

// Some index admits 1 while every other index admits 0.
inline bool group_consistent(const Hyperrectangle& h,
                             const CategoricalGroup& group) {
  const std::size_t m = group.size();
  for (std::size_t c = 0; c < m; ++c) {
    if (!admits(h[group.begin + c], 1.0)) continue;
    bool others_zero = true;
    for (std::size_t o = 0; o < m && others_zero; ++o) {
      if (o != c && !admits(h[group.begin + o], 0.0)) others_zero = false;
    }
    if (others_zero) return true;
  }
  return false;
}

// True iff every categorical group admits some exact one-hot assignment.
inline bool check_consistency(const Hyperrectangle& h,
                              const FeatureSchema& schema) {
  for (const auto& g : schema.groups()) {
    if (!group_consistent(h, g)) return false;
  }
  return true;
}

// --- documents --------------------------------------------------------------

inline json to_json(const FeatureSchema& schema) {
  json attrs = json::array();
  for (const auto& a : schema.attributes()) {
    json j;
    j["name"] = a.name;
    if (a.is_numeric()) {
      j["kind"] = "numeric";
      if (a.bounds) {
        j["bounds"] = {number_to_json(a.bounds->min),
                       number_to_json(a.bounds->max)};
      }
      j["granularity"] = number_to_json(a.granularity);
      if (a.integer) j["integer"] = true;
    } else {
      j["kind"] = "categorical";
      j["categories"] = a.categories;
      if (!a.labels.empty()) j["labels"] = a.labels;
    }
    attrs.push_back(std::move(j));
  }
  json out;
  if (!schema.name().empty()) out["name"] = schema.name();
  out["attributes"] = std::move(attrs);
  return out;
}

inline FeatureSchema schema_from_json(const json& doc) {
  if (!doc.is_object() || !doc.contains("attributes") ||
      !doc["attributes"].is_array()) {
    throw ParseError("schema: expected an object with an 'attributes' array");
  }
  std::vector<Attribute> attrs;
  const auto& list = doc["attributes"];
  for (std::size_t i = 0; i < list.size(); ++i) {
    const json& j = list[i];
    const std::string where = "attributes[" + std::to_string(i) + "]";
    if (!j.is_object() || !j.contains("name") || !j["name"].is_string()) {
      throw ParseError(where + ": missing 'name'");
    }
    Attribute a;
    a.name = j["name"].get<std::string>();
    const std::string kind = j.value("kind", "numeric");
    if (kind == "numeric") {
      a.kind = AttributeKind::kNumeric;
      a.integer = j.value("integer", false);
      if (j.contains("bounds")) {
        const json& b = j["bounds"];
        if (!b.is_array() || b.size() != 2) {
          throw ParseError(where + ".bounds: expected [min, max]");
        }
        a.bounds = Bounds{real_from_json(b[0], where + ".bounds[0]"),
                          real_from_json(b[1], where + ".bounds[1]")};
      }
      if (j.contains("granularity")) {
        a.granularity = real_from_json(j["granularity"], where + ".granularity");
      } else if (a.integer) {
        a.granularity = 1.0;
      } else if (a.bounds && std::isfinite(a.bounds->max - a.bounds->min)) {
        a.granularity = 1e-6 * (a.bounds->max - a.bounds->min);
      } else {
        a.granularity = 1e-6;
      }
    } else if (kind == "categorical") {
      a.kind = AttributeKind::kCategorical;
      if (!j.contains("categories") || !j["categories"].is_array()) {
        throw ParseError(where + ": categorical attribute needs 'categories'");
      }
      for (const auto& c : j["categories"]) {
        if (!c.is_string()) throw ParseError(where + ".categories: strings");
        a.categories.push_back(c.get<std::string>());
      }
      if (j.contains("labels")) {
        for (const auto& l : j["labels"]) a.labels.push_back(l.get<std::string>());
      }
    } else {
      throw ParseError(where + ".kind: unknown kind '" + kind + "'");
    }
    attrs.push_back(std::move(a));
  }
  try {
    return FeatureSchema(std::move(attrs), doc.value("name", std::string{}));
  } catch (const ParseError&) {
    throw;
  } catch (const InputError& e) {
    throw ParseError(std::string("schema: ") + e.what());
  }
}

inline std::uint64_t FeatureSchema::hash() const {
  return fnv1a64(to_json(*this).dump());
}

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InputError("cannot open '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  try {
    return json::parse(buf.str());
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline FeatureSchema load_schema(const std::string& path) {
  return schema_from_json(read_json_file(path));
}

inline json to_json(const RawValue& v) {
  if (const double* x = std::get_if<double>(&v)) return number_to_json(*x);
  return std::get<std::string>(v);
}

// Raw record in schema order.
inline json to_json(const Record& record, const FeatureSchema& schema) {
  json out = json::object();
  for (const auto& a : schema.attributes()) {
    auto it = record.find(a.name);
    if (it != record.end()) out[a.name] = to_json(it->second);
  }
  return out;
}

inline Record record_from_json(const json& j) {
  if (!j.is_object()) throw InputError("record: expected a JSON object");
  Record out;
  for (const auto& [key, value] : j.items()) {
    if (value.is_number()) {
      out.emplace(key, value.get<double>());
    } else if (value.is_string()) {
      out.emplace(key, value.get<std::string>());
    } else {
      throw InputError("attribute '" + key + "': expected number or string");
    }
  }
  return out;
}

// Accepts either a raw record object or an encoded vector array.
inline FeatureVector instance_from_json(const json& j,
                                        const FeatureSchema& schema) {
  if (j.is_array()) {
    FeatureVector v;
    for (const auto& x : j) {
      if (!x.is_number()) throw InputError("encoded vector: expected numbers");
      v.values.push_back(x.get<double>());
    }
    schema.validate(v);
    return v;
  }
  return schema.encode(record_from_json(j));
}

}  // namespace recourse
