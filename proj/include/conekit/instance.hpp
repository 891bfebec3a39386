#pragma once

#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "conekit/regularity.hpp"

namespace conekit {

// Instance files are line-oriented: `[section name]` headers followed by
// `key = value` lines ('#' starts a comment; keys may repeat where noted).
// See the shipped corpus for the full grammar by example.
struct SchemaError : std::runtime_error {
  explicit SchemaError(const std::string& what) : std::runtime_error(what) {}
};

struct SuiteConfig {
  std::string kind;  // product_rules, preimage_rules, sum_rule, optimality,
                     // perturbation, constraint_map
  std::string name;
  std::map<std::string, std::vector<std::string>> params;

  bool has(const std::string& key) const { return params.count(key) > 0; }
  std::string get(const std::string& key) const;
  std::string get(const std::string& key, const std::string& fallback) const;
};

struct Instance {
  std::string id;
  std::map<std::string, SetSpec> sets;
  std::map<std::string, MapSpec> maps;
  std::map<std::string, LimitSchedule> schedules;
  std::vector<SuiteConfig> suites;

  const SetSpec& set(const std::string& name) const;
  const MapSpec& map(const std::string& name) const;
  LimitSchedule schedule(const std::string& name) const;
};

Instance parseInstance(const std::string& text);
Instance loadInstance(const std::string& path);

// Validates every stated membership of every configured suite; throws
// SchemaError on the first failure.
void validateInstance(const Instance& inst);

}  // namespace conekit
