#pragma once

#include <map>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace stringbreak {

enum class ValueType { Int, Real, Text, RealList, IntList };

using ConfigValue = std::variant<long, double, std::string, std::vector<double>, std::vector<long>>;

struct KeySpec {
  std::string name;
  ValueType type;
  std::string default_text;
  std::string help;
};

// Every accepted key; anything else is rejected.
const std::vector<KeySpec>& config_schema();
const std::vector<std::string>& command_names();

class RunConfig {
 public:
  std::string command;
  std::map<std::string, ConfigValue> values;

  long integer(const std::string& key) const;
  double real(const std::string& key) const;
  const std::string& text(const std::string& key) const;
  const std::vector<double>& reals(const std::string& key) const;
  const std::vector<long>& integers(const std::string& key) const;

  void set(const std::string& key, const std::string& raw);

  friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

using Overrides = std::vector<std::pair<std::string, std::string>>;

// key=value text, '#' comments. Overrides win over file values; `command`
// (if non-empty) must agree with a command key in the file.
RunConfig parse_config(const std::string& text, const Overrides& overrides = {},
                       const std::string& command = "");
RunConfig load_config(const std::string& path, const Overrides& overrides = {},
                      const std::string& command = "");

// All resolved keys, sorted, one per line; parse_config(serialize(c)) == c.
std::string serialize(const RunConfig& config);
std::string value_text(const ConfigValue& v);

}  // namespace stringbreak
