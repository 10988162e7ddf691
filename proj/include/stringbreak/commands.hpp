#pragma once

#include <functional>
#include <string>
#include <vector>

#include "stringbreak/config.hpp"
#include <json.hpp>

namespace stringbreak {

// A column, or a numbered family of columns whose length follows the config.
struct ColumnGroup {
  enum class Repeat { Once, Levels, Ell };
  std::string name;
  Repeat repeat = Repeat::Once;
  int first = 0;  // first index of a family
};

struct CsvSchema {
  std::string file;
  std::string description;
  std::vector<ColumnGroup> columns;
};

const std::vector<CsvSchema>& command_schemas(const std::string& command);
std::vector<std::string> expand_columns(const CsvSchema& schema, int levels, int ell);
const CsvSchema& find_schema(const std::string& command, const std::string& file);
// Human-readable column listing for --help.
std::string schema_help(const std::string& command);
std::string command_summary(const std::string& command);

struct CommandReport {
  nlohmann::json results;
  std::vector<std::string> files;  // relative to output_dir, metadata.json last
};

// Runs the experiment, writes CSV files and metadata.json into output_dir.
CommandReport run_command(const RunConfig& config);

// run_command with exceptions mapped to exit codes (1 validation, 2 numerical).
int run_command_status(const RunConfig& config, std::string* message = nullptr);

// Worker count: threads key (0 = hardware), bounded by STRINGBREAK_THREADS.
int worker_count(const RunConfig& config);

// f(i) for i in [0, n) on up to `workers` threads; first exception rethrown.
void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& f);

std::string version_string();

}  // namespace stringbreak
