#pragma once

// INI-style run configuration: `[section]` headers, `key = value` lines,
// `#` or `;` at line start for comments. See docs/config.md.

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "trajkit/analysis.hpp"
#include "trajkit/scenarios.hpp"

namespace trajkit::app {

class ConfigError : public Error {
 public:
  ConfigError(std::string source, int line, int column, std::string message);
  int line() const { return line_; }
  int column() const { return column_; }
  const std::string& message() const { return message_; }

 private:
  int line_;
  int column_;
  std::string message_;
};

struct Entry {
  std::string value;
  int line = 0;
  int column = 0;  // 1-based column of the first value character
};

class ConfigFile {
 public:
  static ConfigFile parse(const std::string& text, const std::string& source = "<config>");
  static ConfigFile load(const std::string& path);

  const std::string& source() const { return source_; }
  bool has_section(const std::string& name) const { return sections_.count(name) != 0; }
  const std::map<std::string, Entry>* section(const std::string& name) const;
  const Entry* find(const std::string& section, const std::string& key) const;

  [[noreturn]] void fail(const Entry& at, const std::string& message, std::size_t offset = 0) const;

 private:
  std::string source_;
  std::map<std::string, std::map<std::string, Entry>> sections_;
};

struct Overrides {
  std::optional<std::string> scenario;
  std::vector<std::pair<std::string, std::string>> params;
  std::optional<std::pair<double, double>> horizon;
  std::optional<std::pair<double, double>> tolerances;
  std::optional<std::string> out_dir;
  std::optional<double> radius;
  std::optional<double> T;
  bool refine = false;
};

struct AnalysisSettings {
  std::optional<Vector> p0;
  double radius = 10.0;
  std::optional<double> T;
  analysis::GridSpec grid;
};

struct RunConfig {
  std::string label;  // scenario name or "custom"
  std::optional<TrajectoryProblem> problem;
  AnalysisSettings analysis;
  std::string out_dir = ".";
};

// Assembles the problem from a config file (may be null) and command-line
// overrides. Throws ConfigError with line/column for config mistakes and
// trajkit::Error for everything else.
RunConfig build_config(const ConfigFile* file, const Overrides& overrides);

// "a,b" -> pair; throws std::invalid_argument.
std::pair<double, double> parse_pair(const std::string& text);

}  // namespace trajkit::app
