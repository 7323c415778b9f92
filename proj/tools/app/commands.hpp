#pragma once

#include <ostream>
#include <string>

#include "config.hpp"

namespace trajkit::app {

// Integrates the configured problem and writes samples.csv and summary.json
// into the output directory. Returns 0, 10 (blow-up) or 20 (step failure).
int cmd_run(const RunConfig& config, std::ostream& out, std::ostream& err);

// Writes certificate.json. Returns 0, 11 (heuristic), 12 (not certified) or
// 1 when the analysis rejects the chart.
int cmd_certify(const RunConfig& config, std::ostream& out, std::ostream& err);

// Prints the blow-up time of ex1/ex2 with 12 significant digits.
int cmd_oracle(const std::string& kind, double eps, std::ostream& out, std::ostream& err);

int cmd_scenarios(std::ostream& out);

}  // namespace trajkit::app
