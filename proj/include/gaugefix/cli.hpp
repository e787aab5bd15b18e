#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gaugefix {

// Entry point of the `gaugefix` tool. argv[0] is the program name. Returns
// the process exit code; diagnostics go to `err`, run summaries to `out`.
int run_cli(const std::vector<std::string>& argv, std::ostream& out, std::ostream& err);

}  // namespace gaugefix
