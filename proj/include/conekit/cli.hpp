#pragma once

#include <string>
#include <vector>

namespace conekit {

// Command-line entry point. Subcommands: tangent, derivative, regularity,
// classify, verify, corpus. Exit codes: 0 success / all suites pass, 1
// violations or failed premises, 2 schema or usage errors, 3 when every
// requested suite was NOT-APPLICABLE.
int runCli(const std::vector<std::string>& args);

}  // namespace conekit
