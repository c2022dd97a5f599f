#pragma once

#include <ostream>
#include <string>
#include <vector>

namespace gamefeat {

/// Exit codes of the command-line tool.
enum ExitCode : int { kExitOk = 0, kExitUsage = 1, kExitRuntime = 2 };

/// Entry point of the `gamefeat` tool: ingest, idf, recommend, generate,
/// bundle, serve. Data goes to `out`, diagnostics and usage to `err`.
/// `args` excludes the program name.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace gamefeat
