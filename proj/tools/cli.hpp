#pragma once
// Command-line front end. Subcommands: synth, train, eval, infer, profile.
// Returns the process exit code: 0 ok, 2 config, 3 data/format, 4 runtime.
// Failures print a single line "error: <category>: <message>" to `err`.

#include <ostream>
#include <string>
#include <vector>

namespace radar::cli {

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace radar::cli
