#pragma once

#include <filesystem>
#include <map>
#include <ostream>
#include <string>
#include <vector>

namespace cfx {

enum ExitCode : int { kExitOk = 0, kExitPartial = 1, kExitConfig = 2 };

/// Reads a flat `key=value` file. Keys mirror the long flag names without
/// the leading dashes; '#' starts a comment line. Throws ConfigError, IoError.
std::map<std::string, std::string> read_config_file(const std::filesystem::path& path);

/// Entry point behind the `cfexplain` binary. `args` excludes the program name.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);
int run_cli(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace cfx
