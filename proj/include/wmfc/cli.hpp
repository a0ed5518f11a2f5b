#pragma once

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace wmfc {

struct RunOptions {
  std::string subcommand;
  std::string config_path;  // empty: use config_text
  std::string config_text;
  std::vector<std::string> overrides;  // key=value
  std::optional<std::uint64_t> seed;
  int threads = 1;
  std::optional<std::string> out_dir;
  bool force = false;
  std::string timestamp;  // empty: current UTC time
};

struct RunResult {
  int exit_code = 0;  // 0 pass, 1 fail, 2 config error
  std::vector<std::string> artifacts;
};

std::vector<std::string> subcommands();

// Runs one subcommand. Check lines go to `out`, reason lines to `err`.
RunResult run(const RunOptions& opt, std::ostream& out, std::ostream& err);

int cli_main(int argc, char** argv);

}  // namespace wmfc
