#pragma once

#include <string>

namespace consflux {

// Orchestration entry points behind the CLI subcommands and the C API.
// Each takes a JSON config (documented in the README), writes its outputs
// plus a resolved config echo under out_dir, and throws consflux::Error on
// failure. Re-running a command from its echoed config reproduces the
// outputs bit-identically in sequential mode.

void cmd_generate(const std::string& config_json, const std::string& out_dir, int threads = 1);
void cmd_train(const std::string& config_json, const std::string& out_dir, int threads = 1);
void cmd_predict(const std::string& config_json, const std::string& out_dir, int threads = 1);
void cmd_evaluate(const std::string& config_json, const std::string& out_dir, int threads = 1);

// Expand an optional "preset" key into a full generation config.
std::string resolve_generate_config(const std::string& config_json);

}  // namespace consflux
