#pragma once

#include <string>
#include <vector>

#include "nvlock/cli/config.hpp"
#include "nvlock/cli/table.hpp"

namespace nvlock::cli {

inline constexpr const char* kToolName = "nvlock";
inline constexpr const char* kToolVersion = "0.1.0";

// One table per sweep. Angles in the tables are in degrees; frequencies are
// plain (not angular) Hz.
std::vector<ResultTable> cmd_susceptibility(const RunConfig& config);
std::vector<ResultTable> cmd_equilibrium(const RunConfig& config);
std::vector<ResultTable> cmd_rotation(const RunConfig& config);
std::vector<ResultTable> cmd_mdmr(const RunConfig& config);
std::vector<ResultTable> cmd_landscape(const RunConfig& config);
std::vector<ResultTable> cmd_libration(const RunConfig& config);
std::vector<ResultTable> cmd_invert(const RunConfig& config);

struct CommandInfo {
  const char* name;
  const char* summary;
  std::vector<ResultTable> (*run)(const RunConfig&);
};

const std::vector<CommandInfo>& commands();

/// Runs a command and stamps every table with tool, command and config hash.
/// Throws ValidationError for an unknown command name.
std::vector<ResultTable> run_command(const std::string& name, const RunConfig& config);

}  // namespace nvlock::cli
