#pragma once

#include <filesystem>
#include <string>

#include "drbsde/run_config.hpp"

namespace drbsde {

enum class Command { solve, converge, compare, price };

Command parse_command(const std::string& name);

/// Executes one command and writes its artifacts under out_dir. Throws
/// ConfigError for configuration problems and solver exceptions for numeric
/// failures.
void run_command(Command cmd, const RunConfig& cfg, const std::filesystem::path& out_dir);

}  // namespace drbsde
