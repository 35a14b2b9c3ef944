#pragma once

#include <string>
#include <vector>

namespace nextvisit {

enum class Precision { Float, Double };

/// NEXTVISIT_PRECISION = "float" (default) | "double".
Precision precision_from_env();

/// NEXTVISIT_THREADS caps Eigen's worker threads when set.
void apply_thread_env();

/// Runs one subcommand; args[0] is the program name. Returns the exit code:
/// 0 success, 2 usage/config, 3 data/provenance, 4 numeric failure.
int dispatch(const std::vector<std::string>& args);
int dispatch(int argc, char** argv);

}  // namespace nextvisit
