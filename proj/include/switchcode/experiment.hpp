#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "switchcode/json_util.hpp"

namespace switchcode {

enum class Command { generate, whiten, pca, train, encode, viz, reproduce };

Command command_from_string(const std::string& name);

struct RunOptions {
    std::string out_dir = ".";
    std::optional<std::uint64_t> seed_override;
    int threads = 1;
    std::optional<std::string> mnist_dir;
    // Overrides the canned-config search path for `reproduce`.
    std::optional<std::string> configs_dir;
};

/// Parses a config file; ConfigError on unreadable or malformed JSON.
Json load_config_file(const std::string& path);

// Finds the canned config for a figure id (fig2, fig4, fig5, fig7, fig8,
// fig9).  Search order: options.configs_dir, $SWITCHCODE_CONFIGS, the
// compiled-in source config directory, ./configs.
std::string reproduce_config_path(const std::string& figure,
                                  const RunOptions& options);

// Validates the config against the command's schema (unknown keys rejected)
// and runs the pipeline, writing artifacts plus manifest.json into
// options.out_dir.  On any error every partially written artifact is removed
// before the exception propagates.
void run_command(Command cmd, const Json& config, const RunOptions& options);

/// CLI exit code for an escaped exception (2 config, 3 data, 4 divergence, 1 other).
int exit_code_for_exception(const std::exception& e);

/// One-line machine-readable error record for stderr.
Json error_json(const std::exception& e);

}  // namespace switchcode
