#pragma once

// End-to-end pipelines behind the command-line subcommands. Each takes a
// fully resolved JSON configuration and returns a JSON summary.

#include "json.hpp"

namespace lim::pipelines {

using Json = nlohmann::json;

Json normalize(const Json& config);
Json chunk_stats(const Json& config);
Json tokenize_stats(const Json& config);
Json make_pretraining_data(const Json& config);
/// Summary carries "passed"; callers decide how to treat a breach.
Json verify_masking(const Json& config);
Json make_ipc(const Json& config);
Json make_pairs(const Json& config);
Json train_tiny(const Json& config);
Json ks_compare(const Json& config);

/// Dispatches on a subcommand name; throws for unknown names.
Json run(const std::string& command, const Json& config);

/// Version of the on-disk formats written by the pipelines.
inline constexpr int kFormatVersion = 1;

}  // namespace lim::pipelines
