#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "json.hpp"

namespace gcnsched {

/// Flags shared by every subcommand.
struct CommandContext {
  std::filesystem::path config;  // empty: defaults only
  std::optional<std::uint64_t> seed;
  std::filesystem::path out;
  int workers = 1;
  bool force = false;
  std::string command_line;
};

/// Reads the JSON config (empty object when no path was given). Malformed
/// files raise UsageError.
nlohmann::json load_config(const std::filesystem::path& path);

/// Seed from the flag, else config["seed"], else 0.
std::uint64_t resolve_seed(const CommandContext& ctx, const nlohmann::json& cfg);

/// Creates `dir`; a non-empty directory is a UsageError unless `force`.
void prepare_output_dir(const std::filesystem::path& dir, bool force);

/// 64-bit FNV-1a of the canonical JSON dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& cfg);

/// Writes manifest.json into ctx.out.
void write_manifest(const CommandContext& ctx, const std::string& command, const nlohmann::json& cfg,
                    std::uint64_t seed, const std::string& started, const std::vector<std::string>& outputs);

std::string utc_timestamp();

void cmd_gen_data(const CommandContext& ctx);
/// trainer: dpg | crts | dqn.
void cmd_train(const CommandContext& ctx, const std::string& trainer, const std::filesystem::path& init_model);
void cmd_eval(const CommandContext& ctx);
void cmd_simulate(const CommandContext& ctx);
/// Prints {"value", "set", "optimal"} as JSON on stdout. Returns false when
/// the budget ran out before optimality was proven.
bool cmd_exact(const std::filesystem::path& graph, const nlohmann::json& budget, std::ostream& out);

inline constexpr const char* kToolVersion = "0.1.0";
/// Bumped whenever a CSV header changes.
inline constexpr int kCsvSchemaVersion = 1;

}  // namespace gcnsched
