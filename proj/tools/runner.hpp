#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

namespace wolffkit::cli {

enum ExitCode : int { kOk = 0, kValidation = 2, kNumeric = 3, kAssertFailed = 4, kUsage = 64 };

struct RunOptions {
  std::string out_dir = ".";
  int threads = 0;  // 0 keeps the library default
  bool assert_verdicts = false;
  std::optional<std::uint64_t> seed;
};

struct RunResult {
  int exit_code = kOk;
  std::vector<std::string> artifacts;  // paths written
  std::string message;
};

const std::vector<std::string>& commands();
std::string usage();

// target is the criterion or verifier name for `criteria` and `verify`.
RunResult run(const std::string& command, const std::string& target, const nlohmann::json& config,
              const RunOptions& opt);

// FNV-1a 64 of the canonical dump, as 16 hex digits.
std::string config_hash(const nlohmann::json& canonical);

}  // namespace wolffkit::cli
