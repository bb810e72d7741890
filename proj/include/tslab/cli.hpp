#ifndef TSLAB_CLI_HPP
#define TSLAB_CLI_HPP

#include <cstdint>
#include <optional>
#include <string>

namespace tslab {

struct RunConfig {
  std::string command;      // simulate | fit | diagnose | experiment
  std::string config_path;  // JSON config
  std::string out_dir;
  int threads = 0;                          // <= 0: default parallelism
  std::optional<std::uint64_t> master_seed;  // absent: drawn from OS entropy, recorded
};

// Executes the command, writing all artifacts plus a manifest under out_dir.
// Returns 0 on success, 1 on validation errors, 2 on numeric failures.
int run(const RunConfig& cfg);

inline constexpr const char* kVersion = "0.1.0";

}  // namespace tslab

#endif  // TSLAB_CLI_HPP
