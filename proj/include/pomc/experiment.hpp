#ifndef POMC_EXPERIMENT_HPP
#define POMC_EXPERIMENT_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pomc/mcmc.hpp"

namespace pomc {

// Exit codes used by run_experiment and the CLI.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitResource = 3;
inline constexpr int kExitIo = 4;

struct ExperimentConfig {
  enum class Mode { scores, gen, exact, mcmc, aggregate, bench };

  Mode mode = Mode::exact;
  std::string data_path;
  std::string network_path;
  int rows = 0;              // gen: rows to sample
  std::uint64_t seed = 0;
  int k = -1;
  std::string bucket_size = "auto";  // int, "auto", or comma list (bench)
  int parts = 1;
  std::int64_t iters = -1;   // optional cross-check of the schedule
  std::int64_t burn_in = -1;
  std::int64_t thin = -1;
  std::int64_t samples = -1;
  int chains = 8;
  std::string out_dir = ".";
  int threads = 1;
  int exact_cap = 24;
  bool has_header = true;
  std::string missing_token = "?";
  int bench_iters = 20;      // bench: iterations per bucket size

  // Resolved values (filled by resolve_defaults).
  int resolved_b = -1;
  std::vector<int> bench_b_values;
};

// Bucket-size heuristic round((k-2) log2 n), clamped to [1, min(n, 20)].
int auto_bucket_size(int n, int k);

// Fills the bucket size (auto resolution), default part count and the
// default schedule (burn-in 10000, 100 samples at interval 100). Pure in its
// inputs; throws ConfigError on contradictory flags.
ExperimentConfig resolve_defaults(ExperimentConfig config, int n);

// Runs one mode end to end, writing its artifacts under config.out_dir.
// Returns a process exit code instead of throwing.
int run_experiment(const ExperimentConfig& config);

// Mean wall-clock seconds per MCMC iteration for each bucket size, measured
// on warm chains with a fixed seed.
std::vector<std::pair<int, double>> bench_iteration_time(const ScoreTable& scores,
                                                         const std::vector<int>& bucket_sizes,
                                                         int iterations_per_point,
                                                         std::uint64_t seed);

// Per-chain score-trace TSVs plus a summary TSV with acceptance ratios
// (overall and post-burn-in) and final scores; records the burn-in boundary.
void emit_convergence_report(const std::vector<ChainTrace>& traces, std::int64_t burn_in,
                             const std::string& out_dir);

}  // namespace pomc

#endif  // POMC_EXPERIMENT_HPP
