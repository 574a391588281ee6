#ifndef POMC_SCORES_HPP
#define POMC_SCORES_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pomc/dataset.hpp"
#include "pomc/util.hpp"

namespace pomc {

// Per-node log weights log w_v(S) = log q_v(S) + log p(D_v | D_S) for every
// parent set S of size <= k, S not containing v. Entries are enumerated by
// size then lexicographically by node indices, the same order the cache file
// uses. The order-position prior factor rho_v is identically 1 throughout
// (uniform convention); the engine relies on this and drops rho terms.
struct ScoreTable {
  int n = 0;
  int k = 0;
  std::uint64_t data_digest = 0;
  std::vector<std::vector<std::uint64_t>> masks;  // masks[v][i]
  std::vector<std::vector<double>> logw;          // logw[v][i]

  std::size_t entries_per_node() const { return masks.empty() ? 0 : masks[0].size(); }

  // Linear scan; intended for tests, tools and bindings, not the DP hot path.
  double find_log_weight(int v, std::uint64_t parent_mask) const;

  void validate() const;
};

// K2 marginal likelihood log p(D_v | D_S) under unit Dirichlet priors,
// evaluated with lgamma. Parent configurations never observed contribute 1.
double log_local_score(int v, std::uint64_t parent_mask, const Dataset& data);

// Modular structure prior: -log C(n-1, |S|).
double log_parent_prior(int v, int size, int n);

// Enumerates subsets of `pool` (ascending node ids) of size <= kmax as
// bitmasks: size 0 first, then per size in lexicographic index order.
std::vector<std::uint64_t> subsets_up_to(const std::vector<int>& pool, int kmax);

// Number of parent-set entries per node, sum_{j<=k} C(n-1, j), as a double
// (used for memory estimates before enumeration).
double entry_count_estimate(int n, int k);

struct ScoreBuildOptions {
  std::size_t memory_cap_bytes = std::size_t(4) << 30;
  int threads = 1;
};

ScoreTable build_score_table(const Dataset& data, int k, const ScoreBuildOptions& opts = {});

// Text cache: header line `# pomc scores n=<n> k=<k> data=<hex>`, then one
// line per entry `v <indices-joined-by-commas|-> <logw %.17g>`.
void write_score_cache(const ScoreTable& table, const std::string& path);
ScoreTable read_score_cache(const std::string& path);

}  // namespace pomc

#endif  // POMC_SCORES_HPP
