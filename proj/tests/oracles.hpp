// Test-only reference implementations: everything here goes through explicit
// enumeration (permutations, subsets, set partitions) and never touches the
// lattice DP it is used to check.
#ifndef POMC_TEST_ORACLES_HPP
#define POMC_TEST_ORACLES_HPP

#include <cstdint>
#include <vector>

#include "pomc/bucket_order.hpp"
#include "pomc/dataset.hpp"
#include "pomc/dp.hpp"
#include "pomc/scores.hpp"

namespace oracle {

// Sequential Dirichlet(1) predictive probability of column v given the
// parent columns, processed row by row. Mathematically equal to the K2
// marginal likelihood but computed on a different route.
double seq_predictive_log_score(int v, std::uint64_t parent_mask, const pomc::Dataset& data);

std::vector<std::vector<int>> all_orders(int n);

bool is_extension(const std::vector<int>& order, const pomc::ParallelBucketOrder& P);

std::vector<std::vector<int>> brute_linear_extensions(const pomc::ParallelBucketOrder& P);

// All downward-closed subsets, by filtering all 2^n masks.
std::vector<std::uint64_t> brute_ideals(const pomc::ParallelBucketOrder& P);

// All reorderings (per-part multiset permutations, parts' base sets fixed).
std::vector<pomc::ParallelBucketOrder> all_reorderings(const pomc::ParallelBucketOrder& P);

// sum_{S <= U, |S| <= k} w_v(S) in log domain, by scanning stored entries.
double node_mass(const pomc::ScoreTable& scores, int v, std::uint64_t allowed);
// Same, restricted to sets containing `u`.
double node_mass_with(const pomc::ScoreTable& scores, int v, std::uint64_t allowed, int u);

// log p(D, P) by enumerating linear extensions of P.
double brute_log_joint(const pomc::ScoreTable& scores, const pomc::ParallelBucketOrder& P);

// Arc posteriors by the same enumeration.
std::vector<double> brute_arc_posteriors(const pomc::ScoreTable& scores,
                                         const pomc::ParallelBucketOrder& P);

double brute_feature_posterior(const pomc::ScoreTable& scores,
                               const pomc::ParallelBucketOrder& P,
                               const pomc::ModularFeature& feature);

// Uniform random categorical dataset (arities in [2, max_arity]).
pomc::Dataset random_dataset(int n, int m, int max_arity, pomc::Rng& rng);

// Random node assignment and random type signature over r parts.
pomc::ParallelBucketOrder random_order(int n, int r, pomc::Rng& rng);

}  // namespace oracle

#endif  // POMC_TEST_ORACLES_HPP
