#ifndef POMC_MCMC_HPP
#define POMC_MCMC_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pomc/dp.hpp"

namespace pomc {

struct McmcConfig {
  int k = 3;
  int b = 1;
  int r = 1;
  std::int64_t burn_in = 10000;
  std::int64_t thin = 100;      // iterations between retained samples
  std::int64_t samples = 100;   // T
  int chains = 8;
  std::uint64_t base_seed = 0;
  // The flip proposal is symmetric, so the Hastings q-ratio cancels; this
  // keeps the general correction in the acceptance computation anyway.
  bool hastings_correction = false;
  EngineOptions engine;

  std::int64_t total_iterations() const { return burn_in + samples * thin; }
  void validate() const;
};

struct ProposalTriple {
  int part = -1;
  int u = -1;
  int v = -1;
};

struct ChainState {
  ParallelBucketOrder order;
  double log_joint = kLogZero;  // cached dp value for `order`
  std::int64_t iteration = 0;
  Rng rng;
};

struct ChainTrace {
  int chain_index = 0;
  std::int64_t burn_in = 0;
  // Per-iteration records; log_joint is the state score after the step.
  std::vector<double> log_joint;
  std::vector<std::uint8_t> accepted;
  std::vector<ProposalTriple> proposals;
  // Retained samples, spaced exactly `thin` apart after burn-in.
  std::vector<std::int64_t> sample_iterations;
  std::vector<std::string> sample_orders;
  std::vector<ArcPosteriorMatrix> samples;

  double acceptance_ratio() const;                       // over all iterations
  double acceptance_ratio_after(std::int64_t iter) const;  // post burn-in form
};

// Uniform over all (part, u, v) with u, v in distinct buckets i < j of one
// part. The number of triples depends only on the type signature, so the
// proposal is symmetric across reorderings.
class FlipProposal {
 public:
  explicit FlipProposal(const ParallelBucketOrder& order);
  std::uint64_t triple_count() const { return total_; }
  double log_prob() const;  // log q of any single triple
  ProposalTriple draw(const ParallelBucketOrder& current, Rng& rng) const;

 private:
  struct Block {
    int part, bucket_i, bucket_j;
    std::uint64_t pairs, cum;
  };
  std::vector<Block> blocks_;
  std::uint64_t total_ = 0;
};

// One Metropolis-Hastings chain over the reorderings of a parallel bucket
// order, with the full per-candidate DP rebuild as the evaluation step.
class McmcEngine {
 public:
  McmcEngine(const ScoreTable& scores, const McmcConfig& config);

  ChainState init_state(int chain_index);
  // One MH iteration; returns the accepted flag and appends to `trace` when
  // given.
  bool step(ChainState& state, ChainTrace* trace);
  // Exact conditional arc posteriors for the current state.
  ArcPosteriorMatrix sample_matrix(const ChainState& state);

  const McmcConfig& config() const { return cfg_; }
  const FlipProposal& proposal() const { return proposal_; }

 private:
  const ScoreTable* scores_;
  McmcConfig cfg_;
  ParallelBucketOrder proto_;
  FlipProposal proposal_;
  DpEngine dp_;
};

// Spec-shaped wrappers.
std::pair<ParallelBucketOrder, ProposalTriple> propose_flip(ChainState& state);
bool mh_step(ChainState& state, McmcEngine& engine);

ChainTrace run_chain(const ScoreTable& scores, const McmcConfig& config, int chain_index);
std::vector<ChainTrace> run_chains(const ScoreTable& scores, const McmcConfig& config,
                                   int threads);

// Elementwise mean of the retained conditional matrices of one chain.
ArcPosteriorMatrix estimate_arc_posteriors(const ChainTrace& trace);
// Pooled across chains: mean of per-chain means.
ArcPosteriorMatrix estimate_arc_posteriors(const std::vector<ChainTrace>& traces);

// Per-arc standard deviation across runs (population form) and its maximum.
std::pair<double, std::vector<double>> max_arc_deviation(
    const std::vector<ArcPosteriorMatrix>& per_run);

// Max over off-diagonal entries of |estimate - exact|.
double largest_absolute_error(const ArcPosteriorMatrix& estimate,
                              const ArcPosteriorMatrix& exact);

// Trace files: TSV (iteration, log_score, accepted) plus a sidecar of
// retained samples (iteration, order descriptor).
void write_chain_trace(const ChainTrace& trace, const std::string& path);
void write_sample_index(const ChainTrace& trace, const std::string& path);
// Reads back (iteration, log_score, accepted) rows.
ChainTrace read_chain_trace(const std::string& path);

}  // namespace pomc

#endif  // POMC_MCMC_HPP
