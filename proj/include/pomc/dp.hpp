#ifndef POMC_DP_HPP
#define POMC_DP_HPP

#include <cstdint>
#include <functional>
#include <limits>
#include <string>
#include <vector>

#include "pomc/ideal_lattice.hpp"
#include "pomc/scores.hpp"

namespace pomc {

// log alpha_v(I) = log sum_{S <= I\{v}, |S| <= k} w_v(S) for every node and
// every ideal index of one lattice.
struct AlphaTables {
  int n = 0;
  std::size_t count = 0;
  std::vector<double> values;  // [v * count + idx]

  double at(int v, std::size_t idx) const { return values[v * count + idx]; }
};

// Chain-sum sweeps over the ideal lattice. g(I) accumulates over maximal
// chains from the empty ideal, h(I) from the full set backwards; for every
// level m, sum_{|I|=m} g(I) h(I) equals g(N).
struct ForwardBackward {
  std::vector<double> g, h;  // log domain
  double log_total = kLogZero;
};

// A structural indicator f(A) = prod_v f_v(A_v), given by per-node parent-set
// predicates.
struct ModularFeature {
  std::function<bool(int v, std::uint64_t parents)> keep;

  static ModularFeature all_ones();
  // Indicator of the arc u -> v: f_v(S) = [u in S], all other nodes free.
  static ModularFeature arc(int u, int v);
};

struct ArcPosteriorMatrix {
  enum class Mode { exact, conditional, averaged };

  int n = 0;
  Mode mode = Mode::conditional;
  int k = -1;
  std::string order_descriptor;
  int chain = -1;  // set on per-chain estimates
  std::vector<std::string> labels;
  std::vector<double> p;  // row-major; p[u*n+v] = P(arc u -> v), diagonal 0

  double at(int u, int v) const { return p[static_cast<std::size_t>(u) * n + v]; }
  double& at(int u, int v) { return p[static_cast<std::size_t>(u) * n + v]; }
};

struct EngineOptions {
  std::uint64_t ideal_cap = std::uint64_t(1) << 25;
  std::size_t memory_cap_bytes = std::size_t(6) << 30;
  int threads = 1;
};

// Reusable DP state for one (ScoreTable, lattice shape): alpha tables, the
// g/h sweeps and the all-arcs transform, with buffers owned here so an MCMC
// chain can re-evaluate candidates without reallocating. All accumulation is
// log-domain; nothing here ever leaves it.
class DpEngine {
 public:
  DpEngine(const ScoreTable& scores, const ParallelBucketOrder& order,
           const EngineOptions& opts = {});

  // Replaces the current order. Buffers are kept when the ideal count is
  // unchanged (the flip-move case).
  void set_order(const ParallelBucketOrder& order);

  const IdealLattice& lattice() const { return lat_; }
  const ScoreTable& scores() const { return *scores_; }

  void build_alpha();
  void build_alpha(const ModularFeature& feature);
  double forward();   // requires alpha; returns and caches log g(N)
  void backward();    // requires alpha
  double log_total() const { return fb_.log_total; }

  // Exact conditional arc posteriors given the current order; requires
  // forward() and backward() runs over the plain (unfiltered) alpha.
  ArcPosteriorMatrix arc_posteriors();

  const AlphaTables& alpha() const { return alpha_; }
  const ForwardBackward& fb() const { return fb_; }

 private:
  void build_alpha_impl(const ModularFeature* feature);
  void alpha_single_part(const ModularFeature* feature);
  void alpha_generic(const ModularFeature* feature);

  const ScoreTable* scores_;
  EngineOptions opts_;
  IdealLattice lat_;
  AlphaTables alpha_;   // doubles as the assignment accumulator (in place)
  ForwardBackward fb_;
  std::vector<double> base_;       // per node, alpha at the empty ideal
  std::vector<double> transform_;  // all-arcs scratch, one bucket at a time
  bool has_alpha_ = false, has_fwd_ = false, has_bwd_ = false;
};

// --- spec-level operations (thin wrappers over DpEngine) ---

AlphaTables build_alpha(const ScoreTable& scores, const ParallelBucketOrder& order,
                        const EngineOptions& opts = {});
ForwardBackward forward_backward(const ScoreTable& scores, const ParallelBucketOrder& order,
                                 const EngineOptions& opts = {});

// Unnormalized log p(P, D) = log g(N) under the uniform rho convention.
double log_joint(const ScoreTable& scores, const ParallelBucketOrder& order,
                 const EngineOptions& opts = {});

// Exact p(u -> v | D, P) for all arcs.
ArcPosteriorMatrix arc_posteriors(const ScoreTable& scores, const ParallelBucketOrder& order,
                                  const EngineOptions& opts = {});

// p(f | D, P): the DP rerun with w_v(S) replaced by w_v(S) f_v(S), divided by
// the unfiltered total.
double feature_posterior(const ScoreTable& scores, const ParallelBucketOrder& order,
                         const ModularFeature& feature, const EngineOptions& opts = {});

// Unconditional posterior over all DAGs under the order-modular prior: runs
// the all-arcs DP on the single-bucket order whose reorderings cover every
// linear order. Returns (log evidence, matrix). Guarded by `exact_cap` on n.
std::pair<double, ArcPosteriorMatrix> exact_posteriors(const ScoreTable& scores,
                                                       int exact_cap = 24, int threads = 1,
                                                       std::size_t memory_cap_bytes = std::size_t(6)
                                                                                      << 30);

// CSV with a '#' metadata line (mode, k, order, optional chain/evidence),
// a label header row/column and 6-decimal entries; row = tail, column = head.
void write_arc_matrix(const ArcPosteriorMatrix& matrix, const std::string& path,
                      double log_evidence = std::numeric_limits<double>::quiet_NaN());
ArcPosteriorMatrix read_arc_matrix(const std::string& path);

}  // namespace pomc

#endif  // POMC_DP_HPP
