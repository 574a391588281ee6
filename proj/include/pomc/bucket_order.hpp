#ifndef POMC_BUCKET_ORDER_HPP
#define POMC_BUCKET_ORDER_HPP

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <boost/multiprecision/cpp_int.hpp>

#include "pomc/util.hpp"

namespace pomc {

using BigInt = boost::multiprecision::cpp_int;

// The MCMC state: r disjoint bucket orders partitioning {0..n-1}. Buckets are
// node bitmasks; nodes within a bucket are incomparable, earlier buckets
// wholly precede later ones, and distinct parts are incomparable. The type
// signature (per-part bucket sizes) is invariant under flip moves.
struct ParallelBucketOrder {
  int n = 0;
  std::vector<std::vector<std::uint64_t>> parts;  // parts[p][i] = bucket mask

  std::vector<std::vector<int>> type_signature() const;
  std::uint64_t part_mask(int p) const;
  int part_of(int node) const;
  int bucket_of(int node) const;  // bucket index within the node's part

  // Text form: parts separated by ';', buckets by '|', nodes by ','.
  std::string descriptor() const;
  static ParallelBucketOrder parse(const std::string& text);

  // true iff u strictly precedes v (same part, earlier bucket).
  bool precedes(int u, int v) const;

  void validate() const;
};

// Distributes nodes into r parts of ceil(n/r)/floor(n/r) nodes, each part
// split into size-b buckets with a smaller last bucket when b does not
// divide the part size. `assignment` is a permutation of 0..n-1 consumed in
// order (part 0 bucket 0 first). Throws ConfigError when r > n would leave
// an empty part.
ParallelBucketOrder make_order(int n, int b, int r, const std::vector<int>& assignment);
ParallelBucketOrder make_order(int n, int b, int r);  // identity assignment
ParallelBucketOrder make_order(int n, int b, int r, Rng& rng);

BigInt count_ideals(const ParallelBucketOrder& order);
BigInt count_reorderings(const ParallelBucketOrder& order);

// Exchanges u and v between two distinct buckets of one part; an involution
// that preserves the type signature.
ParallelBucketOrder apply_flip(const ParallelBucketOrder& order, int part, int u, int v);

// Uniform over the reorderings of `order` (per-part node shuffles).
ParallelBucketOrder random_reordering(const ParallelBucketOrder& order, Rng& rng);

// All linear extensions, each a node sequence; guarded to n <= 10.
std::vector<std::vector<int>> linear_extensions(const ParallelBucketOrder& order);

// true iff arcs A and the order have a common extension, i.e. A ∪ P is
// acyclic. A must itself be acyclic.
bool is_compatible(const std::vector<std::pair<int, int>>& arcs, const ParallelBucketOrder& order);

}  // namespace pomc

#endif  // POMC_BUCKET_ORDER_HPP
