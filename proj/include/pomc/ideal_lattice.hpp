#ifndef POMC_IDEAL_LATTICE_HPP
#define POMC_IDEAL_LATTICE_HPP

#include <cstdint>
#include <utility>
#include <vector>

#include "pomc/bucket_order.hpp"

namespace pomc {

// Indexed enumeration of the ideals (downsets) of a parallel bucket order.
//
// Per part, the ideals of a bucket order B_1..B_l are the empty set plus the
// states (i, T) with nonempty T <= B_i, meaning "buckets before i complete,
// T taken from B_i"; a full bucket merges with the next bucket's empty state.
// The per-part index is offset_i + T with offset_i = sum_{j<i} (2^b_j - 1),
// so adding node v (local bit beta of its bucket) moves the index by
// +2^beta, removing by -2^beta. Counts multiply across parts with
// lexicographic mixed-radix indexing (part 0 most significant), so a global
// index changes by 2^beta * stride(part) and ascending index order is a
// linear extension of ideal inclusion.
class IdealLattice {
 public:
  struct PartLayout {
    std::vector<std::vector<int>> bucket_nodes;  // [i][bit] -> global node id
    std::vector<int> bucket_size;
    std::vector<std::uint64_t> state_offset;     // per bucket; plus sentinel = count-1
    std::vector<std::uint64_t> prefix_mask;      // union of buckets before i
    std::vector<int> prefix_size;
    std::vector<std::uint64_t> suffix_mask;      // union of buckets after i
    std::uint64_t count = 0;
  };

  struct NodePlace {
    int part = 0;
    int bucket = 0;
    int bit = 0;
    std::uint64_t part_delta = 0;    // 2^bit
    std::uint64_t global_delta = 0;  // 2^bit * stride(part)
  };

  IdealLattice(const ParallelBucketOrder& order, std::uint64_t ideal_cap);

  const ParallelBucketOrder& order() const { return order_; }
  int n() const { return order_.n; }
  int part_count() const { return static_cast<int>(layout_.size()); }
  std::size_t count() const { return static_cast<std::size_t>(count_); }
  const PartLayout& part(int p) const { return layout_[p]; }
  std::uint64_t stride(int p) const { return stride_[p]; }
  const NodePlace& place(int v) const { return place_[v]; }

  // --- random access (tests, tools, slow paths) ---
  std::vector<std::uint64_t> digits(std::size_t idx) const;
  int bucket_for_state(int p, std::uint64_t q) const;  // -1 for the empty state
  std::uint64_t mask_of(std::size_t idx) const;
  int size_of(std::size_t idx) const;
  // (maximal element v, index of I \ {v}) pairs.
  std::vector<std::pair<int, std::size_t>> cover_edges(std::size_t idx) const;
  // For node v: (index of I, index of I u {v}) over all ideals I with v
  // addable. Materializes 2^(b-1) * count/count_p pairs; small-n use only.
  std::vector<std::pair<std::size_t, std::size_t>> node_steps(int v) const;

  // --- sequential sweeps ---
  // Tracks per-part (bucket, T) states in step with an index walking
  // 0..count-1 (forward) or count-1..0 (backward) without divisions.
  struct PartState {
    int bucket;       // -1 when the part ideal is empty
    std::uint64_t T;  // nonempty subset of the active bucket, else 0
  };

  class Cursor {
   public:
    Cursor(const IdealLattice& lat, bool at_end);
    std::size_t index() const { return idx_; }
    const std::vector<PartState>& states() const { return state_; }
    void advance();  // ++index
    void retreat();  // --index
   private:
    const IdealLattice* lat_;
    std::size_t idx_;
    std::vector<std::uint64_t> digit_;
    std::vector<PartState> state_;
  };

  Cursor begin() const { return Cursor(*this, false); }
  Cursor end() const { return Cursor(*this, true); }

 private:
  ParallelBucketOrder order_;
  std::vector<PartLayout> layout_;
  std::vector<std::uint64_t> stride_;
  std::vector<NodePlace> place_;
  BigInt count_;
};

// Builds the lattice, throwing ResourceError (reporting the exact count) when
// the ideal count exceeds `cap`.
IdealLattice enumerate_ideals(const ParallelBucketOrder& order,
                              std::uint64_t ideal_cap = (std::uint64_t(1) << 25));

}  // namespace pomc

#endif  // POMC_IDEAL_LATTICE_HPP
