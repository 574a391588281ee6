#include "pomc/ideal_lattice.hpp"

#include <algorithm>
#include <sstream>

namespace pomc {

IdealLattice::IdealLattice(const ParallelBucketOrder& order, std::uint64_t ideal_cap)
    : order_(order) {
  order_.validate();
  count_ = count_ideals(order_);
  if (count_ > BigInt(ideal_cap)) {
    std::ostringstream msg;
    msg << "ideal lattice has " << count_ << " states, over the cap of " << ideal_cap;
    throw ResourceError(msg.str());
  }

  const int r = static_cast<int>(order_.parts.size());
  layout_.resize(r);
  place_.resize(order_.n);
  for (int p = 0; p < r; ++p) {
    const auto& buckets = order_.parts[p];
    PartLayout& lay = layout_[p];
    const int l = static_cast<int>(buckets.size());
    lay.bucket_nodes.resize(l);
    lay.bucket_size.resize(l);
    lay.state_offset.resize(l + 1);
    lay.prefix_mask.resize(l);
    lay.prefix_size.resize(l);
    lay.suffix_mask.resize(l);
    std::uint64_t offset = 0;
    std::uint64_t prefix = 0;
    for (int i = 0; i < l; ++i) {
      lay.state_offset[i] = offset;
      lay.prefix_mask[i] = prefix;
      lay.prefix_size[i] = popcount64(prefix);
      int bit = 0;
      for_each_bit(buckets[i], [&](int v) {
        lay.bucket_nodes[i].push_back(v);
        place_[v].part = p;
        place_[v].bucket = i;
        place_[v].bit = bit;
        place_[v].part_delta = std::uint64_t(1) << bit;
        ++bit;
      });
      lay.bucket_size[i] = bit;
      offset += (std::uint64_t(1) << bit) - 1;
      prefix |= buckets[i];
    }
    lay.state_offset[l] = offset;
    lay.count = offset + 1;
    std::uint64_t suffix = 0;
    for (int i = l - 1; i >= 0; --i) {
      lay.suffix_mask[i] = suffix;
      suffix |= buckets[i];
    }
  }

  stride_.assign(r, 1);
  for (int p = r - 2; p >= 0; --p) stride_[p] = stride_[p + 1] * layout_[p + 1].count;
  for (int v = 0; v < order_.n; ++v)
    place_[v].global_delta = place_[v].part_delta * stride_[place_[v].part];
}

std::vector<std::uint64_t> IdealLattice::digits(std::size_t idx) const {
  const int r = part_count();
  std::vector<std::uint64_t> d(r);
  std::uint64_t rest = idx;
  for (int p = r - 1; p >= 0; --p) {
    d[p] = rest % layout_[p].count;
    rest /= layout_[p].count;
  }
  return d;
}

int IdealLattice::bucket_for_state(int p, std::uint64_t q) const {
  if (q == 0) return -1;
  const auto& off = layout_[p].state_offset;
  int i = 0;
  while (q > off[i + 1]) ++i;
  return i;
}

std::uint64_t IdealLattice::mask_of(std::size_t idx) const {
  const auto d = digits(idx);
  std::uint64_t mask = 0;
  for (int p = 0; p < part_count(); ++p) {
    const int i = bucket_for_state(p, d[p]);
    if (i < 0) continue;
    const auto& lay = layout_[p];
    mask |= lay.prefix_mask[i];
    std::uint64_t T = d[p] - lay.state_offset[i];
    for_each_bit(T, [&](int b) { mask |= std::uint64_t(1) << lay.bucket_nodes[i][b]; });
  }
  return mask;
}

int IdealLattice::size_of(std::size_t idx) const {
  const auto d = digits(idx);
  int size = 0;
  for (int p = 0; p < part_count(); ++p) {
    const int i = bucket_for_state(p, d[p]);
    if (i < 0) continue;
    size += layout_[p].prefix_size[i] + popcount64(d[p] - layout_[p].state_offset[i]);
  }
  return size;
}

std::vector<std::pair<int, std::size_t>> IdealLattice::cover_edges(std::size_t idx) const {
  const auto d = digits(idx);
  std::vector<std::pair<int, std::size_t>> out;
  for (int p = 0; p < part_count(); ++p) {
    const int i = bucket_for_state(p, d[p]);
    if (i < 0) continue;
    const auto& lay = layout_[p];
    const std::uint64_t T = d[p] - lay.state_offset[i];
    for_each_bit(T, [&](int b) {
      const int v = lay.bucket_nodes[i][b];
      out.emplace_back(v, idx - place_[v].global_delta);
    });
  }
  return out;
}

std::vector<std::pair<std::size_t, std::size_t>> IdealLattice::node_steps(int v) const {
  const NodePlace& np = place_[v];
  const auto& lay = layout_[np.part];
  // Part states where v is addable: offset_i + T over T <= B_i \ {v}.
  std::vector<std::uint64_t> part_states;
  const std::uint64_t full = (std::uint64_t(1) << lay.bucket_size[np.bucket]) - 1;
  const std::uint64_t free = full & ~np.part_delta;
  std::uint64_t T = 0;
  while (true) {
    part_states.push_back(lay.state_offset[np.bucket] + T);
    if (T == free) break;
    T = (T - free) & free;  // next subset of `free`
  }
  // All combinations of the other parts' states.
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::uint64_t other_combos = static_cast<std::uint64_t>(count()) / lay.count;
  for (std::uint64_t q : part_states) {
    const std::uint64_t base = q * stride_[np.part];
    // Enumerate global indices whose digit at np.part equals q.
    std::vector<std::size_t> prefix_indices{0};
    for (int p = 0; p < part_count(); ++p) {
      if (p == np.part) continue;
      std::vector<std::size_t> next;
      next.reserve(prefix_indices.size() * layout_[p].count);
      for (std::size_t head : prefix_indices)
        for (std::uint64_t qq = 0; qq < layout_[p].count; ++qq)
          next.push_back(head + qq * stride_[p]);
      prefix_indices = std::move(next);
    }
    for (std::size_t head : prefix_indices)
      out.emplace_back(head + base, head + base + np.global_delta);
  }
  (void)other_combos;
  std::sort(out.begin(), out.end());
  return out;
}

IdealLattice::Cursor::Cursor(const IdealLattice& lat, bool at_end) : lat_(&lat) {
  const int r = lat.part_count();
  digit_.assign(r, 0);
  state_.assign(r, PartState{-1, 0});
  if (at_end) {
    idx_ = lat.count() - 1;
    for (int p = 0; p < r; ++p) {
      const auto& lay = lat.layout_[p];
      digit_[p] = lay.count - 1;
      const int last = static_cast<int>(lay.bucket_size.size()) - 1;
      state_[p].bucket = last;
      state_[p].T = (std::uint64_t(1) << lay.bucket_size[last]) - 1;
    }
  } else {
    idx_ = 0;
  }
}

void IdealLattice::Cursor::advance() {
  ++idx_;
  const int r = static_cast<int>(digit_.size());
  for (int p = r - 1; p >= 0; --p) {
    const auto& lay = lat_->layout_[p];
    if (digit_[p] + 1 < lay.count) {
      ++digit_[p];
      PartState& st = state_[p];
      if (st.bucket < 0) {
        st.bucket = 0;
        st.T = 1;
      } else if (st.T + 1 < (std::uint64_t(1) << lay.bucket_size[st.bucket])) {
        ++st.T;
      } else {
        ++st.bucket;
        st.T = 1;
      }
      return;
    }
    digit_[p] = 0;
    state_[p] = PartState{-1, 0};
  }
}

void IdealLattice::Cursor::retreat() {
  --idx_;
  const int r = static_cast<int>(digit_.size());
  for (int p = r - 1; p >= 0; --p) {
    const auto& lay = lat_->layout_[p];
    if (digit_[p] > 0) {
      --digit_[p];
      PartState& st = state_[p];
      if (st.T > 1) {
        --st.T;
      } else if (st.bucket > 0) {
        --st.bucket;
        st.T = (std::uint64_t(1) << lay.bucket_size[st.bucket]) - 1;
      } else {
        st.bucket = -1;
        st.T = 0;
      }
      return;
    }
    digit_[p] = lay.count - 1;
    const int last = static_cast<int>(lay.bucket_size.size()) - 1;
    state_[p].bucket = last;
    state_[p].T = (std::uint64_t(1) << lay.bucket_size[last]) - 1;
  }
}

IdealLattice enumerate_ideals(const ParallelBucketOrder& order, std::uint64_t ideal_cap) {
  return IdealLattice(order, ideal_cap);
}

}  // namespace pomc
