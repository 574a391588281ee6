#include "pomc/bucket_order.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace pomc {

std::vector<std::vector<int>> ParallelBucketOrder::type_signature() const {
  std::vector<std::vector<int>> sig;
  sig.reserve(parts.size());
  for (const auto& part : parts) {
    std::vector<int> sizes;
    sizes.reserve(part.size());
    for (std::uint64_t bucket : part) sizes.push_back(popcount64(bucket));
    sig.push_back(std::move(sizes));
  }
  return sig;
}

std::uint64_t ParallelBucketOrder::part_mask(int p) const {
  std::uint64_t m = 0;
  for (std::uint64_t bucket : parts[p]) m |= bucket;
  return m;
}

int ParallelBucketOrder::part_of(int node) const {
  for (std::size_t p = 0; p < parts.size(); ++p)
    if (part_mask(static_cast<int>(p)) & (std::uint64_t(1) << node)) return static_cast<int>(p);
  throw ConfigError("node not in any part");
}

int ParallelBucketOrder::bucket_of(int node) const {
  for (const auto& part : parts)
    for (std::size_t i = 0; i < part.size(); ++i)
      if (part[i] & (std::uint64_t(1) << node)) return static_cast<int>(i);
  throw ConfigError("node not in any bucket");
}

std::string ParallelBucketOrder::descriptor() const {
  std::ostringstream out;
  for (std::size_t p = 0; p < parts.size(); ++p) {
    if (p) out << ';';
    for (std::size_t i = 0; i < parts[p].size(); ++i) {
      if (i) out << '|';
      bool first = true;
      for_each_bit(parts[p][i], [&](int v) {
        if (!first) out << ',';
        out << v;
        first = false;
      });
    }
  }
  return out.str();
}

ParallelBucketOrder ParallelBucketOrder::parse(const std::string& text) {
  ParallelBucketOrder order;
  std::istringstream parts_in(text);
  std::string part_text;
  std::uint64_t seen = 0;
  int max_node = -1;
  while (std::getline(parts_in, part_text, ';')) {
    std::vector<std::uint64_t> buckets;
    std::istringstream buckets_in(part_text);
    std::string bucket_text;
    while (std::getline(buckets_in, bucket_text, '|')) {
      std::uint64_t mask = 0;
      std::istringstream nodes_in(bucket_text);
      std::string tok;
      while (std::getline(nodes_in, tok, ',')) {
        if (tok.empty()) throw ConfigError("order descriptor: empty node token");
        const int v = std::stoi(tok);
        if (v < 0 || v >= 64) throw ConfigError("order descriptor: node out of range");
        mask |= std::uint64_t(1) << v;
        max_node = std::max(max_node, v);
      }
      if (mask == 0) throw ConfigError("order descriptor: empty bucket");
      buckets.push_back(mask);
    }
    order.parts.push_back(std::move(buckets));
  }
  for (const auto& part : order.parts)
    for (std::uint64_t bucket : part) {
      if (bucket & seen) throw ConfigError("order descriptor: node repeated");
      seen |= bucket;
    }
  order.n = max_node + 1;
  order.validate();
  return order;
}

bool ParallelBucketOrder::precedes(int u, int v) const {
  for (const auto& part : parts) {
    int iu = -1, iv = -1;
    for (std::size_t i = 0; i < part.size(); ++i) {
      if (part[i] & (std::uint64_t(1) << u)) iu = static_cast<int>(i);
      if (part[i] & (std::uint64_t(1) << v)) iv = static_cast<int>(i);
    }
    if (iu >= 0 && iv >= 0) return iu < iv;
    if (iu >= 0 || iv >= 0) return false;  // different parts: incomparable
  }
  return false;
}

void ParallelBucketOrder::validate() const {
  if (n < 1 || n > 64) throw ConfigError("order: supported range is 1 <= n <= 64");
  std::uint64_t seen = 0;
  for (const auto& part : parts) {
    if (part.empty()) throw ConfigError("order: empty part");
    for (std::uint64_t bucket : part) {
      if (bucket == 0) throw ConfigError("order: empty bucket");
      if (bucket & seen) throw ConfigError("order: buckets not disjoint");
      seen |= bucket;
    }
  }
  const std::uint64_t all = n == 64 ? ~std::uint64_t(0) : (std::uint64_t(1) << n) - 1;
  if (seen != all) throw ConfigError("order: buckets do not cover {0..n-1}");
}

ParallelBucketOrder make_order(int n, int b, int r, const std::vector<int>& assignment) {
  if (n < 1 || n > 64) throw ConfigError("make_order: supported range is 1 <= n <= 64");
  if (b < 1 || b > n) throw ConfigError("make_order: require 1 <= b <= n");
  if (r < 1) throw ConfigError("make_order: require r >= 1");
  if (r > n)
    throw ConfigError("make_order: " + std::to_string(r) + " parts over " + std::to_string(n) +
                      " nodes leaves an empty part");
  if (static_cast<int>(assignment.size()) != n)
    throw ConfigError("make_order: assignment must be a permutation of 0..n-1");
  std::uint64_t seen = 0;
  for (int v : assignment) {
    if (v < 0 || v >= n || (seen & (std::uint64_t(1) << v)))
      throw ConfigError("make_order: assignment must be a permutation of 0..n-1");
    seen |= std::uint64_t(1) << v;
  }

  ParallelBucketOrder order;
  order.n = n;
  int cursor = 0;
  for (int p = 0; p < r; ++p) {
    const int part_size = n / r + (p < n % r ? 1 : 0);
    std::vector<std::uint64_t> buckets;
    int left = part_size;
    while (left > 0) {
      const int size = std::min(b, left);
      std::uint64_t mask = 0;
      for (int i = 0; i < size; ++i) mask |= std::uint64_t(1) << assignment[cursor++];
      buckets.push_back(mask);
      left -= size;
    }
    order.parts.push_back(std::move(buckets));
  }
  order.validate();
  return order;
}

ParallelBucketOrder make_order(int n, int b, int r) {
  std::vector<int> identity(n);
  std::iota(identity.begin(), identity.end(), 0);
  return make_order(n, b, r, identity);
}

ParallelBucketOrder make_order(int n, int b, int r, Rng& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below_int(i + 1)]);
  return make_order(n, b, r, perm);
}

BigInt count_ideals(const ParallelBucketOrder& order) {
  BigInt total = 1;
  for (const auto& part : order.parts) {
    BigInt part_count = 1 - static_cast<int>(part.size());
    for (std::uint64_t bucket : part) part_count += BigInt(1) << popcount64(bucket);
    total *= part_count;
  }
  return total;
}

BigInt count_reorderings(const ParallelBucketOrder& order) {
  auto factorial = [](int x) {
    BigInt f = 1;
    for (int i = 2; i <= x; ++i) f *= i;
    return f;
  };
  BigInt total = 1;
  for (const auto& part : order.parts) {
    int size = 0;
    BigInt denom = 1;
    for (std::uint64_t bucket : part) {
      size += popcount64(bucket);
      denom *= factorial(popcount64(bucket));
    }
    total *= factorial(size) / denom;
  }
  return total;
}

ParallelBucketOrder apply_flip(const ParallelBucketOrder& order, int part, int u, int v) {
  if (part < 0 || part >= static_cast<int>(order.parts.size()))
    throw ConfigError("apply_flip: part index out of range");
  const auto& buckets = order.parts[part];
  int iu = -1, iv = -1;
  for (std::size_t i = 0; i < buckets.size(); ++i) {
    if (buckets[i] & (std::uint64_t(1) << u)) iu = static_cast<int>(i);
    if (buckets[i] & (std::uint64_t(1) << v)) iv = static_cast<int>(i);
  }
  if (iu < 0 || iv < 0) throw ConfigError("apply_flip: node not in the chosen part");
  if (iu == iv) throw ConfigError("apply_flip: nodes share a bucket");
  ParallelBucketOrder out = order;
  out.parts[part][iu] ^= (std::uint64_t(1) << u) | (std::uint64_t(1) << v);
  out.parts[part][iv] ^= (std::uint64_t(1) << u) | (std::uint64_t(1) << v);
  return out;
}

ParallelBucketOrder random_reordering(const ParallelBucketOrder& order, Rng& rng) {
  ParallelBucketOrder out = order;
  for (std::size_t p = 0; p < order.parts.size(); ++p) {
    std::vector<int> nodes;
    for (std::uint64_t bucket : order.parts[p])
      for_each_bit(bucket, [&](int v) { nodes.push_back(v); });
    std::sort(nodes.begin(), nodes.end());
    for (int i = static_cast<int>(nodes.size()) - 1; i > 0; --i)
      std::swap(nodes[i], nodes[rng.below_int(i + 1)]);
    std::size_t cursor = 0;
    for (std::size_t i = 0; i < order.parts[p].size(); ++i) {
      const int size = popcount64(order.parts[p][i]);
      std::uint64_t mask = 0;
      for (int j = 0; j < size; ++j) mask |= std::uint64_t(1) << nodes[cursor++];
      out.parts[p][i] = mask;
    }
  }
  return out;
}

std::vector<std::vector<int>> linear_extensions(const ParallelBucketOrder& order) {
  if (order.n > 10) throw ConfigError("linear_extensions: n > 10 not supported");
  const int n = order.n;
  std::vector<int> part_of(n), bucket_of(n);
  for (std::size_t p = 0; p < order.parts.size(); ++p)
    for (std::size_t i = 0; i < order.parts[p].size(); ++i)
      for_each_bit(order.parts[p][i], [&](int v) {
        part_of[v] = static_cast<int>(p);
        bucket_of[v] = static_cast<int>(i);
      });

  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> out;
  const int r = static_cast<int>(order.parts.size());
  std::vector<int> frontier(r), remaining(r);
  do {
    bool ok = true;
    std::fill(frontier.begin(), frontier.end(), 0);
    for (int p = 0; p < r; ++p) remaining[p] = popcount64(order.parts[p][0]);
    for (int pos = 0; pos < n && ok; ++pos) {
      const int v = perm[pos];
      const int p = part_of[v];
      if (bucket_of[v] != frontier[p]) {
        ok = false;
        break;
      }
      if (--remaining[p] == 0 && frontier[p] + 1 < static_cast<int>(order.parts[p].size())) {
        ++frontier[p];
        remaining[p] = popcount64(order.parts[p][frontier[p]]);
      }
    }
    if (ok) out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

bool is_compatible(const std::vector<std::pair<int, int>>& arcs, const ParallelBucketOrder& order) {
  const int n = order.n;
  std::vector<std::vector<int>> adj(n);
  std::vector<int> indeg(n, 0);
  auto add_edge = [&](int u, int v) {
    adj[u].push_back(v);
    ++indeg[v];
  };
  for (const auto& [u, v] : arcs) {
    if (u < 0 || u >= n || v < 0 || v >= n || u == v)
      throw ConfigError("is_compatible: bad arc");
    add_edge(u, v);
  }
  for (const auto& part : order.parts)
    for (std::size_t i = 0; i + 1 < part.size(); ++i) {
      // One edge per consecutive bucket pair node-wise is enough for cycles.
      for_each_bit(part[i], [&](int u) {
        for_each_bit(part[i + 1], [&](int v) { add_edge(u, v); });
      });
    }
  std::vector<int> ready;
  for (int v = 0; v < n; ++v)
    if (indeg[v] == 0) ready.push_back(v);
  int seen = 0;
  while (!ready.empty()) {
    const int u = ready.back();
    ready.pop_back();
    ++seen;
    for (int w : adj[u])
      if (--indeg[w] == 0) ready.push_back(w);
  }
  return seen == n;
}

}  // namespace pomc
