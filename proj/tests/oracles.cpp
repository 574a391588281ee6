#include "oracles.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace oracle {

using namespace pomc;

double seq_predictive_log_score(int v, std::uint64_t parent_mask, const Dataset& data) {
  const int rv = data.arity[v];
  std::map<std::vector<int>, std::vector<int>> counts;  // config -> per-value counts
  double total = 0.0;
  for (int row = 0; row < data.m; ++row) {
    std::vector<int> config;
    for_each_bit(parent_mask, [&](int u) { config.push_back(data.value(row, u)); });
    auto& cell = counts[config];
    if (cell.empty()) cell.assign(rv, 0);
    const int seen = std::accumulate(cell.begin(), cell.end(), 0);
    const int val = data.value(row, v);
    total += std::log((cell[val] + 1.0) / (seen + rv));
    ++cell[val];
  }
  return total;
}

std::vector<std::vector<int>> all_orders(int n) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::vector<std::vector<int>> out;
  do {
    out.push_back(perm);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return out;
}

bool is_extension(const std::vector<int>& order, const ParallelBucketOrder& P) {
  std::vector<int> pos(P.n);
  for (int i = 0; i < P.n; ++i) pos[order[i]] = i;
  for (const auto& part : P.parts)
    for (std::size_t i = 0; i + 1 < part.size(); ++i) {
      int max_before = -1, min_after = P.n;
      for_each_bit(part[i], [&](int u) { max_before = std::max(max_before, pos[u]); });
      for_each_bit(part[i + 1], [&](int u) { min_after = std::min(min_after, pos[u]); });
      if (max_before > min_after) return false;
    }
  return true;
}

std::vector<std::vector<int>> brute_linear_extensions(const ParallelBucketOrder& P) {
  std::vector<std::vector<int>> out;
  for (const auto& order : all_orders(P.n))
    if (is_extension(order, P)) out.push_back(order);
  return out;
}

std::vector<std::uint64_t> brute_ideals(const ParallelBucketOrder& P) {
  std::vector<std::uint64_t> out;
  const std::uint64_t all = P.n == 64 ? ~std::uint64_t(0) : (std::uint64_t(1) << P.n) - 1;
  for (std::uint64_t mask = 0;; ++mask) {
    bool ideal = true;
    for (int v = 0; v < P.n && ideal; ++v) {
      if (!((mask >> v) & 1)) continue;
      for (int u = 0; u < P.n && ideal; ++u)
        if (P.precedes(u, v) && !((mask >> u) & 1)) ideal = false;
    }
    if (ideal) out.push_back(mask);
    if (mask == all) break;
  }
  return out;
}

namespace {

// Distinct assignments of a part's nodes into its bucket-size sequence.
std::vector<std::vector<std::uint64_t>> part_reorderings(const std::vector<std::uint64_t>& part) {
  std::vector<int> nodes;
  for (std::uint64_t bucket : part)
    for_each_bit(bucket, [&](int v) { nodes.push_back(v); });
  std::sort(nodes.begin(), nodes.end());
  std::vector<int> labels;
  for (std::size_t i = 0; i < part.size(); ++i)
    labels.insert(labels.end(), popcount64(part[i]), static_cast<int>(i));
  std::sort(labels.begin(), labels.end());
  std::vector<std::vector<std::uint64_t>> out;
  do {
    std::vector<std::uint64_t> buckets(part.size(), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i)
      buckets[labels[i]] |= std::uint64_t(1) << nodes[i];
    out.push_back(buckets);
  } while (std::next_permutation(labels.begin(), labels.end()));
  return out;
}

}  // namespace

std::vector<ParallelBucketOrder> all_reorderings(const ParallelBucketOrder& P) {
  std::vector<std::vector<std::vector<std::uint64_t>>> per_part;
  for (const auto& part : P.parts) per_part.push_back(part_reorderings(part));
  std::vector<ParallelBucketOrder> out;
  std::vector<std::size_t> pick(per_part.size(), 0);
  while (true) {
    ParallelBucketOrder order;
    order.n = P.n;
    for (std::size_t p = 0; p < per_part.size(); ++p) order.parts.push_back(per_part[p][pick[p]]);
    out.push_back(order);
    std::size_t p = 0;
    while (p < pick.size() && ++pick[p] == per_part[p].size()) pick[p++] = 0;
    if (p == pick.size()) break;
  }
  return out;
}

double node_mass(const ScoreTable& scores, int v, std::uint64_t allowed) {
  double acc = kLogZero;
  for (std::size_t e = 0; e < scores.masks[v].size(); ++e)
    if ((scores.masks[v][e] & ~allowed) == 0) acc = log_add(acc, scores.logw[v][e]);
  return acc;
}

double node_mass_with(const ScoreTable& scores, int v, std::uint64_t allowed, int u) {
  double acc = kLogZero;
  for (std::size_t e = 0; e < scores.masks[v].size(); ++e) {
    const std::uint64_t S = scores.masks[v][e];
    if ((S & ~allowed) == 0 && ((S >> u) & 1)) acc = log_add(acc, scores.logw[v][e]);
  }
  return acc;
}

double brute_log_joint(const ScoreTable& scores, const ParallelBucketOrder& P) {
  double total = kLogZero;
  for (const auto& order : brute_linear_extensions(P)) {
    double term = 0.0;
    std::uint64_t pred = 0;
    for (int v : order) {
      term += node_mass(scores, v, pred);
      pred |= std::uint64_t(1) << v;
    }
    total = log_add(total, term);
  }
  return total;
}

std::vector<double> brute_arc_posteriors(const ScoreTable& scores, const ParallelBucketOrder& P) {
  const int n = scores.n;
  std::vector<double> num(static_cast<std::size_t>(n) * n, kLogZero);
  double total = kLogZero;
  for (const auto& order : brute_linear_extensions(P)) {
    std::vector<std::uint64_t> pred_of(n);
    std::uint64_t pred = 0;
    std::vector<double> mass(n);
    double term = 0.0;
    for (int v : order) {
      pred_of[v] = pred;
      mass[v] = node_mass(scores, v, pred);
      term += mass[v];
      pred |= std::uint64_t(1) << v;
    }
    total = log_add(total, term);
    for (int v = 0; v < n; ++v) {
      const double others = term - mass[v];
      for (int u = 0; u < n; ++u) {
        if (u == v || !((pred_of[v] >> u) & 1)) continue;
        const double with_u = node_mass_with(scores, v, pred_of[v], u);
        auto& cell = num[static_cast<std::size_t>(u) * n + v];
        cell = log_add(cell, others + with_u);
      }
    }
  }
  std::vector<double> out(static_cast<std::size_t>(n) * n, 0.0);
  for (std::size_t i = 0; i < out.size(); ++i)
    out[i] = num[i] == kLogZero ? 0.0 : std::exp(num[i] - total);
  return out;
}

double brute_feature_posterior(const ScoreTable& scores, const ParallelBucketOrder& P,
                               const ModularFeature& feature) {
  double total = kLogZero, kept = kLogZero;
  for (const auto& order : brute_linear_extensions(P)) {
    double term = 0.0, term_kept = 0.0;
    std::uint64_t pred = 0;
    for (int v : order) {
      term += node_mass(scores, v, pred);
      double acc = kLogZero;
      for (std::size_t e = 0; e < scores.masks[v].size(); ++e) {
        const std::uint64_t S = scores.masks[v][e];
        if ((S & ~pred) == 0 && feature.keep(v, S)) acc = log_add(acc, scores.logw[v][e]);
      }
      term_kept += acc;
      pred |= std::uint64_t(1) << v;
    }
    total = log_add(total, term);
    kept = log_add(kept, term_kept);
  }
  return kept == kLogZero ? 0.0 : std::exp(kept - total);
}

Dataset random_dataset(int n, int m, int max_arity, Rng& rng) {
  std::vector<std::vector<std::string>> rows;
  std::vector<int> arity(n);
  for (int v = 0; v < n; ++v) arity[v] = 2 + rng.below_int(std::max(1, max_arity - 1));
  for (int r = 0; r < m; ++r) {
    std::vector<std::string> row;
    for (int v = 0; v < n; ++v) row.push_back(std::to_string(rng.below_int(arity[v])));
    rows.push_back(std::move(row));
  }
  return dataset_from_rows(rows, /*has_header=*/false, "?");
}

ParallelBucketOrder random_order(int n, int r, Rng& rng) {
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  for (int i = n - 1; i > 0; --i) std::swap(perm[i], perm[rng.below_int(i + 1)]);

  ParallelBucketOrder order;
  order.n = n;
  // Random part sizes >= 1 via sorted distinct cut points.
  std::vector<int> cuts{0, n};
  while (static_cast<int>(cuts.size()) < r + 1) {
    const int c = 1 + rng.below_int(n - 1);
    if (std::find(cuts.begin(), cuts.end(), c) == cuts.end()) cuts.push_back(c);
  }
  std::sort(cuts.begin(), cuts.end());
  int cursor = 0;
  for (int p = 0; p < r; ++p) {
    int left = cuts[p + 1] - cuts[p];
    std::vector<std::uint64_t> buckets;
    while (left > 0) {
      const int size = 1 + rng.below_int(left);
      std::uint64_t mask = 0;
      for (int i = 0; i < size; ++i) mask |= std::uint64_t(1) << perm[cursor++];
      buckets.push_back(mask);
      left -= size;
    }
    order.parts.push_back(std::move(buckets));
  }
  order.validate();
  return order;
}

}  // namespace oracle
