#include "pomc/scores.hpp"

#include <algorithm>
#include <atomic>
#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace pomc {

double ScoreTable::find_log_weight(int v, std::uint64_t parent_mask) const {
  const auto& ms = masks[v];
  for (std::size_t i = 0; i < ms.size(); ++i)
    if (ms[i] == parent_mask) return logw[v][i];
  throw ConfigError("score table: parent set not stored");
}

void ScoreTable::validate() const {
  if (static_cast<int>(masks.size()) != n || static_cast<int>(logw.size()) != n)
    throw ConfigError("score table: node count mismatch");
  const std::size_t expected = static_cast<std::size_t>(entry_count_estimate(n, k));
  for (int v = 0; v < n; ++v) {
    if (masks[v].size() != expected || logw[v].size() != expected)
      throw ConfigError("score table: entry count mismatch at node " + std::to_string(v));
    for (std::size_t i = 0; i < masks[v].size(); ++i) {
      if (masks[v][i] & (std::uint64_t(1) << v))
        throw ConfigError("score table: stored set contains its own node");
      if (!std::isfinite(logw[v][i]))
        throw ConfigError("score table: non-finite weight");
    }
  }
}

double log_parent_prior(int v, int size, int n) {
  (void)v;  // uniform across nodes
  if (size < 0 || size > n - 1) throw ConfigError("log_parent_prior: size out of range");
  return -log_binomial(n - 1, size);
}

double log_local_score(int v, std::uint64_t parent_mask, const Dataset& data) {
  if (parent_mask & (std::uint64_t(1) << v))
    throw ConfigError("log_local_score: parent set contains the node");
  const int rv = data.arity[v];
  std::vector<int> parents;
  for_each_bit(parent_mask, [&](int u) { parents.push_back(u); });

  std::int64_t configs = 1;
  for (int u : parents) {
    configs *= data.arity[u];
    if (configs > (std::int64_t(1) << 40)) break;  // force sparse path
  }

  const std::int64_t dense_limit = std::max<std::int64_t>(1024, 8 * data.m);
  const double lg_rv = std::lgamma(static_cast<double>(rv));
  double total = 0.0;

  if (configs <= dense_limit) {
    std::vector<int> counts(static_cast<std::size_t>(configs) * rv, 0);
    for (int r = 0; r < data.m; ++r) {
      std::int64_t j = 0;
      for (int u : parents) j = j * data.arity[u] + data.columns[u][r];
      ++counts[static_cast<std::size_t>(j) * rv + data.columns[v][r]];
    }
    for (std::int64_t j = 0; j < configs; ++j) {
      int nj = 0;
      double sum_lg = 0.0;
      for (int c = 0; c < rv; ++c) {
        const int njc = counts[static_cast<std::size_t>(j) * rv + c];
        nj += njc;
        sum_lg += std::lgamma(njc + 1.0);
      }
      if (nj == 0) continue;  // unobserved configuration contributes factor 1
      total += lg_rv - std::lgamma(nj + rv + 0.0) + sum_lg;
    }
  } else {
    std::unordered_map<std::int64_t, std::vector<int>> counts;
    for (int r = 0; r < data.m; ++r) {
      std::int64_t j = 0;
      for (int u : parents) j = j * data.arity[u] + data.columns[u][r];
      auto& cell = counts[j];
      if (cell.empty()) cell.assign(rv, 0);
      ++cell[data.columns[v][r]];
    }
    // Deterministic order: sort observed configurations.
    std::vector<std::int64_t> keys;
    keys.reserve(counts.size());
    for (const auto& kv : counts) keys.push_back(kv.first);
    std::sort(keys.begin(), keys.end());
    for (std::int64_t key : keys) {
      const auto& cell = counts[key];
      int nj = 0;
      double sum_lg = 0.0;
      for (int c = 0; c < rv; ++c) {
        nj += cell[c];
        sum_lg += std::lgamma(cell[c] + 1.0);
      }
      total += lg_rv - std::lgamma(nj + rv + 0.0) + sum_lg;
    }
  }
  return total;
}

std::vector<std::uint64_t> subsets_up_to(const std::vector<int>& pool, int kmax) {
  std::vector<std::uint64_t> out;
  const int p = static_cast<int>(pool.size());
  out.push_back(0);
  for (int size = 1; size <= std::min(kmax, p); ++size) {
    std::vector<int> idx(size);
    for (int i = 0; i < size; ++i) idx[i] = i;
    while (true) {
      std::uint64_t mask = 0;
      for (int i : idx) mask |= std::uint64_t(1) << pool[i];
      out.push_back(mask);
      int i = size - 1;
      while (i >= 0 && idx[i] == p - size + i) --i;
      if (i < 0) break;
      ++idx[i];
      for (int j = i + 1; j < size; ++j) idx[j] = idx[j - 1] + 1;
    }
  }
  return out;
}

double entry_count_estimate(int n, int k) {
  double total = 0.0;
  double c = 1.0;  // C(n-1, 0)
  for (int j = 0; j <= k; ++j) {
    total += c;
    c = c * (n - 1 - j) / (j + 1);
  }
  return total;
}

ScoreTable build_score_table(const Dataset& data, int k, const ScoreBuildOptions& opts) {
  if (k < 0 || k > data.n - 1) throw ConfigError("build_score_table: require 0 <= k <= n-1");
  if (data.n > 64) throw ConfigError("build_score_table: n > 64 unsupported");

  const double entries = entry_count_estimate(data.n, k);
  const double bytes = entries * data.n * (sizeof(std::uint64_t) + sizeof(double));
  if (bytes > static_cast<double>(opts.memory_cap_bytes)) {
    char buf[160];
    std::snprintf(buf, sizeof buf,
                  "score table would need %.0f bytes (cap %zu); lower k or raise the cap",
                  bytes, opts.memory_cap_bytes);
    throw ResourceError(buf);
  }

  ScoreTable table;
  table.n = data.n;
  table.k = k;
  table.data_digest = data.digest();
  table.masks.assign(data.n, {});
  table.logw.assign(data.n, {});

  auto build_node = [&](int v) {
    std::vector<int> pool;
    pool.reserve(data.n - 1);
    for (int u = 0; u < data.n; ++u)
      if (u != v) pool.push_back(u);
    auto ms = subsets_up_to(pool, k);
    std::vector<double> ws(ms.size());
    for (std::size_t i = 0; i < ms.size(); ++i)
      ws[i] = log_parent_prior(v, popcount64(ms[i]), data.n) + log_local_score(v, ms[i], data);
    table.masks[v] = std::move(ms);
    table.logw[v] = std::move(ws);
  };

  const int threads = std::max(1, std::min(opts.threads, data.n));
  if (threads == 1) {
    for (int v = 0; v < data.n; ++v) build_node(v);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int t = 0; t < threads; ++t)
      pool.emplace_back([&] {
        for (int v = next.fetch_add(1); v < data.n; v = next.fetch_add(1)) build_node(v);
      });
    for (auto& th : pool) th.join();
  }
  return table;
}

void write_score_cache(const ScoreTable& table, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write score cache: " + path);
  char buf[64];
  std::snprintf(buf, sizeof buf, "%016" PRIx64, table.data_digest);
  out << "# pomc scores n=" << table.n << " k=" << table.k << " data=" << buf << "\n";
  char num[64];
  for (int v = 0; v < table.n; ++v) {
    for (std::size_t i = 0; i < table.masks[v].size(); ++i) {
      out << v << ' ';
      if (table.masks[v][i] == 0) {
        out << '-';
      } else {
        bool first = true;
        for_each_bit(table.masks[v][i], [&](int u) {
          if (!first) out << ',';
          out << u;
          first = false;
        });
      }
      std::snprintf(num, sizeof num, "%.17g", table.logw[v][i]);
      out << ' ' << num << '\n';
    }
  }
  if (!out) throw IoError("failed writing score cache: " + path);
}

ScoreTable read_score_cache(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open score cache: " + path);
  std::string header;
  if (!std::getline(in, header)) throw IoError("empty score cache: " + path);
  ScoreTable table;
  std::uint64_t digest = 0;
  if (std::sscanf(header.c_str(), "# pomc scores n=%d k=%d data=%" SCNx64, &table.n, &table.k,
                  &digest) != 3)
    throw IoError("bad score cache header: " + header);
  table.data_digest = digest;
  table.masks.assign(table.n, {});
  table.logw.assign(table.n, {});

  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    std::istringstream ss(line);
    int v;
    std::string set_text;
    double w;
    if (!(ss >> v >> set_text >> w)) throw IoError("bad score cache line: " + line);
    if (v < 0 || v >= table.n) throw IoError("score cache node out of range: " + line);
    std::uint64_t mask = 0;
    if (set_text != "-") {
      std::istringstream fs(set_text);
      std::string tok;
      while (std::getline(fs, tok, ',')) {
        const int u = std::stoi(tok);
        if (u < 0 || u >= table.n) throw IoError("score cache parent out of range: " + line);
        mask |= std::uint64_t(1) << u;
      }
    }
    table.masks[v].push_back(mask);
    table.logw[v].push_back(w);
  }
  table.validate();
  return table;
}

}  // namespace pomc
