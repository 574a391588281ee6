#include "pomc/dataset.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "nlohmann/json.hpp"

namespace pomc {

std::uint64_t Dataset::digest() const {
  std::uint64_t h = fnv1a(&n, sizeof n);
  h = fnv1a(&m, sizeof m, h);
  for (int v = 0; v < n; ++v) h = fnv1a(&arity[v], sizeof(int), h);
  for (int v = 0; v < n; ++v)
    h = fnv1a(columns[v].data(), columns[v].size() * sizeof(int), h);
  return h;
}

void Dataset::validate() const {
  if (static_cast<int>(arity.size()) != n || static_cast<int>(columns.size()) != n)
    throw ConfigError("dataset: inconsistent column count");
  for (int v = 0; v < n; ++v) {
    if (arity[v] < 1) throw ConfigError("dataset: arity must be >= 1");
    if (static_cast<int>(columns[v].size()) != m)
      throw ConfigError("dataset: inconsistent row count");
    for (int val : columns[v])
      if (val < 0 || val >= arity[v]) throw ConfigError("dataset: value out of range");
  }
}

namespace {

std::vector<std::string> split_line(const std::string& line, char delim) {
  std::vector<std::string> out;
  std::string field;
  std::istringstream ss(line);
  while (std::getline(ss, field, delim)) out.push_back(field);
  if (!line.empty() && line.back() == delim) out.push_back("");
  return out;
}

std::string strip_cr(std::string s) {
  if (!s.empty() && s.back() == '\r') s.pop_back();
  return s;
}

}  // namespace

Dataset dataset_from_rows(const std::vector<std::vector<std::string>>& rows,
                          bool has_header, const std::string& missing_token) {
  if (rows.empty()) throw IoError("dataset: no rows");
  std::size_t start = has_header ? 1 : 0;
  if (rows.size() <= start) throw IoError("dataset: no data rows");

  const int n = static_cast<int>(rows[start].size());
  Dataset data;
  data.n = n;
  data.m = static_cast<int>(rows.size() - start);
  data.arity.assign(n, 0);
  data.columns.assign(n, {});
  data.categories.assign(n, {});
  if (has_header) {
    data.labels.assign(rows[0].begin(), rows[0].end());
    if (static_cast<int>(data.labels.size()) != n)
      throw ConfigError("dataset: header width differs from data width");
  } else {
    for (int v = 0; v < n; ++v) data.labels.push_back("v" + std::to_string(v));
  }

  std::vector<std::unordered_map<std::string, int>> code(n);
  for (std::size_t r = start; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (static_cast<int>(row.size()) != n)
      throw ConfigError("dataset: ragged row at line " + std::to_string(r + 1) + " (" +
                        std::to_string(row.size()) + " fields, expected " + std::to_string(n) + ")");
    for (int v = 0; v < n; ++v) {
      const std::string& tok = row[v];
      if (tok == missing_token)
        throw ConfigError("dataset: missing-value token '" + missing_token + "' at line " +
                          std::to_string(r + 1) + ", column " + std::to_string(v));
      auto it = code[v].find(tok);
      int c;
      if (it == code[v].end()) {
        c = static_cast<int>(data.categories[v].size());
        code[v].emplace(tok, c);
        data.categories[v].push_back(tok);
      } else {
        c = it->second;
      }
      data.columns[v].push_back(c);
    }
  }
  for (int v = 0; v < n; ++v) data.arity[v] = static_cast<int>(data.categories[v].size());
  data.validate();
  return data;
}

Dataset load_dataset(const std::string& path, const LoadOptions& opts) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open dataset file: " + path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  char delim = 0;
  while (std::getline(in, line)) {
    line = strip_cr(line);
    if (line.empty()) continue;
    if (delim == 0) delim = line.find('\t') != std::string::npos ? '\t' : ',';
    rows.push_back(split_line(line, delim));
  }
  if (rows.empty()) throw IoError("empty dataset file: " + path);
  return dataset_from_rows(rows, opts.has_header, opts.missing_token);
}

Dataset load_dataset(const std::string& path, bool has_header) {
  LoadOptions opts;
  opts.has_header = has_header;
  return load_dataset(path, opts);
}

void save_dataset(const Dataset& data, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write dataset file: " + path);
  for (int v = 0; v < data.n; ++v) out << (v ? "," : "") << data.labels[v];
  out << '\n';
  for (int r = 0; r < data.m; ++r) {
    for (int v = 0; v < data.n; ++v)
      out << (v ? "," : "") << data.categories[v][data.columns[v][r]];
    out << '\n';
  }
  if (!out) throw IoError("failed writing dataset file: " + path);
}

void NetworkSpec::validate() const {
  if (n < 1) throw ConfigError("network: n must be >= 1");
  if (static_cast<int>(arity.size()) != n || static_cast<int>(parents.size()) != n ||
      static_cast<int>(cpt.size()) != n)
    throw ConfigError("network: field sizes disagree with n");
  for (int v = 0; v < n; ++v) {
    if (arity[v] < 1) throw ConfigError("network: arity must be >= 1");
    std::size_t configs = 1;
    for (int u : parents[v]) {
      if (u < 0 || u >= n || u == v) throw ConfigError("network: bad parent index");
      configs *= static_cast<std::size_t>(arity[u]);
    }
    if (cpt[v].size() != configs)
      throw ConfigError("network: cpt row count mismatch at node " + std::to_string(v));
    for (const auto& row : cpt[v]) {
      if (static_cast<int>(row.size()) != arity[v])
        throw ConfigError("network: cpt row width mismatch at node " + std::to_string(v));
      double s = 0;
      for (double p : row) {
        if (p < 0) throw ConfigError("network: negative cpt entry");
        s += p;
      }
      if (std::fabs(s - 1.0) > 1e-9)
        throw ConfigError("network: cpt row does not sum to 1 at node " + std::to_string(v));
    }
  }
  topological_order();  // throws on cycles
}

std::vector<int> NetworkSpec::topological_order() const {
  std::vector<int> indeg(n, 0);
  for (int v = 0; v < n; ++v) indeg[v] = static_cast<int>(parents[v].size());
  std::vector<std::vector<int>> children(n);
  for (int v = 0; v < n; ++v)
    for (int u : parents[v]) children[u].push_back(v);
  std::vector<int> order;
  std::vector<int> ready;
  for (int v = n - 1; v >= 0; --v)
    if (indeg[v] == 0) ready.push_back(v);
  while (!ready.empty()) {
    int u = ready.back();
    ready.pop_back();
    order.push_back(u);
    for (int w : children[u])
      if (--indeg[w] == 0) ready.push_back(w);
  }
  if (static_cast<int>(order.size()) != n)
    throw ConfigError("network: parent graph has a cycle");
  return order;
}

NetworkSpec load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open network file: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw IoError("network json parse error in " + path + ": " + e.what());
  }
  NetworkSpec spec;
  try {
    spec.arity = j.at("arities").get<std::vector<int>>();
    spec.n = static_cast<int>(spec.arity.size());
    spec.parents = j.at("parents").get<std::vector<std::vector<int>>>();
    spec.cpt = j.at("cpt").get<std::vector<std::vector<std::vector<double>>>>();
    if (j.contains("nodes"))
      spec.labels = j.at("nodes").get<std::vector<std::string>>();
  } catch (const nlohmann::json::exception& e) {
    throw IoError("network json field error in " + path + ": " + e.what());
  }
  if (spec.labels.empty())
    for (int v = 0; v < spec.n; ++v) spec.labels.push_back("v" + std::to_string(v));
  spec.validate();
  return spec;
}

void save_network(const NetworkSpec& spec, const std::string& path) {
  spec.validate();
  nlohmann::json j;
  j["nodes"] = spec.labels;
  j["arities"] = spec.arity;
  j["parents"] = spec.parents;
  j["cpt"] = spec.cpt;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write network file: " + path);
  out << j.dump(1) << '\n';
  if (!out) throw IoError("failed writing network file: " + path);
}

Dataset sample_network_data(const NetworkSpec& spec, int m, std::uint64_t seed) {
  spec.validate();
  if (m < 1) throw ConfigError("sample_network_data: m must be >= 1");
  const auto order = spec.topological_order();
  Rng rng(splitmix64(seed));

  Dataset data;
  data.n = spec.n;
  data.m = m;
  data.arity = spec.arity;
  data.labels = spec.labels;
  data.columns.assign(spec.n, std::vector<int>(m, 0));
  data.categories.assign(spec.n, {});
  for (int v = 0; v < spec.n; ++v)
    for (int c = 0; c < spec.arity[v]; ++c)
      data.categories[v].push_back(std::to_string(c));

  std::vector<int> row(spec.n, 0);
  for (int r = 0; r < m; ++r) {
    for (int v : order) {
      std::size_t config = 0;
      for (int u : spec.parents[v]) config = config * spec.arity[u] + row[u];
      const auto& dist = spec.cpt[v][config];
      double x = rng.unit();
      int c = 0;
      for (; c + 1 < spec.arity[v]; ++c) {
        x -= dist[c];
        if (x < 0) break;
      }
      row[v] = c;
    }
    for (int v = 0; v < spec.n; ++v) data.columns[v][r] = row[v];
  }
  // Generated categories are the digit tokens above, so arity stays as
  // declared even if a category never occurs in a small sample.
  return data;
}

}  // namespace pomc
