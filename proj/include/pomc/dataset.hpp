#ifndef POMC_DATASET_HPP
#define POMC_DATASET_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "pomc/util.hpp"

namespace pomc {

// A fully categorical data matrix. Category tokens are mapped to dense
// indices 0..arity[v]-1 in order of first appearance per column; missing
// entries are rejected at load time.
struct Dataset {
  int n = 0;  // variables (columns)
  int m = 0;  // rows
  std::vector<int> arity;                              // r_v per variable
  std::vector<std::vector<int>> columns;               // columns[v][row]
  std::vector<std::string> labels;                     // column names
  std::vector<std::vector<std::string>> categories;    // categories[v][code] = token

  int value(int row, int v) const { return columns[v][row]; }

  // Stable content digest over (n, m, arities, values).
  std::uint64_t digest() const;

  void validate() const;
};

struct LoadOptions {
  bool has_header = true;
  std::string missing_token = "?";
};

// Reads comma- or tab-separated categorical text (delimiter auto-detected
// from the first line). Throws IoError on unreadable/empty files and
// ConfigError on ragged rows or a missing-value token.
Dataset load_dataset(const std::string& path, const LoadOptions& opts = {});
Dataset load_dataset(const std::string& path, bool has_header);

// Parses rows already split into tokens (used by load_dataset and tests).
Dataset dataset_from_rows(const std::vector<std::vector<std::string>>& rows,
                          bool has_header, const std::string& missing_token);

void save_dataset(const Dataset& data, const std::string& path);

// A known Bayesian network used to generate synthetic data. cpt[v] holds one
// distribution row per parent configuration; configurations are enumerated in
// mixed-radix order of the parent list, first listed parent most significant.
struct NetworkSpec {
  int n = 0;
  std::vector<int> arity;
  std::vector<std::vector<int>> parents;                 // ordered parent lists
  std::vector<std::vector<std::vector<double>>> cpt;     // cpt[v][config][value]
  std::vector<std::string> labels;

  void validate() const;  // acyclicity, row counts, row sums within 1e-9
  std::vector<int> topological_order() const;
};

NetworkSpec load_network(const std::string& path);
void save_network(const NetworkSpec& spec, const std::string& path);

// m i.i.d. rows by ancestral sampling along a topological order.
// Deterministic for a fixed seed.
Dataset sample_network_data(const NetworkSpec& spec, int m, std::uint64_t seed);

}  // namespace pomc

#endif  // POMC_DATASET_HPP
