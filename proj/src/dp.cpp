#include "pomc/dp.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace pomc {

ModularFeature ModularFeature::all_ones() {
  ModularFeature f;
  f.keep = [](int, std::uint64_t) { return true; };
  return f;
}

ModularFeature ModularFeature::arc(int u, int v) {
  ModularFeature f;
  f.keep = [u, v](int node, std::uint64_t parents) {
    return node != v || ((parents >> u) & 1) != 0;
  };
  return f;
}

namespace {

template <class F>
void parallel_over_nodes(int n, int threads, F&& body) {
  threads = std::max(1, std::min(threads, n));
  if (threads == 1) {
    for (int v = 0; v < n; ++v) body(v);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int v = next.fetch_add(1); v < n; v = next.fetch_add(1)) body(v);
    });
  for (auto& th : pool) th.join();
}

}  // namespace

DpEngine::DpEngine(const ScoreTable& scores, const ParallelBucketOrder& order,
                   const EngineOptions& opts)
    : scores_(&scores), opts_(opts), lat_(order, opts.ideal_cap) {
  if (scores.n != order.n) throw ConfigError("engine: score table and order disagree on n");

  const std::size_t count = lat_.count();
  std::uint64_t max_bucket_states = 0;
  for (int p = 0; p < lat_.part_count(); ++p)
    for (int size : lat_.part(p).bucket_size)
      max_bucket_states = std::max(max_bucket_states, std::uint64_t(1) << size);

  const double bytes = (static_cast<double>(scores.n) + 2.0) * count * sizeof(double) +
                       static_cast<double>(max_bucket_states) * sizeof(double) +
                       (lat_.part_count() > 1 ? count * sizeof(std::uint64_t) : 0.0);
  if (bytes > static_cast<double>(opts_.memory_cap_bytes)) {
    char buf[160];
    std::snprintf(buf, sizeof buf, "dp engine would need %.0f bytes (cap %zu)", bytes,
                  opts_.memory_cap_bytes);
    throw ResourceError(buf);
  }

  alpha_.n = scores.n;
  alpha_.count = count;
  alpha_.values.resize(static_cast<std::size_t>(scores.n) * count);
  fb_.g.resize(count);
  fb_.h.resize(count);
  base_.resize(scores.n);
  transform_.resize(max_bucket_states);
}

void DpEngine::set_order(const ParallelBucketOrder& order) {
  IdealLattice lat(order, opts_.ideal_cap);
  if (lat.count() != lat_.count()) {
    // Different lattice shape: re-run the constructor checks and buffers.
    *this = DpEngine(*scores_, order, opts_);
    return;
  }
  lat_ = std::move(lat);
  has_alpha_ = has_fwd_ = has_bwd_ = false;
}

void DpEngine::build_alpha() { build_alpha_impl(nullptr); }
void DpEngine::build_alpha(const ModularFeature& feature) { build_alpha_impl(&feature); }

void DpEngine::build_alpha_impl(const ModularFeature* feature) {
  if (lat_.part_count() == 1)
    alpha_single_part(feature);
  else
    alpha_generic(feature);
  has_alpha_ = true;
  has_fwd_ = has_bwd_ = false;
}

// Single bucket order: assignment pass drops every stored parent set into the
// cell (top bucket i, T = S intersect B_i) of its top bucket, writing directly
// into alpha; a subset zeta transform per bucket then turns cells into
// partial sums, and a left-to-right sweep adds the running complete-prefix
// value. Cost O(sum_v |entries|) log-adds plus O(n |I| b) for the transforms.
void DpEngine::alpha_single_part(const ModularFeature* feature) {
  const auto& lay = lat_.part(0);
  const int l = static_cast<int>(lay.bucket_size.size());
  const std::size_t count = lat_.count();
  const auto& buckets = lat_.order().parts[0];
  const int n = scores_->n;

  parallel_over_nodes(n, opts_.threads, [&](int v) {
    double* av = alpha_.values.data() + static_cast<std::size_t>(v) * count;
    std::fill(av, av + count, kLogZero);
    double base = kLogZero;

    const auto& masks = scores_->masks[v];
    const auto& ws = scores_->logw[v];
    for (std::size_t e = 0; e < masks.size(); ++e) {
      const std::uint64_t mask = masks[e];
      if (feature && !feature->keep(v, mask)) continue;
      if (mask == 0) {
        base = ws[e];
        continue;
      }
      int top = -1;
      std::uint64_t rest = mask;
      while (rest) {
        const int u = lowest_bit(rest);
        rest &= rest - 1;
        top = std::max(top, lat_.place(u).bucket);
      }
      std::uint64_t T = 0;
      for_each_bit(mask & buckets[top], [&](int u) { T |= std::uint64_t(1) << lat_.place(u).bit; });
      double& cell = av[lay.state_offset[top] + T];
      cell = log_add(cell, ws[e]);
    }

    base_[v] = base;
    av[0] = base;
    for (int i = 0; i < l; ++i) {
      const std::size_t offset = lay.state_offset[i];
      const int b = lay.bucket_size[i];
      const std::uint64_t full = (std::uint64_t(1) << b) - 1;
      double* cells = av + offset;  // cells[1..full]; cells[0] belongs to the prefix
      for (int beta = 0; beta < b; ++beta) {
        const std::uint64_t bit = std::uint64_t(1) << beta;
        for (std::uint64_t T = bit; T <= full; T = (T + 1) | bit) {
          if (T == bit) continue;  // source would be the empty cell
          cells[T] = log_add(cells[T], cells[T ^ bit]);
        }
      }
      base = av[offset];  // alpha at the complete prefix before bucket i
      for (std::uint64_t T = 1; T <= full; ++T) cells[T] = log_add(base, cells[T]);
    }
  });
}

// Parallel parts: direct evaluation, log-summing stored sets against each
// ideal mask. Accepted slow path; the default configuration is r = 1.
void DpEngine::alpha_generic(const ModularFeature* feature) {
  const std::size_t count = lat_.count();
  const int n = scores_->n;
  std::vector<std::uint64_t> masks_by_idx(count);
  IdealLattice::Cursor cur = lat_.begin();
  for (std::size_t idx = 0; idx < count; ++idx) {
    if (idx) cur.advance();
    std::uint64_t mask = 0;
    for (int p = 0; p < lat_.part_count(); ++p) {
      const auto& st = cur.states()[p];
      if (st.bucket < 0) continue;
      const auto& lay = lat_.part(p);
      mask |= lay.prefix_mask[st.bucket];
      for_each_bit(st.T, [&](int b) {
        mask |= std::uint64_t(1) << lay.bucket_nodes[st.bucket][b];
      });
    }
    masks_by_idx[idx] = mask;
  }

  parallel_over_nodes(n, opts_.threads, [&](int v) {
    double* av = alpha_.values.data() + static_cast<std::size_t>(v) * count;
    const auto& masks = scores_->masks[v];
    const auto& ws = scores_->logw[v];
    for (std::size_t idx = 0; idx < count; ++idx) {
      const std::uint64_t M = masks_by_idx[idx];
      double a = kLogZero;
      for (std::size_t e = 0; e < masks.size(); ++e) {
        if ((masks[e] & ~M) != 0) continue;
        if (feature && !feature->keep(v, masks[e])) continue;
        a = log_add(a, ws[e]);
      }
      av[idx] = a;
    }
    base_[v] = av[0];
  });
}

double DpEngine::forward() {
  if (!has_alpha_) throw ConfigError("engine: forward() before build_alpha()");
  const std::size_t count = lat_.count();
  const double* alpha = alpha_.values.data();
  double* g = fb_.g.data();
  g[0] = 0.0;
  IdealLattice::Cursor cur = lat_.begin();
  for (std::size_t idx = 1; idx < count; ++idx) {
    cur.advance();
    double acc = kLogZero;
    for (int p = 0; p < lat_.part_count(); ++p) {
      const auto& st = cur.states()[p];
      if (st.bucket < 0) continue;
      const auto& lay = lat_.part(p);
      const std::uint64_t stride = lat_.stride(p);
      std::uint64_t T = st.T;
      while (T) {
        const int beta = lowest_bit(T);
        T &= T - 1;
        const int v = lay.bucket_nodes[st.bucket][beta];
        const std::size_t sub = idx - (std::uint64_t(1) << beta) * stride;
        acc = log_add(acc, g[sub] + alpha[static_cast<std::size_t>(v) * count + sub]);
      }
    }
    g[idx] = acc;
  }
  fb_.log_total = g[count - 1];
  has_fwd_ = true;
  return fb_.log_total;
}

void DpEngine::backward() {
  if (!has_alpha_) throw ConfigError("engine: backward() before build_alpha()");
  const std::size_t count = lat_.count();
  const double* alpha = alpha_.values.data();
  double* h = fb_.h.data();
  h[count - 1] = 0.0;
  if (count == 1) {
    has_bwd_ = true;
    return;
  }
  IdealLattice::Cursor cur = lat_.end();
  for (std::size_t step = 0; step + 1 < count; ++step) {
    cur.retreat();
    const std::size_t idx = cur.index();
    double acc = kLogZero;
    for (int p = 0; p < lat_.part_count(); ++p) {
      const auto& st = cur.states()[p];
      const auto& lay = lat_.part(p);
      const std::uint64_t stride = lat_.stride(p);
      const int l = static_cast<int>(lay.bucket_size.size());
      int bucket;
      std::uint64_t addable;
      if (st.bucket < 0) {
        bucket = 0;
        addable = (std::uint64_t(1) << lay.bucket_size[0]) - 1;
      } else {
        const std::uint64_t full = (std::uint64_t(1) << lay.bucket_size[st.bucket]) - 1;
        if (st.T == full) {
          if (st.bucket + 1 >= l) continue;  // part complete
          bucket = st.bucket + 1;
          addable = (std::uint64_t(1) << lay.bucket_size[bucket]) - 1;
        } else {
          bucket = st.bucket;
          addable = full ^ st.T;
        }
      }
      while (addable) {
        const int beta = lowest_bit(addable);
        addable &= addable - 1;
        const int v = lay.bucket_nodes[bucket][beta];
        const std::size_t sup = idx + (std::uint64_t(1) << beta) * stride;
        acc = log_add(acc, alpha[static_cast<std::size_t>(v) * count + idx] + h[sup]);
      }
    }
    h[idx] = acc;
  }
  has_bwd_ = true;
}

ArcPosteriorMatrix DpEngine::arc_posteriors() {
  if (!has_fwd_ || !has_bwd_) throw ConfigError("engine: arc_posteriors() needs forward+backward");
  const int n = scores_->n;
  const std::size_t count = lat_.count();
  const double* g = fb_.g.data();
  const double* h = fb_.h.data();
  const double total = fb_.log_total;

  std::vector<double> num(static_cast<std::size_t>(n) * n, kLogZero);

  if (lat_.part_count() == 1) {
    const auto& lay = lat_.part(0);
    const auto& buckets = lat_.order().parts[0];
    // Per child: placement weights over its bucket, then a superset-sum
    // transform so each stored set reads its own compatibility mass.
    std::vector<std::vector<double>> scratch;
    const bool threaded = opts_.threads > 1;
    if (threaded) scratch.assign(std::max(1, std::min(opts_.threads, n)), transform_);
    std::atomic<int> slot{0};
    parallel_over_nodes(n, opts_.threads, [&](int v) {
      thread_local int my_slot = -1;
      double* m;
      if (threaded) {
        if (my_slot < 0) my_slot = slot.fetch_add(1) % static_cast<int>(scratch.size());
        m = scratch[my_slot].data();
      } else {
        m = transform_.data();
      }
      const auto& pv = lat_.place(v);
      const int i = pv.bucket;
      const int b = lay.bucket_size[i];
      const std::uint64_t full = (std::uint64_t(1) << b) - 1;
      const std::uint64_t vbit = pv.part_delta;
      const std::size_t offset = lay.state_offset[i];
      for (std::uint64_t T = 0; T <= full; ++T)
        m[T] = (T & vbit) ? kLogZero : g[offset + T] + h[offset + T + vbit];
      for (int beta = 0; beta < b; ++beta) {
        const std::uint64_t bit = std::uint64_t(1) << beta;
        if (bit == vbit) continue;
        for (std::uint64_t T = 0; T <= full; ++T)
          if (!(T & bit)) m[T] = log_add(m[T], m[T | bit]);
      }
      const std::uint64_t bucket_mask = buckets[i];
      const std::uint64_t later = lay.suffix_mask[i];
      const auto& masks = scores_->masks[v];
      const auto& ws = scores_->logw[v];
      for (std::size_t e = 0; e < masks.size(); ++e) {
        const std::uint64_t S = masks[e];
        if (S == 0 || (S & later)) continue;
        std::uint64_t Tloc = 0;
        for_each_bit(S & bucket_mask,
                     [&](int u) { Tloc |= std::uint64_t(1) << lat_.place(u).bit; });
        const double val = ws[e] + m[Tloc];
        for_each_bit(S, [&](int u) {
          double& cell = num[static_cast<std::size_t>(u) * n + v];
          cell = log_add(cell, val);
        });
      }
    });
  } else {
    // Generic path: walk every ideal once; for each node currently addable,
    // fold g(I) h(I u {v}) into every stored set that fits inside I.
    IdealLattice::Cursor cur = lat_.begin();
    for (std::size_t idx = 0; idx < count; ++idx) {
      if (idx) cur.advance();
      std::uint64_t M = 0;
      for (int p = 0; p < lat_.part_count(); ++p) {
        const auto& st = cur.states()[p];
        if (st.bucket < 0) continue;
        const auto& lay = lat_.part(p);
        M |= lay.prefix_mask[st.bucket];
        for_each_bit(st.T, [&](int b) {
          M |= std::uint64_t(1) << lay.bucket_nodes[st.bucket][b];
        });
      }
      for (int p = 0; p < lat_.part_count(); ++p) {
        const auto& st = cur.states()[p];
        const auto& lay = lat_.part(p);
        const std::uint64_t stride = lat_.stride(p);
        const int l = static_cast<int>(lay.bucket_size.size());
        int bucket;
        std::uint64_t addable;
        if (st.bucket < 0) {
          bucket = 0;
          addable = (std::uint64_t(1) << lay.bucket_size[0]) - 1;
        } else {
          const std::uint64_t full = (std::uint64_t(1) << lay.bucket_size[st.bucket]) - 1;
          if (st.T == full) {
            if (st.bucket + 1 >= l) continue;
            bucket = st.bucket + 1;
            addable = (std::uint64_t(1) << lay.bucket_size[bucket]) - 1;
          } else {
            bucket = st.bucket;
            addable = full ^ st.T;
          }
        }
        while (addable) {
          const int beta = lowest_bit(addable);
          addable &= addable - 1;
          const int v = lay.bucket_nodes[bucket][beta];
          const std::size_t sup = idx + (std::uint64_t(1) << beta) * stride;
          const double placed = g[idx] + h[sup];
          const auto& masks = scores_->masks[v];
          const auto& ws = scores_->logw[v];
          for (std::size_t e = 0; e < masks.size(); ++e) {
            const std::uint64_t S = masks[e];
            if (S == 0 || (S & ~M)) continue;
            const double val = ws[e] + placed;
            for_each_bit(S, [&](int u) {
              double& cell = num[static_cast<std::size_t>(u) * n + v];
              cell = log_add(cell, val);
            });
          }
        }
      }
    }
  }

  ArcPosteriorMatrix out;
  out.n = n;
  out.mode = ArcPosteriorMatrix::Mode::conditional;
  out.k = scores_->k;
  out.order_descriptor = lat_.order().descriptor();
  out.p.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      const double x = std::exp(num[static_cast<std::size_t>(u) * n + v] - total);
      out.at(u, v) = std::min(1.0, std::max(0.0, x));
    }
  return out;
}

AlphaTables build_alpha(const ScoreTable& scores, const ParallelBucketOrder& order,
                        const EngineOptions& opts) {
  DpEngine engine(scores, order, opts);
  engine.build_alpha();
  return engine.alpha();
}

ForwardBackward forward_backward(const ScoreTable& scores, const ParallelBucketOrder& order,
                                 const EngineOptions& opts) {
  DpEngine engine(scores, order, opts);
  engine.build_alpha();
  engine.forward();
  engine.backward();
  return engine.fb();
}

double log_joint(const ScoreTable& scores, const ParallelBucketOrder& order,
                 const EngineOptions& opts) {
  DpEngine engine(scores, order, opts);
  engine.build_alpha();
  return engine.forward();
}

ArcPosteriorMatrix arc_posteriors(const ScoreTable& scores, const ParallelBucketOrder& order,
                                  const EngineOptions& opts) {
  DpEngine engine(scores, order, opts);
  engine.build_alpha();
  engine.forward();
  engine.backward();
  return engine.arc_posteriors();
}

double feature_posterior(const ScoreTable& scores, const ParallelBucketOrder& order,
                         const ModularFeature& feature, const EngineOptions& opts) {
  DpEngine engine(scores, order, opts);
  engine.build_alpha();
  const double plain = engine.forward();
  engine.build_alpha(feature);
  const double filtered = engine.forward();
  if (filtered == kLogZero) return 0.0;
  return std::min(1.0, std::exp(filtered - plain));
}

std::pair<double, ArcPosteriorMatrix> exact_posteriors(const ScoreTable& scores, int exact_cap,
                                                       int threads,
                                                       std::size_t memory_cap_bytes) {
  if (scores.n > exact_cap)
    throw ResourceError("exact mode: n = " + std::to_string(scores.n) + " exceeds the cap of " +
                        std::to_string(exact_cap));
  EngineOptions opts;
  opts.ideal_cap = std::uint64_t(1) << scores.n;
  opts.threads = threads;
  opts.memory_cap_bytes = memory_cap_bytes;
  const ParallelBucketOrder order = make_order(scores.n, scores.n, 1);
  DpEngine engine(scores, order, opts);
  engine.build_alpha();
  const double evidence = engine.forward();
  engine.backward();
  ArcPosteriorMatrix matrix = engine.arc_posteriors();
  matrix.mode = ArcPosteriorMatrix::Mode::exact;
  return {evidence, matrix};
}

namespace {

const char* mode_name(ArcPosteriorMatrix::Mode mode) {
  switch (mode) {
    case ArcPosteriorMatrix::Mode::exact: return "exact";
    case ArcPosteriorMatrix::Mode::conditional: return "conditional";
    case ArcPosteriorMatrix::Mode::averaged: return "averaged";
  }
  return "conditional";
}

std::string sanitize_label(std::string s) {
  for (char& c : s)
    if (c == ',' || c == '\n' || c == '\r') c = '_';
  return s;
}

}  // namespace

void write_arc_matrix(const ArcPosteriorMatrix& matrix, const std::string& path,
                      double log_evidence) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write arc matrix: " + path);
  out << "# pomc arc-matrix mode=" << mode_name(matrix.mode) << " k=" << matrix.k;
  if (!matrix.order_descriptor.empty()) out << " order=" << matrix.order_descriptor;
  if (matrix.chain >= 0) out << " chain=" << matrix.chain;
  if (!std::isnan(log_evidence)) {
    char buf[48];
    std::snprintf(buf, sizeof buf, "%.17g", log_evidence);
    out << " log_evidence=" << buf;
  }
  out << '\n';
  const int n = matrix.n;
  std::vector<std::string> labels = matrix.labels;
  if (static_cast<int>(labels.size()) != n) {
    labels.clear();
    for (int v = 0; v < n; ++v) labels.push_back("v" + std::to_string(v));
  }
  for (int v = 0; v < n; ++v) out << ',' << sanitize_label(labels[v]);
  out << '\n';
  char num[32];
  for (int u = 0; u < n; ++u) {
    out << sanitize_label(labels[u]);
    for (int v = 0; v < n; ++v) {
      std::snprintf(num, sizeof num, "%.6f", matrix.at(u, v));
      out << ',' << num;
    }
    out << '\n';
  }
  if (!out) throw IoError("failed writing arc matrix: " + path);
}

ArcPosteriorMatrix read_arc_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open arc matrix: " + path);
  ArcPosteriorMatrix matrix;
  std::string line;
  if (!std::getline(in, line) || line.rfind("# pomc arc-matrix", 0) != 0)
    throw IoError("bad arc matrix header: " + path);
  {
    std::istringstream ss(line);
    std::string tok;
    while (ss >> tok) {
      const auto eq = tok.find('=');
      if (eq == std::string::npos) continue;
      const std::string key = tok.substr(0, eq), val = tok.substr(eq + 1);
      if (key == "mode") {
        if (val == "exact") matrix.mode = ArcPosteriorMatrix::Mode::exact;
        else if (val == "averaged") matrix.mode = ArcPosteriorMatrix::Mode::averaged;
        else matrix.mode = ArcPosteriorMatrix::Mode::conditional;
      } else if (key == "k") {
        matrix.k = std::stoi(val);
      } else if (key == "chain") {
        matrix.chain = std::stoi(val);
      } else if (key == "order") {
        matrix.order_descriptor = val;
      }
    }
  }
  if (!std::getline(in, line)) throw IoError("arc matrix missing label row: " + path);
  {
    std::istringstream ss(line);
    std::string tok;
    bool first = true;
    while (std::getline(ss, tok, ',')) {
      if (first) {
        first = false;
        continue;
      }
      matrix.labels.push_back(tok);
    }
  }
  matrix.n = static_cast<int>(matrix.labels.size());
  matrix.p.assign(static_cast<std::size_t>(matrix.n) * matrix.n, 0.0);
  int row = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (row >= matrix.n) throw IoError("arc matrix has extra rows: " + path);
    std::istringstream ss(line);
    std::string tok;
    int col = -1;
    while (std::getline(ss, tok, ',')) {
      if (col >= 0) {
        if (col >= matrix.n) throw IoError("arc matrix row too wide: " + path);
        matrix.at(row, col) = std::stod(tok);
      }
      ++col;
    }
    if (col != matrix.n) throw IoError("arc matrix row too narrow: " + path);
    ++row;
  }
  if (row != matrix.n) throw IoError("arc matrix truncated: " + path);
  return matrix;
}

}  // namespace pomc
