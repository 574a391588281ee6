#include "pomc/mcmc.hpp"

#include <algorithm>
#include <atomic>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <thread>

namespace pomc {

void McmcConfig::validate() const {
  if (b < 1) throw ConfigError("mcmc: bucket size must be >= 1");
  if (r < 1) throw ConfigError("mcmc: part count must be >= 1");
  if (samples < 1) throw ConfigError("mcmc: need at least one retained sample");
  if (thin < 1) throw ConfigError("mcmc: thinning interval must be >= 1");
  if (burn_in < 0) throw ConfigError("mcmc: negative burn-in");
  if (chains < 1) throw ConfigError("mcmc: need at least one chain");
}

double ChainTrace::acceptance_ratio() const {
  if (accepted.empty()) return 0.0;
  std::size_t acc = 0;
  for (std::uint8_t a : accepted) acc += a;
  return static_cast<double>(acc) / static_cast<double>(accepted.size());
}

double ChainTrace::acceptance_ratio_after(std::int64_t iter) const {
  if (iter < 0) iter = 0;
  if (static_cast<std::size_t>(iter) >= accepted.size()) return 0.0;
  std::size_t acc = 0, total = 0;
  for (std::size_t i = static_cast<std::size_t>(iter); i < accepted.size(); ++i) {
    acc += accepted[i];
    ++total;
  }
  return static_cast<double>(acc) / static_cast<double>(total);
}

FlipProposal::FlipProposal(const ParallelBucketOrder& order) {
  for (std::size_t p = 0; p < order.parts.size(); ++p) {
    const auto& part = order.parts[p];
    for (std::size_t i = 0; i < part.size(); ++i)
      for (std::size_t j = i + 1; j < part.size(); ++j) {
        Block blk;
        blk.part = static_cast<int>(p);
        blk.bucket_i = static_cast<int>(i);
        blk.bucket_j = static_cast<int>(j);
        blk.pairs = static_cast<std::uint64_t>(popcount64(part[i])) *
                    static_cast<std::uint64_t>(popcount64(part[j]));
        blk.cum = total_;
        total_ += blk.pairs;
        blocks_.push_back(blk);
      }
  }
}

double FlipProposal::log_prob() const {
  if (total_ == 0) return kLogZero;
  return -std::log(static_cast<double>(total_));
}

ProposalTriple FlipProposal::draw(const ParallelBucketOrder& current, Rng& rng) const {
  if (total_ == 0) throw ConfigError("flip proposal: no valid move (single-bucket order)");
  const std::uint64_t t = rng.below(total_);
  // Blocks are few; linear scan keeps the decode obvious.
  const Block* blk = &blocks_.back();
  for (const Block& b : blocks_)
    if (t >= b.cum && t < b.cum + b.pairs) {
      blk = &b;
      break;
    }
  const std::uint64_t off = t - blk->cum;
  const std::uint64_t bi = current.parts[blk->part][blk->bucket_i];
  const std::uint64_t bj = current.parts[blk->part][blk->bucket_j];
  const int size_j = popcount64(bj);
  const int iu = static_cast<int>(off / size_j);
  const int iv = static_cast<int>(off % size_j);
  auto nth_bit = [](std::uint64_t mask, int idx) {
    int b = -1;
    while (idx >= 0) {
      b = lowest_bit(mask);
      mask &= mask - 1;
      --idx;
    }
    return b;
  };
  ProposalTriple triple;
  triple.part = blk->part;
  triple.u = nth_bit(bi, iu);
  triple.v = nth_bit(bj, iv);
  return triple;
}

McmcEngine::McmcEngine(const ScoreTable& scores, const McmcConfig& config)
    : scores_(&scores),
      cfg_(config),
      proto_(make_order(scores.n, config.b, config.r)),
      proposal_(proto_),
      dp_(scores, proto_, config.engine) {
  cfg_.validate();
  if (proposal_.triple_count() == 0)
    throw ConfigError(
        "mcmc: the chosen bucket size leaves no valid flip move (every part is a single "
        "bucket); use exact mode instead");
}

ChainState McmcEngine::init_state(int chain_index) {
  ChainState state{proto_, kLogZero, 0, Rng(Rng::stream_seed(cfg_.base_seed, chain_index))};
  state.order = random_reordering(proto_, state.rng);
  dp_.set_order(state.order);
  dp_.build_alpha();
  state.log_joint = dp_.forward();
  return state;
}

bool McmcEngine::step(ChainState& state, ChainTrace* trace) {
  const ProposalTriple triple = proposal_.draw(state.order, state.rng);
  ParallelBucketOrder candidate = apply_flip(state.order, triple.part, triple.u, triple.v);
  dp_.set_order(candidate);
  dp_.build_alpha();
  const double candidate_lj = dp_.forward();

  double log_ratio = candidate_lj - state.log_joint;
  if (cfg_.hastings_correction) {
    // q is uniform over a type-invariant triple count, so this is exactly 0.
    log_ratio += proposal_.log_prob() - proposal_.log_prob();
  }
  bool accept;
  if (log_ratio >= 0) {
    accept = true;
  } else {
    accept = std::log(state.rng.unit()) < log_ratio;
  }
  if (accept) {
    state.order = std::move(candidate);
    state.log_joint = candidate_lj;
  }
  ++state.iteration;
  if (trace) {
    trace->log_joint.push_back(state.log_joint);
    trace->accepted.push_back(accept ? 1 : 0);
    trace->proposals.push_back(triple);
  }
  return accept;
}

ArcPosteriorMatrix McmcEngine::sample_matrix(const ChainState& state) {
  dp_.set_order(state.order);
  dp_.build_alpha();
  dp_.forward();
  dp_.backward();
  return dp_.arc_posteriors();
}

std::pair<ParallelBucketOrder, ProposalTriple> propose_flip(ChainState& state) {
  FlipProposal proposal(state.order);
  const ProposalTriple triple = proposal.draw(state.order, state.rng);
  return {apply_flip(state.order, triple.part, triple.u, triple.v), triple};
}

bool mh_step(ChainState& state, McmcEngine& engine) { return engine.step(state, nullptr); }

ChainTrace run_chain(const ScoreTable& scores, const McmcConfig& config, int chain_index) {
  McmcEngine engine(scores, config);
  ChainState state = engine.init_state(chain_index);

  ChainTrace trace;
  trace.chain_index = chain_index;
  trace.burn_in = config.burn_in;
  const std::int64_t total = config.total_iterations();
  trace.log_joint.reserve(total);
  trace.accepted.reserve(total);
  trace.proposals.reserve(total);

  for (std::int64_t i = 0; i < config.burn_in; ++i) engine.step(state, &trace);
  for (std::int64_t s = 0; s < config.samples; ++s) {
    for (std::int64_t j = 0; j < config.thin; ++j) engine.step(state, &trace);
    ArcPosteriorMatrix matrix = engine.sample_matrix(state);
    matrix.chain = chain_index;
    trace.sample_iterations.push_back(state.iteration);
    trace.sample_orders.push_back(state.order.descriptor());
    trace.samples.push_back(std::move(matrix));
  }
  return trace;
}

std::vector<ChainTrace> run_chains(const ScoreTable& scores, const McmcConfig& config,
                                   int threads) {
  config.validate();
  std::vector<ChainTrace> traces(config.chains);
  threads = std::max(1, std::min(threads, config.chains));
  if (threads == 1) {
    for (int c = 0; c < config.chains; ++c) traces[c] = run_chain(scores, config, c);
    return traces;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  pool.reserve(threads);
  for (int t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      for (int c = next.fetch_add(1); c < config.chains; c = next.fetch_add(1))
        traces[c] = run_chain(scores, config, c);
    });
  for (auto& th : pool) th.join();
  return traces;
}

ArcPosteriorMatrix estimate_arc_posteriors(const ChainTrace& trace) {
  if (trace.samples.empty()) throw ConfigError("estimate: chain retained no samples");
  const int n = trace.samples[0].n;
  ArcPosteriorMatrix out;
  out.n = n;
  out.mode = ArcPosteriorMatrix::Mode::averaged;
  out.k = trace.samples[0].k;
  out.chain = trace.chain_index;
  out.labels = trace.samples[0].labels;
  out.p.assign(static_cast<std::size_t>(n) * n, 0.0);
  for (const auto& s : trace.samples)
    for (std::size_t i = 0; i < out.p.size(); ++i) out.p[i] += s.p[i];
  for (double& x : out.p) x /= static_cast<double>(trace.samples.size());
  return out;
}

ArcPosteriorMatrix estimate_arc_posteriors(const std::vector<ChainTrace>& traces) {
  if (traces.empty()) throw ConfigError("estimate: no chains");
  ArcPosteriorMatrix pooled = estimate_arc_posteriors(traces[0]);
  for (std::size_t c = 1; c < traces.size(); ++c) {
    const ArcPosteriorMatrix m = estimate_arc_posteriors(traces[c]);
    if (m.n != pooled.n) throw ConfigError("estimate: chain matrices disagree on n");
    for (std::size_t i = 0; i < pooled.p.size(); ++i) pooled.p[i] += m.p[i];
  }
  for (double& x : pooled.p) x /= static_cast<double>(traces.size());
  pooled.chain = -1;
  return pooled;
}

std::pair<double, std::vector<double>> max_arc_deviation(
    const std::vector<ArcPosteriorMatrix>& per_run) {
  if (per_run.size() < 2) throw ConfigError("max_arc_deviation: need at least two runs");
  const int n = per_run[0].n;
  for (const auto& m : per_run)
    if (m.n != n) throw ConfigError("max_arc_deviation: run matrices disagree on n");
  const std::size_t cells = static_cast<std::size_t>(n) * n;
  const double runs = static_cast<double>(per_run.size());
  std::vector<double> sd(cells, 0.0);
  double max_sd = 0.0;
  for (std::size_t i = 0; i < cells; ++i) {
    double mean = 0.0;
    for (const auto& m : per_run) mean += m.p[i];
    mean /= runs;
    double var = 0.0;
    for (const auto& m : per_run) var += (m.p[i] - mean) * (m.p[i] - mean);
    var /= runs;  // population form
    sd[i] = std::sqrt(var);
    max_sd = std::max(max_sd, sd[i]);
  }
  return {max_sd, std::move(sd)};
}

double largest_absolute_error(const ArcPosteriorMatrix& estimate,
                              const ArcPosteriorMatrix& exact) {
  if (estimate.n != exact.n) throw ConfigError("largest_absolute_error: shape mismatch");
  double worst = 0.0;
  for (int u = 0; u < estimate.n; ++u)
    for (int v = 0; v < estimate.n; ++v) {
      if (u == v) continue;
      worst = std::max(worst, std::fabs(estimate.at(u, v) - exact.at(u, v)));
    }
  return worst;
}

void write_chain_trace(const ChainTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write trace: " + path);
  out << "iteration\tlog_score\taccepted\n";
  char num[40];
  for (std::size_t i = 0; i < trace.log_joint.size(); ++i) {
    std::snprintf(num, sizeof num, "%.17g", trace.log_joint[i]);
    out << (i + 1) << '\t' << num << '\t' << int(trace.accepted[i]) << '\n';
  }
  if (!out) throw IoError("failed writing trace: " + path);
}

void write_sample_index(const ChainTrace& trace, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write sample index: " + path);
  out << "iteration\torder\n";
  for (std::size_t i = 0; i < trace.sample_iterations.size(); ++i)
    out << trace.sample_iterations[i] << '\t' << trace.sample_orders[i] << '\n';
  if (!out) throw IoError("failed writing sample index: " + path);
}

ChainTrace read_chain_trace(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open trace: " + path);
  std::string line;
  if (!std::getline(in, line) || line != "iteration\tlog_score\taccepted")
    throw IoError("bad trace header: " + path);
  ChainTrace trace;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::istringstream ss(line);
    std::int64_t iter;
    double score;
    int acc;
    if (!(ss >> iter >> score >> acc)) throw IoError("bad trace line: " + line);
    trace.log_joint.push_back(score);
    trace.accepted.push_back(static_cast<std::uint8_t>(acc));
  }
  return trace;
}

}  // namespace pomc
