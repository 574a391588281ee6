#include "pomc/experiment.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

namespace fs = std::filesystem;

namespace pomc {

int auto_bucket_size(int n, int k) {
  if (n < 1) throw ConfigError("auto_bucket_size: n must be >= 1");
  const double raw = (k - 2) * std::log2(static_cast<double>(n));
  int b = static_cast<int>(std::lround(raw));
  b = std::max(1, std::min({b, n, 20}));
  return b;
}

namespace {

std::vector<int> parse_bucket_list(const std::string& text) {
  std::vector<int> out;
  std::istringstream ss(text);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    if (tok.empty()) continue;
    out.push_back(std::stoi(tok));
  }
  if (out.empty()) throw ConfigError("empty bucket-size list");
  return out;
}

}  // namespace

ExperimentConfig resolve_defaults(ExperimentConfig config, int n) {
  if (n < 1) throw ConfigError("resolve_defaults: n must be >= 1");
  if (config.parts < 1) config.parts = 1;

  if (config.bucket_size == "auto") {
    if (config.k < 0) throw ConfigError("bucket size 'auto' needs --max-indegree");
    config.resolved_b = auto_bucket_size(n, config.k);
    config.bench_b_values = {config.resolved_b};
  } else {
    config.bench_b_values = parse_bucket_list(config.bucket_size);
    config.resolved_b = config.bench_b_values.front();
    if (config.bench_b_values.size() > 1 && config.mode != ExperimentConfig::Mode::bench)
      throw ConfigError("a bucket-size list is only valid in bench mode");
    for (int b : config.bench_b_values)
      if (b < 1 || b > n) throw ConfigError("bucket size out of range [1, n]");
  }

  if (config.burn_in < 0) config.burn_in = 10000;
  if (config.thin < 0) config.thin = 100;
  if (config.samples < 0) config.samples = 100;
  if (config.iters >= 0 && config.iters != config.burn_in + config.samples * config.thin)
    throw ConfigError("--iters contradicts --burnin + --samples * --thin");
  return config;
}

std::vector<std::pair<int, double>> bench_iteration_time(const ScoreTable& scores,
                                                         const std::vector<int>& bucket_sizes,
                                                         int iterations_per_point,
                                                         std::uint64_t seed) {
  if (iterations_per_point < 1) throw ConfigError("bench: need at least one iteration per point");
  std::vector<std::pair<int, double>> out;
  for (int b : bucket_sizes) {
    McmcConfig cfg;
    cfg.k = scores.k;
    cfg.b = b;
    cfg.r = 1;
    cfg.burn_in = 0;
    cfg.thin = 1;
    cfg.samples = 1;
    cfg.base_seed = seed;
    McmcEngine engine(scores, cfg);
    ChainState state = engine.init_state(0);
    for (int i = 0; i < 3; ++i) engine.step(state, nullptr);  // warm-up
    const auto start = std::chrono::steady_clock::now();
    for (int i = 0; i < iterations_per_point; ++i) engine.step(state, nullptr);
    const auto stop = std::chrono::steady_clock::now();
    const double secs = std::chrono::duration<double>(stop - start).count();
    out.emplace_back(b, secs / iterations_per_point);
  }
  return out;
}

void emit_convergence_report(const std::vector<ChainTrace>& traces, std::int64_t burn_in,
                             const std::string& out_dir) {
  if (traces.empty()) throw ConfigError("convergence report: no traces");
  fs::create_directories(out_dir);
  for (const auto& trace : traces) {
    const std::string path =
        (fs::path(out_dir) / ("chain_" + std::to_string(trace.chain_index) + ".trace.tsv"))
            .string();
    write_chain_trace(trace, path);
  }
  std::ofstream out(fs::path(out_dir) / "summary.tsv");
  if (!out) throw IoError("cannot write summary.tsv");
  out << "chain\tacceptance_overall\tacceptance_post_burnin\tfinal_log_score\tburn_in\n";
  char num[48];
  for (const auto& trace : traces) {
    out << trace.chain_index << '\t';
    std::snprintf(num, sizeof num, "%.6f", trace.acceptance_ratio());
    out << num << '\t';
    std::snprintf(num, sizeof num, "%.6f", trace.acceptance_ratio_after(burn_in));
    out << num << '\t';
    std::snprintf(num, sizeof num, "%.17g",
                  trace.log_joint.empty() ? kLogZero : trace.log_joint.back());
    out << num << '\t' << burn_in << '\n';
  }
  if (!out) throw IoError("failed writing summary.tsv");
}

namespace {

void write_deviation_report(const std::vector<ArcPosteriorMatrix>& per_run,
                            const std::vector<std::string>& labels, const std::string& path) {
  const auto [max_sd, sd] = max_arc_deviation(per_run);
  const int n = per_run[0].n;
  std::ofstream out(path);
  if (!out) throw IoError("cannot write deviation report: " + path);
  char num[32];
  std::snprintf(num, sizeof num, "%.6f", max_sd);
  out << "# max_arc_deviation=" << num << " runs=" << per_run.size() << '\n';
  out << "tail\thead\tsd\n";
  for (int u = 0; u < n; ++u)
    for (int v = 0; v < n; ++v) {
      if (u == v) continue;
      std::snprintf(num, sizeof num, "%.6f", sd[static_cast<std::size_t>(u) * n + v]);
      out << labels[u] << '\t' << labels[v] << '\t' << num << '\n';
    }
  if (!out) throw IoError("failed writing deviation report: " + path);
}

Dataset load_input_data(const ExperimentConfig& config) {
  if (!config.data_path.empty()) {
    LoadOptions opts;
    opts.has_header = config.has_header;
    opts.missing_token = config.missing_token;
    return load_dataset(config.data_path, opts);
  }
  if (!config.network_path.empty()) {
    const NetworkSpec spec = load_network(config.network_path);
    const int rows = config.rows > 0 ? config.rows : 1000;
    return sample_network_data(spec, rows, config.seed);
  }
  throw ConfigError("this mode needs --data, or --network with --rows");
}

ScoreTable scores_for(const ExperimentConfig& config, const Dataset& data) {
  if (config.k < 0) throw ConfigError("this mode needs --max-indegree");
  ScoreBuildOptions opts;
  opts.threads = config.threads;
  return build_score_table(data, config.k, opts);
}

void run_exact_outputs(const ExperimentConfig& config, const Dataset& data,
                       const ScoreTable& scores) {
  const auto [evidence, matrix0] = exact_posteriors(
      scores, config.exact_cap, config.threads, std::size_t(6) << 30);
  ArcPosteriorMatrix matrix = matrix0;
  matrix.labels = data.labels;
  write_arc_matrix(matrix, (fs::path(config.out_dir) / "exact.csv").string(), evidence);
  std::ofstream ev(fs::path(config.out_dir) / "evidence.txt");
  if (!ev) throw IoError("cannot write evidence.txt");
  char num[48];
  std::snprintf(num, sizeof num, "%.17g", evidence);
  ev << num << '\n';
  std::cout << "exact: log evidence " << num << ", matrix in " << config.out_dir
            << "/exact.csv\n";
}

void run_mode_mcmc(const ExperimentConfig& config, const Dataset& data,
                   const ScoreTable& scores) {
  McmcConfig cfg;
  cfg.k = scores.k;
  cfg.b = config.resolved_b;
  cfg.r = config.parts;
  cfg.burn_in = config.burn_in;
  cfg.thin = config.thin;
  cfg.samples = config.samples;
  cfg.chains = config.chains;
  cfg.base_seed = config.seed;

  // A single-bucket request has a unique reordering: conditioning on it is
  // vacuous, so serve it from exact mode rather than a flip-less chain.
  if (cfg.r == 1 && cfg.b >= data.n) {
    std::cout << "mcmc: bucket size " << cfg.b << " covers all " << data.n
              << " nodes; routing to exact mode\n";
    run_exact_outputs(config, data, scores);
    return;
  }

  const std::vector<ChainTrace> traces = run_chains(scores, cfg, config.threads);
  emit_convergence_report(traces, cfg.burn_in, config.out_dir);

  std::vector<ArcPosteriorMatrix> estimates;
  for (const auto& trace : traces) {
    write_sample_index(trace, (fs::path(config.out_dir) /
                               ("chain_" + std::to_string(trace.chain_index) + ".samples.tsv"))
                                  .string());
    ArcPosteriorMatrix est = estimate_arc_posteriors(trace);
    est.labels = data.labels;
    write_arc_matrix(est, (fs::path(config.out_dir) /
                           ("chain_" + std::to_string(trace.chain_index) + ".estimate.csv"))
                              .string());
    estimates.push_back(std::move(est));
  }
  ArcPosteriorMatrix pooled = estimate_arc_posteriors(traces);
  pooled.labels = data.labels;
  write_arc_matrix(pooled, (fs::path(config.out_dir) / "estimate.csv").string());
  if (traces.size() >= 2)
    write_deviation_report(estimates, data.labels,
                           (fs::path(config.out_dir) / "deviation.tsv").string());
  std::cout << "mcmc: " << traces.size() << " chains, " << cfg.total_iterations()
            << " iterations each, outputs in " << config.out_dir << '\n';
}

void run_mode_aggregate(const ExperimentConfig& config) {
  std::vector<std::pair<int, std::string>> found;
  for (const auto& entry : fs::directory_iterator(config.out_dir)) {
    const std::string name = entry.path().filename().string();
    int chain;
    int consumed = 0;
    if (std::sscanf(name.c_str(), "chain_%d.estimate.csv%n", &chain, &consumed) == 1 &&
        consumed == static_cast<int>(name.size()))
      found.emplace_back(chain, entry.path().string());
  }
  if (found.empty())
    throw IoError("aggregate: no chain_*.estimate.csv files in " + config.out_dir);
  std::sort(found.begin(), found.end());
  std::vector<ArcPosteriorMatrix> estimates;
  for (const auto& [chain, path] : found) estimates.push_back(read_arc_matrix(path));

  ArcPosteriorMatrix pooled = estimates[0];
  for (std::size_t i = 1; i < estimates.size(); ++i) {
    if (estimates[i].n != pooled.n) throw ConfigError("aggregate: matrix shapes differ");
    for (std::size_t c = 0; c < pooled.p.size(); ++c) pooled.p[c] += estimates[i].p[c];
  }
  for (double& x : pooled.p) x /= static_cast<double>(estimates.size());
  pooled.mode = ArcPosteriorMatrix::Mode::averaged;
  pooled.chain = -1;
  write_arc_matrix(pooled, (fs::path(config.out_dir) / "estimate.csv").string());
  if (estimates.size() >= 2)
    write_deviation_report(estimates, pooled.labels,
                           (fs::path(config.out_dir) / "deviation.tsv").string());
  std::cout << "aggregate: pooled " << estimates.size() << " chain estimates\n";
}

void run_mode_bench(const ExperimentConfig& config, const Dataset& data,
                    const ScoreTable& scores) {
  std::vector<int> bs = config.bench_b_values;
  bs.erase(std::remove_if(bs.begin(), bs.end(), [&](int b) { return b >= data.n; }), bs.end());
  if (bs.empty()) throw ConfigError("bench: every bucket size leaves a single bucket");
  const auto table = bench_iteration_time(scores, bs, config.bench_iters, config.seed);
  std::ofstream out(fs::path(config.out_dir) / "bench.tsv");
  if (!out) throw IoError("cannot write bench.tsv");
  out << "b\tseconds_per_iteration\n";
  char num[40];
  for (const auto& [b, secs] : table) {
    std::snprintf(num, sizeof num, "%.9f", secs);
    out << b << '\t' << num << '\n';
  }
  if (!out) throw IoError("failed writing bench.tsv");
  std::cout << "bench: " << table.size() << " bucket sizes, table in " << config.out_dir
            << "/bench.tsv\n";
}

}  // namespace

int run_experiment(const ExperimentConfig& config) {
  try {
    fs::create_directories(config.out_dir);
    if (config.mode == ExperimentConfig::Mode::gen) {
      if (config.network_path.empty() || config.rows < 1)
        throw ConfigError("gen mode needs --network and --rows");
      const NetworkSpec spec = load_network(config.network_path);
      const Dataset data = sample_network_data(spec, config.rows, config.seed);
      save_dataset(data, (fs::path(config.out_dir) / "dataset.csv").string());
      std::cout << "gen: wrote " << data.m << " rows over " << data.n << " variables\n";
      return kExitOk;
    }
    if (config.mode == ExperimentConfig::Mode::aggregate) {
      run_mode_aggregate(config);
      return kExitOk;
    }

    const Dataset data = load_input_data(config);
    const ExperimentConfig resolved = resolve_defaults(config, data.n);
    switch (resolved.mode) {
      case ExperimentConfig::Mode::scores: {
        const ScoreTable scores = scores_for(resolved, data);
        write_score_cache(scores, (fs::path(resolved.out_dir) / "scores.txt").string());
        std::cout << "scores: " << scores.n << " nodes, " << scores.entries_per_node()
                  << " parent sets per node\n";
        return kExitOk;
      }
      case ExperimentConfig::Mode::exact:
        run_exact_outputs(resolved, data, scores_for(resolved, data));
        return kExitOk;
      case ExperimentConfig::Mode::mcmc:
        run_mode_mcmc(resolved, data, scores_for(resolved, data));
        return kExitOk;
      case ExperimentConfig::Mode::bench:
        run_mode_bench(resolved, data, scores_for(resolved, data));
        return kExitOk;
      default:
        throw ConfigError("unknown mode");
    }
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kExitConfig;
  } catch (const ResourceError& e) {
    std::cerr << "resource error: " << e.what() << '\n';
    return kExitResource;
  } catch (const IoError& e) {
    std::cerr << "io error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}

}  // namespace pomc
