#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <filesystem>
#include <map>

#include "oracles.hpp"
#include "pomc/mcmc.hpp"

using namespace pomc;

namespace {

ScoreTable small_scores(int n, int m, int k, std::uint64_t seed) {
  Rng rng(seed);
  const Dataset d = oracle::random_dataset(n, m, 3, rng);
  return build_score_table(d, k);
}

}  // namespace

TEST_CASE("flip proposal counts pairs per type signature") {
  const auto t22 = make_order(4, 2, 1);
  FlipProposal p22(t22);
  CHECK(p22.triple_count() == 4);  // |B_1| * |B_2|

  const auto t221 = make_order(5, 2, 1);
  CHECK(FlipProposal(t221).triple_count() == 4 + 2 + 2);

  Rng rng(3);
  const auto shuffled = random_reordering(t221, rng);
  CHECK(FlipProposal(shuffled).triple_count() == 8);  // type-invariant

  const auto single = make_order(3, 3, 1);
  CHECK(FlipProposal(single).triple_count() == 0);
  Rng r2(4);
  ChainState st{single, 0.0, 0, Rng(1)};
  CHECK_THROWS_AS(propose_flip(st), ConfigError);
}

TEST_CASE("flip proposal is uniform over valid triples") {
  const auto order = make_order(4, 2, 1);
  FlipProposal proposal(order);
  Rng rng(11);
  std::map<std::pair<int, int>, int> freq;
  const int draws = 100000;
  for (int i = 0; i < draws; ++i) {
    const auto t = proposal.draw(order, rng);
    CHECK(t.part == 0);
    ++freq[{t.u, t.v}];
  }
  CHECK(freq.size() == 4);
  for (const auto& [pair, count] : freq)
    CHECK(std::fabs(count / static_cast<double>(draws) - 0.25) < 0.01);
}

TEST_CASE("mh acceptance: equal scores always accept; log-2 worse accepts half the time") {
  const ScoreTable t = small_scores(4, 20, 2, 7);
  McmcConfig cfg;
  cfg.k = 2;
  cfg.b = 2;
  cfg.base_seed = 5;
  McmcEngine engine(t, cfg);
  ChainState state = engine.init_state(0);

  // Equal-score candidates: force log_joint equality by construction.
  ChainState equal = state;
  equal.log_joint = state.log_joint;  // ratio 1
  // Directly exercise the acceptance rule through many steps with a doctored
  // cached score: a candidate whose score ties the current one must always
  // be accepted, which shows up as acceptance probability 1 in the limit.
  // Here we check the closed-form branch via the empirical half-acceptance
  // of a log(2)-worse current state below.
  int accepted = 0;
  const int trials = 100000;
  Rng rng(17);
  for (int i = 0; i < trials; ++i) {
    const double log_ratio = -std::log(2.0);
    if (log_ratio >= 0 || std::log(rng.unit()) < log_ratio) ++accepted;
  }
  CHECK(std::fabs(accepted / static_cast<double>(trials) - 0.5) < 0.01);

  int always = 0;
  for (int i = 0; i < 1000; ++i) {
    const double log_ratio = 0.0;
    if (log_ratio >= 0 || std::log(rng.unit()) < log_ratio) ++always;
  }
  CHECK(always == 1000);
}

TEST_CASE("chain visits the 3 reorderings of type 2*1 with the target frequencies") {
  const ScoreTable t = small_scores(3, 25, 2, 13);
  McmcConfig cfg;
  cfg.k = 2;
  cfg.b = 2;
  cfg.r = 1;
  cfg.base_seed = 23;
  McmcEngine engine(t, cfg);
  ChainState state = engine.init_state(0);

  const auto reorderings = oracle::all_reorderings(make_order(3, 2, 1));
  REQUIRE(reorderings.size() == 3);
  std::map<std::string, double> target;
  double total = kLogZero;
  for (const auto& R : reorderings) total = log_add(total, log_joint(t, R));
  for (const auto& R : reorderings)
    target[R.descriptor()] = std::exp(log_joint(t, R) - total);

  std::map<std::string, std::int64_t> visits;
  const std::int64_t steps = 200000;  // acceptance suite runs the 10^6 version
  for (std::int64_t i = 0; i < steps; ++i) {
    engine.step(state, nullptr);
    ++visits[state.order.descriptor()];
  }
  CHECK(visits.size() == 3);
  for (const auto& [desc, count] : visits)
    CHECK(std::fabs(count / static_cast<double>(steps) - target.at(desc)) < 0.02);
}

TEST_CASE("empirical detailed balance on the 3-state chain") {
  const ScoreTable t = small_scores(3, 25, 2, 13);
  McmcConfig cfg;
  cfg.k = 2;
  cfg.b = 2;
  cfg.base_seed = 29;
  McmcEngine engine(t, cfg);
  ChainState state = engine.init_state(0);
  std::map<std::pair<std::string, std::string>, double> flow;
  std::string prev = state.order.descriptor();
  for (int i = 0; i < 200000; ++i) {
    engine.step(state, nullptr);
    const std::string cur = state.order.descriptor();
    flow[{prev, cur}] += 1;
    prev = cur;
  }
  for (const auto& [edge, count] : flow) {
    if (edge.first == edge.second) continue;
    const double reverse = flow[{edge.second, edge.first}];
    CHECK(std::fabs(count - reverse) <= 4 * std::sqrt(count + reverse) + 1);
  }
}

TEST_CASE("schedule arithmetic matches the published run budgets") {
  McmcConfig mushroom;
  mushroom.burn_in = 100000;
  mushroom.samples = 400;
  mushroom.thin = 400;
  CHECK(mushroom.total_iterations() == 260000);

  McmcConfig alarm;
  alarm.burn_in = 10000;
  alarm.samples = 100;
  alarm.thin = 100;
  CHECK(alarm.total_iterations() == 20000);
}

TEST_CASE("run_chain obeys the schedule and records the trace") {
  const ScoreTable t = small_scores(4, 30, 2, 31);
  McmcConfig cfg;
  cfg.k = 2;
  cfg.b = 2;
  cfg.burn_in = 40;
  cfg.thin = 5;
  cfg.samples = 6;
  cfg.base_seed = 37;
  const ChainTrace trace = run_chain(t, cfg, 2);
  CHECK(trace.chain_index == 2);
  CHECK(trace.log_joint.size() == 70);
  CHECK(trace.accepted.size() == 70);
  CHECK(trace.sample_iterations.size() == 6);
  for (std::size_t s = 0; s < trace.sample_iterations.size(); ++s)
    CHECK(trace.sample_iterations[s] == 40 + 5 * static_cast<std::int64_t>(s + 1));
  for (const auto& m : trace.samples) {
    CHECK(m.n == 4);
    for (double x : m.p) {
      CHECK(x >= 0.0);
      CHECK(x <= 1.0);
    }
  }
  const double ratio = trace.acceptance_ratio();
  CHECK(ratio >= 0.0);
  CHECK(ratio <= 1.0);

  McmcConfig one;
  one.k = 2;
  one.b = 2;
  one.burn_in = 0;
  one.thin = 1;
  one.samples = 1;
  const ChainTrace t1 = run_chain(t, one, 0);
  CHECK(t1.samples.size() == 1);
  CHECK(t1.log_joint.size() == 1);
}

TEST_CASE("identical config gives bit-identical traces; chains differ") {
  const ScoreTable t = small_scores(5, 30, 2, 41);
  McmcConfig cfg;
  cfg.k = 2;
  cfg.b = 2;
  cfg.burn_in = 30;
  cfg.thin = 3;
  cfg.samples = 5;
  cfg.base_seed = 43;
  const ChainTrace a = run_chain(t, cfg, 0);
  const ChainTrace b = run_chain(t, cfg, 0);
  CHECK(a.log_joint == b.log_joint);
  CHECK(a.accepted == b.accepted);
  CHECK(a.sample_orders == b.sample_orders);
  for (std::size_t i = 0; i < a.samples.size(); ++i) CHECK(a.samples[i].p == b.samples[i].p);

  const ChainTrace c = run_chain(t, cfg, 1);
  CHECK(a.log_joint != c.log_joint);

  // Thread count must not affect results.
  cfg.chains = 3;
  const auto seq = run_chains(t, cfg, 1);
  const auto par = run_chains(t, cfg, 3);
  for (int chain = 0; chain < 3; ++chain) {
    CHECK(seq[chain].log_joint == par[chain].log_joint);
    CHECK(seq[chain].sample_orders == par[chain].sample_orders);
  }
}

TEST_CASE("estimator: single sample, two-sample mean, convexity") {
  ArcPosteriorMatrix m1, m2;
  m1.n = m2.n = 2;
  m1.p = {0.0, 0.2, 0.7, 0.0};
  m2.p = {0.0, 0.4, 0.1, 0.0};
  ChainTrace trace;
  trace.samples = {m1};
  trace.sample_iterations = {1};
  trace.sample_orders = {"0,1"};
  CHECK(estimate_arc_posteriors(trace).p == m1.p);
  trace.samples.push_back(m2);
  const auto mean = estimate_arc_posteriors(trace);
  CHECK(mean.p[1] == doctest::Approx(0.3));
  CHECK(mean.p[2] == doctest::Approx(0.4));

  ChainTrace empty;
  CHECK_THROWS_AS(estimate_arc_posteriors(empty), ConfigError);
}

TEST_CASE("estimator over all reorderings weighted by p(P|D) reproduces exact") {
  Rng rng(47);
  for (int trial = 0; trial < 4; ++trial) {
    const int n = 3 + rng.below_int(3);
    const Dataset d = oracle::random_dataset(n, 18, 3, rng);
    const int k = 1 + rng.below_int(n - 1);
    const ScoreTable t = build_score_table(d, k);
    const auto proto = oracle::random_order(n, 1, rng);
    const auto reorderings = oracle::all_reorderings(proto);
    double total = kLogZero;
    std::vector<double> w;
    std::vector<ArcPosteriorMatrix> mats;
    for (const auto& R : reorderings) {
      w.push_back(log_joint(t, R));
      total = log_add(total, w.back());
      mats.push_back(arc_posteriors(t, R));
    }
    ArcPosteriorMatrix mix;
    mix.n = n;
    mix.p.assign(static_cast<std::size_t>(n) * n, 0.0);
    for (std::size_t i = 0; i < mats.size(); ++i)
      for (std::size_t c = 0; c < mix.p.size(); ++c)
        mix.p[c] += std::exp(w[i] - total) * mats[i].p[c];
    const auto [evidence, exact] = exact_posteriors(t);
    (void)evidence;
    for (std::size_t c = 0; c < mix.p.size(); ++c)
      CHECK(std::fabs(mix.p[c] - exact.p[c]) < 1e-9);
  }
}

TEST_CASE("max_arc_deviation: identical runs, a hand case, and the error paths") {
  ArcPosteriorMatrix a, b;
  a.n = b.n = 2;
  a.p = {0.0, 0.2, 0.5, 0.0};
  b.p = {0.0, 0.4, 0.5, 0.0};
  {
    const auto [max_sd, sd] = max_arc_deviation({a, a});
    CHECK(max_sd == 0.0);
    for (double x : sd) CHECK(x == 0.0);
  }
  {
    const auto [max_sd, sd] = max_arc_deviation({a, b});
    CHECK(max_sd == doctest::Approx(0.1));  // population std of {0.2, 0.4}
    CHECK(sd[1] == doctest::Approx(0.1));
    CHECK(sd[2] == 0.0);
  }
  CHECK_THROWS_AS(max_arc_deviation({a}), ConfigError);
}

TEST_CASE("largest_absolute_error basics") {
  ArcPosteriorMatrix a, b;
  a.n = b.n = 2;
  a.p = {0.0, 0.50, 0.3, 0.0};
  b.p = {0.0, 0.35, 0.3, 0.0};
  CHECK(largest_absolute_error(a, a) == 0.0);
  CHECK(largest_absolute_error(a, b) == doctest::Approx(0.15));
  ArcPosteriorMatrix c;
  c.n = 3;
  c.p.assign(9, 0.0);
  CHECK_THROWS_AS(largest_absolute_error(a, c), ConfigError);
}

TEST_CASE("trace and sample files round-trip") {
  const ScoreTable t = small_scores(4, 24, 2, 53);
  McmcConfig cfg;
  cfg.k = 2;
  cfg.b = 2;
  cfg.burn_in = 10;
  cfg.thin = 2;
  cfg.samples = 3;
  const ChainTrace trace = run_chain(t, cfg, 0);
  const std::string path = "/tmp/pomc_test_trace.tsv";
  write_chain_trace(trace, path);
  const ChainTrace back = read_chain_trace(path);
  REQUIRE(back.log_joint.size() == trace.log_joint.size());
  for (std::size_t i = 0; i < trace.log_joint.size(); ++i) {
    CHECK(back.log_joint[i] == trace.log_joint[i]);
    CHECK(back.accepted[i] == trace.accepted[i]);
  }
  std::filesystem::remove(path);

  const std::string sidecar = "/tmp/pomc_test_samples.tsv";
  write_sample_index(trace, sidecar);
  std::ifstream in(sidecar);
  std::string header;
  std::getline(in, header);
  CHECK(header == "iteration\torder");
  int rows = 0;
  std::string line;
  while (std::getline(in, line))
    if (!line.empty()) {
      ++rows;
      const auto tab = line.find('\t');
      const auto order = ParallelBucketOrder::parse(line.substr(tab + 1));
      CHECK(order.n == 4);
    }
  CHECK(rows == 3);
  std::filesystem::remove(sidecar);
}

TEST_CASE("single-bucket mcmc configuration is a startup error") {
  const ScoreTable t = small_scores(3, 20, 2, 59);
  McmcConfig cfg;
  cfg.k = 2;
  cfg.b = 3;  // single bucket: no flip exists
  CHECK_THROWS_AS(McmcEngine(t, cfg), ConfigError);
}
