#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "mfg/sim.hpp"

using namespace mfg;

namespace {

GameModel frozen_zero_cost_model() {
  auto states = Grid::uniform(0.0, 2.0, 3);
  auto actions = Grid::uniform(0.0, 1.0, 2);
  GameModel m{states,
              actions,
              0.7,
              ProbVector(states, {0.2, 0.5, 0.3}),
              WeightFn::unit(states),
              true,
              nullptr,
              nullptr,
              false,
              "frozen"};
  m.kernel = [states](std::size_t x, std::size_t, const ProbVector&) {
    return ProbVector::dirac(states, x);
  };
  m.cost = [](std::size_t, std::size_t, const ProbVector&) { return 0.0; };
  return m;
}

GameModel random_decoupled(std::mt19937& rng, std::size_t X, std::size_t A) {
  std::uniform_real_distribution<double> u(0.05, 1.0);
  std::vector<std::vector<std::vector<double>>> kernel(
      X, std::vector<std::vector<double>>(A, std::vector<double>(X)));
  std::vector<std::vector<double>> cost(X, std::vector<double>(A));
  for (std::size_t x = 0; x < X; ++x)
    for (std::size_t a = 0; a < A; ++a) {
      double total = 0.0;
      for (double& p : kernel[x][a]) total += (p = u(rng));
      for (double& p : kernel[x][a]) p /= total;
      cost[x][a] = u(rng);
    }
  auto states = Grid::uniform(0.0, static_cast<double>(X - 1), static_cast<int>(X));
  auto actions = Grid::uniform(0.0, static_cast<double>(A - 1), static_cast<int>(A));
  return make_tabular_model(states, actions, 0.8, ProbVector::uniform(states),
                            std::move(kernel), std::move(cost));
}

}  // namespace

TEST_CASE("frozen dynamics with zero cost: all costs zero, empirical frozen") {
  GameModel m = frozen_zero_cost_model();
  SimConfig config;
  config.num_agents = 16;
  config.horizon = 6;
  config.replications = 40;
  config.master_seed = 11;
  config.policy = MarkovPolicy::uniform(3, 2, 6);
  MeasureFlow ref = MeasureFlow::constant(m.mu0, 6);
  SimReport report = simulate(m, config, &ref);

  CHECK(report.mean_cost == 0.0);
  CHECK(report.stderr_cost == 0.0);
  for (double c : report.agent1_costs) CHECK(c == 0.0);
  // The empirical measure never moves: every t repeats the t = 0 snapshot,
  // so the averaged empirical and the distance to mu0 are t-independent.
  for (int t = 1; t <= 6; ++t) {
    for (std::size_t x = 0; x < 3; ++x)
      CHECK(report.mean_empirical[static_cast<std::size_t>(t)][x] ==
            report.mean_empirical[0][x]);
    CHECK(report.mean_distance[static_cast<std::size_t>(t)] ==
          report.mean_distance[0]);
  }
  // i.i.d. sampling from mu0: the replication-averaged empirical is close.
  for (std::size_t x = 0; x < 3; ++x)
    CHECK(std::abs(report.mean_empirical[0][x] - m.mu0[x]) < 0.1);
}

TEST_CASE("single agent reproduces the dynamic-programming policy cost") {
  std::mt19937 rng(21);
  GameModel m = random_decoupled(rng, 3, 2);
  const int T = 10;
  MarkovPolicy pi = MarkovPolicy::uniform(3, 2, T);
  MeasureFlow flow = propagate_flow(m, pi, T);
  const double exact = evaluate_policy(m, flow, pi).total;

  SimConfig config;
  config.num_agents = 1;
  config.horizon = T;
  config.replications = 20000;
  config.master_seed = 5;
  config.policy = pi;
  config.workers = 4;
  SimReport report = simulate(m, config);
  CHECK(report.stderr_cost > 0.0);
  CHECK(report.stderr_cost < 0.02);
  CHECK(std::abs(report.mean_cost - exact) <= 3.0 * report.stderr_cost + 1e-6);
}

TEST_CASE("bit reproducibility across worker counts and reruns") {
  GameModel toy = make_toy_model();
  SimConfig config;
  config.num_agents = 25;
  config.horizon = 12;
  config.replications = 64;
  config.master_seed = 4242;
  config.policy = MarkovPolicy::uniform(2, 2, 12);
  MeasureFlow ref = MeasureFlow::constant(toy.mu0, 12);

  SimReport serial = simulate(toy, config, &ref);
  config.workers = 8;
  SimReport parallel = simulate(toy, config, &ref);
  SimReport again = simulate(toy, config, &ref);

  REQUIRE(serial.agent1_costs.size() == parallel.agent1_costs.size());
  for (std::size_t r = 0; r < serial.agent1_costs.size(); ++r) {
    CHECK(serial.agent1_costs[r] == parallel.agent1_costs[r]);
    CHECK(parallel.agent1_costs[r] == again.agent1_costs[r]);
  }
  CHECK(serial.mean_cost == parallel.mean_cost);
  for (std::size_t t = 0; t < serial.mean_distance.size(); ++t)
    CHECK(serial.mean_distance[t] == parallel.mean_distance[t]);
  for (std::size_t t = 0; t < serial.mean_empirical.size(); ++t)
    for (std::size_t x = 0; x < 2; ++x)
      CHECK(serial.mean_empirical[t][x] == parallel.mean_empirical[t][x]);
}

TEST_CASE("empirical distances shrink with the crowd size") {
  GameModel toy = make_toy_model();
  const int T = 8;
  MarkovPolicy pi = MarkovPolicy::uniform(2, 2, T);
  MeasureFlow flow = propagate_flow(toy, pi, T);
  ConvergenceStudy study =
      empirical_convergence_study(toy, pi, flow, {8, 64, 512}, 100, 31, nullptr, 4);

  REQUIRE(study.rows.size() == 3 * static_cast<std::size_t>(T + 1));
  std::vector<double> avg(3, 0.0);
  for (const ConvergenceRow& row : study.rows) {
    const std::size_t idx = row.num_agents == 8 ? 0 : row.num_agents == 64 ? 1 : 2;
    avg[idx] += row.mean_distance / static_cast<double>(T + 1);
  }
  CHECK(avg[1] < avg[0]);
  CHECK(avg[2] < avg[1]);
  CHECK(study.log_log_slope < -0.3);
  CHECK(study.log_log_slope > -0.7);

  CHECK_THROWS_AS(
      empirical_convergence_study(toy, pi, flow, {64, 8}, 10, 1), DomainError);
  CHECK_THROWS_AS(empirical_convergence_study(toy, pi, flow, {}, 10, 1),
                  DomainError);
}

TEST_CASE("one-step variance check") {
  GameModel toy = make_toy_model();
  ProbVector half(toy.state_grid, {0.5, 0.5});

  SUBCASE("toy model satisfies the bound") {
    VarianceCheck check = one_step_variance_check(
        toy, MarkovPolicy::uniform(2, 2, 0), half, 100, 4000, {0.0, 1.0}, 77, 4);
    CHECK(check.pass);
    CHECK(check.lhs > 0.0);
    CHECK(check.lhs <= check.rhs * (1.0 + 3.0 * check.rse));
  }

  SUBCASE("deterministic dynamics leave no fluctuation") {
    GameModel frozen = frozen_zero_cost_model();
    VarianceCheck check = one_step_variance_check(
        frozen, MarkovPolicy::constant_action(3, 2, 0, 0), frozen.mu0, 50, 200,
        {1.0, 2.0, 3.0}, 9);
    CHECK(check.lhs == 0.0);
    CHECK(check.pass);
  }

  SUBCASE("zero observable is exactly tight") {
    VarianceCheck check = one_step_variance_check(
        toy, MarkovPolicy::uniform(2, 2, 0), half, 10, 50, {0.0, 0.0}, 3);
    CHECK(check.lhs == 0.0);
    CHECK(check.rhs == 0.0);
    CHECK(check.pass);
  }

  SUBCASE("contracts") {
    CHECK_THROWS_AS(one_step_variance_check(toy, MarkovPolicy::uniform(2, 2, 0),
                                            half, 0, 10, {0.0, 1.0}, 1),
                    DomainError);
    CHECK_THROWS_AS(one_step_variance_check(toy, MarkovPolicy::uniform(2, 2, 0),
                                            half, 10, 10, {0.0}, 1),
                    StructuralError);
    const double nan = std::nan("");
    CHECK_THROWS_AS(one_step_variance_check(toy, MarkovPolicy::uniform(2, 2, 0),
                                            half, 10, 10, {nan, 1.0}, 1),
                    NumericError);
  }
}

TEST_CASE("nash gap sweep") {
  std::mt19937 rng(3);
  GameModel m = random_decoupled(rng, 3, 2);
  MfeSolution mfe = solve_mfe(m);
  REQUIRE(mfe.converged);

  SUBCASE("equilibrium policy against itself has zero gap by construction") {
    NashGapReport report =
        nash_gap(m, mfe, {{"equilibrium", mfe.policy}}, 20, 50, 1, 4);
    CHECK(report.gap == 0.0);
    CHECK(report.table.size() == 2);
    CHECK(report.table[0].mean_cost == report.table[1].mean_cost);
  }

  SUBCASE("decoupled equilibrium is within noise of unbeatable") {
    const auto deviations = default_deviations(m, mfe, 50, 20, 1);
    CHECK(deviations.size() >= 3);
    NashGapReport report = nash_gap(m, mfe, deviations, 50, 400, 123, 4);
    // gap = equilibrium cost minus best candidate: near zero for a game with
    // no mean-field coupling, where the crowd cannot be exploited at all.
    CHECK(report.gap <= 3.0 * report.stderr_gap + 1e-9);
    CHECK(report.table[0].name == "equilibrium");
    for (const DeviationCost& row : report.table) CHECK(row.stderr_cost >= 0.0);
  }

  SUBCASE("contracts") {
    CHECK_THROWS_AS(nash_gap(m, mfe, {}, 10, 10, 1), DomainError);
  }
}

TEST_CASE("truncated costs are horizon-consistent up to the tail bound") {
  GameModel toy = make_toy_model();
  const int T = 24;
  MarkovPolicy pi = MarkovPolicy::uniform(2, 2, T + 10);

  SimConfig config;
  config.num_agents = 40;
  config.horizon = T;
  config.replications = 3000;
  config.master_seed = 8;
  config.policy = pi;
  config.workers = 4;
  SimReport short_run = simulate(toy, config);
  config.horizon = T + 10;
  SimReport long_run = simulate(toy, config);

  // Same seed family: trajectories agree through time T, so the cost gap is
  // the realized tail, bounded by the geometric envelope M R (abg)^{T+1}/(1-abg).
  const GrowthConstants c = estimate_growth_constants(toy, default_probe_flows(toy));
  const double abg = c.alpha * toy.beta * c.gamma;
  const double tail = c.M * c.R * std::pow(abg, T + 1) / (1.0 - abg);
  const double gap = std::abs(long_run.mean_cost - short_run.mean_cost);
  CHECK(gap <= tail + 3.0 * (short_run.stderr_cost + long_run.stderr_cost));
  CHECK(long_run.mean_cost >= short_run.mean_cost - 1e-12);
}

TEST_CASE("simulate error contracts") {
  GameModel toy = make_toy_model();
  SimConfig config;
  config.num_agents = 0;
  config.horizon = 3;
  config.replications = 5;
  config.policy = MarkovPolicy::uniform(2, 2, 3);
  CHECK_THROWS_AS(simulate(toy, config), DomainError);

  config.num_agents = 4;
  config.replications = 0;
  CHECK_THROWS_AS(simulate(toy, config), DomainError);

  config.replications = 5;
  config.policy = MarkovPolicy::uniform(2, 2, 1);  // too short for T = 3
  CHECK_THROWS_AS(simulate(toy, config), StructuralError);

  config.policy = MarkovPolicy::uniform(2, 2, 3);
  config.deviator = MarkovPolicy::uniform(2, 2, 1);
  CHECK_THROWS_AS(simulate(toy, config), StructuralError);

  config.deviator.reset();
  MeasureFlow short_ref = MeasureFlow::constant(toy.mu0, 1);
  CHECK_THROWS_AS(simulate(toy, config, &short_ref), StructuralError);
}
