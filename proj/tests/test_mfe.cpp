#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <random>

#include "mfg/mfe.hpp"

using namespace mfg;

namespace {

GameModel identity_kernel_model(double action_penalty) {
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
              "identity"};
  m.kernel = [states](std::size_t x, std::size_t, const ProbVector&) {
    return ProbVector::dirac(states, x);
  };
  // c(x, a, mu) = moment(mu, d(x, .)) + penalty * [a != 0], d(x,y) = (x-y)^2.
  m.cost = [states, action_penalty](std::size_t x, std::size_t a,
                                    const ProbVector& mu) {
    double acc = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j) {
      const double dx = (*states)[x] - (*states)[j];
      acc += dx * dx * mu[j];
    }
    return acc + action_penalty * static_cast<double>(a != 0);
  };
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

MarkovPolicy enumerate_best(const GameModel& model, const MeasureFlow& flow,
                            double* best_cost) {
  const int T = flow.horizon();
  const std::size_t X = model.num_states(), A = model.num_actions();
  const std::size_t count =
      static_cast<std::size_t>(std::pow(static_cast<double>(A), X * (T + 1)));
  MarkovPolicy best;
  *best_cost = std::numeric_limits<double>::infinity();
  for (std::size_t code = 0; code < count; ++code) {
    MarkovPolicy pi;
    std::size_t c = code;
    pi.kernels.assign(static_cast<std::size_t>(T) + 1,
                      std::vector<std::vector<double>>(X, std::vector<double>(A, 0.0)));
    for (int t = 0; t <= T; ++t)
      for (std::size_t x = 0; x < X; ++x) {
        pi.kernels[static_cast<std::size_t>(t)][x][c % A] = 1.0;
        c /= A;
      }
    const double cost = evaluate_policy(model, flow, pi).total;
    if (cost < *best_cost) {
      *best_cost = cost;
      best = pi;
    }
  }
  return best;
}

}  // namespace

TEST_CASE("propagate_flow examples") {
  SUBCASE("identity kernel freezes the flow") {
    GameModel m = identity_kernel_model(0.0);
    MeasureFlow flow = propagate_flow(m, MarkovPolicy::uniform(3, 2, 8), 8);
    for (int t = 0; t <= 8; ++t)
      for (std::size_t x = 0; x < 3; ++x) CHECK(flow.at(t)[x] == m.mu0[x]);
  }

  SUBCASE("toy all-switch from a point mass") {
    GameModel toy = make_toy_model();
    GameModel start_at_zero = toy;
    start_at_zero.mu0 = ProbVector::dirac(toy.state_grid, 0);
    MeasureFlow flow = propagate_flow(start_at_zero,
                                      MarkovPolicy::constant_action(2, 2, 1, 4), 4);
    CHECK(flow.at(1)[0] == doctest::Approx(0.2));
    CHECK(flow.at(1)[1] == doctest::Approx(0.8));
  }

  SUBCASE("matrix-propagation oracle on a random tabular model") {
    std::mt19937 rng(7);
    GameModel m = random_decoupled(rng, 4, 3);
    MarkovPolicy pi = MarkovPolicy::uniform(4, 3, 10);
    MeasureFlow flow = propagate_flow(m, pi, 10);
    // Exact forward chain by dense matrix application.
    std::vector<double> cur = m.mu0.mass();
    for (int t = 0; t < 10; ++t) {
      std::vector<double> next(4, 0.0);
      for (std::size_t x = 0; x < 4; ++x)
        for (std::size_t a = 0; a < 3; ++a) {
          const ProbVector row = transition(m, x, a, flow.at(t));
          for (std::size_t y = 0; y < 4; ++y)
            next[y] += cur[x] * pi.row(t, x)[a] * row[y];
        }
      cur = next;
      for (std::size_t y = 0; y < 4; ++y)
        CHECK(flow.at(t + 1)[y] == doctest::Approx(cur[y]).epsilon(1e-12));
      double mass = 0.0;
      for (double v : cur) mass += v;
      CHECK(mass == doctest::Approx(1.0).epsilon(1e-10));
    }
  }

  SUBCASE("policy horizon must cover T") {
    GameModel toy = make_toy_model();
    CHECK_THROWS_AS(propagate_flow(toy, MarkovPolicy::uniform(2, 2, 3), 5),
                    StructuralError);
  }
}

TEST_CASE("best_response and exploitability against enumeration") {
  GameModel toy = make_toy_model();
  ProbVector half(toy.state_grid, {0.5, 0.5});
  MeasureFlow flow = MeasureFlow::constant(half, 3);

  double best_cost = 0.0;
  enumerate_best(toy, flow, &best_cost);
  SolveResult br = best_response(toy, flow);
  CHECK(moment(toy.mu0, br.values.values[0]) ==
        doctest::Approx(best_cost).epsilon(1e-12));
  CHECK(exploitability(toy, flow, br.policy) <= 1e-9);

  // Deliberately suboptimal all-switch policy: gap equals the enumeration gap.
  MarkovPolicy all_switch = MarkovPolicy::constant_action(2, 2, 1, 3);
  const double gap = exploitability(toy, flow, all_switch);
  CHECK(gap == doctest::Approx(evaluate_policy(toy, flow, all_switch).total -
                               best_cost)
                   .epsilon(1e-12));
  CHECK(gap > 0.0);

  GameModel free = toy;
  free.cost = [](std::size_t, std::size_t, const ProbVector&) { return 0.0; };
  CHECK(exploitability(free, flow, all_switch) <= 1e-9);

  // Cost and kernel independent of the action: ties broken to action 0.
  GameModel flat = toy;
  flat.cost = [](std::size_t x, std::size_t, const ProbVector& mu) {
    return static_cast<double>(x) * mu[1];
  };
  flat.kernel = [base = toy.kernel](std::size_t x, std::size_t,
                                    const ProbVector& mu) {
    return base(x, 0, mu);
  };
  SolveResult flat_br = best_response(flat, flow);
  for (int t = 0; t <= 3; ++t)
    for (std::size_t x = 0; x < 2; ++x) CHECK(flat_br.policy.row(t, x)[0] == 1.0);
}

TEST_CASE("solve_mfe on a decoupled game: one iteration, exact dp optimum") {
  std::mt19937 rng(13);
  for (int inst = 0; inst < 5; ++inst) {
    GameModel m = random_decoupled(rng, 3 + inst % 2, 2 + inst % 3);
    MfeSolution sol = solve_mfe(m);
    CHECK(sol.converged);
    CHECK(sol.iterations == 1);
    CHECK(sol.exploitability <= 1e-9);
    CHECK(sol.residual_flow <= 1e-12);
    // flow equals the policy's own propagation bit for bit.
    MeasureFlow re = propagate_flow(m, sol.policy, sol.horizon);
    for (int t = 0; t <= sol.horizon; ++t)
      for (std::size_t x = 0; x < m.num_states(); ++x)
        CHECK(re.at(t)[x] == sol.flow.at(t)[x]);
    // and the policy is the dp optimum for that flow.
    SolveResult opt = solve_nonhomogeneous(m, sol.flow);
    CHECK(evaluate_policy(m, sol.flow, sol.policy).total ==
          doctest::Approx(moment(m.mu0, opt.values.values[0])).epsilon(1e-12));
  }
}

TEST_CASE("solve_mfe identity-kernel fixture: flow mu0, policy action 0") {
  GameModel m = identity_kernel_model(0.05);
  MfeSolution sol = solve_mfe(m);
  CHECK(sol.converged);
  CHECK(sol.iterations == 1);
  CHECK(sol.residual_flow == 0.0);
  for (int t = 0; t <= sol.horizon; ++t) {
    for (std::size_t x = 0; x < 3; ++x) {
      CHECK(sol.flow.at(t)[x] == m.mu0[x]);
      CHECK(sol.policy.row(t, x)[0] == 1.0);
    }
  }
}

TEST_CASE("solve_mfe on the toy model at T = 20 with harmonic damping") {
  GameModel toy = make_toy_model();
  MfeOptions opts;
  opts.horizon = 20;
  MfeSolution sol = solve_mfe(toy, opts);

  CHECK(sol.converged);
  CHECK(sol.iterations <= 500);
  CHECK(sol.residual_flow <= 1e-6);
  CHECK(sol.exploitability <= 1e-6);
  CHECK(sol.exploitability >= -1e-9);
  CHECK(sol.damping == "harmonic");
  CHECK(sol.tail == 0.0);

  // Self-consistency oracle: recompute both residuals from scratch on the
  // returned pair with one extra best-response/propagation round.
  const WeightFn v = toy.v();
  MeasureFlow re = propagate_flow(toy, sol.policy, 20);
  double resid = 0.0;
  for (int t = 0; t <= 20; ++t)
    resid = std::max(resid, rho_v(re.at(t), sol.flow.at(t), v));
  CHECK(resid <= sol.residual_flow + 1e-12);
  const double expl = exploitability(toy, sol.flow, sol.policy);
  CHECK(std::abs(expl - sol.exploitability) <= 1e-9);

  // The last meaningful decision in state 1 is mixed: both actions are
  // exactly indifferent under the equilibrium flow (hand-derived boundary
  // condition: indifference iff beta * 0.7 * mu_T({1}) == 0.1).
  const auto& boundary = sol.policy.row(19, 1);
  CHECK(boundary[0] > 0.01);
  CHECK(boundary[1] > 0.01);
  CHECK(sol.flow.at(20)[1] == doctest::Approx(0.1 / (0.9 * 0.7)).epsilon(1e-9));

  SUBCASE("disintegration consistency") {
    for (int t = 0; t <= 20; ++t)
      for (std::size_t x = 0; x < 2; ++x) {
        double row_sum = 0.0;
        for (double m : sol.joint[static_cast<std::size_t>(t)][x]) row_sum += m;
        CHECK(row_sum == doctest::Approx(sol.flow.at(t)[x]).epsilon(1e-10));
      }
  }

  SUBCASE("constant damping also certifies") {
    MfeOptions copts = opts;
    copts.damping.mode = DampingMode::kConstant;
    MfeSolution csol = solve_mfe(toy, copts);
    CHECK(csol.converged);
    CHECK(csol.damping == "const:0.500000");
    CHECK(csol.exploitability <= 1e-6);
  }
}

TEST_CASE("solve_mfe at the default tail-driven horizon") {
  GameModel toy = make_toy_model();
  MfeSolution sol = solve_mfe(toy);
  CHECK(sol.horizon == 153);
  CHECK(sol.tail <= 1e-6);
  CHECK(sol.tail > 0.0);
  CHECK(sol.converged);
  CHECK(sol.residual_flow <= 1e-6);
  CHECK(sol.exploitability <= 1e-6);
}

TEST_CASE("finite-horizon sub-game property") {
  GameModel toy = make_toy_model();
  MfeOptions opts;
  opts.horizon = 12;
  MfeSolution sol = solve_mfe(toy, opts);
  REQUIRE(sol.converged);

  const int tau = 3;
  GameModel sub = toy;
  sub.mu0 = sol.flow.at(tau);
  MfeOptions sub_opts;
  sub_opts.horizon = 12 - tau;
  MfeSolution sub_sol = solve_mfe(sub, sub_opts);
  REQUIRE(sub_sol.converged);

  const WeightFn v = toy.v();
  for (int s = 0; s + tau <= 12; ++s) {
    CHECK(rho_v(sub_sol.flow.at(s), sol.flow.at(s + tau), v) <= 1e-6);
    for (std::size_t x = 0; x < 2; ++x)
      for (std::size_t a = 0; a < 2; ++a)
        CHECK(std::abs(sub_sol.policy.row(s, x)[a] -
                       sol.policy.row(s + tau, x)[a]) <= 1e-5);
  }
}

TEST_CASE("stability gate and horizon validation") {
  auto states = Grid::uniform(-2.0, 2.0, 21);
  AdditiveNoiseSpec spec{
      [](double x, double, double) { return 1.6 * x; },  // expansive drift
      [](double, double) { return 0.5; },
      [](double x, double, double y) { return (x - y) * (x - y); },
      /*theta=*/0.4,
      states,
      Grid::uniform(-1.0, 1.0, 2),
      /*sigma_trunc=*/4.0,
      /*beta=*/0.9,
      ProbVector::uniform(states),
      WeightFn::polynomial(states, 2)};
  GameModel unstable = build_additive_noise_model(spec);
  const GrowthConstants c =
      estimate_growth_constants(unstable, default_probe_flows(unstable));
  REQUIRE_FALSE(c.stable);
  CHECK_THROWS_AS(solve_mfe(unstable), StabilityError);

  // Explicit horizon overrides the gate.
  MfeOptions opts;
  opts.horizon = 4;
  MfeSolution sol = solve_mfe(unstable, opts);
  CHECK(sol.horizon == 4);

  MfeOptions bad;
  bad.horizon = 0;
  CHECK_THROWS_AS(solve_mfe(make_toy_model(), bad), DomainError);
}
