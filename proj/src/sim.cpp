#include "mfg/sim.hpp"

#include <algorithm>
#include <cmath>
#include <thread>

#include "mfg/rng.hpp"

namespace mfg {

namespace {

constexpr std::uint64_t kPurposeInit = 0;
constexpr std::uint64_t kPurposeStep = 1;

// Static stride partition: worker w owns indices w, w + workers, ...; each
// index writes its own slot, so aggregates are schedule-independent.
void parallel_for(int n, int workers, const std::function<void(int)>& fn) {
  workers = std::max(1, std::min(workers, n));
  if (workers == 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&, w] {
      for (int i = w; i < n; i += workers) fn(i);
    });
  }
  for (auto& th : pool) th.join();
}

struct MeanStderr {
  double mean = 0.0;
  double se = 0.0;
};

MeanStderr mean_stderr(const std::vector<double>& xs) {
  MeanStderr out;
  if (xs.empty()) return out;
  for (double x : xs) out.mean += x;
  out.mean /= static_cast<double>(xs.size());
  if (xs.size() < 2) return out;
  double ss = 0.0;
  for (double x : xs) ss += (x - out.mean) * (x - out.mean);
  out.se = std::sqrt(ss / (static_cast<double>(xs.size()) *
                           static_cast<double>(xs.size() - 1)));
  return out;
}

}  // namespace

SimReport simulate(const GameModel& model, const SimConfig& config,
                   const MeasureFlow* reference_flow) {
  const int N = config.num_agents;
  const int T = config.horizon;
  const int reps = config.replications;
  if (N < 1) throw DomainError("simulate: need at least one agent");
  if (T < 0 || reps < 1) throw DomainError("simulate: bad horizon or replications");
  if (config.policy.horizon() < T)
    throw StructuralError("simulate: crowd policy horizon shorter than T");
  if (config.deviator && config.deviator->horizon() < T)
    throw StructuralError("simulate: deviator policy horizon shorter than T");
  if (reference_flow && reference_flow->horizon() < T)
    throw StructuralError("simulate: reference flow shorter than T");

  const std::size_t X = model.num_states();
  const WeightFn v = model.v();
  const std::size_t steps = static_cast<std::size_t>(T) + 1;

  std::vector<double> costs(static_cast<std::size_t>(reps), 0.0);
  std::vector<std::vector<double>> dists(
      static_cast<std::size_t>(reps),
      std::vector<double>(reference_flow ? steps : 0, 0.0));
  std::vector<std::vector<double>> emp_sum(
      static_cast<std::size_t>(reps), std::vector<double>(steps * X, 0.0));

  parallel_for(reps, config.workers, [&](int r) {
    std::vector<std::size_t> state(static_cast<std::size_t>(N));
    for (int i = 0; i < N; ++i) {
      state[static_cast<std::size_t>(i)] =
          RngStream::at(config.master_seed, r, i, 0, kPurposeInit)
              .sample(model.mu0);
    }
    double discount = 1.0;
    double cost = 0.0;
    std::vector<double> counts(X);
    for (int t = 0; t <= T; ++t) {
      std::fill(counts.begin(), counts.end(), 0.0);
      for (int i = 0; i < N; ++i) counts[state[static_cast<std::size_t>(i)]] += 1.0;
      for (double& c : counts) c /= static_cast<double>(N);
      const ProbVector empirical(model.state_grid, counts);
      for (std::size_t x = 0; x < X; ++x)
        emp_sum[static_cast<std::size_t>(r)][static_cast<std::size_t>(t) * X + x] =
            empirical[x];
      if (reference_flow)
        dists[static_cast<std::size_t>(r)][static_cast<std::size_t>(t)] =
            rho_v(empirical, reference_flow->at(t), v);

      const FrozenStage stage = freeze_stage(model, empirical);
      for (int i = 0; i < N; ++i) {
        const std::size_t xi = state[static_cast<std::size_t>(i)];
        const MarkovPolicy& pol =
            (i == 0 && config.deviator) ? *config.deviator : config.policy;
        RngStream rng = RngStream::at(config.master_seed, r, i, t + 1, kPurposeStep);
        const std::size_t ai = rng.sample(pol.row(t, xi));
        if (i == 0) cost += discount * stage.cost(xi, ai);
        if (t < T)
          state[static_cast<std::size_t>(i)] = rng.sample(stage.row(xi, ai));
      }
      discount *= model.beta;
    }
    costs[static_cast<std::size_t>(r)] = cost;
  });

  SimReport report;
  report.master_seed = config.master_seed;
  report.agent1_costs = std::move(costs);
  const MeanStderr mc = mean_stderr(report.agent1_costs);
  report.mean_cost = mc.mean;
  report.stderr_cost = mc.se;

  if (reference_flow) {
    report.mean_distance.resize(steps);
    report.stderr_distance.resize(steps);
    std::vector<double> column(static_cast<std::size_t>(reps));
    for (std::size_t t = 0; t < steps; ++t) {
      for (int r = 0; r < reps; ++r)
        column[static_cast<std::size_t>(r)] = dists[static_cast<std::size_t>(r)][t];
      const MeanStderr md = mean_stderr(column);
      report.mean_distance[t] = md.mean;
      report.stderr_distance[t] = md.se;
    }
  }

  report.mean_empirical.reserve(steps);
  for (std::size_t t = 0; t < steps; ++t) {
    std::vector<double> mass(X, 0.0);
    for (int r = 0; r < reps; ++r)
      for (std::size_t x = 0; x < X; ++x)
        mass[x] += emp_sum[static_cast<std::size_t>(r)][t * X + x];
    for (double& m : mass) m /= static_cast<double>(reps);
    report.mean_empirical.emplace_back(model.state_grid, std::move(mass));
  }
  return report;
}

ConvergenceStudy empirical_convergence_study(
    const GameModel& model, const MarkovPolicy& policy, const MeasureFlow& flow,
    const std::vector<int>& Ns, int reps, std::uint64_t master_seed,
    const MarkovPolicy* deviator, int workers) {
  if (Ns.empty()) throw DomainError("empirical_convergence_study: empty N ladder");
  for (std::size_t i = 0; i + 1 < Ns.size(); ++i)
    if (Ns[i] >= Ns[i + 1])
      throw DomainError("empirical_convergence_study: Ns must be strictly increasing");

  ConvergenceStudy study;
  std::vector<double> log_n, log_d;
  for (std::size_t idx = 0; idx < Ns.size(); ++idx) {
    SimConfig config;
    config.num_agents = Ns[idx];
    config.horizon = flow.horizon();
    config.replications = reps;
    // Nested seed family: the ladder shares a master seed, each rung gets
    // its own sub-stream.
    config.master_seed =
        RngStream::at(master_seed, idx, 0, 0, kPurposeInit).next_u64();
    config.policy = policy;
    if (deviator) config.deviator = *deviator;
    config.workers = workers;
    const SimReport report = simulate(model, config, &flow);

    double aggregate = 0.0;
    for (int t = 0; t <= flow.horizon(); ++t) {
      study.rows.push_back({Ns[idx], t,
                            report.mean_distance[static_cast<std::size_t>(t)],
                            report.stderr_distance[static_cast<std::size_t>(t)]});
      aggregate += report.mean_distance[static_cast<std::size_t>(t)];
    }
    aggregate /= static_cast<double>(flow.horizon() + 1);
    if (aggregate > 0.0) {
      log_n.push_back(std::log(static_cast<double>(Ns[idx])));
      log_d.push_back(std::log(aggregate));
    }
  }

  if (log_n.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < log_n.size(); ++i) {
      mx += log_n[i];
      my += log_d[i];
    }
    mx /= static_cast<double>(log_n.size());
    my /= static_cast<double>(log_n.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < log_n.size(); ++i) {
      sxy += (log_n[i] - mx) * (log_d[i] - my);
      sxx += (log_n[i] - mx) * (log_n[i] - mx);
    }
    study.log_log_slope = sxy / sxx;
  }
  return study;
}

VarianceCheck one_step_variance_check(const GameModel& model,
                                      const MarkovPolicy& policy,
                                      const ProbVector& mu, int N, int reps,
                                      const std::vector<double>& g,
                                      std::uint64_t seed, int workers) {
  if (N < 1 || reps < 1) throw DomainError("one_step_variance_check: N, reps >= 1");
  if (g.size() != model.num_states())
    throw StructuralError("one_step_variance_check: g length mismatch");
  for (double gi : g)
    if (!std::isfinite(gi)) throw NumericError("one_step_variance_check: non-finite g");

  const std::size_t X = model.num_states(), A = model.num_actions();
  // Policy-mixed one-step kernel P(.|y) frozen at mu.
  const FrozenStage stage = freeze_stage(model, mu);
  std::vector<std::vector<double>> rows(X, std::vector<double>(X, 0.0));
  std::vector<double> m1(X, 0.0), m2(X, 0.0);  // exact E[g], E[g^2] per start
  for (std::size_t y = 0; y < X; ++y) {
    for (std::size_t a = 0; a < A; ++a) {
      const double pa = policy.row(0, y)[a];
      if (pa == 0.0) continue;
      const auto& row = stage.row(y, a);
      for (std::size_t z = 0; z < X; ++z) rows[y][z] += pa * row[z];
    }
    for (std::size_t z = 0; z < X; ++z) {
      m1[y] += rows[y][z] * g[z];
      m2[y] += rows[y][z] * g[z] * g[z];
    }
  }

  std::vector<double> diffs(static_cast<std::size_t>(reps));
  std::vector<double> bounds(static_cast<std::size_t>(reps));
  parallel_for(reps, workers, [&](int r) {
    double drift = 0.0, bound = 0.0, observed = 0.0;
    for (int i = 0; i < N; ++i) {
      const std::size_t yi =
          RngStream::at(seed, r, i, 0, kPurposeInit).sample(mu);
      drift += m1[yi];
      bound += m2[yi] + m1[yi] * m1[yi];
      const std::size_t xi =
          RngStream::at(seed, r, i, 1, kPurposeStep).sample(rows[yi]);
      observed += g[xi];
    }
    const double n = static_cast<double>(N);
    diffs[static_cast<std::size_t>(r)] = std::abs(observed / n - drift / n);
    bounds[static_cast<std::size_t>(r)] = bound / (n * n);
  });

  VarianceCheck check;
  const MeanStderr md = mean_stderr(diffs);
  const MeanStderr mb = mean_stderr(bounds);
  check.lhs = md.mean * md.mean;
  check.rhs = mb.mean;
  check.rse = md.mean > 0.0 ? md.se / md.mean : 0.0;
  check.pass = check.lhs <= check.rhs * (1.0 + 3.0 * check.rse);
  return check;
}

NashGapReport nash_gap(const GameModel& model, const MfeSolution& mfe,
                       const std::vector<std::pair<std::string, MarkovPolicy>>& deviations,
                       int N, int reps, std::uint64_t master_seed, int workers) {
  if (deviations.empty()) throw DomainError("nash_gap: empty deviation set");

  NashGapReport report;
  auto run = [&](const MarkovPolicy* deviator) {
    SimConfig config;
    config.num_agents = N;
    config.horizon = mfe.flow.horizon();
    config.replications = reps;
    config.master_seed = master_seed;  // common random numbers across candidates
    config.policy = mfe.policy;
    if (deviator) config.deviator = *deviator;
    config.workers = workers;
    return simulate(model, config, nullptr);
  };

  const SimReport equilibrium = run(nullptr);
  report.table.push_back({"equilibrium", equilibrium.mean_cost,
                          equilibrium.stderr_cost});
  // Common random numbers pair every candidate run with the equilibrium run
  // replication by replication, so the gap's standard error is that of the
  // per-replication cost differences, not the two costs combined in
  // quadrature. The equilibrium itself is in the candidate set, so the gap
  // never drops below zero.
  report.gap = 0.0;
  report.stderr_gap = 0.0;
  std::vector<double> diffs(equilibrium.agent1_costs.size());
  for (const auto& [name, policy] : deviations) {
    if (policy.horizon() < mfe.flow.horizon())
      throw StructuralError("nash_gap: deviation '" + name + "' horizon too short");
    const SimReport dev = run(&policy);
    report.table.push_back({name, dev.mean_cost, dev.stderr_cost});
    for (std::size_t r = 0; r < diffs.size(); ++r)
      diffs[r] = equilibrium.agent1_costs[r] - dev.agent1_costs[r];
    const MeanStderr paired = mean_stderr(diffs);
    if (paired.mean > report.gap) {
      report.gap = paired.mean;
      report.stderr_gap = paired.se;
    }
  }
  return report;
}

std::vector<std::pair<std::string, MarkovPolicy>> default_deviations(
    const GameModel& model, const MfeSolution& mfe, int N, int pilot_reps,
    std::uint64_t master_seed) {
  std::vector<std::pair<std::string, MarkovPolicy>> out;
  out.emplace_back("br_equilibrium_flow", best_response(model, mfe.flow).policy);

  // Best response to what the crowd empirically does at this N.
  SimConfig pilot;
  pilot.num_agents = N;
  pilot.horizon = mfe.flow.horizon();
  pilot.replications = pilot_reps;
  pilot.master_seed = RngStream::at(master_seed, 0, 0, 0, 2).next_u64();
  pilot.policy = mfe.policy;
  const SimReport pilot_report = simulate(model, pilot, nullptr);
  MeasureFlow empirical;
  empirical.flow = pilot_report.mean_empirical;
  out.emplace_back("br_empirical_flow", best_response(model, empirical).policy);

  for (std::size_t a = 0; a < model.num_actions(); ++a) {
    out.emplace_back("const_a" + std::to_string(a),
                     MarkovPolicy::constant_action(model.num_states(),
                                                   model.num_actions(), a,
                                                   mfe.flow.horizon()));
  }
  return out;
}

}  // namespace mfg
