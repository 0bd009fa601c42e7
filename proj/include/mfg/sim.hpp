#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "mfg/mfe.hpp"

namespace mfg {

/// Finite-N game run configuration. Either every agent shares `policy`, or
/// agent 1 plays `deviator` while the crowd stays on `policy`.
struct SimConfig {
  int num_agents = 1;
  int horizon = 1;
  int replications = 1;
  std::uint64_t master_seed = 0;
  MarkovPolicy policy;                     // crowd policy
  std::optional<MarkovPolicy> deviator;    // agent 1 override
  int workers = 1;
};

struct SimReport {
  std::vector<double> agent1_costs;        // per replication, truncated at T
  double mean_cost = 0.0;
  double stderr_cost = 0.0;
  std::vector<double> mean_distance;       // per t, vs reference flow (if given)
  std::vector<double> stderr_distance;
  std::vector<ProbVector> mean_empirical;  // replication-average e_t^(N)
  std::uint64_t master_seed = 0;
};

/// Monte Carlo run of the N-agent game: i.i.d. mu0 starts, empirical-
/// measure-coupled transitions, discounted cost accrual for agent 1.
SimReport simulate(const GameModel& model, const SimConfig& config,
                   const MeasureFlow* reference_flow = nullptr);

struct ConvergenceRow {
  int num_agents = 0;
  int t = 0;
  double mean_distance = 0.0;
  double stderr_distance = 0.0;
};

struct ConvergenceStudy {
  std::vector<ConvergenceRow> rows;
  double log_log_slope = 0.0;  // of per-N mean distance vs N
};

/// Distance ladder over increasing N; covers the deviating-agent variant
/// when a deviator policy is supplied.
ConvergenceStudy empirical_convergence_study(
    const GameModel& model, const MarkovPolicy& policy, const MeasureFlow& flow,
    const std::vector<int>& Ns, int reps, std::uint64_t master_seed,
    const MarkovPolicy* deviator = nullptr, int workers = 1);

struct VarianceCheck {
  double lhs = 0.0;   // squared mean one-step empirical-moment gap
  double rhs = 0.0;   // exact second-moment bound, probe-averaged
  double rse = 0.0;   // relative standard error of the gap estimate
  bool pass = false;  // lhs <= rhs * (1 + 3 * rse)
};

/// One propagation step from an i.i.d. sample of mu under the policy-mixed
/// kernel; Monte Carlo left side against the exact right side.
VarianceCheck one_step_variance_check(const GameModel& model,
                                      const MarkovPolicy& policy,
                                      const ProbVector& mu, int N, int reps,
                                      const std::vector<double>& g,
                                      std::uint64_t seed, int workers = 1);

struct DeviationCost {
  std::string name;
  double mean_cost = 0.0;
  double stderr_cost = 0.0;
};

struct NashGapReport {
  double gap = 0.0;      // equilibrium cost minus best candidate cost
  double stderr_gap = 0.0;
  std::vector<DeviationCost> table;  // first entry is the equilibrium policy
};

/// Unilateral-deviation sweep: agent 1 tries each candidate against a crowd
/// frozen on the equilibrium policy, all under common random numbers.
NashGapReport nash_gap(const GameModel& model, const MfeSolution& mfe,
                       const std::vector<std::pair<std::string, MarkovPolicy>>& deviations,
                       int N, int reps, std::uint64_t master_seed, int workers = 1);

/// Default candidate set: best response to the equilibrium flow, best
/// response to a pilot empirical flow at the given N, and every constant
/// single-action policy.
std::vector<std::pair<std::string, MarkovPolicy>> default_deviations(
    const GameModel& model, const MfeSolution& mfe, int N, int pilot_reps,
    std::uint64_t master_seed);

}  // namespace mfg
