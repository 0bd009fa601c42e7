#pragma once

#include <iosfwd>
#include <utility>
#include <vector>

#include "mfg/model.hpp"

namespace mfg {

/// Time-indexed sequence of state distributions mu_0..mu_T.
struct MeasureFlow {
  std::vector<ProbVector> flow;  // length T + 1

  int horizon() const { return static_cast<int>(flow.size()) - 1; }
  const ProbVector& at(int t) const { return flow[static_cast<std::size_t>(t)]; }

  /// Constant flow mu_t = mu for t = 0..T.
  static MeasureFlow constant(const ProbVector& mu, int T);

  void write_csv(std::ostream& os) const;  // t,state_index,mass
};

/// Value vectors for t = 0..T plus the zero terminal vector at T + 1.
struct ValueFlow {
  std::vector<std::vector<double>> values;  // length T + 2

  int horizon() const { return static_cast<int>(values.size()) - 2; }
  void write_csv(std::ostream& os) const;  // t,state_index,value
};

/// Time-indexed row-stochastic matrices from states to actions.
struct MarkovPolicy {
  std::vector<std::vector<std::vector<double>>> kernels;  // [t][x][a]

  int horizon() const { return static_cast<int>(kernels.size()) - 1; }
  const std::vector<double>& row(int t, std::size_t x) const {
    return kernels[static_cast<std::size_t>(t)][x];
  }

  /// Deterministic policy playing the same action at every (t, x).
  static MarkovPolicy constant_action(std::size_t num_states, std::size_t num_actions,
                                      std::size_t action, int T);
  /// Uniformly mixed policy.
  static MarkovPolicy uniform(std::size_t num_states, std::size_t num_actions, int T);

  void validate() const;  // rows nonnegative, sum to one within 1e-12
  void write_csv(std::ostream& os) const;  // t,state_index,action_index,prob
};

struct BackupResult {
  std::vector<double> value;
  std::vector<std::size_t> greedy;   // lowest action index on ties
  std::size_t max_near_ties = 1;     // actions within 1e-9 of the row minimum
};

/// One application of the minimizing operator at a frozen measure:
/// value(x) = min_a [ c(x,a,mu) + beta * sum_y p(y|x,a,mu) u(y) ].
BackupResult bellman_backup(const GameModel& model, const ProbVector& mu_t,
                            const std::vector<double>& u);
BackupResult bellman_backup(const GameModel& model, const FrozenStage& stage,
                            const std::vector<double>& u);

struct TruncationResult {
  int T = 0;
  double tail = 0.0;  // M * R * (abg)^{T+1} / (1 - abg)
};

/// Smallest T >= 1 whose geometric cost tail falls below tol_tail.
TruncationResult truncation_horizon(const GrowthConstants& constants, double beta,
                                    double tol_tail);

struct SolveResult {
  ValueFlow values;
  MarkovPolicy policy;
  std::size_t max_near_ties = 1;
};

/// Backward value iteration over the flow with zero terminal value;
/// greedy deterministic policy rows.
SolveResult solve_nonhomogeneous(const GameModel& model, const MeasureFlow& flow);

struct EvaluationResult {
  ValueFlow values;
  double total = 0.0;  // mu0-average of values[0]
};

/// Policy evaluation against a frozen flow (expectation over the policy
/// rows instead of the min).
EvaluationResult evaluate_policy(const GameModel& model, const MeasureFlow& flow,
                                 const MarkovPolicy& policy);

}  // namespace mfg
