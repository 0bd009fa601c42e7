#pragma once

#include <optional>
#include <string>

#include "mfg/dp.hpp"

namespace mfg {

enum class DampingMode { kConstant, kHarmonic };

struct DampingSchedule {
  DampingMode mode = DampingMode::kHarmonic;
  double delta = 0.5;  // used in constant mode

  double step(int k) const {
    return mode == DampingMode::kHarmonic ? 1.0 / (k + 1) : delta;
  }
  std::string describe() const;
};

struct MfeOptions {
  std::optional<int> horizon;       // explicit T; otherwise tol_tail drives it
  double tol_tail = 1e-6;
  int max_iters = 1000;
  double tol_flow = 1e-6;
  double tol_exploit = 1e-6;
  DampingSchedule damping;
};

/// Equilibrium candidate with its certification residuals. The residuals
/// are recomputable from (policy, flow) alone, independent of how the
/// iterate was produced.
struct MfeSolution {
  MarkovPolicy policy;
  MeasureFlow flow;
  std::vector<std::vector<std::vector<double>>> joint;  // nu_t(x, a)
  double residual_flow = 0.0;
  double exploitability = 0.0;
  double iterate_gap = 0.0;  // max_t rho_v between final flow and last iterate
  int iterations = 0;
  bool converged = false;
  int horizon = 0;
  double tail = 0.0;
  GrowthConstants constants;
  std::string damping;
  std::size_t max_near_ties = 1;  // greedy-extraction tie diagnostic
};

/// Forward flow induced by a policy: mu_{t+1} = sum_{x,a} mu_t(x)
/// pi_t(a|x) p(.|x,a,mu_t), starting from the model's mu0.
MeasureFlow propagate_flow(const GameModel& model, const MarkovPolicy& policy, int T);

/// Optimal policy against a frozen flow (backward value iteration).
SolveResult best_response(const GameModel& model, const MeasureFlow& flow);

/// Cost gap of a policy against the best response to the same flow,
/// clipped below at -1e-9.
double exploitability(const GameModel& model, const MeasureFlow& flow,
                      const MarkovPolicy& policy);

/// Damped best-response iteration over measure flows. Non-convergence at
/// max_iters returns the best iterate with converged == false.
MfeSolution solve_mfe(const GameModel& model, const MfeOptions& opts = {});

}  // namespace mfg
