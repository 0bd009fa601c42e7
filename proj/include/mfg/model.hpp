#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "mfg/measures.hpp"

namespace mfg {

/// Full game-model abstraction: grids, discount, initial law, weight
/// function and the (x, a, mu)-dependent kernel and stage cost. Immutable
/// after construction; kernel/cost must be pure.
struct GameModel {
  GridPtr state_grid;
  GridPtr action_grid;
  double beta = 0.0;
  ProbVector mu0;
  WeightFn weight;        // w
  bool cost_bounded = true;  // selects v == 1 vs v == w
  std::function<ProbVector(std::size_t x, std::size_t a, const ProbVector& mu)> kernel;
  std::function<double(std::size_t x, std::size_t a, const ProbVector& mu)> cost;
  // The cost envelope of this model is known to grow like alpha^t (additive
  // noise construction); growth fitting honors it.
  bool gamma_tracks_alpha = false;
  std::string name;

  std::size_t num_states() const { return state_grid->size(); }
  std::size_t num_actions() const { return action_grid->size(); }
  WeightFn v() const { return cost_bounded ? WeightFn::unit(state_grid) : weight; }
};

/// Probe-based diagnostics for the drift/envelope constant system. These
/// are maxima over the supplied probe set, not certified global bounds.
struct GrowthConstants {
  double alpha = 0.0;   // kernel w-drift bound
  double gamma = 1.0;   // cost envelope growth rate, M_t = gamma^t R
  double R = 0.0;       // cost envelope level
  double M = 0.0;       // v-moment of mu0
  double B = 0.0;       // w^2 drift bound
  bool stable = false;  // alpha * beta * gamma < 1
};

/// Parameters of the additive-noise construction: next state is
/// F(x, a, mu) + g(x, a) * Z with truncated standard normal Z, stage cost
/// is the mu-average of d(x, a, .).
struct AdditiveNoiseSpec {
  std::function<double(double x, double a, double y)> f;  // bounded drift
  std::function<double(double x, double a)> g;            // diffusion, |g| >= theta > 0
  std::function<double(double x, double a, double y)> d;  // coupling cost >= 0
  double theta = 0.0;       // declared lower bound on |g|
  GridPtr state_grid;
  GridPtr action_grid;
  double sigma_trunc = 4.0;  // noise truncated at +/- sigma_trunc std devs
  double beta = 0.0;
  ProbVector mu0;
  WeightFn weight;
};

/// Kernel/cost of a model evaluated once for every (x, a) at a frozen
/// measure; the backbone of backups, flow propagation and simulation steps.
struct FrozenStage {
  std::vector<std::vector<double>> transition;  // [x * A + a] -> row over y
  std::vector<double> stage_cost;               // [x * A + a]
  std::size_t num_actions = 0;

  const std::vector<double>& row(std::size_t x, std::size_t a) const {
    return transition[x * num_actions + a];
  }
  double cost(std::size_t x, std::size_t a) const {
    return stage_cost[x * num_actions + a];
  }
};

FrozenStage freeze_stage(const GameModel& model, const ProbVector& mu);

/// Kernel evaluation with index/contract checks.
ProbVector transition(const GameModel& model, std::size_t x, std::size_t a,
                      const ProbVector& mu);

/// Cost evaluation with nonnegativity enforcement.
double stage_cost(const GameModel& model, std::size_t x, std::size_t a,
                  const ProbVector& mu);

/// Max-scan of the drift and envelope constants over a probe set of
/// measure flows (probe ordering supplies the t-index of the envelope).
GrowthConstants estimate_growth_constants(const GameModel& model,
                                          const std::vector<ProbVector>& probe_flows);

/// Default probes: Dirac at every state, the uniform law, and mu0.
std::vector<ProbVector> default_probe_flows(const GameModel& model);

/// Closed-form L_t = gamma^t R / (1 - alpha beta gamma); satisfies
/// L_t = M_t + (beta alpha) L_{t+1} identically.
double lt_envelope(const GrowthConstants& constants, double beta, int t);

GameModel build_additive_noise_model(const AdditiveNoiseSpec& spec);

/// Two-state/two-action instance used throughout as an enumeration oracle:
/// stay keeps the state w.p. 0.9, switch flips it w.p. 0.8,
/// c(x, a, mu) = x * mu({1}) + 0.1 * [a == switch], beta = 0.9, mu0 uniform.
GameModel make_toy_model();

/// mu-independent tabular model from explicit kernel/cost arrays.
GameModel make_tabular_model(GridPtr states, GridPtr actions, double beta,
                             ProbVector mu0,
                             std::vector<std::vector<std::vector<double>>> kernel_rows,
                             std::vector<std::vector<double>> cost_table);

}  // namespace mfg
