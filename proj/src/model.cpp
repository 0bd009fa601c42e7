#include "mfg/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mfg {

namespace {

constexpr double kKernelMassTol = 1e-9;

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

}  // namespace

ProbVector transition(const GameModel& model, std::size_t x, std::size_t a,
                      const ProbVector& mu) {
  if (x >= model.num_states() || a >= model.num_actions())
    throw StructuralError("transition: state/action index out of range");
  if (!mu.grid().same_as(*model.state_grid))
    throw StructuralError("transition: measure not on the model state grid");
  ProbVector out = model.kernel(x, a, mu);
  if (!out.grid().same_as(*model.state_grid))
    throw ModelIntegrityError("transition: kernel output on a foreign grid");
  double total = 0.0;
  for (std::size_t i = 0; i < out.size(); ++i) total += out[i];
  if (std::abs(total - 1.0) > kKernelMassTol)
    throw ModelIntegrityError("transition: kernel mass " + std::to_string(total));
  return out;
}

double stage_cost(const GameModel& model, std::size_t x, std::size_t a,
                  const ProbVector& mu) {
  if (x >= model.num_states() || a >= model.num_actions())
    throw StructuralError("stage_cost: state/action index out of range");
  const double c = model.cost(x, a, mu);
  if (!std::isfinite(c)) throw NumericError("stage_cost: non-finite cost");
  if (c < 0.0) throw ModelIntegrityError("stage_cost: negative cost");
  return c;
}

FrozenStage freeze_stage(const GameModel& model, const ProbVector& mu) {
  const std::size_t X = model.num_states(), A = model.num_actions();
  FrozenStage out;
  out.num_actions = A;
  out.transition.resize(X * A);
  out.stage_cost.resize(X * A);
  for (std::size_t x = 0; x < X; ++x) {
    for (std::size_t a = 0; a < A; ++a) {
      out.transition[x * A + a] = transition(model, x, a, mu).mass();
      out.stage_cost[x * A + a] = stage_cost(model, x, a, mu);
    }
  }
  return out;
}

GrowthConstants estimate_growth_constants(const GameModel& model,
                                          const std::vector<ProbVector>& probe_flows) {
  if (probe_flows.empty())
    throw DomainError("estimate_growth_constants: empty probe set");
  const std::size_t X = model.num_states(), A = model.num_actions();
  const WeightFn v = model.v();
  const auto& w = model.weight;

  GrowthConstants c;
  c.M = moment(model.mu0, v.values());

  std::vector<double> envelope;  // per-probe max of cost / v(x)
  envelope.reserve(probe_flows.size());
  for (const ProbVector& mu : probe_flows) {
    double env = 0.0;
    for (std::size_t x = 0; x < X; ++x) {
      for (std::size_t a = 0; a < A; ++a) {
        const ProbVector next = transition(model, x, a, mu);
        double drift_w = 0.0, drift_w2 = 0.0;
        for (std::size_t y = 0; y < next.size(); ++y) {
          drift_w += w[y] * next[y];
          drift_w2 += w[y] * w[y] * next[y];
        }
        c.alpha = std::max(c.alpha, drift_w / w[x]);
        c.B = std::max(c.B, drift_w2 / (w[x] * w[x]));
        env = std::max(env, stage_cost(model, x, a, mu) / v[x]);
      }
    }
    envelope.push_back(env);
  }

  if (model.gamma_tracks_alpha && c.alpha > 0.0) {
    c.gamma = std::max(1.0, c.alpha);
    c.R = 0.0;
    for (std::size_t t = 0; t < envelope.size(); ++t)
      c.R = std::max(c.R, envelope[t] / std::pow(c.gamma, static_cast<double>(t)));
  } else {
    // Least flat envelope: on a compact grid costs stay bounded along the
    // probe ordering, so gamma = 1 with the running max as level.
    c.gamma = 1.0;
    c.R = *std::max_element(envelope.begin(), envelope.end());
  }
  c.stable = c.alpha * model.beta * c.gamma < 1.0;
  return c;
}

std::vector<ProbVector> default_probe_flows(const GameModel& model) {
  std::vector<ProbVector> probes;
  probes.reserve(model.num_states() + 2);
  for (std::size_t x = 0; x < model.num_states(); ++x)
    probes.push_back(ProbVector::dirac(model.state_grid, x));
  probes.push_back(ProbVector::uniform(model.state_grid));
  probes.push_back(model.mu0);
  return probes;
}

double lt_envelope(const GrowthConstants& constants, double beta, int t) {
  if (t < 0) throw DomainError("lt_envelope: negative t");
  const double abg = constants.alpha * beta * constants.gamma;
  if (abg >= 1.0)
    throw StabilityError("lt_envelope: alpha*beta*gamma = " + std::to_string(abg));
  return std::pow(constants.gamma, static_cast<double>(t)) * constants.R / (1.0 - abg);
}

GameModel build_additive_noise_model(const AdditiveNoiseSpec& spec) {
  if (!(spec.theta > 0.0))
    throw ConfigError("additive noise: diffusion lower bound theta must be positive");
  if (spec.sigma_trunc <= 0.0)
    throw ConfigError("additive noise: sigma_trunc must be positive");
  if (!(spec.beta > 0.0 && spec.beta < 1.0))
    throw ConfigError("additive noise: beta must lie in (0,1)");
  const auto& states = *spec.state_grid;
  const auto& actions = *spec.action_grid;
  // Probe the declared bounds on the grid corners.
  for (std::size_t a = 0; a < actions.size(); ++a) {
    for (std::size_t x = 0; x < states.size(); ++x) {
      if (std::abs(spec.g(states[x], actions[a])) < spec.theta)
        throw ConfigError("additive noise: |g| below theta on the grid");
    }
  }
  // At least two bins must fall inside one noise band or the discretized
  // kernel degenerates to a Dirac regardless of the diffusion.
  {
    double step = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i + 1 < states.size(); ++i)
      step = std::min(step, states[i + 1] - states[i]);
    if (states.size() < 2 || step > 2.0 * spec.sigma_trunc * spec.theta)
      throw ConfigError("additive noise: grid too coarse for the noise band");
  }

  GameModel model{
      spec.state_grid,
      spec.action_grid,
      spec.beta,
      spec.mu0,
      spec.weight,
      /*cost_bounded=*/false,
      /*kernel=*/nullptr,
      /*cost=*/nullptr,
      /*gamma_tracks_alpha=*/true,
      "additive_noise"};

  auto f = spec.f;
  auto g = spec.g;
  auto d = spec.d;
  const GridPtr grid = spec.state_grid;
  const double trunc = spec.sigma_trunc;

  model.kernel = [f, g, grid, actions = spec.action_grid, trunc](
                     std::size_t x, std::size_t a, const ProbVector& mu) {
    const double xc = (*grid)[x];
    const double ac = (*actions)[a];
    double center = 0.0;  // F(x, a, mu) = mu-average of f(x, a, .)
    for (std::size_t j = 0; j < mu.size(); ++j)
      center += f(xc, ac, mu.grid()[j]) * mu[j];
    const double sd = std::abs(g(xc, ac));

    // Integrate the truncated normal density over nearest-point cells.
    const std::size_t n = grid->size();
    const double lo_z = -trunc, hi_z = trunc;
    const double band = normal_cdf(hi_z) - normal_cdf(lo_z);
    std::vector<double> mass(n, 0.0);
    for (std::size_t k = 0; k < n; ++k) {
      const double cell_lo =
          (k == 0) ? -std::numeric_limits<double>::infinity()
                   : 0.5 * ((*grid)[k - 1] + (*grid)[k]);
      const double cell_hi =
          (k + 1 == n) ? std::numeric_limits<double>::infinity()
                       : 0.5 * ((*grid)[k] + (*grid)[k + 1]);
      const double zlo = std::max(lo_z, (cell_lo - center) / sd);
      const double zhi = std::min(hi_z, (cell_hi - center) / sd);
      if (zhi > zlo) mass[k] = (normal_cdf(zhi) - normal_cdf(zlo)) / band;
    }
    return ProbVector(grid, std::move(mass));
  };

  model.cost = [d, grid, actions = spec.action_grid](std::size_t x, std::size_t a,
                                                     const ProbVector& mu) {
    const double xc = (*grid)[x];
    const double ac = (*actions)[a];
    double acc = 0.0;
    for (std::size_t j = 0; j < mu.size(); ++j)
      acc += d(xc, ac, mu.grid()[j]) * mu[j];
    return acc;
  };
  return model;
}

GameModel make_toy_model() {
  auto states = Grid::of({0.0, 1.0});
  auto actions = Grid::of({0.0, 1.0});  // 0 = stay, 1 = switch
  GameModel model{
      states,
      actions,
      0.9,
      ProbVector::uniform(states),
      WeightFn::unit(states),
      /*cost_bounded=*/true,
      /*kernel=*/nullptr,
      /*cost=*/nullptr,
      /*gamma_tracks_alpha=*/false,
      "toy"};
  model.kernel = [states](std::size_t x, std::size_t a, const ProbVector&) {
    const double keep = (a == 0) ? 0.9 : 0.2;
    std::vector<double> mass(2, 0.0);
    mass[x] = keep;
    mass[1 - x] = 1.0 - keep;
    return ProbVector(states, std::move(mass));
  };
  model.cost = [](std::size_t x, std::size_t a, const ProbVector& mu) {
    return static_cast<double>(x) * mu[1] + 0.1 * static_cast<double>(a == 1);
  };
  return model;
}

GameModel make_tabular_model(GridPtr states, GridPtr actions, double beta,
                             ProbVector mu0,
                             std::vector<std::vector<std::vector<double>>> kernel_rows,
                             std::vector<std::vector<double>> cost_table) {
  const std::size_t X = states->size(), A = actions->size();
  if (kernel_rows.size() != X || cost_table.size() != X)
    throw ConfigError("tabular model: outer array size must equal state count");
  for (std::size_t x = 0; x < X; ++x) {
    if (kernel_rows[x].size() != A || cost_table[x].size() != A)
      throw ConfigError("tabular model: inner array size must equal action count");
    for (std::size_t a = 0; a < A; ++a) {
      if (kernel_rows[x][a].size() != X)
        throw ConfigError("tabular model: kernel row length must equal state count");
    }
  }
  if (!(beta > 0.0 && beta < 1.0)) throw ConfigError("tabular model: beta not in (0,1)");

  GameModel model{
      states,
      actions,
      beta,
      std::move(mu0),
      WeightFn::unit(states),
      /*cost_bounded=*/true,
      /*kernel=*/nullptr,
      /*cost=*/nullptr,
      /*gamma_tracks_alpha=*/false,
      "tabular"};
  model.kernel = [states, rows = std::move(kernel_rows)](
                     std::size_t x, std::size_t a, const ProbVector&) {
    return ProbVector(states, rows[x][a]);
  };
  model.cost = [costs = std::move(cost_table)](std::size_t x, std::size_t a,
                                               const ProbVector&) {
    return costs[x][a];
  };
  return model;
}

}  // namespace mfg
