#include "mfg/mfe.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <utility>

namespace mfg {

std::string DampingSchedule::describe() const {
  if (mode == DampingMode::kHarmonic) return "harmonic";
  return "const:" + std::to_string(delta);
}

MeasureFlow propagate_flow(const GameModel& model, const MarkovPolicy& policy, int T) {
  if (policy.horizon() < T)
    throw StructuralError("propagate_flow: policy horizon shorter than T");
  const std::size_t X = model.num_states(), A = model.num_actions();

  MeasureFlow out;
  out.flow.reserve(static_cast<std::size_t>(T) + 1);
  out.flow.push_back(model.mu0);
  for (int t = 0; t < T; ++t) {
    const ProbVector& cur = out.flow.back();
    const FrozenStage stage = freeze_stage(model, cur);
    std::vector<double> next(X, 0.0);
    for (std::size_t x = 0; x < X; ++x) {
      if (cur[x] == 0.0) continue;
      for (std::size_t a = 0; a < A; ++a) {
        const double wxa = cur[x] * policy.row(t, x)[a];
        if (wxa == 0.0) continue;
        const auto& row = stage.row(x, a);
        for (std::size_t y = 0; y < X; ++y) next[y] += wxa * row[y];
      }
    }
    out.flow.emplace_back(model.state_grid, std::move(next));
  }
  return out;
}

SolveResult best_response(const GameModel& model, const MeasureFlow& flow) {
  return solve_nonhomogeneous(model, flow);
}

double exploitability(const GameModel& model, const MeasureFlow& flow,
                      const MarkovPolicy& policy) {
  const EvaluationResult actual = evaluate_policy(model, flow, policy);
  const SolveResult best = best_response(model, flow);
  const double optimum = moment(model.mu0, best.values.values[0]);
  return std::max(actual.total - optimum, -1e-9);
}

namespace {

double flow_distance(const MeasureFlow& a, const MeasureFlow& b, const WeightFn& v) {
  double worst = 0.0;
  for (int t = 0; t <= a.horizon(); ++t)
    worst = std::max(worst, rho_v(a.at(t), b.at(t), v));
  return worst;
}

MeasureFlow damp(const MeasureFlow& base, const MeasureFlow& target, double delta,
                 const GridPtr& grid) {
  MeasureFlow out;
  out.flow.reserve(base.flow.size());
  for (std::size_t t = 0; t < base.flow.size(); ++t) {
    std::vector<double> mass(base.flow[t].size());
    for (std::size_t x = 0; x < mass.size(); ++x)
      mass[x] = (1.0 - delta) * base.flow[t][x] + delta * target.flow[t][x];
    out.flow.emplace_back(grid, std::move(mass));
  }
  return out;
}

std::vector<std::vector<std::vector<double>>> disintegrate(const MeasureFlow& flow,
                                                           const MarkovPolicy& policy) {
  std::vector<std::vector<std::vector<double>>> joint;
  joint.reserve(flow.flow.size());
  for (int t = 0; t <= flow.horizon(); ++t) {
    const ProbVector& mu = flow.at(t);
    std::vector<std::vector<double>> nu(mu.size());
    for (std::size_t x = 0; x < mu.size(); ++x) {
      const auto& row = policy.row(t, x);
      nu[x].resize(row.size());
      for (std::size_t a = 0; a < row.size(); ++a) nu[x][a] = mu[x] * row[a];
    }
    joint.push_back(std::move(nu));
  }
  return joint;
}

// A (t, x) cell whose greedy action chatters between two candidates across
// best-response iterations; the fixed point mixes between them.
struct TieCell {
  int t = 0;
  std::size_t x = 0;
  std::size_t a_lo = 0, a_hi = 0;
};

MarkovPolicy mix_policy(MarkovPolicy base, const std::vector<TieCell>& cells,
                        const std::vector<double>& q) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    auto& row =
        base.kernels[static_cast<std::size_t>(cells[i].t)][cells[i].x];
    std::fill(row.begin(), row.end(), 0.0);
    row[cells[i].a_lo] = 1.0 - q[i];
    row[cells[i].a_hi] = q[i];
  }
  return base;
}

struct PolishEval {
  std::vector<double> gaps;  // Q(a_hi) - Q(a_lo) per cell, self-consistent flow
  MarkovPolicy fresh;        // pure best response against that flow
  MeasureFlow flow;
};

// Candidate equilibrium pair produced by the bisection polish.
struct Candidate {
  MarkovPolicy policy;
  MeasureFlow flow;
  double expl = 0.0;
  std::size_t max_near_ties = 1;
};

double q_gap(const GameModel& model, const MeasureFlow& flow,
             const std::vector<double>& next, const TieCell& cell) {
  const FrozenStage stage = freeze_stage(model, flow.at(cell.t));
  double q[2] = {0.0, 0.0};
  const std::size_t acts[2] = {cell.a_lo, cell.a_hi};
  for (int j = 0; j < 2; ++j) {
    const auto& row = stage.row(cell.x, acts[j]);
    double s = 0.0;
    for (std::size_t y = 0; y < row.size(); ++y) s += row[y] * next[y];
    q[j] = stage.cost(cell.x, acts[j]) + model.beta * s;
  }
  return q[1] - q[0];
}

// Solve for the mixing weights that make every chattering cell exactly
// indifferent under its own induced flow. Any mixture over minimizers is a
// valid best response, so the resulting pair is certified from scratch.
std::optional<Candidate> polish(const GameModel& model, int T,
                                const std::vector<TieCell>& cells,
                                const MarkovPolicy& base_policy,
                                double tol_exploit) {
  if (cells.empty() || cells.size() > 16) return std::nullopt;
  const std::size_t m = cells.size();
  MarkovPolicy base = base_policy;
  std::vector<double> q(m, 0.5);
  std::size_t ties = 1;

  const auto eval = [&](const std::vector<double>& weights) {
    PolishEval out;
    const MarkovPolicy pi = mix_policy(base, cells, weights);
    out.flow = propagate_flow(model, pi, T);
    SolveResult sr = solve_nonhomogeneous(model, out.flow);
    ties = std::max(ties, sr.max_near_ties);
    out.gaps.resize(m);
    for (std::size_t i = 0; i < m; ++i)
      out.gaps[i] = q_gap(model, out.flow,
                          sr.values.values[static_cast<std::size_t>(cells[i].t) + 1],
                          cells[i]);
    out.fresh = std::move(sr.policy);
    return out;
  };

  const int sweeps = 6;
  for (int sweep = 0; sweep < sweeps; ++sweep) {
    for (std::size_t i = 0; i < m; ++i) {
      auto gap_at = [&](double qi) {
        std::vector<double> w = q;
        w[i] = qi;
        return eval(w).gaps[i];
      };
      double lo = 0.0, hi = 1.0;
      double glo = gap_at(lo), ghi = gap_at(hi);
      if ((glo <= 0.0) == (ghi <= 0.0)) {
        q[i] = std::abs(glo) <= std::abs(ghi) ? lo : hi;  // not actually tied
        continue;
      }
      for (int it = 0; it < 60; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double g = gap_at(mid);
        if ((g <= 0.0) == (glo <= 0.0)) {
          lo = mid;
          glo = g;
        } else {
          hi = mid;
        }
      }
      q[i] = 0.5 * (lo + hi);
    }
    // Refresh the strictly-optimal rows against the current self-consistent
    // flow before the next sweep.
    base = eval(q).fresh;
  }

  Candidate cand;
  cand.policy = mix_policy(eval(q).fresh, cells, q);
  cand.flow = propagate_flow(model, cand.policy, T);
  cand.expl = exploitability(model, cand.flow, cand.policy);
  cand.max_near_ties = ties;
  if (cand.expl > tol_exploit) return std::nullopt;
  return cand;
}

}  // namespace

MfeSolution solve_mfe(const GameModel& model, const MfeOptions& opts) {
  MfeSolution sol;
  sol.constants = estimate_growth_constants(model, default_probe_flows(model));
  sol.damping = opts.damping.describe();

  if (opts.horizon) {
    sol.horizon = *opts.horizon;
    if (sol.horizon < 1) throw DomainError("solve_mfe: horizon must be >= 1");
    sol.tail = 0.0;  // explicit horizon: finite-horizon criterion, no tail claim
  } else {
    if (!sol.constants.stable)
      throw StabilityError("solve_mfe: probe-based alpha*beta*gamma >= 1; "
                           "pass an explicit horizon to override");
    const TruncationResult trunc =
        truncation_horizon(sol.constants, model.beta, opts.tol_tail);
    sol.horizon = trunc.T;
    sol.tail = trunc.tail;
  }
  const int T = sol.horizon;
  const WeightFn v = model.v();

  const auto finish = [&](MarkovPolicy policy, MeasureFlow flow, double expl,
                          double gap, int iters, bool ok) {
    sol.policy = std::move(policy);
    sol.flow = std::move(flow);
    // Certification residual of the returned pair, recomputable from
    // (policy, flow) alone: the flow is the policy's own propagation, so
    // this re-propagates and measures the (machine-level) discrepancy.
    sol.residual_flow =
        flow_distance(propagate_flow(model, sol.policy, T), sol.flow, v);
    sol.exploitability = expl;
    sol.iterate_gap = gap;
    sol.iterations = iters;
    sol.converged = ok;
    sol.joint = disintegrate(sol.flow, sol.policy);
    return sol;
  };

  // Warm start: propagate the best response to the frozen-mu0 flow, so a
  // game whose data ignore mu is already flow-consistent at k = 0.
  MeasureFlow mu = [&] {
    const SolveResult pilot =
        best_response(model, MeasureFlow::constant(model.mu0, T));
    return propagate_flow(model, pilot.policy, T);
  }();

  double best_expl = std::numeric_limits<double>::infinity();
  double best_gap = std::numeric_limits<double>::infinity();
  MarkovPolicy best_policy;
  MeasureFlow best_flow;

  // Cells whose greedy action flipped between consecutive best responses;
  // persistent flips indicate a mixed fixed point.
  std::map<std::pair<int, std::size_t>, std::pair<std::size_t, std::size_t>> flips;
  MarkovPolicy prev_policy;
  int next_polish = 10;

  for (int k = 0; k < opts.max_iters; ++k) {
    const SolveResult br = best_response(model, mu);
    sol.max_near_ties = std::max(sol.max_near_ties, br.max_near_ties);
    const MeasureFlow induced = propagate_flow(model, br.policy, T);
    const double gap = flow_distance(induced, mu, v);
    const double expl = exploitability(model, induced, br.policy);

    if (expl <= opts.tol_exploit && expl <= best_expl) {
      // (pi, Lambda(pi)) is flow-consistent by construction; exploitability
      // is the only approximate condition left.
      return finish(br.policy, induced, expl, gap, k + 1, true);
    }
    if (expl < best_expl) {
      best_expl = expl;
      best_gap = gap;
      best_policy = br.policy;
      best_flow = induced;
    }

    if (k > 0) {
      for (int t = 0; t < T; ++t)
        for (std::size_t x = 0; x < model.num_states(); ++x) {
          const auto& cur = br.policy.row(t, x);
          const auto& old = prev_policy.row(t, x);
          std::size_t ac = 0, ao = 0;
          for (std::size_t a = 0; a < cur.size(); ++a) {
            if (cur[a] > cur[ac]) ac = a;
            if (old[a] > old[ao]) ao = a;
          }
          if (ac != ao)
            flips[{t, x}] = {std::min(ac, ao), std::max(ac, ao)};
        }
    }
    prev_policy = br.policy;

    if ((k + 1 == next_polish || k + 1 == opts.max_iters) && !flips.empty()) {
      next_polish *= 4;
      std::vector<TieCell> cells;
      for (const auto& [cell, acts] : flips)
        cells.push_back({cell.first, cell.second, acts.first, acts.second});
      if (auto cand = polish(model, T, cells, br.policy, opts.tol_exploit)) {
        sol.max_near_ties = std::max(sol.max_near_ties, cand->max_near_ties);
        const double cgap = flow_distance(cand->flow, mu, v);
        return finish(std::move(cand->policy), std::move(cand->flow),
                      cand->expl, cgap, k + 1, true);
      }
    }

    mu = damp(mu, induced, opts.damping.step(k), model.state_grid);
  }

  return finish(std::move(best_policy), std::move(best_flow), best_expl,
                best_gap, opts.max_iters, false);
}

}  // namespace mfg
