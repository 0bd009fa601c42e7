#include "mfg/dp.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

namespace mfg {

namespace {

constexpr double kTieTol = 1e-9;

void write_row(std::ostream& os, int t, std::size_t i, double val) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%d,%zu,%.17g\n", t, i, val);
  os << buf;
}

}  // namespace

MeasureFlow MeasureFlow::constant(const ProbVector& mu, int T) {
  if (T < 0) throw DomainError("MeasureFlow::constant: negative horizon");
  MeasureFlow out;
  out.flow.assign(static_cast<std::size_t>(T) + 1, mu);
  return out;
}

void MeasureFlow::write_csv(std::ostream& os) const {
  for (int t = 0; t <= horizon(); ++t)
    for (std::size_t x = 0; x < at(t).size(); ++x) write_row(os, t, x, at(t)[x]);
}

void ValueFlow::write_csv(std::ostream& os) const {
  for (int t = 0; t <= horizon(); ++t) {
    const auto& row = values[static_cast<std::size_t>(t)];
    for (std::size_t x = 0; x < row.size(); ++x) write_row(os, t, x, row[x]);
  }
}

MarkovPolicy MarkovPolicy::constant_action(std::size_t num_states,
                                           std::size_t num_actions,
                                           std::size_t action, int T) {
  if (action >= num_actions) throw DomainError("constant_action: action out of range");
  std::vector<double> row(num_actions, 0.0);
  row[action] = 1.0;
  MarkovPolicy out;
  out.kernels.assign(static_cast<std::size_t>(T) + 1,
                     std::vector<std::vector<double>>(num_states, row));
  return out;
}

MarkovPolicy MarkovPolicy::uniform(std::size_t num_states, std::size_t num_actions,
                                   int T) {
  std::vector<double> row(num_actions, 1.0 / static_cast<double>(num_actions));
  MarkovPolicy out;
  out.kernels.assign(static_cast<std::size_t>(T) + 1,
                     std::vector<std::vector<double>>(num_states, row));
  return out;
}

void MarkovPolicy::validate() const {
  for (const auto& stage : kernels) {
    for (const auto& row : stage) {
      double total = 0.0;
      for (double p : row) {
        if (p < 0.0 || !std::isfinite(p))
          throw StructuralError("MarkovPolicy: negative or non-finite probability");
        total += p;
      }
      if (std::abs(total - 1.0) > 1e-12)
        throw StructuralError("MarkovPolicy: row mass " + std::to_string(total));
    }
  }
}

void MarkovPolicy::write_csv(std::ostream& os) const {
  char buf[96];
  for (int t = 0; t <= horizon(); ++t) {
    const auto& stage = kernels[static_cast<std::size_t>(t)];
    for (std::size_t x = 0; x < stage.size(); ++x)
      for (std::size_t a = 0; a < stage[x].size(); ++a) {
        std::snprintf(buf, sizeof(buf), "%d,%zu,%zu,%.17g\n", t, x, a, stage[x][a]);
        os << buf;
      }
  }
}

BackupResult bellman_backup(const GameModel& model, const FrozenStage& stage,
                            const std::vector<double>& u) {
  const std::size_t X = model.num_states(), A = model.num_actions();
  if (u.size() != X) throw StructuralError("bellman_backup: value length mismatch");
  for (double ui : u)
    if (!std::isfinite(ui)) throw NumericError("bellman_backup: non-finite input value");

  BackupResult out;
  out.value.resize(X);
  out.greedy.resize(X);
  for (std::size_t x = 0; x < X; ++x) {
    double best = 0.0;
    std::size_t best_a = 0;
    std::vector<double> q(A);
    for (std::size_t a = 0; a < A; ++a) {
      const auto& row = stage.row(x, a);
      double cont = 0.0;
      for (std::size_t y = 0; y < X; ++y) cont += row[y] * u[y];  // fixed index order
      q[a] = stage.cost(x, a) + model.beta * cont;
      if (a == 0 || q[a] < best) {
        best = q[a];
        best_a = a;
      }
    }
    std::size_t ties = 0;
    for (std::size_t a = 0; a < A; ++a)
      if (q[a] - best < kTieTol) ++ties;
    out.max_near_ties = std::max(out.max_near_ties, ties);
    out.value[x] = best;
    out.greedy[x] = best_a;
  }
  return out;
}

BackupResult bellman_backup(const GameModel& model, const ProbVector& mu_t,
                            const std::vector<double>& u) {
  return bellman_backup(model, freeze_stage(model, mu_t), u);
}

TruncationResult truncation_horizon(const GrowthConstants& constants, double beta,
                                    double tol_tail) {
  if (tol_tail <= 0.0) throw DomainError("truncation_horizon: tol_tail must be > 0");
  const double abg = constants.alpha * beta * constants.gamma;
  if (abg >= 1.0)
    throw StabilityError("truncation_horizon: alpha*beta*gamma = " +
                         std::to_string(abg));
  auto tail = [&](int T) {
    return constants.M * constants.R * std::pow(abg, T + 1) / (1.0 - abg);
  };
  int T = 1;
  while (tail(T) > tol_tail) {
    ++T;
    if (T > 1000000)
      throw StabilityError("truncation_horizon: tail does not reach tolerance");
  }
  return {T, tail(T)};
}

SolveResult solve_nonhomogeneous(const GameModel& model, const MeasureFlow& flow) {
  const int T = flow.horizon();
  const std::size_t X = model.num_states(), A = model.num_actions();

  SolveResult out;
  out.values.values.assign(static_cast<std::size_t>(T) + 2,
                           std::vector<double>(X, 0.0));
  out.policy.kernels.assign(
      static_cast<std::size_t>(T) + 1,
      std::vector<std::vector<double>>(X, std::vector<double>(A, 0.0)));

  for (int t = T; t >= 0; --t) {
    const BackupResult step =
        bellman_backup(model, flow.at(t), out.values.values[static_cast<std::size_t>(t) + 1]);
    out.values.values[static_cast<std::size_t>(t)] = step.value;
    out.max_near_ties = std::max(out.max_near_ties, step.max_near_ties);
    for (std::size_t x = 0; x < X; ++x)
      out.policy.kernels[static_cast<std::size_t>(t)][x][step.greedy[x]] = 1.0;
  }
  return out;
}

EvaluationResult evaluate_policy(const GameModel& model, const MeasureFlow& flow,
                                 const MarkovPolicy& policy) {
  const int T = flow.horizon();
  if (policy.horizon() < T)
    throw StructuralError("evaluate_policy: policy horizon shorter than flow");
  const std::size_t X = model.num_states(), A = model.num_actions();

  EvaluationResult out;
  out.values.values.assign(static_cast<std::size_t>(T) + 2,
                           std::vector<double>(X, 0.0));
  for (int t = T; t >= 0; --t) {
    const FrozenStage stage = freeze_stage(model, flow.at(t));
    const auto& next = out.values.values[static_cast<std::size_t>(t) + 1];
    auto& cur = out.values.values[static_cast<std::size_t>(t)];
    for (std::size_t x = 0; x < X; ++x) {
      double acc = 0.0;
      for (std::size_t a = 0; a < A; ++a) {
        const double pa = policy.row(t, x)[a];
        if (pa == 0.0) continue;
        double cont = 0.0;
        const auto& row = stage.row(x, a);
        for (std::size_t y = 0; y < X; ++y) cont += row[y] * next[y];
        acc += pa * (stage.cost(x, a) + model.beta * cont);
      }
      cur[x] = acc;
    }
  }
  out.total = moment(model.mu0, out.values.values[0]);
  return out;
}

}  // namespace mfg
