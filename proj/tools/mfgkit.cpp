// mfgkit: batch front-end for equilibrium solving and finite-population
// Monte Carlo experiments. Subcommands: solve, simulate, study, gap,
// constants. All numeric outputs are CSV plus a JSON run manifest.

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mfg/io.hpp"
#include "mfg/sim.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr const char* kVersion = "0.1.0";

constexpr int kExitConfig = 2;
constexpr int kExitNonConverged = 3;
constexpr int kExitModelIntegrity = 4;

struct CommonOpts {
  std::string config_path;
  std::string out_dir = ".";
  std::uint64_t seed = 0;
  int workers = 0;  // 0: resolve from MFGKIT_WORKERS, fallback 1
};

int resolve_workers(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("MFGKIT_WORKERS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return 1;
}

json load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw mfg::ConfigError("cannot open config " + path);
  json config;
  in >> config;
  return config;
}

std::string fmt17(double x) {
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

class RunWriter {
 public:
  RunWriter(const std::string& command, const CommonOpts& opts, const json& config)
      : out_dir_(opts.out_dir), started_(std::chrono::steady_clock::now()) {
    fs::create_directories(out_dir_);
    manifest_["command"] = command;
    manifest_["tool_version"] = kVersion;
    manifest_["config_path"] = opts.config_path;
    manifest_["config"] = config;
    manifest_["model_hash"] = mfg::model_hash(config);
    manifest_["seed"] = opts.seed;
    manifest_["workers"] = resolve_workers(opts.workers);
  }

  void write(const std::string& name, const std::string& content) {
    mfg::write_text_file(out_dir_ / name, content);
    outputs_.push_back(name);
  }

  void note(const std::string& key, json value) { manifest_[key] = std::move(value); }

  // The manifest lands last so its presence certifies a complete run.
  void finalize() {
    manifest_["outputs"] = outputs_;
    manifest_["duration_ms"] =
        std::chrono::duration_cast<std::chrono::milliseconds>(
            std::chrono::steady_clock::now() - started_)
            .count();
    mfg::write_text_file(out_dir_ / "manifest.json", manifest_.dump(2) + "\n");
  }

 private:
  fs::path out_dir_;
  std::chrono::steady_clock::time_point started_;
  json manifest_;
  std::vector<std::string> outputs_;
};

mfg::MfeOptions parse_mfe_options(int horizon, double tol_tail, double tol_flow,
                                  double tol_exploit, int max_iters,
                                  const std::string& damping) {
  mfg::MfeOptions opts;
  if (horizon > 0) opts.horizon = horizon;
  opts.tol_tail = tol_tail;
  opts.tol_flow = tol_flow;
  opts.tol_exploit = tol_exploit;
  opts.max_iters = max_iters;
  if (damping == "harmonic") {
    opts.damping.mode = mfg::DampingMode::kHarmonic;
  } else if (damping.rfind("const:", 0) == 0) {
    opts.damping.mode = mfg::DampingMode::kConstant;
    opts.damping.delta = std::stod(damping.substr(6));
    if (opts.damping.delta <= 0.0 || opts.damping.delta > 1.0)
      throw mfg::ConfigError("damping delta must lie in (0, 1]");
  } else {
    throw mfg::ConfigError("damping must be 'harmonic' or 'const:DELTA'");
  }
  return opts;
}

std::string csv_of(const std::function<void(std::ostream&)>& body,
                   const std::string& header) {
  std::ostringstream os;
  os << header << "\n";
  body(os);
  return os.str();
}

void emit_solution(RunWriter& run, const mfg::MfeSolution& sol,
                   const mfg::GameModel& model) {
  run.write("flow.csv", csv_of([&](std::ostream& os) { sol.flow.write_csv(os); },
                               "t,state_index,mass"));
  run.write("policy.csv",
            csv_of([&](std::ostream& os) { sol.policy.write_csv(os); },
                   "t,state_index,action_index,prob"));
  const mfg::SolveResult values = mfg::best_response(model, sol.flow);
  run.write("values.csv",
            csv_of([&](std::ostream& os) { values.values.write_csv(os); },
                   "t,state_index,value"));
  run.write("solution.json", mfg::solution_to_json(sol).dump(2) + "\n");
}

int run_cli(int argc, char** argv) {
  CLI::App app{"mean-field game solver and finite-population simulator"};
  app.require_subcommand(1);

  CommonOpts opts;
  int horizon = 0;
  double tol_tail = 1e-6, tol_flow = 1e-6, tol_exploit = 1e-6;
  int max_iters = 1000;
  std::string damping = "harmonic";
  int num_agents = 100;
  int reps = 200;
  std::vector<int> Ns = {10, 100, 1000};
  int study_horizon = 10;

  auto add_common = [&](CLI::App* cmd, bool with_solver) {
    cmd->add_option("--config", opts.config_path, "model configuration JSON")
        ->required();
    cmd->add_option("--out", opts.out_dir, "output directory");
    cmd->add_option("--seed", opts.seed, "master seed");
    cmd->add_option("--workers", opts.workers,
                    "worker threads (default: MFGKIT_WORKERS or 1)");
    if (with_solver) {
      cmd->add_option("--horizon", horizon, "explicit horizon T (overrides tail rule)");
      cmd->add_option("--tol-tail", tol_tail, "tail tolerance for horizon selection");
      cmd->add_option("--tol-flow", tol_flow, "flow-consistency tolerance");
      cmd->add_option("--tol-exploit", tol_exploit, "exploitability tolerance");
      cmd->add_option("--max-iters", max_iters, "iteration cap");
      cmd->add_option("--damping", damping, "harmonic or const:DELTA");
    }
  };

  CLI::App* solve = app.add_subcommand("solve", "compute a mean-field equilibrium");
  add_common(solve, true);

  CLI::App* simulate = app.add_subcommand(
      "simulate", "finite-N run with every agent on the equilibrium policy");
  add_common(simulate, true);
  simulate->add_option("--N", num_agents, "agent count");
  simulate->add_option("--reps", reps, "Monte Carlo replications");

  CLI::App* study = app.add_subcommand(
      "study", "empirical-distribution convergence ladder over N");
  add_common(study, true);
  study->add_option("--Ns", Ns, "agent-count ladder")->delimiter(',');
  study->add_option("--reps", reps, "Monte Carlo replications");
  study->add_option("--study-horizon", study_horizon, "ladder horizon");

  CLI::App* gap = app.add_subcommand("gap", "epsilon-Nash deviation sweep over N");
  add_common(gap, true);
  gap->add_option("--Ns", Ns, "agent-count ladder")->delimiter(',');
  gap->add_option("--reps", reps, "Monte Carlo replications");

  CLI::App* constants = app.add_subcommand("constants", "probe-based growth diagnostics");
  add_common(constants, false);

  CLI11_PARSE(app, argc, argv);

  const json config = load_config(opts.config_path);
  const mfg::GameModel model = mfg::model_from_json(config);
  const int workers = resolve_workers(opts.workers);

  if (constants->parsed()) {
    RunWriter run("constants", opts, config);
    const mfg::GrowthConstants c =
        mfg::estimate_growth_constants(model, mfg::default_probe_flows(model));
    const json out = mfg::constants_to_json(c);
    std::printf("probe-based constants: alpha=%s gamma=%s R=%s M=%s B=%s stable=%d\n",
                fmt17(c.alpha).c_str(), fmt17(c.gamma).c_str(), fmt17(c.R).c_str(),
                fmt17(c.M).c_str(), fmt17(c.B).c_str(), c.stable ? 1 : 0);
    run.write("constants.json", out.dump(2) + "\n");
    run.finalize();
    return 0;
  }

  const mfg::MfeOptions mfe_opts = parse_mfe_options(
      horizon, tol_tail, tol_flow, tol_exploit, max_iters, damping);
  const mfg::MfeSolution sol = mfg::solve_mfe(model, mfe_opts);

  if (solve->parsed()) {
    RunWriter run("solve", opts, config);
    emit_solution(run, sol, model);
    run.finalize();
    if (!sol.converged) {
      std::fprintf(stderr, "solve: not converged after %d iterations "
                   "(residual_flow=%s, exploitability=%s); best iterate written\n",
                   sol.iterations, fmt17(sol.residual_flow).c_str(),
                   fmt17(sol.exploitability).c_str());
      return kExitNonConverged;
    }
    return 0;
  }

  if (simulate->parsed()) {
    RunWriter run("simulate", opts, config);
    mfg::SimConfig sim;
    sim.num_agents = num_agents;
    sim.horizon = sol.flow.horizon();
    sim.replications = reps;
    sim.master_seed = opts.seed;
    sim.policy = sol.policy;
    sim.workers = workers;
    const mfg::SimReport report = mfg::simulate(model, sim, &sol.flow);
    run.write("costs.csv", csv_of([&](std::ostream& os) {
      for (std::size_t r = 0; r < report.agent1_costs.size(); ++r)
        os << r << "," << fmt17(report.agent1_costs[r]) << "\n";
    }, "rep,cost"));
    run.write("distances.csv", csv_of([&](std::ostream& os) {
      for (std::size_t t = 0; t < report.mean_distance.size(); ++t)
        os << num_agents << "," << t << "," << fmt17(report.mean_distance[t]) << ","
           << fmt17(report.stderr_distance[t]) << "\n";
    }, "N,t,mean_dist,stderr"));
    run.note("mean_cost", report.mean_cost);
    run.note("stderr_cost", report.stderr_cost);
    run.note("solution", mfg::solution_to_json(sol));
    run.finalize();
    return 0;
  }

  if (study->parsed()) {
    RunWriter run("study", opts, config);
    const int ladder_T = std::min(study_horizon, sol.flow.horizon());
    mfg::MeasureFlow window;
    window.flow.assign(sol.flow.flow.begin(),
                       sol.flow.flow.begin() + ladder_T + 1);
    const mfg::ConvergenceStudy result = mfg::empirical_convergence_study(
        model, sol.policy, window, Ns, reps, opts.seed, nullptr, workers);
    run.write("study.csv", csv_of([&](std::ostream& os) {
      for (const auto& row : result.rows)
        os << row.num_agents << "," << row.t << "," << fmt17(row.mean_distance)
           << "," << fmt17(row.stderr_distance) << "\n";
    }, "N,t,mean_dist,stderr"));
    run.note("log_log_slope", result.log_log_slope);
    run.note("solution", mfg::solution_to_json(sol));
    run.finalize();
    return 0;
  }

  if (gap->parsed()) {
    RunWriter run("gap", opts, config);
    std::ostringstream table;
    table << "deviation_name,N,mean_cost,stderr\n";
    json gaps = json::array();
    for (int n : Ns) {
      const auto deviations =
          mfg::default_deviations(model, sol, n, reps, opts.seed);
      const mfg::NashGapReport report =
          mfg::nash_gap(model, sol, deviations, n, reps, opts.seed, workers);
      for (const auto& row : report.table)
        table << row.name << "," << n << "," << fmt17(row.mean_cost) << ","
              << fmt17(row.stderr_cost) << "\n";
      gaps.push_back({{"N", n}, {"gap", report.gap},
                      {"stderr", report.stderr_gap}});
    }
    run.write("gap.csv", table.str());
    run.note("gaps", gaps);
    run.note("solution", mfg::solution_to_json(sol));
    run.finalize();
    return 0;
  }

  return kExitConfig;
}

}  // namespace

int main(int argc, char** argv) {
  try {
    return run_cli(argc, argv);
  } catch (const mfg::ModelIntegrityError& e) {
    std::fprintf(stderr, "model integrity error: %s\n", e.what());
    return kExitModelIntegrity;
  } catch (const mfg::StabilityError& e) {
    std::fprintf(stderr, "stability error: %s\n", e.what());
    return kExitConfig;
  } catch (const mfg::ConfigError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const mfg::DomainError& e) {
    std::fprintf(stderr, "configuration error: %s\n", e.what());
    return kExitConfig;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitConfig;
  }
}
