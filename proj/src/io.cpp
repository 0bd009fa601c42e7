#include "mfg/io.hpp"

#include <cmath>
#include <fstream>
#include <limits>

#include <nlohmann/json.hpp>

namespace mfg {

using nlohmann::json;

namespace {

GridPtr grid_from_json(const json& spec, const char* what) {
  if (!spec.is_object() || !spec.contains("min") || !spec.contains("max") ||
      !spec.contains("points"))
    throw ConfigError(std::string(what) + ": expected {min, max, points}");
  return Grid::uniform(spec["min"].get<double>(), spec["max"].get<double>(),
                       spec["points"].get<int>());
}

ProbVector mu0_from_json(const json& spec, const GridPtr& grid) {
  if (!spec.is_object() || !spec.contains("type"))
    throw ConfigError("mu0: expected an object with a 'type' field");
  const std::string type = spec["type"].get<std::string>();
  if (type == "uniform") return ProbVector::uniform(grid);
  if (type == "point") {
    const double x = spec.at("x").get<double>();
    std::size_t best = 0;
    for (std::size_t i = 1; i < grid->size(); ++i)
      if (std::abs((*grid)[i] - x) < std::abs((*grid)[best] - x)) best = i;
    return ProbVector::dirac(grid, best);
  }
  if (type == "gaussian") {
    const double mean = spec.at("mean").get<double>();
    const double sd = spec.at("std").get<double>();
    if (sd <= 0.0) throw ConfigError("mu0: gaussian std must be positive");
    std::vector<double> mass(grid->size());
    double total = 0.0;
    for (std::size_t i = 0; i < grid->size(); ++i) {
      const double z = ((*grid)[i] - mean) / sd;
      mass[i] = std::exp(-0.5 * z * z);
      total += mass[i];
    }
    for (double& m : mass) m /= total;
    return ProbVector(grid, std::move(mass));
  }
  if (type == "masses") {
    return ProbVector(grid, spec.at("mass").get<std::vector<double>>());
  }
  throw ConfigError("mu0: unknown type '" + type + "'");
}

std::vector<double> params_of(const json& spec, std::size_t at_least,
                              const char* what) {
  std::vector<double> params;
  if (spec.contains("params")) params = spec["params"].get<std::vector<double>>();
  if (params.size() < at_least)
    throw ConfigError(std::string(what) + ": needs at least " +
                      std::to_string(at_least) + " params");
  return params;
}

std::function<double(double, double, double)> drift_from_json(const json& spec) {
  const std::string name = spec.at("name").get<std::string>();
  if (name == "zero") return [](double, double, double) { return 0.0; };
  if (name == "constant") {
    const auto p = params_of(spec, 1, "f");
    return [c = p[0]](double, double, double) { return c; };
  }
  if (name == "tanh_drift") {
    // f(x, a, y) = c0 * tanh(c1 x + c2 a + c3 y); bounded by |c0|.
    const auto p = params_of(spec, 4, "f");
    return [p](double x, double a, double y) {
      return p[0] * std::tanh(p[1] * x + p[2] * a + p[3] * y);
    };
  }
  throw ConfigError("f: unknown drift family '" + name + "'");
}

std::function<double(double, double)> diffusion_from_json(const json& spec) {
  const std::string name = spec.at("name").get<std::string>();
  if (name == "constant") {
    const auto p = params_of(spec, 1, "g");
    return [s = p[0]](double, double) { return s; };
  }
  if (name == "sigmoid") {
    // g(x, a) = theta + span / (1 + exp(-rate * a)); stays >= theta.
    const auto p = params_of(spec, 3, "g");
    return [p](double, double a) {
      return p[0] + p[1] / (1.0 + std::exp(-p[2] * a));
    };
  }
  throw ConfigError("g: unknown diffusion family '" + name + "'");
}

std::function<double(double, double, double)> coupling_from_json(const json& spec) {
  const std::string name = spec.at("name").get<std::string>();
  if (name == "zero") return [](double, double, double) { return 0.0; };
  if (name == "quadratic") {
    // d(x, a, y) = (x - y)^2 + wa * a^2
    const auto p = params_of(spec, 1, "d");
    return [wa = p[0]](double x, double a, double y) {
      return (x - y) * (x - y) + wa * a * a;
    };
  }
  if (name == "absolute") {
    const auto p = params_of(spec, 1, "d");
    return [wa = p[0]](double x, double a, double y) {
      return std::abs(x - y) + wa * std::abs(a);
    };
  }
  throw ConfigError("d: unknown coupling family '" + name + "'");
}

GameModel additive_noise_from_json(const json& config) {
  AdditiveNoiseSpec spec{
      drift_from_json(config.at("f")),
      diffusion_from_json(config.at("g")),
      coupling_from_json(config.at("d")),
      /*theta=*/0.0,
      grid_from_json(config.at("grid"), "grid"),
      grid_from_json(config.at("actions"), "actions"),
      config.value("noise", json::object()).value("sigma_trunc", 4.0),
      config.at("beta").get<double>(),
      ProbVector::uniform(Grid::uniform(0, 1, 1)),  // placeholder, set below
      WeightFn::unit(Grid::uniform(0, 1, 1))};
  spec.mu0 = mu0_from_json(config.at("mu0"), spec.state_grid);

  const json wspec = config.value("weight", json{{"order", 2}, {"anchor", 0.0}});
  spec.weight = WeightFn::polynomial(spec.state_grid, wspec.value("order", 2),
                                     wspec.value("anchor", 0.0));

  // Declared diffusion floor: grid minimum, must be positive.
  double theta = std::numeric_limits<double>::infinity();
  for (double a : spec.action_grid->points())
    for (double x : spec.state_grid->points())
      theta = std::min(theta, std::abs(spec.g(x, a)));
  spec.theta = theta;
  return build_additive_noise_model(spec);
}

GameModel tabular_from_json(const json& config) {
  auto states = grid_from_json(config.at("grid"), "grid");
  auto actions = grid_from_json(config.at("actions"), "actions");
  return make_tabular_model(
      states, actions, config.at("beta").get<double>(),
      mu0_from_json(config.at("mu0"), states),
      config.at("kernel").get<std::vector<std::vector<std::vector<double>>>>(),
      config.at("cost").get<std::vector<std::vector<double>>>());
}

}  // namespace

GameModel model_from_json(const json& config) {
  if (!config.is_object() || !config.contains("model"))
    throw ConfigError("config: expected an object with a 'model' field");
  const std::string kind = config["model"].get<std::string>();
  try {
    if (kind == "toy") return make_toy_model();
    if (kind == "additive_noise") return additive_noise_from_json(config);
    if (kind == "tabular") return tabular_from_json(config);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  throw ConfigError("config: unknown model kind '" + kind + "'");
}

GameModel load_model(const std::filesystem::path& config_path) {
  std::ifstream in(config_path);
  if (!in) throw ConfigError("cannot open config " + config_path.string());
  json config;
  try {
    in >> config;
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config parse: ") + e.what());
  }
  return model_from_json(config);
}

std::string model_hash(const json& config) {
  const std::string canon = config.dump(-1, ' ', false,
                                        json::error_handler_t::strict);
  std::uint64_t h = 0xCBF29CE484222325ull;
  for (unsigned char c : canon) {
    h ^= c;
    h *= 0x100000001B3ull;
  }
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

json constants_to_json(const GrowthConstants& c) {
  return json{{"alpha", c.alpha}, {"gamma", c.gamma}, {"R", c.R},
              {"M", c.M},         {"B", c.B},         {"stable", c.stable},
              {"note", "probe-based diagnostics, not certified bounds"}};
}

json solution_to_json(const MfeSolution& s) {
  return json{{"residual_flow", s.residual_flow},
              {"exploitability", s.exploitability},
              {"iterate_gap", s.iterate_gap},
              {"iterations", s.iterations},
              {"converged", s.converged},
              {"horizon", s.horizon},
              {"tail", s.tail},
              {"damping", s.damping},
              {"max_near_ties", s.max_near_ties},
              {"constants", constants_to_json(s.constants)}};
}

void write_text_file(const std::filesystem::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ConfigError("cannot write " + path.string());
  out << content;
}

}  // namespace mfg
