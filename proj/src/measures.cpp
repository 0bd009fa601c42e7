#include "mfg/measures.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>

namespace mfg {

namespace {

constexpr double kMassTol = 1e-12;
constexpr double kRenormTol = 1e-9;

void require(bool ok, const char* msg) {
  if (!ok) throw StructuralError(msg);
}

}  // namespace

Grid::Grid(std::vector<double> points) : points_(std::move(points)) {
  if (points_.empty()) throw StructuralError("Grid: empty point set");
  for (std::size_t i = 0; i + 1 < points_.size(); ++i) {
    if (!(points_[i] < points_[i + 1]))
      throw StructuralError("Grid: points must be strictly increasing");
  }
  for (double x : points_) {
    if (!std::isfinite(x)) throw StructuralError("Grid: non-finite coordinate");
  }
}

std::shared_ptr<const Grid> Grid::uniform(double lo, double hi, int n) {
  if (n < 1 || !(lo <= hi) || (n > 1 && lo == hi))
    throw StructuralError("Grid::uniform: bad range");
  std::vector<double> pts(static_cast<std::size_t>(n));
  if (n == 1) {
    pts[0] = lo;
  } else {
    const double h = (hi - lo) / (n - 1);
    for (int i = 0; i < n; ++i) pts[i] = lo + h * i;
    pts.back() = hi;
  }
  return std::make_shared<Grid>(std::move(pts));
}

std::shared_ptr<const Grid> Grid::of(std::vector<double> points) {
  return std::make_shared<Grid>(std::move(points));
}

bool Grid::same_as(const Grid& other) const {
  if (this == &other) return true;
  return points_ == other.points_;
}

ProbVector::ProbVector(GridPtr grid, std::vector<double> mass)
    : grid_(std::move(grid)), mass_(std::move(mass)) {
  require(grid_ != nullptr, "ProbVector: null grid");
  require(mass_.size() == grid_->size(), "ProbVector: mass/grid length mismatch");
  double total = 0.0;
  for (double m : mass_) {
    if (!std::isfinite(m) || m < 0.0)
      throw StructuralError("ProbVector: negative or non-finite mass");
    total += m;
  }
  if (std::abs(total - 1.0) > kRenormTol)
    throw StructuralError("ProbVector: masses sum to " + std::to_string(total) +
                          ", outside renormalization tolerance");
  if (std::abs(total - 1.0) > kMassTol) {
    for (double& m : mass_) m /= total;
  }
}

ProbVector ProbVector::dirac(GridPtr grid, std::size_t index) {
  require(grid && index < grid->size(), "ProbVector::dirac: index out of range");
  std::vector<double> mass(grid->size(), 0.0);
  mass[index] = 1.0;
  return ProbVector(std::move(grid), std::move(mass));
}

ProbVector ProbVector::uniform(GridPtr grid) {
  require(grid != nullptr, "ProbVector::uniform: null grid");
  std::vector<double> mass(grid->size(), 1.0 / static_cast<double>(grid->size()));
  return ProbVector(std::move(grid), std::move(mass));
}

void ProbVector::write_csv(std::ostream& os) const {
  char buf[64];
  for (std::size_t i = 0; i < mass_.size(); ++i) {
    std::snprintf(buf, sizeof(buf), "%.17g,%.17g\n", (*grid_)[i], mass_[i]);
    os << buf;
  }
}

ProbVector ProbVector::read_csv(std::istream& is) {
  std::vector<double> pts, mass;
  std::string line;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::istringstream row(line);
    double x, m;
    char comma;
    if (!(row >> x >> comma >> m) || comma != ',')
      throw ConfigError("ProbVector::read_csv: malformed row '" + line + "'");
    pts.push_back(x);
    mass.push_back(m);
  }
  return ProbVector(Grid::of(std::move(pts)), std::move(mass));
}

WeightFn::WeightFn(GridPtr grid, std::vector<double> values, int order, double anchor)
    : grid_(std::move(grid)), values_(std::move(values)), order_(order), anchor_(anchor) {
  require(grid_ != nullptr, "WeightFn: null grid");
  require(values_.size() == grid_->size(), "WeightFn: values/grid length mismatch");
  if (order_ < 1) throw DomainError("WeightFn: order must be >= 1");
  unit_ = std::all_of(values_.begin(), values_.end(),
                      [](double v) { return v == 1.0; });
  // The unit weight is the bounded-cost convention and is exempt from the
  // moment floor; every other weight must dominate 1 + |x - x0|^p.
  if (!unit_) {
    for (std::size_t i = 0; i < values_.size(); ++i) {
      const double floor = 1.0 + std::pow(std::abs((*grid_)[i] - anchor_), order_);
      if (values_[i] < 1.0 || values_[i] - floor < -1e-12)
        throw DomainError("WeightFn: value below 1 + |x - x0|^p at a grid point");
    }
  }
}

WeightFn WeightFn::unit(GridPtr grid) {
  std::vector<double> values(grid->size(), 1.0);
  return WeightFn(std::move(grid), std::move(values), 1, 0.0);
}

WeightFn WeightFn::polynomial(GridPtr grid, int order, double anchor) {
  std::vector<double> values(grid->size());
  for (std::size_t i = 0; i < grid->size(); ++i)
    values[i] = 1.0 + std::pow(std::abs((*grid)[i] - anchor), order);
  return WeightFn(std::move(grid), std::move(values), order, anchor);
}

double moment(const ProbVector& mu, std::span<const double> g) {
  require(g.size() == mu.size(), "moment: function/grid length mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) acc += g[i] * mu[i];
  return acc;
}

double moment(const ProbVector& mu, const std::function<double(double)>& g) {
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) acc += g(mu.grid()[i]) * mu[i];
  return acc;
}

std::pair<ProbVector, ProbVector> merge_to_common_grid(const ProbVector& mu,
                                                       const ProbVector& nu) {
  std::vector<double> pts;
  pts.reserve(mu.size() + nu.size());
  std::merge(mu.grid().points().begin(), mu.grid().points().end(),
             nu.grid().points().begin(), nu.grid().points().end(),
             std::back_inserter(pts));
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  auto common = Grid::of(pts);

  auto lift = [&](const ProbVector& p) {
    std::vector<double> mass(common->size(), 0.0);
    std::size_t j = 0;
    for (std::size_t i = 0; i < p.size(); ++i) {
      while ((*common)[j] != p.grid()[i]) ++j;
      mass[j] = p[i];
    }
    return ProbVector(common, std::move(mass));
  };
  return {lift(mu), lift(nu)};
}

double v_norm_dist(const ProbVector& mu, const ProbVector& nu, const WeightFn& v) {
  require(mu.grid().same_as(nu.grid()), "v_norm_dist: grid mismatch");
  require(v.grid().same_as(mu.grid()), "v_norm_dist: weight grid mismatch");
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i)
    acc += v[i] * std::abs(mu[i] - nu[i]);
  return acc;
}

double wasserstein_1d(const ProbVector& mu_in, const ProbVector& nu_in, int p) {
  if (p < 1) throw DomainError("wasserstein_1d: order p must be >= 1");
  const bool same = mu_in.grid().same_as(nu_in.grid());
  const auto merged = same ? std::pair<ProbVector, ProbVector>{mu_in, nu_in}
                           : merge_to_common_grid(mu_in, nu_in);
  const ProbVector& mu = merged.first;
  const ProbVector& nu = merged.second;

  // Quantile matching: walk the merged CDF breakpoints; between breakpoints
  // both quantile functions are constant.
  double acc = 0.0;
  std::size_t i = 0, j = 0;
  double fi = 0.0, fj = 0.0;  // cumulative mass consumed from mu, nu
  double q = 0.0;
  while (i < mu.size() && j < nu.size()) {
    const double ci = fi + mu[i];
    const double cj = fj + nu[j];
    const double qn = std::min(ci, cj);
    if (qn > q) acc += (qn - q) * std::pow(std::abs(mu.grid()[i] - nu.grid()[j]), p);
    q = qn;
    if (ci <= qn + 1e-18) { fi = ci; ++i; }
    if (cj <= qn + 1e-18) { fj = cj; ++j; }
    if (q >= 1.0 - 1e-15) break;
  }
  return std::pow(acc, 1.0 / p);
}

double rho_v(const ProbVector& mu, const ProbVector& nu, const WeightFn& v) {
  if (v.is_unit()) return wasserstein_1d(mu, nu, 1);
  require(v.grid().same_as(mu.grid()) && v.grid().same_as(nu.grid()),
          "rho_v: weight grid mismatch");
  const double wp = wasserstein_1d(mu, nu, v.order());
  return wp + std::abs(moment(mu, v.values()) - moment(nu, v.values()));
}

}  // namespace mfg
