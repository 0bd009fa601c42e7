#pragma once

#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <vector>

#include "mfg/errors.hpp"

namespace mfg {

/// Finite strictly increasing set of real coordinates. Shared immutably
/// between the measures supported on it.
class Grid {
 public:
  explicit Grid(std::vector<double> points);

  static std::shared_ptr<const Grid> uniform(double lo, double hi, int n);
  static std::shared_ptr<const Grid> of(std::vector<double> points);

  std::size_t size() const { return points_.size(); }
  double operator[](std::size_t i) const { return points_[i]; }
  const std::vector<double>& points() const { return points_; }

  bool same_as(const Grid& other) const;

 private:
  std::vector<double> points_;
};

using GridPtr = std::shared_ptr<const Grid>;

/// Probability measure with finite support on a grid. Masses are
/// renormalized at construction when the total is within 1e-9 of one and
/// rejected otherwise; afterwards the sum-to-one invariant holds to 1e-12.
class ProbVector {
 public:
  ProbVector(GridPtr grid, std::vector<double> mass);

  static ProbVector dirac(GridPtr grid, std::size_t index);
  static ProbVector uniform(GridPtr grid);

  const Grid& grid() const { return *grid_; }
  const GridPtr& grid_ptr() const { return grid_; }
  std::size_t size() const { return mass_.size(); }
  double operator[](std::size_t i) const { return mass_[i]; }
  const std::vector<double>& mass() const { return mass_; }

  void write_csv(std::ostream& os) const;
  static ProbVector read_csv(std::istream& is);

 private:
  GridPtr grid_;
  std::vector<double> mass_;
};

/// Weight (moment) function w >= 1 on a grid with a declared polynomial
/// order: w(x) >= 1 + |x - x0|^p everywhere. The unit weight stands in for
/// the bounded-cost case.
class WeightFn {
 public:
  WeightFn(GridPtr grid, std::vector<double> values, int order, double anchor);

  static WeightFn unit(GridPtr grid);
  // w(x) = 1 + |x - anchor|^order, the least admissible weight.
  static WeightFn polynomial(GridPtr grid, int order, double anchor = 0.0);

  const Grid& grid() const { return *grid_; }
  double operator[](std::size_t i) const { return values_[i]; }
  const std::vector<double>& values() const { return values_; }
  int order() const { return order_; }
  double anchor() const { return anchor_; }
  bool is_unit() const { return unit_; }

 private:
  GridPtr grid_;
  std::vector<double> values_;
  int order_;
  double anchor_;
  bool unit_ = false;
};

/// Integral of g against mu, g given pointwise on mu's grid.
double moment(const ProbVector& mu, std::span<const double> g);
double moment(const ProbVector& mu, const std::function<double(double)>& g);

/// Weighted total variation: sum_x v(x) |mu(x) - nu(x)|. With the unit
/// weight this is exactly the total variation distance.
double v_norm_dist(const ProbVector& mu, const ProbVector& nu, const WeightFn& v);

/// Order-p Wasserstein distance via the 1-D quantile-matching closed form.
/// Measures on different grids are compared on the coordinate union.
double wasserstein_1d(const ProbVector& mu, const ProbVector& nu, int p);

/// Metric for the v-topology: W_p(mu, nu) + |mu(v) - nu(v)| with p the
/// weight's order. Unit weight falls back to plain W_1.
double rho_v(const ProbVector& mu, const ProbVector& nu, const WeightFn& v);

/// Coordinate union of two grids, each measure zero-filled on the other's
/// points. Used by the metrics when supports differ.
std::pair<ProbVector, ProbVector> merge_to_common_grid(const ProbVector& mu,
                                                       const ProbVector& nu);

}  // namespace mfg
