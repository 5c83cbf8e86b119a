#pragma once

// Space-time sampled (rho, m, S) fields on the periodic box [-L, L]^2 that
// stands in for the whole plane. A collar of width `buffer` along the box
// boundary carries the far-field state; every diagnostic confines itself to
// the interior [-(L - buffer), L - buffer]^2.
//
// Layout: time slices are nodes t_n = n T / (nt - 1); cells are centred.
// Records are stored t-major, then row-major with x fastest:
//   offset(n, i, j) = (n * ny + j) * nx + i.

#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "ec/thermo.hpp"

namespace ec {

class FieldError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Grid {
  double L = 1.0;
  int nx = 0;
  int ny = 0;
  int nt = 2;
  double T = 1.0;
  double buffer = 0.25;

  Grid() = default;
  Grid(double L, int nx, int ny, int nt, double T, double buffer);

  double hx() const { return 2.0 * L / nx; }
  double hy() const { return 2.0 * L / ny; }
  double dt() const { return T / (nt - 1); }
  double cell_area() const { return hx() * hy(); }
  double x(int i) const { return -L + (2 * i + 1) * L / nx; }
  double y(int j) const { return -L + (2 * j + 1) * L / ny; }
  double t(int n) const { return n == nt - 1 ? T : n * T / (nt - 1); }
  double interior_halfwidth() const { return L - buffer; }
  bool in_collar(int i, int j) const;
  std::size_t cells() const { return static_cast<std::size_t>(nx) * ny; }
  std::size_t size() const { return cells() * nt; }

  /// Trapezoid weight of time node n (midpoint rule on the dual time cells).
  double time_weight(int n) const;

  friend bool operator==(const Grid&, const Grid&) = default;
};

/// Axis-aligned sub-box of the interior, in physical coordinates. A cell
/// belongs to the box when its centre does.
struct Box {
  double x0 = 0.0;
  double x1 = 0.0;
  double y0 = 0.0;
  double y1 = 0.0;

  static Box interior(const Grid& g);
  bool contains(double x, double y) const { return x >= x0 && x <= x1 && y >= y0 && y <= y1; }
};

class GridField {
 public:
  GridField(Grid grid, FarField far, ThermoParams params);
  GridField(Grid grid, FarField far, ThermoParams params, std::vector<State> data);

  const Grid& grid() const { return grid_; }
  const FarField& far() const { return far_; }
  const ThermoParams& params() const { return params_; }

  std::size_t index(int n, int i, int j) const {
    return (static_cast<std::size_t>(n) * grid_.ny + j) * grid_.nx + i;
  }
  const State& at(int n, int i, int j) const { return data_[index(n, i, j)]; }
  State& at(int n, int i, int j) { return data_[index(n, i, j)]; }

  std::span<const State> slice(int n) const {
    return {data_.data() + index(n, 0, 0), grid_.cells()};
  }
  std::span<const State> data() const { return data_; }
  std::span<State> data() { return data_; }

  /// Largest deviation of the t = 0 collar cells from the far field
  /// (max over components of the absolute difference).
  double collar_deviation(int n = 0) const;

 private:
  Grid grid_;
  FarField far_;
  ThermoParams params_;
  std::vector<State> data_;
};

/// Throws FieldError unless every value is finite and rho >= 0.
void validate_field(const GridField& field);

struct SequenceLevel {
  int label = 0;
  double eps = 0.0;
  double kappa = 0.0;
  double h = 0.0;
  GridField field;
};

/// Indexed family of fields sharing thermodynamics and far field. eps, kappa
/// and h decrease strictly along the sequence.
class ApproximateSequence {
 public:
  ApproximateSequence() = default;
  explicit ApproximateSequence(std::vector<SequenceLevel> levels);

  std::size_t size() const { return levels_.size(); }
  const SequenceLevel& level(std::size_t n) const { return levels_.at(n); }
  const SequenceLevel& finest() const { return levels_.back(); }
  const std::vector<SequenceLevel>& levels() const { return levels_; }

 private:
  std::vector<SequenceLevel> levels_;
};

using StateFunction = std::function<State(double t, double x, double y)>;

/// Cell-centred samples of `fn` at every time node. The collar is overwritten
/// with the far field at t = 0. Non-finite samples are rejected.
GridField sample(const StateFunction& fn, const Grid& grid, const FarField& far,
                 const ThermoParams& params);

enum class Component { rho, mom, S, mom_x, mom_y };

double component_value(const State& s, Component c, int dim);

/// Scalar per-record values of one component, same layout as the field.
std::vector<double> component_values(const GridField& field, Component c);

/// (int_0^T ||f(t)||_{L^r(B)}^q dt)^{1/q} by midpoint quadrature in space and
/// the dual-cell (trapezoid) rule in time. `values` has the field layout.
double lq_loc_norm(const Grid& grid, std::span<const double> values, const Box& box, double q,
                   double r);
double lq_loc_norm(const GridField& field, Component c, const Box& box, double q, double r);

/// S -> rho (s - s0). Vacuum cells must carry S = 0.
GridField entropy_shift(const GridField& field, double s0);

/// Block average in space by integer factors and subsampling in time so that
/// the result lives on `coarse`. The grids must be nested.
GridField restrict_to(const GridField& fine, const Grid& coarse);

/// True when `coarse` cells are unions of `fine` cells and coarse time nodes
/// are fine time nodes.
bool grids_nested(const Grid& fine, const Grid& coarse);

/// Grid with halved resolution in space and time (requires even nx, ny and
/// even nt - 1).
Grid coarsened(const Grid& g);

/// Keeps the first `nt` time slices (T shrinks accordingly).
GridField truncate_time(const GridField& field, int nt);

/// t -> T - t with m -> -m.
GridField time_reversed(const GridField& field);

}  // namespace ec
