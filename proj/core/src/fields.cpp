#include "ec/fields.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ec {

Grid::Grid(double L_, int nx_, int ny_, int nt_, double T_, double buffer_)
    : L(L_), nx(nx_), ny(ny_), nt(nt_), T(T_), buffer(buffer_) {
  if (!(L > 0.0)) throw FieldError("Grid: L must be > 0");
  if (nx < 1 || ny < 1) throw FieldError("Grid: need at least one cell per axis");
  if (nt < 2) throw FieldError("Grid: need at least two time slices");
  if (!(T > 0.0)) throw FieldError("Grid: T must be > 0");
  if (!(buffer > 0.0) || buffer > 0.25 * L) throw FieldError("Grid: buffer must lie in (0, L/4]");
}

bool Grid::in_collar(int i, int j) const {
  const double w = interior_halfwidth();
  return std::abs(x(i)) > w || std::abs(y(j)) > w;
}

double Grid::time_weight(int n) const {
  return (n == 0 || n == nt - 1) ? 0.5 * dt() : dt();
}

Box Box::interior(const Grid& g) {
  const double w = g.interior_halfwidth();
  return {-w, w, -w, w};
}

GridField::GridField(Grid grid, FarField far, ThermoParams params)
    : grid_(grid), far_(far), params_(params), data_(grid.size(), far.state()) {}

GridField::GridField(Grid grid, FarField far, ThermoParams params, std::vector<State> data)
    : grid_(grid), far_(far), params_(params), data_(std::move(data)) {
  if (data_.size() != grid_.size()) throw FieldError("GridField: data size does not match grid");
}

double GridField::collar_deviation(int n) const {
  const State f = far_.state();
  double dev = 0.0;
  for (int j = 0; j < grid_.ny; ++j)
    for (int i = 0; i < grid_.nx; ++i) {
      if (!grid_.in_collar(i, j)) continue;
      const State& s = at(n, i, j);
      dev = std::max(dev, std::abs(s.rho - f.rho));
      dev = std::max(dev, std::abs(s.S - f.S));
      for (int k = 0; k < params_.dim(); ++k) dev = std::max(dev, std::abs(s.mom[k] - f.mom[k]));
    }
  return dev;
}

void validate_field(const GridField& field) {
  const auto& g = field.grid();
  const int d = field.params().dim();
  for (int n = 0; n < g.nt; ++n)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const State& s = field.at(n, i, j);
        bool finite = std::isfinite(s.rho) && std::isfinite(s.S);
        for (int k = 0; k < d; ++k) finite = finite && std::isfinite(s.mom[k]);
        if (!finite || s.rho < 0.0) {
          std::ostringstream os;
          os << "invalid state at (n=" << n << ", i=" << i << ", j=" << j << ")";
          throw FieldError(os.str());
        }
      }
}

ApproximateSequence::ApproximateSequence(std::vector<SequenceLevel> levels)
    : levels_(std::move(levels)) {
  for (std::size_t n = 1; n < levels_.size(); ++n) {
    const auto& a = levels_[n - 1];
    const auto& b = levels_[n];
    if (!(b.eps < a.eps) || !(b.kappa < a.kappa) || !(b.h < a.h))
      throw FieldError("ApproximateSequence: eps, kappa and h must decrease strictly");
    if (!(b.field.params() == a.field.params()) || !(b.field.far() == a.field.far()))
      throw FieldError("ApproximateSequence: levels must share thermodynamics and far field");
  }
}

GridField sample(const StateFunction& fn, const Grid& grid, const FarField& far,
                 const ThermoParams& params) {
  GridField field(grid, far, params);
  const int d = params.dim();
  for (int n = 0; n < grid.nt; ++n) {
    const double t = grid.t(n);
    for (int j = 0; j < grid.ny; ++j)
      for (int i = 0; i < grid.nx; ++i) {
        State s = fn(t, grid.x(i), grid.y(j));
        for (int k = d; k < 3; ++k) s.mom[k] = 0.0;
        bool finite = std::isfinite(s.rho) && std::isfinite(s.S);
        for (int k = 0; k < d; ++k) finite = finite && std::isfinite(s.mom[k]);
        if (!finite) {
          std::ostringstream os;
          os << "sample: non-finite value at cell (n=" << n << ", i=" << i << ", j=" << j << ")";
          throw FieldError(os.str());
        }
        if (n == 0 && grid.in_collar(i, j)) s = far.state();
        field.at(n, i, j) = s;
      }
  }
  return field;
}

double component_value(const State& s, Component c, int dim) {
  switch (c) {
    case Component::rho:
      return s.rho;
    case Component::mom:
      return std::sqrt(norm2(s.mom, dim));
    case Component::S:
      return s.S;
    case Component::mom_x:
      return s.mom[0];
    case Component::mom_y:
      return s.mom[1];
  }
  return 0.0;
}

std::vector<double> component_values(const GridField& field, Component c) {
  std::vector<double> out(field.data().size());
  const int d = field.params().dim();
  std::transform(field.data().begin(), field.data().end(), out.begin(),
                 [&](const State& s) { return component_value(s, c, d); });
  return out;
}

namespace {

void check_box(const Grid& g, const Box& b) {
  const double w = g.interior_halfwidth();
  if (b.x0 < -w || b.x1 > w || b.y0 < -w || b.y1 > w || !(b.x0 < b.x1) || !(b.y0 < b.y1))
    throw FieldError("lq_loc_norm: box must be a non-empty subset of the interior");
}

}  // namespace

double lq_loc_norm(const Grid& grid, std::span<const double> values, const Box& box, double q,
                   double r) {
  if (!(q >= 1.0) || !(r >= 1.0)) throw FieldError("lq_loc_norm: exponents must be >= 1");
  if (values.size() != grid.size()) throw FieldError("lq_loc_norm: value count mismatch");
  check_box(grid, box);

  std::vector<int> xs, ys;
  for (int i = 0; i < grid.nx; ++i)
    if (grid.x(i) >= box.x0 && grid.x(i) <= box.x1) xs.push_back(i);
  for (int j = 0; j < grid.ny; ++j)
    if (grid.y(j) >= box.y0 && grid.y(j) <= box.y1) ys.push_back(j);

  const double area = grid.cell_area();
  double total = 0.0;
  for (int n = 0; n < grid.nt; ++n) {
    double spatial = 0.0;
    const std::size_t base = static_cast<std::size_t>(n) * grid.cells();
    for (int j : ys)
      for (int i : xs) {
        double v = std::abs(values[base + static_cast<std::size_t>(j) * grid.nx + i]);
        spatial += std::pow(v, r);
      }
    double lr = std::pow(spatial * area, 1.0 / r);
    total += grid.time_weight(n) * std::pow(lr, q);
  }
  return std::pow(total, 1.0 / q);
}

double lq_loc_norm(const GridField& field, Component c, const Box& box, double q, double r) {
  auto values = component_values(field, c);
  return lq_loc_norm(field.grid(), values, box, q, r);
}

GridField entropy_shift(const GridField& field, double s0) {
  GridField out = field;
  for (auto& s : out.data()) {
    if (s.rho == 0.0) {
      if (s.S != 0.0)
        throw FieldError("entropy_shift: vacuum cell carries nonzero entropy");
      continue;
    }
    s.S = s.S - s.rho * s0;
  }
  return out;
}

bool grids_nested(const Grid& fine, const Grid& coarse) {
  if (fine.L != coarse.L || fine.buffer != coarse.buffer) return false;
  if (std::abs(fine.T - coarse.T) > 1e-12 * fine.T) return false;
  if (fine.nx % coarse.nx != 0 || fine.ny % coarse.ny != 0) return false;
  return (fine.nt - 1) % (coarse.nt - 1) == 0;
}

GridField restrict_to(const GridField& fine, const Grid& coarse) {
  const Grid& g = fine.grid();
  if (!grids_nested(g, coarse)) throw FieldError("restrict_to: grids are not nested");
  const int fx = g.nx / coarse.nx;
  const int fy = g.ny / coarse.ny;
  const int ft = (g.nt - 1) / (coarse.nt - 1);
  const int d = fine.params().dim();
  const double inv = 1.0 / (fx * fy);

  GridField out(coarse, fine.far(), fine.params());
  for (int n = 0; n < coarse.nt; ++n)
    for (int j = 0; j < coarse.ny; ++j)
      for (int i = 0; i < coarse.nx; ++i) {
        State acc;
        for (int b = 0; b < fy; ++b)
          for (int a = 0; a < fx; ++a) {
            const State& s = fine.at(n * ft, i * fx + a, j * fy + b);
            acc.rho += s.rho;
            acc.S += s.S;
            for (int k = 0; k < d; ++k) acc.mom[k] += s.mom[k];
          }
        acc.rho *= inv;
        acc.S *= inv;
        for (int k = 0; k < d; ++k) acc.mom[k] *= inv;
        out.at(n, i, j) = acc;
      }
  return out;
}

Grid coarsened(const Grid& g) {
  if (g.nx % 2 != 0 || g.ny % 2 != 0 || (g.nt - 1) % 2 != 0)
    throw FieldError("coarsened: grid dimensions are not even");
  return Grid(g.L, g.nx / 2, g.ny / 2, (g.nt - 1) / 2 + 1, g.T, g.buffer);
}

GridField truncate_time(const GridField& field, int nt) {
  const Grid& g = field.grid();
  if (nt < 2 || nt > g.nt) throw FieldError("truncate_time: slice count out of range");
  Grid out_grid(g.L, g.nx, g.ny, nt, g.t(nt - 1), g.buffer);
  std::vector<State> data(field.data().begin(),
                          field.data().begin() + static_cast<std::ptrdiff_t>(out_grid.size()));
  return GridField(out_grid, field.far(), field.params(), std::move(data));
}

GridField time_reversed(const GridField& field) {
  const Grid& g = field.grid();
  GridField out(g, field.far(), field.params());
  for (int n = 0; n < g.nt; ++n)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        State s = field.at(g.nt - 1 - n, i, j);
        for (auto& m : s.mom) m = -m;
        out.at(n, i, j) = s;
      }
  return out;
}

}  // namespace ec
