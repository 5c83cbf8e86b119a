#include "ec/generator.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "ec/csv.hpp"

namespace ec {

const char* to_string(InitialKind kind) {
  switch (kind) {
    case InitialKind::constant:
      return "constant";
    case InitialKind::smooth_bump:
      return "smooth_bump";
    case InitialKind::cold_spot:
      return "cold_spot";
  }
  return "?";
}

InitialKind initial_kind_from_string(const std::string& name) {
  if (name == "constant") return InitialKind::constant;
  if (name == "smooth_bump") return InitialKind::smooth_bump;
  if (name == "cold_spot") return InitialKind::cold_spot;
  throw GeneratorError("unknown initial condition '" + name + "'");
}

State InitialCondition::at(double x, double y, const FarField& far, const ThermoParams& p) const {
  if (kind == InitialKind::constant) return far.state();
  const double z2 = ((x - xc) * (x - xc) + (y - yc) * (y - yc)) / (radius * radius);
  if (z2 >= 1.0) return far.state();
  const double a = 1.0 - z2;
  const double b = a * a * a * a;
  const double sign = kind == InitialKind::cold_spot ? -1.0 : 1.0;
  const double theta_inf = temperature(far.state(), p);
  const double rho = far.rho_inf * (1.0 + sign * density_amplitude * b);
  const double theta = theta_inf * (1.0 + sign * temperature_amplitude * b);
  State s;
  s.rho = rho;
  const Vec3 u = far.velocity();
  for (int k = 0; k < p.dim(); ++k) s.mom[k] = rho * u[k];
  s.S = p.cv() * rho * std::log(theta / std::pow(rho, p.gamma() - 1.0));
  return s;
}

void SolverConfig::validate() const {
  if (!(cfl > 0.0 && cfl < 1.0)) throw GeneratorError("solver: cfl must lie in (0, 1)");
  if (!(eps >= 0.0) || !(kappa >= 0.0)) throw GeneratorError("solver: eps, kappa must be >= 0");
  if (params.dim() != 2) throw GeneratorError("solver: only d = 2 is supported");
  if (!(rho_min > 0.0)) throw GeneratorError("solver: rho_min must be > 0");
  if (output_coarsening < 1 || grid.nx % output_coarsening != 0 ||
      grid.ny % output_coarsening != 0)
    throw GeneratorError("solver: output coarsening must divide the grid");
  if (initial.kind != InitialKind::constant) {
    if (!(initial.radius > 0.0)) throw GeneratorError("initial: radius must be > 0");
    const double w = grid.interior_halfwidth();
    if (std::abs(initial.xc) + initial.radius > w || std::abs(initial.yc) + initial.radius > w)
      throw GeneratorError("initial: bump must lie inside the interior");
  }
}

double SolverLedger::mass_drift() const {
  double d = 0.0;
  for (double m : mass) d = std::max(d, std::abs(m - mass.front()) / std::abs(mass.front()));
  return d;
}

std::string SolverLedger::to_csv() const {
  std::string out =
      "t,mass,energy,entropy,min_specific_entropy,collar_deviation,max_velocity_gradient\n";
  for (std::size_t n = 0; n < time.size(); ++n) {
    out += format_double(time[n]) + "," + format_double(mass[n]) + "," +
           format_double(energy[n]) + "," + format_double(entropy[n]) + "," +
           format_double(min_specific_entropy[n]) + "," + format_double(collar_deviation[n]) +
           "," + format_double(max_velocity_gradient[n]) + "\n";
  }
  return out;
}

GridField initial_field(const SolverConfig& cfg) {
  Grid g = cfg.grid;
  g.nt = 2;
  return sample([&](double, double x, double y) { return cfg.initial.at(x, y, cfg.far, cfg.params); },
                g, cfg.far, cfg.params);
}

namespace {

// Conservative state on a periodic nx x ny grid, structure of arrays.
struct Conserved {
  std::vector<double> rho, m1, m2, E;
  explicit Conserved(std::size_t n = 0) : rho(n), m1(n), m2(n), E(n) {}
};

class Solver {
 public:
  explicit Solver(const SolverConfig& cfg)
      : cfg_(cfg),
        g_(cfg.grid),
        nx_(g_.nx),
        ny_(g_.ny),
        n_(g_.cells()),
        gm1_(cfg.params.gamma() - 1.0),
        u1_(n_), u2_(n_), p_(n_), th_(n_),
        fx_(n_), fy_(n_),
        dU_(n_), U1_(n_) {}

  void set(const std::span<const State> slice) {
    U_ = Conserved(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      const State& s = slice[k];
      U_.rho[k] = s.rho;
      U_.m1[k] = s.mom[0];
      U_.m2[k] = s.mom[1];
      U_.E[k] = extended_energy(s, cfg_.params);
    }
  }

  /// Largest stable step for the current state.
  double stable_dt() {
    primitives(U_);
    const double hx = g_.hx(), hy = g_.hy();
    double smax = 0.0, rho_lo = kInfinity;
    for (std::size_t k = 0; k < n_; ++k) {
      const double c = std::sqrt(cfg_.params.gamma() * p_[k] / U_.rho[k]);
      smax = std::max(smax, std::max(std::abs(u1_[k]), std::abs(u2_[k])) + c);
      rho_lo = std::min(rho_lo, U_.rho[k]);
    }
    double rate = smax / std::min(hx, hy);
    const double diff = std::max(2.0 * cfg_.eps, cfg_.kappa * gm1_) / rho_lo;
    rate += 2.0 * diff * (1.0 / (hx * hx) + 1.0 / (hy * hy));
    return cfg_.cfl / rate;
  }

  /// One Heun step.
  void step(double dt) {
    rhs(U_);
    axpy(U1_, U_, dt, dU_);
    rhs(U1_);
    axpy(U1_, U1_, dt, dU_);
    average(U_, U1_);
  }

  /// Throws when the state is inadmissible.
  void check(std::size_t step) const {
    const double floor = cfg_.rho_min / 10.0;
    for (std::size_t k = 0; k < n_; ++k) {
      const bool finite = std::isfinite(U_.rho[k]) && std::isfinite(U_.m1[k]) &&
                          std::isfinite(U_.m2[k]) && std::isfinite(U_.E[k]);
      if (!finite) throw SolverAbort(msg("non-finite value", step, k), step);
      if (U_.rho[k] < floor) throw SolverAbort(msg("density below rho_min/10", step, k), step);
      const double eint = U_.E[k] - 0.5 * (U_.m1[k] * U_.m1[k] + U_.m2[k] * U_.m2[k]) / U_.rho[k];
      if (!(eint > 0.0)) throw SolverAbort(msg("non-positive internal energy", step, k), step);
    }
  }

  State state(std::size_t k) const {
    State s;
    s.rho = U_.rho[k];
    s.mom = {U_.m1[k], U_.m2[k], 0.0};
    const double eint = U_.E[k] - 0.5 * (s.mom[0] * s.mom[0] + s.mom[1] * s.mom[1]) / s.rho;
    const double p = gm1_ * eint;
    s.S = cfg_.params.cv() * s.rho * std::log(p / std::pow(s.rho, cfg_.params.gamma()));
    return s;
  }

  double total(const std::vector<double>& v) const {
    double t = 0.0;
    for (double x : v) t += x;
    return t * g_.cell_area();
  }
  const Conserved& U() const { return U_; }

  double max_velocity_gradient() {
    primitives(U_);
    const double hx = g_.hx(), hy = g_.hy();
    double m = 0.0;
    for (int j = 0; j < ny_; ++j)
      for (int i = 0; i < nx_; ++i) {
        const std::size_t e = id(i + 1, j), w = id(i - 1, j), nn = id(i, j + 1), s = id(i, j - 1);
        const double a = (u1_[e] - u1_[w]) / (2 * hx), b = (u1_[nn] - u1_[s]) / (2 * hy);
        const double c = (u2_[e] - u2_[w]) / (2 * hx), d = (u2_[nn] - u2_[s]) / (2 * hy);
        m = std::max(m, std::sqrt(a * a + b * b + c * c + d * d));
      }
    return m;
  }

 private:
  std::size_t id(int i, int j) const {
    i = (i + nx_) % nx_;
    j = (j + ny_) % ny_;
    return static_cast<std::size_t>(j) * nx_ + i;
  }

  std::string msg(const char* what, std::size_t step, std::size_t k) const {
    std::ostringstream os;
    os << "nsf_solve: " << what << " at step " << step << ", cell (" << k % nx_ << ", "
       << k / nx_ << ")";
    return os.str();
  }

  void primitives(const Conserved& U) {
    const int nrows = ny_;
#pragma omp parallel for schedule(static) num_threads(std::max(1, cfg_.workers))
    for (int j = 0; j < nrows; ++j)
      for (int i = 0; i < nx_; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * nx_ + i;
        const double r = U.rho[k];
        u1_[k] = U.m1[k] / r;
        u2_[k] = U.m2[k] / r;
        p_[k] = gm1_ * (U.E[k] - 0.5 * (U.m1[k] * u1_[k] + U.m2[k] * u2_[k]));
        th_[k] = p_[k] / r;
      }
  }

  // Right-hand side into dU_: central inviscid fluxes plus viscous and heat
  // fluxes on faces (compact normal derivatives, averaged tangential ones).
  void rhs(const Conserved& U) {
    primitives(U);
    const double hx = g_.hx(), hy = g_.hy();
    const double eps = cfg_.eps, kap = cfg_.kappa;
    const int nrows = ny_;

    // Face fluxes: fx_ on the face (i+1/2, j), fy_ on the face (i, j+1/2).
#pragma omp parallel for schedule(static) num_threads(std::max(1, cfg_.workers))
    for (int j = 0; j < nrows; ++j)
      for (int i = 0; i < nx_; ++i) {
        const std::size_t c = id(i, j), e = id(i + 1, j), nn = id(i, j + 1);
        {
          const double du1dx = (u1_[e] - u1_[c]) / hx;
          const double du2dx = (u2_[e] - u2_[c]) / hx;
          const double du1dy =
              (u1_[id(i, j + 1)] - u1_[id(i, j - 1)] + u1_[id(i + 1, j + 1)] - u1_[id(i + 1, j - 1)]) /
              (4 * hy);
          const double sxx = 2.0 * eps * du1dx;
          const double sxy = eps * (du1dy + du2dx);
          const double ub1 = 0.5 * (u1_[c] + u1_[e]), ub2 = 0.5 * (u2_[c] + u2_[e]);
          fx_.rho[c] = 0.5 * (U.m1[c] + U.m1[e]);
          fx_.m1[c] = 0.5 * (U.m1[c] * u1_[c] + p_[c] + U.m1[e] * u1_[e] + p_[e]) - sxx;
          fx_.m2[c] = 0.5 * (U.m2[c] * u1_[c] + U.m2[e] * u1_[e]) - sxy;
          fx_.E[c] = 0.5 * ((U.E[c] + p_[c]) * u1_[c] + (U.E[e] + p_[e]) * u1_[e]) -
                     (sxx * ub1 + sxy * ub2) - kap * (th_[e] - th_[c]) / hx;
        }
        {
          const double du1dy = (u1_[nn] - u1_[c]) / hy;
          const double du2dy = (u2_[nn] - u2_[c]) / hy;
          const double du2dx =
              (u2_[id(i + 1, j)] - u2_[id(i - 1, j)] + u2_[id(i + 1, j + 1)] - u2_[id(i - 1, j + 1)]) /
              (4 * hx);
          const double syy = 2.0 * eps * du2dy;
          const double syx = eps * (du1dy + du2dx);
          const double ub1 = 0.5 * (u1_[c] + u1_[nn]), ub2 = 0.5 * (u2_[c] + u2_[nn]);
          fy_.rho[c] = 0.5 * (U.m2[c] + U.m2[nn]);
          fy_.m1[c] = 0.5 * (U.m1[c] * u2_[c] + U.m1[nn] * u2_[nn]) - syx;
          fy_.m2[c] = 0.5 * (U.m2[c] * u2_[c] + p_[c] + U.m2[nn] * u2_[nn] + p_[nn]) - syy;
          fy_.E[c] = 0.5 * ((U.E[c] + p_[c]) * u2_[c] + (U.E[nn] + p_[nn]) * u2_[nn]) -
                     (syx * ub1 + syy * ub2) - kap * (th_[nn] - th_[c]) / hy;
        }
      }

#pragma omp parallel for schedule(static) num_threads(std::max(1, cfg_.workers))
    for (int j = 0; j < nrows; ++j)
      for (int i = 0; i < nx_; ++i) {
        const std::size_t c = id(i, j), w = id(i - 1, j), s = id(i, j - 1);
        dU_.rho[c] = -(fx_.rho[c] - fx_.rho[w]) / hx - (fy_.rho[c] - fy_.rho[s]) / hy;
        dU_.m1[c] = -(fx_.m1[c] - fx_.m1[w]) / hx - (fy_.m1[c] - fy_.m1[s]) / hy;
        dU_.m2[c] = -(fx_.m2[c] - fx_.m2[w]) / hx - (fy_.m2[c] - fy_.m2[s]) / hy;
        dU_.E[c] = -(fx_.E[c] - fx_.E[w]) / hx - (fy_.E[c] - fy_.E[s]) / hy;
      }
  }

  // out = a + dt * d
  static void axpy(Conserved& out, const Conserved& a, double dt, const Conserved& d) {
    const std::size_t n = a.rho.size();
    for (std::size_t k = 0; k < n; ++k) {
      out.rho[k] = a.rho[k] + dt * d.rho[k];
      out.m1[k] = a.m1[k] + dt * d.m1[k];
      out.m2[k] = a.m2[k] + dt * d.m2[k];
      out.E[k] = a.E[k] + dt * d.E[k];
    }
  }

  // U = (U + V) / 2
  static void average(Conserved& U, const Conserved& V) {
    const std::size_t n = U.rho.size();
    for (std::size_t k = 0; k < n; ++k) {
      U.rho[k] = 0.5 * (U.rho[k] + V.rho[k]);
      U.m1[k] = 0.5 * (U.m1[k] + V.m1[k]);
      U.m2[k] = 0.5 * (U.m2[k] + V.m2[k]);
      U.E[k] = 0.5 * (U.E[k] + V.E[k]);
    }
  }

  const SolverConfig& cfg_;
  const Grid& g_;
  int nx_, ny_;
  std::size_t n_;
  double gm1_;
  Conserved U_;
  std::vector<double> u1_, u2_, p_, th_;
  Conserved fx_, fy_, dU_, U1_;
};

}  // namespace

SolveResult nsf_solve(const SolverConfig& cfg) {
  cfg.validate();
  const Grid& g = cfg.grid;
  const GridField init = initial_field(cfg);
  for (const State& s : init.slice(0))
    if (s.rho < cfg.rho_min) throw GeneratorError("nsf_solve: initial density below rho_min");
  if (std::isfinite(cfg.E0_budget)) {
    const double e0 = relative_energy_integral(init, init.slice(0));
    if (e0 > cfg.E0_budget) throw GeneratorError("nsf_solve: initial relative energy exceeds E0");
  }

  const int c = cfg.output_coarsening;
  const Grid out_grid(g.L, g.nx / c, g.ny / c, g.nt, g.T, g.buffer);
  GridField out(out_grid, cfg.far, cfg.params);
  SolverLedger ledger;

  Solver solver(cfg);
  solver.set(init.slice(0));

  std::vector<State> slice(g.cells());
  const double area = g.cell_area();
  auto record = [&](int n) {
    for (std::size_t k = 0; k < g.cells(); ++k) slice[k] = solver.state(k);
    double S = 0.0, smin = kInfinity, dev = 0.0;
    const State far = cfg.far.state();
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        const State& s = slice[static_cast<std::size_t>(j) * g.nx + i];
        S += s.S;
        if (g.in_collar(i, j)) {
          dev = std::max({dev, std::abs(s.rho - far.rho), std::abs(s.S - far.S),
                          std::abs(s.mom[0] - far.mom[0]), std::abs(s.mom[1] - far.mom[1])});
        } else {
          smin = std::min(smin, s.S / s.rho);
        }
        ledger.min_density = std::min(ledger.min_density, s.rho);
      }
    ledger.time.push_back(g.t(n));
    ledger.mass.push_back(solver.total(solver.U().rho));
    ledger.energy.push_back(solver.total(solver.U().E));
    ledger.entropy.push_back(S * area);
    ledger.min_specific_entropy.push_back(smin);
    ledger.collar_deviation.push_back(dev);
    ledger.max_velocity_gradient.push_back(solver.max_velocity_gradient());

    const double inv = 1.0 / (c * c);
    for (int j = 0; j < out_grid.ny; ++j)
      for (int i = 0; i < out_grid.nx; ++i) {
        State acc;
        for (int b = 0; b < c; ++b)
          for (int a = 0; a < c; ++a) {
            const State& s = slice[static_cast<std::size_t>(j * c + b) * g.nx + i * c + a];
            acc.rho += s.rho;
            acc.S += s.S;
            acc.mom[0] += s.mom[0];
            acc.mom[1] += s.mom[1];
          }
        acc.rho *= inv;
        acc.S *= inv;
        acc.mom[0] *= inv;
        acc.mom[1] *= inv;
        out.at(n, i, j) = acc;
      }
  };

  record(0);
  // The initial slice is stored exactly as sampled.
  if (c == 1)
    std::copy(init.slice(0).begin(), init.slice(0).end(), out.data().begin());

  std::size_t steps = 0;
  double energy = ledger.energy.front();
  for (int n = 1; n < g.nt; ++n) {
    const double interval = g.t(n) - g.t(n - 1);
    const int sub = std::max(1, static_cast<int>(std::ceil(interval / solver.stable_dt())));
    const double dt = interval / sub;
    for (int s = 0; s < sub; ++s) {
      solver.step(dt);
      ++steps;
      solver.check(steps);
      const double e = solver.total(solver.U().E);
      ledger.max_step_energy_increase = std::max(ledger.max_step_energy_increase, e - energy);
      energy = e;
    }
    record(n);
  }
  ledger.steps = steps;
  return {std::move(out), std::move(ledger)};
}

SequenceResult make_sequence(const SolverConfig& base,
                             const std::vector<ScheduleLevel>& schedule) {
  if (schedule.empty()) throw GeneratorError("make_sequence: empty schedule");
  for (std::size_t n = 1; n < schedule.size(); ++n) {
    const auto& a = schedule[n - 1];
    const auto& b = schedule[n];
    if (!(b.eps < a.eps) || !(b.kappa < a.kappa) || !(b.nx > a.nx))
      throw GeneratorError("make_sequence: schedule must decrease strictly");
  }
  SequenceResult out;
  std::vector<SequenceLevel> levels;
  for (const auto& lv : schedule) {
    SolverConfig cfg = base;
    cfg.grid = Grid(base.grid.L, lv.nx, lv.ny, lv.nt, base.grid.T, base.grid.buffer);
    cfg.eps = lv.eps;
    cfg.kappa = lv.kappa;
    cfg.output_coarsening = 1;
    try {
      SolveResult r = nsf_solve(cfg);
      levels.push_back({lv.label, lv.eps, lv.kappa, cfg.grid.hx(), std::move(r.field)});
      out.ledgers.push_back(std::move(r.ledger));
    } catch (const SolverAbort& e) {
      throw SolverAbort(std::string(e.what()) + " (level " + std::to_string(lv.label) + ")",
                        e.step(), lv.label);
    }
  }
  out.sequence = ApproximateSequence(std::move(levels));
  return out;
}

std::vector<ScheduleLevel> geometric_schedule(double eps1, int nx1, int nt1, int levels) {
  std::vector<ScheduleLevel> out;
  for (int n = 1; n <= levels; ++n) {
    const int f = 1 << (n - 1);
    const double eps = eps1 / f;
    out.push_back({n, eps, eps, nx1 * f, nx1 * f, (nt1 - 1) * f + 1});
  }
  return out;
}

GridField synthetic_oscillation(const State& a, const State& b, int n, const Grid& grid,
                                const FarField& far, const ThermoParams& params, double patch) {
  if (n < 1) throw GeneratorError("synthetic_oscillation: n must be >= 1");
  if (!(a.rho > 0.0) || !(b.rho > 0.0))
    throw GeneratorError("synthetic_oscillation: states must have positive density");
  if (!(patch > 0.0) || patch > grid.interior_halfwidth())
    throw GeneratorError("synthetic_oscillation: patch must lie inside the interior");
  const double width = grid.L / n;
  auto fn = [&](double, double x, double y) {
    if (std::abs(x) > patch || std::abs(y) > patch) return far.state();
    const long k = static_cast<long>(std::floor((x + grid.L) / width));
    return k % 2 == 0 ? a : b;
  };
  return sample(fn, grid, far, params);
}

namespace {

double overlap(double a0, double a1, double b0, double b1) {
  return std::max(0.0, std::min(a1, b1) - std::max(a0, b0));
}

}  // namespace

GridField synthetic_concentration(int n, const Grid& grid, const FarField& far,
                                  const ThermoParams& params) {
  if (n < 1) throw GeneratorError("synthetic_concentration: n must be >= 1");
  const double x0 = -0.5 * grid.L, width = grid.L / n;
  if (0.5 > grid.interior_halfwidth())
    throw GeneratorError("synthetic_concentration: spike does not fit inside the interior");
  GridField f(grid, far, params);
  const double hx = grid.hx(), hy = grid.hy();
  for (int j = 0; j < grid.ny; ++j)
    for (int i = 0; i < grid.nx; ++i) {
      const double fx = overlap(grid.x(i) - 0.5 * hx, grid.x(i) + 0.5 * hx, x0, x0 + width) / hx;
      const double fy = overlap(grid.y(j) - 0.5 * hy, grid.y(j) + 0.5 * hy, -0.5, 0.5) / hy;
      if (fx * fy == 0.0) continue;
      for (int t = 0; t < grid.nt; ++t) f.at(t, i, j).mom[0] = far.mom_inf[0] + n * fx * fy;
    }
  return f;
}

int pre_shock_slices(const SolverLedger& ledger, double threshold) {
  int n = 0;
  while (n < static_cast<int>(ledger.time.size()) &&
         ledger.time[n] * ledger.max_velocity_gradient[n] <= threshold)
    ++n;
  return n;
}

ReferenceResult reference_solution(const SolverConfig& base, const Grid& study_grid, double eps,
                                   double kappa, int refine, double window_threshold) {
  if (refine < 1) throw GeneratorError("reference_solution: refine must be >= 1");
  SolverConfig cfg = base;
  cfg.grid = Grid(study_grid.L, study_grid.nx * refine, study_grid.ny * refine, study_grid.nt,
                  study_grid.T, study_grid.buffer);
  cfg.eps = eps;
  cfg.kappa = kappa;
  cfg.output_coarsening = refine;
  SolveResult r = nsf_solve(cfg);
  ReferenceResult out{std::move(r.field), std::move(r.ledger), study_grid.nt, false};
  const int window = pre_shock_slices(out.ledger, window_threshold);
  if (window < study_grid.nt) {
    out.window_nt = std::max(2, window);
    out.field = truncate_time(out.field, out.window_nt);
    out.shrunk = true;
  }
  return out;
}

namespace {

struct Derivatives {
  std::vector<double> u1x, u1y, u2x, u2y, th, thx, thy;
};

// Cell-centred velocity and temperature gradients of one slice (central,
// periodic).
Derivatives slice_derivatives(const GridField& f, int n) {
  const Grid& g = f.grid();
  const std::size_t N = g.cells();
  std::vector<double> u1(N), u2(N);
  Derivatives d;
  d.th.resize(N);
  for (std::size_t k = 0; k < N; ++k) {
    const State& s = f.slice(n)[k];
    u1[k] = s.mom[0] / s.rho;
    u2[k] = s.mom[1] / s.rho;
    d.th[k] = temperature(s, f.params());
  }
  auto at = [&](int i, int j) {
    i = (i + g.nx) % g.nx;
    j = (j + g.ny) % g.ny;
    return static_cast<std::size_t>(j) * g.nx + i;
  };
  d.u1x.resize(N), d.u1y.resize(N), d.u2x.resize(N), d.u2y.resize(N), d.thx.resize(N),
      d.thy.resize(N);
  const double hx = g.hx(), hy = g.hy();
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      const std::size_t k = at(i, j), e = at(i + 1, j), w = at(i - 1, j), nn = at(i, j + 1),
                        s = at(i, j - 1);
      d.u1x[k] = (u1[e] - u1[w]) / (2 * hx);
      d.u1y[k] = (u1[nn] - u1[s]) / (2 * hy);
      d.u2x[k] = (u2[e] - u2[w]) / (2 * hx);
      d.u2y[k] = (u2[nn] - u2[s]) / (2 * hy);
      d.thx[k] = (d.th[e] - d.th[w]) / (2 * hx);
      d.thy[k] = (d.th[nn] - d.th[s]) / (2 * hy);
    }
  return d;
}

template <typename Body>
double pair_derivatives(const GridField& f, const SampledTest& s, Body body) {
  const Grid& g = f.grid();
  double total = 0.0;
  for (int n = s.n0; n <= s.n1; ++n) {
    const Derivatives d = slice_derivatives(f, n);
    double slice = 0.0;
    for (int j = s.j0; j <= s.j1; ++j)
      for (int i = s.i0; i <= s.i1; ++i) {
        const std::size_t k = static_cast<std::size_t>(j) * g.nx + i;
        const std::size_t q = s.at(n, i, j);
        slice += body(d, k, s.phi[q], s.dx[q], s.dy[q]);
      }
    total += g.time_weight(n) * slice;
  }
  return total * g.cell_area();
}

}  // namespace

double viscous_work(const GridField& field, double eps, const VectorTestFunction& phi) {
  const SampledTest s = sample_test(phi.shape, field.grid());
  const Vec3 e = phi.direction;
  return pair_derivatives(field, s, [&](const Derivatives& d, std::size_t k, double, double px,
                                        double py) {
    const double sxx = 2.0 * eps * d.u1x[k];
    const double syy = 2.0 * eps * d.u2y[k];
    const double sxy = eps * (d.u1y[k] + d.u2x[k]);
    // sigma_ij e_i d_j phi
    return e[0] * (sxx * px + sxy * py) + e[1] * (sxy * px + syy * py);
  });
}

double entropy_source(const GridField& field, double eps, double kappa, const TestFunction& psi) {
  const SampledTest s = sample_test(psi, field.grid());
  return pair_derivatives(field, s, [&](const Derivatives& d, std::size_t k, double p, double px,
                                        double py) {
    const double sxx = 2.0 * eps * d.u1x[k];
    const double syy = 2.0 * eps * d.u2y[k];
    const double sxy = eps * (d.u1y[k] + d.u2x[k]);
    const double work = sxx * d.u1x[k] + syy * d.u2y[k] + sxy * (d.u1y[k] + d.u2x[k]);
    const double th = d.th[k];
    const double g2 = d.thx[k] * d.thx[k] + d.thy[k] * d.thy[k];
    const double production = work / th + kappa * g2 / (th * th);
    const double flux = kappa * (d.thx[k] * px + d.thy[k] * py) / th;
    return p * production - flux;
  });
}

}  // namespace ec
