#include "ec/weakform.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <sstream>

#include "ec/csv.hpp"

namespace ec {

const char* to_string(TestKind kind) {
  return kind == TestKind::initial ? "initial" : "interior";
}

namespace {

double profile(double z) {
  if (std::abs(z) >= 1.0) return 0.0;
  const double a = 1.0 - z * z;
  return a * a * a;
}

double profile_derivative(double z) {
  if (std::abs(z) >= 1.0) return 0.0;
  const double a = 1.0 - z * z;
  return -6.0 * z * a * a;
}

}  // namespace

double Bump::value(double t, double x, double y) const {
  return profile((t - tc) / rt) * profile((x - xc) / rx) * profile((y - yc) / ry);
}

std::array<double, 3> Bump::gradient(double t, double x, double y) const {
  const double zt = (t - tc) / rt, zx = (x - xc) / rx, zy = (y - yc) / ry;
  const double bt = profile(zt), bx = profile(zx), by = profile(zy);
  return {profile_derivative(zt) / rt * bx * by, bt * profile_derivative(zx) / rx * by,
          bt * bx * profile_derivative(zy) / ry};
}

TestFunction::TestFunction(Bump b, std::string id) : terms_{{1.0, b}}, id_(std::move(id)) {}

TestKind TestFunction::kind() const {
  for (const auto& [c, b] : terms_)
    if (b.kind == TestKind::initial) return TestKind::initial;
  return TestKind::interior;
}

double TestFunction::value(double t, double x, double y) const {
  double v = 0.0;
  for (const auto& [c, b] : terms_) v += c * b.value(t, x, y);
  return v;
}

std::array<double, 3> TestFunction::gradient(double t, double x, double y) const {
  std::array<double, 3> g{0.0, 0.0, 0.0};
  for (const auto& [c, b] : terms_) {
    auto gb = b.gradient(t, x, y);
    for (int k = 0; k < 3; ++k) g[k] += c * gb[k];
  }
  return g;
}

TestFunction operator+(const TestFunction& a, const TestFunction& b) {
  TestFunction out = a;
  out.terms_.insert(out.terms_.end(), b.terms_.begin(), b.terms_.end());
  out.id_ = "(" + a.id_ + "+" + b.id_ + ")";
  return out;
}

TestFunction operator*(double c, const TestFunction& f) {
  TestFunction out = f;
  for (auto& term : out.terms_) term.first *= c;
  out.id_ = format_double(c) + "*" + f.id_;
  return out;
}

TestFunction bump(const Grid& grid, double tc, double xc, double yc, double rt, double rx,
                  double ry, TestKind kind, std::string id) {
  if (!(rt > 0.0) || !(rx > 0.0) || !(ry > 0.0)) throw WeakFormError("bump: radii must be > 0");
  const double w = grid.interior_halfwidth();
  const double slack = 1e-12 * grid.L;
  if (std::abs(xc) + rx > w + slack || std::abs(yc) + ry > w + slack)
    throw WeakFormError("bump: spatial support leaves the interior");
  if (kind == TestKind::interior) {
    if (!(tc - rt > 0.0) || !(tc + rt < grid.T))
      throw WeakFormError("bump: interior bump must be supported inside (0, T)");
  } else {
    if (tc != 0.0) throw WeakFormError("bump: initial bump must be centred at t = 0");
    if (!(rt < grid.T)) throw WeakFormError("bump: initial bump reaches t = T");
  }
  if (id.empty()) {
    std::ostringstream os;
    os << to_string(kind) << "@" << format_double(tc) << "," << format_double(xc) << ","
       << format_double(yc);
    id = os.str();
  }
  return TestFunction(Bump{tc, xc, yc, rt, rx, ry, kind}, std::move(id));
}

std::vector<TestFunction> make_lattice(const Grid& grid, const LatticeSpec& spec) {
  const double w = grid.interior_halfwidth();
  std::vector<TestFunction> out;
  for (std::size_t ri = 0; ri < spec.radius_fractions.size(); ++ri) {
    const double r = spec.radius_fractions[ri] * w;
    const int count = static_cast<int>(std::floor(2.0 * (w - r) / r + 1e-9)) + 1;
    std::vector<double> centres;
    const double span = (count - 1) * r;
    for (int c = 0; c < count; ++c) centres.push_back(-0.5 * span + c * r);
    for (int cy = 0; cy < count; ++cy)
      for (int cx = 0; cx < count; ++cx) {
        std::ostringstream tag;
        tag << "r" << ri << "_" << cx << "_" << cy;
        if (spec.interior)
          out.push_back(bump(grid, 0.5 * grid.T, centres[cx], centres[cy],
                             spec.interior_time_radius * grid.T, r, r, TestKind::interior,
                             tag.str() + "_int"));
        if (spec.initial)
          out.push_back(bump(grid, 0.0, centres[cx], centres[cy],
                             spec.initial_time_radius * grid.T, r, r, TestKind::initial,
                             tag.str() + "_ini"));
      }
  }
  return out;
}

SampledTest sample_test(const TestFunction& phi, const Grid& g) {
  SampledTest s;
  if (phi.terms().empty()) return s;
  double t0 = kInfinity, t1 = -kInfinity, x0 = kInfinity, x1 = -kInfinity, y0 = kInfinity,
         y1 = -kInfinity;
  for (const auto& [c, b] : phi.terms()) {
    t0 = std::min(t0, b.tc - b.rt);
    t1 = std::max(t1, b.tc + b.rt);
    x0 = std::min(x0, b.xc - b.rx);
    x1 = std::max(x1, b.xc + b.rx);
    y0 = std::min(y0, b.yc - b.ry);
    y1 = std::max(y1, b.yc + b.ry);
  }
  const double hx = g.hx(), hy = g.hy(), dt = g.dt();
  s.i0 = std::max(0, static_cast<int>(std::floor((x0 + g.L) / hx)) - 1);
  s.i1 = std::min(g.nx - 1, static_cast<int>(std::floor((x1 + g.L) / hx)) + 1);
  s.j0 = std::max(0, static_cast<int>(std::floor((y0 + g.L) / hy)) - 1);
  s.j1 = std::min(g.ny - 1, static_cast<int>(std::floor((y1 + g.L) / hy)) + 1);
  s.n0 = std::max(0, static_cast<int>(std::floor(t0 / dt)) - 1);
  s.n1 = std::min(g.nt - 1, static_cast<int>(std::ceil(t1 / dt)) + 1);

  const std::size_t size = static_cast<std::size_t>(s.n1 - s.n0 + 1) * s.nx() * s.ny();
  s.phi.assign(size, 0.0);
  s.dt.assign(size, 0.0);
  s.dx.assign(size, 0.0);
  s.dy.assign(size, 0.0);
  for (int n = s.n0; n <= s.n1; ++n)
    for (int j = s.j0; j <= s.j1; ++j)
      for (int i = s.i0; i <= s.i1; ++i) s.phi[s.at(n, i, j)] = phi.value(g.t(n), g.x(i), g.y(j));

  auto get = [&](int n, int i, int j) {
    if (n < s.n0 || n > s.n1 || i < s.i0 || i > s.i1 || j < s.j0 || j > s.j1) return 0.0;
    return s.phi[s.at(n, i, j)];
  };
  for (int n = s.n0; n <= s.n1; ++n)
    for (int j = s.j0; j <= s.j1; ++j)
      for (int i = s.i0; i <= s.i1; ++i) {
        const std::size_t k = s.at(n, i, j);
        if (n == 0)
          s.dt[k] = (get(1, i, j) - get(0, i, j)) / dt;
        else if (n == g.nt - 1)
          s.dt[k] = (get(n, i, j) - get(n - 1, i, j)) / dt;
        else
          s.dt[k] = (get(n + 1, i, j) - get(n - 1, i, j)) / (2.0 * dt);
        s.dx[k] = (get(n, i + 1, j) - get(n, i - 1, j)) / (2.0 * hx);
        s.dy[k] = (get(n, i, j + 1) - get(n, i, j - 1)) / (2.0 * hy);
      }
  return s;
}

namespace {

// Space-time sum of body(state, phi, dt, dx, dy) with the trapezoid/midpoint
// weights.
template <typename Body>
double pair(const GridField& f, const SampledTest& s, Body body) {
  const Grid& g = f.grid();
  double total = 0.0;
  for (int n = s.n0; n <= s.n1; ++n) {
    double slice = 0.0;
    for (int j = s.j0; j <= s.j1; ++j)
      for (int i = s.i0; i <= s.i1; ++i) {
        const std::size_t k = s.at(n, i, j);
        slice += body(f.at(n, i, j), s.phi[k], s.dt[k], s.dx[k], s.dy[k]);
      }
    total += g.time_weight(n) * slice;
  }
  return total * g.cell_area();
}

// Spatial sum of body(state, phi(0)) over the initial slice.
template <typename Body>
double pair_initial(const Grid& g, std::span<const State> initial, const SampledTest& s,
                    Body body) {
  if (s.n0 != 0) return 0.0;
  double total = 0.0;
  for (int j = s.j0; j <= s.j1; ++j)
    for (int i = s.i0; i <= s.i1; ++i)
      total += body(initial[static_cast<std::size_t>(j) * g.nx + i], s.phi[s.at(0, i, j)]);
  return total * g.cell_area();
}

void check_initial(const GridField& f, std::span<const State> initial) {
  if (initial.size() != f.grid().cells())
    throw WeakFormError("initial slice does not match the field grid");
}

void check_nonnegative(const SampledTest& s) {
  for (double v : s.phi)
    if (v < 0.0) throw WeakFormError("entropy test function must be nonnegative");
}

double continuity(const GridField& f, std::span<const State> initial, const SampledTest& s) {
  const double bulk = pair(f, s, [](const State& u, double, double pt, double px, double py) {
    return u.rho * pt + u.mom[0] * px + u.mom[1] * py;
  });
  const double init =
      pair_initial(f.grid(), initial, s, [](const State& u, double p) { return u.rho * p; });
  return bulk + init;
}

double momentum(const GridField& f, std::span<const State> initial, const SampledTest& s,
                const Vec3& e) {
  const ThermoParams& par = f.params();
  const double bulk = pair(f, s, [&](const State& u, double, double pt, double px, double py) {
    const double me = u.mom[0] * e[0] + u.mom[1] * e[1];
    double v = me * pt;
    if (u.rho > 0.0) {
      v += me * (u.mom[0] * px + u.mom[1] * py) / u.rho;
      v += pressure(u, par) * (e[0] * px + e[1] * py);
    }
    return v;
  });
  const double init = pair_initial(f.grid(), initial, s, [&](const State& u, double p) {
    return (u.mom[0] * e[0] + u.mom[1] * e[1]) * p;
  });
  return bulk + init;
}

double entropy(const GridField& f, std::span<const State> initial, const SampledTest& s) {
  const double bulk = pair(f, s, [](const State& u, double, double pt, double px, double py) {
    double v = u.S * pt;
    if (u.rho > 0.0) v += u.S / u.rho * (u.mom[0] * px + u.mom[1] * py);
    return v;
  });
  const double init =
      pair_initial(f.grid(), initial, s, [](const State& u, double p) { return u.S * p; });
  return -init - bulk;
}

double entropy_renorm(const GridField& f, std::span<const State> initial, const SampledTest& s,
                      const RenormalizationFamily& fam, std::size_t k) {
  const double bulk = pair(f, s, [&](const State& u, double, double pt, double px, double py) {
    if (!(u.rho > 0.0)) return 0.0;
    const double chi = chi_apply(fam, k, u.S / u.rho);
    return u.rho * chi * pt + chi * (u.mom[0] * px + u.mom[1] * py);
  });
  const double init = pair_initial(f.grid(), initial, s, [&](const State& u, double p) {
    if (!(u.rho > 0.0)) return 0.0;
    return u.rho * chi_apply(fam, k, u.S / u.rho) * p;
  });
  return -init - bulk;
}

}  // namespace

double residual_continuity(const GridField& field, std::span<const State> initial,
                           const TestFunction& phi) {
  check_initial(field, initial);
  return continuity(field, initial, sample_test(phi, field.grid()));
}

double residual_continuity(const GridField& field, const TestFunction& phi) {
  return residual_continuity(field, field.slice(0), phi);
}

double residual_momentum(const GridField& field, std::span<const State> initial,
                         const VectorTestFunction& phi) {
  check_initial(field, initial);
  return momentum(field, initial, sample_test(phi.shape, field.grid()), phi.direction);
}

double residual_momentum(const GridField& field, const VectorTestFunction& phi) {
  return residual_momentum(field, field.slice(0), phi);
}

double residual_entropy(const GridField& field, std::span<const State> initial,
                        const TestFunction& psi) {
  check_initial(field, initial);
  const SampledTest s = sample_test(psi, field.grid());
  check_nonnegative(s);
  return entropy(field, initial, s);
}

double residual_entropy(const GridField& field, const TestFunction& psi) {
  return residual_entropy(field, field.slice(0), psi);
}

double residual_entropy_renormalized(const GridField& field, std::span<const State> initial,
                                     const RenormalizationFamily& fam, std::size_t k,
                                     const TestFunction& psi) {
  check_initial(field, initial);
  if (k >= fam.size()) throw WeakFormError("renormalization index out of range");
  const SampledTest s = sample_test(psi, field.grid());
  check_nonnegative(s);
  return entropy_renorm(field, initial, s, fam, k);
}

double residual_entropy_renormalized(const GridField& field, const RenormalizationFamily& fam,
                                     std::size_t k, const TestFunction& psi) {
  return residual_entropy_renormalized(field, field.slice(0), fam, k, psi);
}

namespace {

double interior_relative_energy(const Grid& g, std::span<const State> slice, const FarField& far,
                                const ThermoParams& par) {
  double total = 0.0;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i)
      if (!g.in_collar(i, j))
        total += relative_energy(slice[static_cast<std::size_t>(j) * g.nx + i], far, par);
  return total * g.cell_area();
}

}  // namespace

double relative_energy_integral(const GridField& field, std::span<const State> slice) {
  return interior_relative_energy(field.grid(), slice, field.far(), field.params());
}

double relative_energy_slack(const GridField& field, std::span<const State> initial,
                             const FarField& far, int n_tau) {
  check_initial(field, initial);
  if (n_tau < 0 || n_tau >= field.grid().nt)
    throw WeakFormError("relative_energy_slack: checkpoint is not a grid time");
  const Grid& g = field.grid();
  return interior_relative_energy(g, initial, far, field.params()) -
         interior_relative_energy(g, field.slice(n_tau), far, field.params());
}

double quadrature_error_estimate(const GridField& field,
                                 const std::function<double(const GridField&)>& functional) {
  const GridField coarse = restrict_to(field, coarsened(field.grid()));
  return std::abs(functional(field) - functional(coarse)) / 3.0;
}

const char* functional_id(Functional f) {
  switch (f) {
    case Functional::e1:
      return "E1";
    case Functional::e2:
      return "E2";
    case Functional::e3:
      return "E3";
    case Functional::e4:
      return "E4";
    case Functional::e4_renorm:
      return "E4R";
  }
  return "?";
}

void ResidualReport::add(int level, Functional f, std::string test_id, double value) {
  entries_.push_back({level, f, std::move(test_id), value});
}

void ResidualReport::append(const ResidualReport& other) {
  entries_.insert(entries_.end(), other.entries_.begin(), other.entries_.end());
}

std::vector<double> ResidualReport::values(Functional f, int level) const {
  std::vector<double> out;
  for (const auto& e : entries_)
    if (e.functional == f && e.level == level) out.push_back(e.value);
  return out;
}

std::vector<int> ResidualReport::levels() const {
  std::set<int> s;
  for (const auto& e : entries_) s.insert(e.level);
  return {s.begin(), s.end()};
}

double ResidualReport::max_abs(Functional f, int level) const {
  double m = 0.0;
  for (double v : values(f, level)) m = std::max(m, std::abs(v));
  return m;
}

double ResidualReport::min(Functional f, int level) const {
  double m = kInfinity;
  for (double v : values(f, level)) m = std::min(m, v);
  return m;
}

std::string ResidualReport::to_csv() const {
  std::string out = "level,functional,test_id,value\n";
  for (const auto& e : entries_) {
    out += std::to_string(e.level);
    out += ',';
    out += functional_id(e.functional);
    out += ',';
    out += e.test_id;
    out += ',';
    out += format_double(e.value);
    out += '\n';
  }
  return out;
}

void ResidualReport::write_csv(const std::filesystem::path& path) const {
  write_text_file(path, to_csv());
}

ResidualReport evaluate_residuals(const GridField& field, const std::vector<TestFunction>& tests,
                                  const ResidualOptions& opt) {
  const std::span<const State> initial = field.slice(0);
  const std::size_t nk = opt.renormalization ? opt.renormalization->size() : 0;
  const std::size_t per_test = 1 + (opt.momentum ? 2 : 0) + (opt.entropy ? 1 + nk : 0);
  std::vector<double> values(tests.size() * per_test, 0.0);

  const int count = static_cast<int>(tests.size());
#pragma omp parallel for schedule(dynamic) num_threads(std::max(1, opt.workers))
  for (int t = 0; t < count; ++t) {
    const SampledTest s = sample_test(tests[t], field.grid());
    double* out = values.data() + static_cast<std::size_t>(t) * per_test;
    *out++ = continuity(field, initial, s);
    if (opt.momentum) {
      *out++ = momentum(field, initial, s, {1.0, 0.0, 0.0});
      *out++ = momentum(field, initial, s, {0.0, 1.0, 0.0});
    }
    if (opt.entropy) {
      *out++ = entropy(field, initial, s);
      for (std::size_t k = 0; k < nk; ++k)
        *out++ = entropy_renorm(field, initial, s, *opt.renormalization, k);
    }
  }

  ResidualReport report;
  for (std::size_t t = 0; t < tests.size(); ++t) {
    const double* v = values.data() + t * per_test;
    const std::string& id = tests[t].id();
    report.add(opt.level, Functional::e1, id, *v++);
    if (opt.momentum) {
      report.add(opt.level, Functional::e2, id + ":x", *v++);
      report.add(opt.level, Functional::e2, id + ":y", *v++);
    }
    if (opt.entropy) {
      report.add(opt.level, Functional::e4, id, *v++);
      for (std::size_t k = 0; k < nk; ++k)
        report.add(opt.level, Functional::e4_renorm, "k" + std::to_string(k) + ":" + id, *v++);
    }
  }
  if (opt.relative_energy) {
    const Grid& g = field.grid();
    const double e0 = interior_relative_energy(g, initial, field.far(), field.params());
    for (int n = 1; n < g.nt; ++n)
      report.add(opt.level, Functional::e3, "n=" + std::to_string(n),
                 e0 - interior_relative_energy(g, field.slice(n), field.far(), field.params()));
  }
  return report;
}

}  // namespace ec
