#include <cmath>
#include <random>

#include "doctest.h"
#include "ec/defect.hpp"
#include "ec/generator.hpp"
#include "oracles.hpp"

using namespace ec;

namespace {

const ThermoParams kGas;
const FarField kFar;
const State kA{0.5, {0.0, 0.0, 0.0}, 0.0};
const State kB{2.0, {0.0, 0.0, 0.0}, 0.0};

GridField oscillation(int nx, int n, double patch = 0.25) {
  return synthetic_oscillation(kA, kB, n, Grid(1.0, nx, nx, 3, 0.2, 0.25), kFar, kGas, patch);
}

bool inside_patch(const EmpiricalYoungMeasure& ym, std::size_t c, int micro, double h,
                  double patch) {
  const auto& mc = ym.cell(c);
  const double x0 = -1.0 + mc.i * micro * h, y0 = -1.0 + mc.j * micro * h;
  return x0 >= -patch - 1e-12 && x0 + micro * h <= patch + 1e-12 && y0 >= -patch - 1e-12 &&
         y0 + micro * h <= patch + 1e-12;
}

double rho2(const State& s) { return s.rho * s.rho; }

}  // namespace

TEST_CASE("partition validation") {
  Grid g(1.0, 128, 128, 3, 0.2, 0.25);
  CHECK_NOTHROW(MacroPartition{}.validate(g));
  CHECK_THROWS_AS((MacroPartition{8, 8, 1}.validate(Grid(1.0, 64, 64, 3, 0.2, 0.25))), DefectError);
  CHECK_THROWS_AS((MacroPartition{32, 16, 1}.validate(g)), DefectError);
  CHECK_THROWS_AS((MacroPartition{16, 16, 2}.validate(g)), DefectError);
  // 64 cells: the collar is 8 cells wide
  CHECK_THROWS_AS(MacroPartition{}.validate(Grid(1.0, 64, 64, 3, 0.2, 0.25)), DefectError);
}

TEST_CASE("constant field: single repeated atom, zero gaps") {
  Grid g(1.0, 128, 128, 3, 0.2, 0.25);
  FarField far(1.1, {0.2, 0.1, 0.0}, 0.3);
  const auto f = sample([&](double, double, double) { return far.state(); }, g, far, kGas);
  const auto ym = empirical_ym(f, MacroPartition{});
  CHECK(ym.size() == 8 * 8 * 3);
  for (std::size_t c = 0; c < ym.size(); ++c) {
    CHECK(ym.cloud(c).size() == 256);
    for (const State& s : ym.cloud(c)) REQUIRE(s == far.state());
  }
  DefectReport r(ym, registered_functionals(far, kGas), {1.0, 2.0});
  for (const auto& e : r.entries()) REQUIRE(std::abs(e.total) <= 1e-12);
  const auto dom = domination_check(ym, rho2, {[](const State& s) { return s.rho; }});
  CHECK(std::abs(dom.min_margin) <= 1e-12);
  for (double d : dirac_score(ym, far, kGas)) CHECK(d <= 1e-20);
}

TEST_CASE("oscillation cloud: atom weights, barycenter and Jensen gaps") {
  const double h = 2.0 / 128;
  for (int n : {64, 48}) {
    const auto f = oscillation(128, n);
    const auto ym = empirical_ym(f, MacroPartition{});
    const auto bary = barycenter(ym);
    const auto gap = jensen_gap(ym, rho2);
    int checked = 0;
    for (std::size_t c = 0; c < ym.size(); ++c) {
      if (!inside_patch(ym, c, 16, h, 0.25)) continue;
      ++checked;
      std::size_t na = 0;
      for (const State& s : ym.cloud(c)) na += s == kA;
      const double wa = static_cast<double>(na) / ym.cloud(c).size();
      CHECK(std::abs(wa - 0.5) <= 1.0 / 16);
      if (n == 64) {
        CHECK(wa == 0.5);
        CHECK(bary[c].rho == doctest::Approx(0.5 * (kA.rho + kB.rho)).epsilon(1e-15));
        const double closed = 0.25 * (kA.rho - kB.rho) * (kA.rho - kB.rho);
        CHECK(gap[c] == doctest::Approx(closed).epsilon(1e-12));
      }
    }
    CHECK(checked == 4 * 3);
  }
}

TEST_CASE("oscillation cloud: relative energy gap matches the two-atom closed form") {
  oracle::Gas gas;
  // The linear part of the Bregman divergence drops out of a Jensen gap.
  const double closed = 0.5 * (gas.rhoe(kA.rho, kA.S) + gas.rhoe(kB.rho, kB.S)) -
                        gas.rhoe(0.5 * (kA.rho + kB.rho), 0.5 * (kA.S + kB.S));
  const double h = 2.0 / 128;
  const auto f = oscillation(128, 64);
  const auto ym = empirical_ym(f, MacroPartition{});
  const auto erel = find_functional(registered_functionals(kFar, kGas), "e_rel").fn;
  const auto gap = jensen_gap(ym, erel);
  for (std::size_t c = 0; c < ym.size(); ++c)
    if (inside_patch(ym, c, 16, h, 0.25)) CHECK(std::abs(gap[c] - closed) <= 0.05 * closed);
}

TEST_CASE("refining the micro sampling barely moves the moments") {
  const int n = 48;
  const auto coarse = empirical_ym(oscillation(128, n), MacroPartition{});
  const auto fine = empirical_ym(oscillation(256, n), MacroPartition{32, 32, 1});
  REQUIRE(coarse.size() == fine.size());
  const auto bc = barycenter(coarse), bf = barycenter(fine);
  const double sup = std::max(kA.rho, kB.rho);
  for (std::size_t c = 0; c < bc.size(); ++c) CHECK(std::abs(bc[c].rho - bf[c].rho) < sup / n);
}

TEST_CASE("barycenter equals the macro-cell average of the field") {
  SolverConfig cfg;
  cfg.grid = Grid(1.0, 128, 128, 5, 0.1, 0.25);
  cfg.initial.kind = InitialKind::smooth_bump;
  cfg.initial.radius = 0.5;
  cfg.eps = cfg.kappa = 0.01;
  const auto f = nsf_solve(cfg).field;
  const MacroPartition part;
  const auto ym = empirical_ym(f, part);
  const auto b = barycenter(ym);
  const auto bf = barycenter_field(f, part);
  for (std::size_t c = 0; c < ym.size(); ++c) {
    const auto& mc = ym.cell(c);
    double avg = 0.0;
    for (int j = 0; j < 16; ++j)
      for (int i = 0; i < 16; ++i) avg += f.at(mc.n, mc.i * 16 + i, mc.j * 16 + j).rho;
    avg /= 256.0;
    REQUIRE(std::abs(b[c].rho - avg) <= 1e-15);
    REQUIRE(bf.at(mc.n, mc.i, mc.j) == b[c]);
  }
  const auto back = broadcast(bf, f.grid());
  CHECK(back.at(2, 17, 35) == bf.at(2, 1, 2));
  // Jensen gaps of convex functionals are nonnegative everywhere
  for (const auto& fn : registered_functionals(f.far(), f.params())) {
    if (!fn.convex) continue;
    for (double g : jensen_gap(ym, fn.fn)) REQUIRE(g >= -1e-12);
  }
}

TEST_CASE("Jensen gap edge cases") {
  EmpiricalYoungMeasure single({{kA}, {kB, kB}});
  for (double g : jensen_gap(single, rho2)) CHECK(g == 0.0);
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(0.1, 3.0);
  std::vector<std::vector<State>> clouds(20);
  for (auto& cl : clouds)
    for (int k = 0; k < 30; ++k) cl.push_back({u(rng), {u(rng), u(rng), 0.0}, u(rng)});
  EmpiricalYoungMeasure ym(clouds);
  auto linear = [](const State& s) { return 2.0 * s.rho - 0.5 * s.mom[0] + 3.0 * s.S + 1.0; };
  for (double g : jensen_gap(ym, linear)) CHECK(std::abs(g) <= 1e-12);
}

TEST_CASE("truncation split") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0.1, 5.0);
  std::vector<std::vector<State>> clouds(50);
  for (auto& cl : clouds)
    for (int k = 0; k < 40; ++k) cl.push_back({u(rng), {0, 0, 0}, 0.0});
  EmpiricalYoungMeasure ym(clouds);
  const std::vector<double> ladder{0.5, 1.0, 4.0, 30.0};
  const auto split = truncation_split(ym, rho2, ladder);
  for (const auto& t : split) {
    for (std::size_t m = 0; m < ladder.size(); ++m) {
      CHECK(t.oscillation[m] + t.concentration[m] == t.total);
      if (m > 0) CHECK(t.concentration[m] <= t.concentration[m - 1]);
    }
    CHECK(t.concentration.back() == 0.0);  // 30 > max rho^2 = 25
  }
  CHECK_THROWS_AS(truncation_split(ym, rho2, {2.0, 1.0}), DefectError);
  CHECK_THROWS_AS(truncation_split(ym, rho2, {0.0, 1.0}), DefectError);
}

TEST_CASE("concentration spike recovers its mass") {
  FarField far(1.0, {0.1, 0.0, 0.0}, 0.0);
  const auto fns = registered_functionals(far, kGas);
  for (int n : {64, 128, 256}) {
    Grid g(1.0, 2 * n, 128, 2, 0.2, 0.25);
    const auto f = synthetic_concentration(n, g, far, kGas);
    const auto ym = empirical_ym(f, MacroPartition{});
    DefectReport r(ym, fns, {2.0, 8.0});
    // int (|m - m_inf| - M)^+ = L (1 - M / n)
    CHECK(r.aggregate_concentration("abs_dm", 0) == doctest::Approx(1.0 - 2.0 / n).epsilon(1e-12));
    CHECK(std::abs(r.aggregate_concentration("abs_dm", 0) - g.L) <= 0.05 * g.L);
    if (n == 256) CHECK(std::abs(r.aggregate_concentration("abs_dm", 1) - g.L) <= 0.05 * g.L);
    const auto dom = domination_check(ym, find_functional(fns, "e_total").fn,
                                      {[](const State& s) { return s.mom[0]; },
                                       [](const State& s) { return s.mom[1]; }});
    CHECK(dom.min_margin >= -1e-3);
  }
  // n = 1: a bounded bump, nothing above M = 2
  Grid g(1.0, 128, 128, 2, 0.2, 0.25);
  DefectReport r(empirical_ym(synthetic_concentration(1, g, far, kGas), MacroPartition{}), fns, {2.0});
  CHECK(r.aggregate_concentration("abs_dm", 0) == 0.0);
}

TEST_CASE("domination on oscillation clouds") {
  const auto ym = empirical_ym(oscillation(128, 64), MacroPartition{});
  const auto dom = domination_check(ym, rho2, {[](const State& s) { return s.rho; }});
  CHECK(dom.min_margin >= 0.0);
  double best = 0.0;
  for (double g : jensen_gap(ym, rho2)) best = std::max(best, g);
  CHECK(best == doctest::Approx(0.25 * 1.5 * 1.5).epsilon(1e-12));
  CHECK(direction_fan(1).size() == 2);
  const auto fan = direction_fan(2);
  REQUIRE(fan.size() == 16);
  for (const auto& xi : fan) CHECK(std::hypot(xi[0], xi[1]) == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("trace comparison constants and saturation") {
  const auto [l1, l2] = trace_constants(ThermoParams(1.4, 2));
  CHECK(l1 == doctest::Approx(0.8).epsilon(1e-15));
  CHECK(l2 == 2.0);
  CHECK(trace_constants(ThermoParams(1.4, 3)).first == doctest::Approx(1.2));
  CHECK(trace_constants(ThermoParams(2.0, 3)) == std::pair{2.0, 3.0});

  ThermoParams p(1.4, 2);
  FarField far;
  // pure kinetic: shared (rho, S), momenta differ
  EmpiricalYoungMeasure kin({{{1.0, {1.0, 0.5, 0.0}, 0.2}, {1.0, {-0.5, 0.2, 0.0}, 0.2}}});
  // pure internal: no momentum
  EmpiricalYoungMeasure in({{{0.5, {0, 0, 0}, 0.1}, {2.0, {0, 0, 0}, -0.3}}});
  const auto fns = registered_functionals(far, p);
  const auto tk = trace_comparison(DefectReport(kin, fns, {1e6}), p);
  const auto ti = trace_comparison(DefectReport(in, fns, {1e6}), p);
  REQUIRE(tk.cells.size() == 1);
  CHECK(tk.flagged.empty());
  CHECK(ti.flagged.empty());
  CHECK(std::abs(tk.cells[0].mid - tk.cells[0].rhs) <= 1e-10);
  CHECK(std::abs(ti.cells[0].mid - ti.cells[0].lhs) <= 1e-10);
  CHECK(tk.cells[0].rhs > 0.0);
  CHECK(ti.cells[0].lhs > 0.0);
}

TEST_CASE("dirac score") {
  EmpiricalYoungMeasure single({{kA, kA}});
  CHECK(dirac_score(single, kFar, kGas)[0] == 0.0);
  const auto ym = empirical_ym(oscillation(128, 64), MacroPartition{});
  const auto sc = dirac_score(ym, kFar, kGas);
  const double closed = 0.25 * (kA.rho - kB.rho) * (kA.rho - kB.rho);
  double best = 0.0;
  for (double s : sc) best = std::max(best, s);
  CHECK(best == doctest::Approx(closed).epsilon(1e-12));

  // NSF levels: the score drops at least by half from the coarsest to the finest level
  SolverConfig cfg;
  cfg.grid = Grid(1.0, 128, 128, 3, 0.1, 0.25);
  cfg.initial.kind = InitialKind::smooth_bump;
  cfg.initial.radius = 0.5;
  const auto seq =
      make_sequence(cfg, {{1, 0.02, 0.02, 128, 128, 3}, {2, 0.01, 0.01, 256, 256, 3}}).sequence;
  auto worst = [&](const GridField& f) {
    double m = 0.0;
    const auto y = empirical_ym(f, MacroPartition{});
    const auto s = dirac_score(y, f.far(), f.params());
    for (std::size_t c = 0; c < y.size(); ++c)
      if (y.cell(c).interior) m = std::max(m, s[c]);
    return m;
  };
  const double s0 = worst(seq.level(0).field), s1 = worst(seq.level(1).field);
  MESSAGE("dirac score coarse " << s0 << " fine " << s1);
  CHECK(s1 < 0.5 * s0);
}

TEST_CASE("defect report csv and aggregates") {
  const auto f = oscillation(128, 64);
  DefectReport r(empirical_ym(f, MacroPartition{}), registered_functionals(kFar, kGas), {1.0, 4.0});
  CHECK(r.cells() == 6 * 6 * 3);
  const std::string csv = r.to_csv();
  CHECK(csv.rfind("cell,functional,M,total,oscillation,concentration\n", 0) == 0);
  CHECK(csv.find("\ninterior,e_rel,") != std::string::npos);
  // time-averaged interior integral: 0.25 of the patch area times the per-cell gap
  oracle::Gas gas;
  const double gap = 0.5 * (gas.rhoe(0.5, 0) + gas.rhoe(2.0, 0)) - gas.rhoe(1.25, 0);
  CHECK(r.aggregate_total("e_rel") == doctest::Approx(0.25 * gap).epsilon(1e-12));
  CHECK(r.min_convex_total() >= -1e-12);
  CHECK_THROWS_AS(r.totals("nope"), DefectError);
}
