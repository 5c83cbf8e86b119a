#include "ec/defect.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>

#include "ec/csv.hpp"

namespace ec {

void MacroPartition::validate(const Grid& g) const {
  if (micro_x < 16 || micro_y < 16 || micro_t < 1)
    throw DefectError("partition: need at least 16 micro cells per space axis");
  if (g.nx % micro_x != 0 || g.ny % micro_y != 0)
    throw DefectError("partition: micro counts must divide the grid");
  if (g.nt % micro_t != 0) throw DefectError("partition: micro_t must divide nt");
  for (int J = 0; J < g.ny / micro_y; ++J)
    for (int I = 0; I < g.nx / micro_x; ++I) {
      const bool first = g.in_collar(I * micro_x, J * micro_y);
      for (int b = 0; b < micro_y; ++b)
        for (int a = 0; a < micro_x; ++a)
          if (g.in_collar(I * micro_x + a, J * micro_y + b) != first)
            throw DefectError("partition: macro cells straddle the collar boundary");
    }
}

EmpiricalYoungMeasure::EmpiricalYoungMeasure(std::vector<std::vector<State>> clouds) {
  for (std::size_t c = 0; c < clouds.size(); ++c) {
    if (clouds[c].empty()) throw DefectError("young measure: empty cloud");
    cells_.push_back({0, static_cast<int>(c), 0, true});
    atoms_.insert(atoms_.end(), clouds[c].begin(), clouds[c].end());
    offsets_.push_back(atoms_.size());
    weights_.push_back(1.0);
  }
}

EmpiricalYoungMeasure::EmpiricalYoungMeasure(std::vector<MacroCell> cells,
                                             std::vector<std::size_t> offsets,
                                             std::vector<State> atoms,
                                             std::vector<double> weights)
    : cells_(std::move(cells)),
      offsets_(std::move(offsets)),
      atoms_(std::move(atoms)),
      weights_(std::move(weights)) {
  if (offsets_.size() != cells_.size() + 1 || weights_.size() != cells_.size() ||
      offsets_.back() != atoms_.size())
    throw DefectError("young measure: inconsistent layout");
}

EmpiricalYoungMeasure empirical_ym(const GridField& field, const MacroPartition& part) {
  const Grid& g = field.grid();
  part.validate(g);
  const int MX = g.nx / part.micro_x, MY = g.ny / part.micro_y, MT = g.nt / part.micro_t;
  const double area = g.cell_area() * part.micro_x * part.micro_y;

  std::vector<MacroCell> cells;
  std::vector<std::size_t> offsets{0};
  std::vector<State> atoms;
  std::vector<double> weights;
  atoms.reserve(g.size());
  for (int N = 0; N < MT; ++N)
    for (int J = 0; J < MY; ++J)
      for (int I = 0; I < MX; ++I) {
        double tw = 0.0;
        for (int c = 0; c < part.micro_t; ++c) {
          const int n = N * part.micro_t + c;
          tw += g.time_weight(n);
          for (int b = 0; b < part.micro_y; ++b)
            for (int a = 0; a < part.micro_x; ++a)
              atoms.push_back(field.at(n, I * part.micro_x + a, J * part.micro_y + b));
        }
        cells.push_back({N, I, J, !g.in_collar(I * part.micro_x, J * part.micro_y)});
        offsets.push_back(atoms.size());
        weights.push_back(area * tw / g.T);
      }
  return EmpiricalYoungMeasure(std::move(cells), std::move(offsets), std::move(atoms),
                               std::move(weights));
}

namespace {

State mean(std::span<const State> cloud) {
  State m;
  for (const State& s : cloud) {
    m.rho += s.rho;
    m.S += s.S;
    for (int k = 0; k < 3; ++k) m.mom[k] += s.mom[k];
  }
  const double inv = 1.0 / static_cast<double>(cloud.size());
  m.rho *= inv;
  m.S *= inv;
  for (int k = 0; k < 3; ++k) m.mom[k] *= inv;
  return m;
}

}  // namespace

std::vector<State> barycenter(const EmpiricalYoungMeasure& ym) {
  std::vector<State> out(ym.size());
  for (std::size_t c = 0; c < ym.size(); ++c) out[c] = mean(ym.cloud(c));
  return out;
}

GridField barycenter_field(const GridField& field, const MacroPartition& part) {
  if (part.micro_t != 1) throw DefectError("barycenter_field: requires micro_t = 1");
  const Grid& g = field.grid();
  part.validate(g);
  const Grid macro(g.L, g.nx / part.micro_x, g.ny / part.micro_y, g.nt, g.T, g.buffer);
  const EmpiricalYoungMeasure ym = empirical_ym(field, part);
  std::vector<State> bary = barycenter(ym);
  return GridField(macro, field.far(), field.params(), std::move(bary));
}

GridField broadcast(const GridField& coarse, const Grid& fine) {
  const Grid& g = coarse.grid();
  if (fine.nt != g.nt || fine.nx % g.nx != 0 || fine.ny % g.ny != 0 || fine.L != g.L)
    throw DefectError("broadcast: grids are not compatible");
  const int fx = fine.nx / g.nx, fy = fine.ny / g.ny;
  GridField out(fine, coarse.far(), coarse.params());
  for (int n = 0; n < fine.nt; ++n)
    for (int j = 0; j < fine.ny; ++j)
      for (int i = 0; i < fine.nx; ++i) out.at(n, i, j) = coarse.at(n, i / fx, j / fy);
  return out;
}

std::vector<NamedFunctional> registered_functionals(const FarField& far, const ThermoParams& p) {
  const int d = p.dim();
  auto flux = [](int a, int b) {
    return [a, b](const State& s) {
      if (s.rho > 0.0) return s.mom[a] * s.mom[b] / s.rho;
      return (s.mom[a] == 0.0 && s.mom[b] == 0.0) ? 0.0 : kInfinity;
    };
  };
  return {
      {"e_kin", true, [p](const State& s) { return kinetic_energy(s, p); }},
      {"e_int", true, [p](const State& s) { return internal_energy_extended(s, p); }},
      {"e_total", true, [p](const State& s) { return extended_energy(s, p); }},
      {"e_rel", true, [far, p](const State& s) { return relative_energy(s, far, p); }},
      {"abs_dm", true,
       [far, d](const State& s) {
         Vec3 dm{};
         for (int k = 0; k < d; ++k) dm[k] = s.mom[k] - far.mom_inf[k];
         return std::sqrt(norm2(dm, d));
       }},
      {"drho", true, [far](const State& s) { return s.rho - far.rho_inf; }},
      {"dS", true, [far](const State& s) { return s.S - far.S_inf; }},
      {"F11", true, flux(0, 0)},
      {"F12", false, flux(0, 1)},
      {"F22", true, flux(1, 1)},
      {"pressure", true,
       [p](const State& s) { return (p.gamma() - 1.0) * internal_energy_extended(s, p); }},
  };
}

const NamedFunctional& find_functional(const std::vector<NamedFunctional>& set,
                                       const std::string& name) {
  for (const auto& f : set)
    if (f.name == name) return f;
  throw DefectError("unknown functional '" + name + "'");
}

namespace {

double gap_of(std::span<const State> cloud, const StateFunctional& E) {
  double m = 0.0;
  for (const State& s : cloud) m += E(s);
  m /= static_cast<double>(cloud.size());
  if (std::isinf(m)) return m;
  return m - E(mean(cloud));
}

}  // namespace

std::vector<double> jensen_gap(const EmpiricalYoungMeasure& ym, const StateFunctional& E) {
  std::vector<double> out(ym.size());
  for (std::size_t c = 0; c < ym.size(); ++c) out[c] = gap_of(ym.cloud(c), E);
  return out;
}

namespace {

void check_ladder(const std::vector<double>& ladder) {
  for (std::size_t m = 0; m < ladder.size(); ++m) {
    if (!(ladder[m] > 0.0)) throw DefectError("truncation ladder must be positive");
    if (m > 0 && !(ladder[m] > ladder[m - 1]))
      throw DefectError("truncation ladder must increase strictly");
  }
}

TruncationSplit split_of(std::span<const State> cloud, const StateFunctional& E,
                         const std::vector<double>& ladder) {
  TruncationSplit t;
  t.total = gap_of(cloud, E);
  std::vector<double> values(cloud.size());
  std::transform(cloud.begin(), cloud.end(), values.begin(), E);
  for (double M : ladder) {
    double c = 0.0;
    for (double v : values) c += std::max(0.0, v - M);
    c /= static_cast<double>(cloud.size());
    t.concentration.push_back(c);
    t.oscillation.push_back(t.total - c);
  }
  return t;
}

}  // namespace

std::vector<TruncationSplit> truncation_split(const EmpiricalYoungMeasure& ym,
                                              const StateFunctional& E,
                                              const std::vector<double>& ladder) {
  check_ladder(ladder);
  std::vector<TruncationSplit> out;
  out.reserve(ym.size());
  for (std::size_t c = 0; c < ym.size(); ++c) out.push_back(split_of(ym.cloud(c), E, ladder));
  return out;
}

std::vector<std::vector<double>> direction_fan(std::size_t k, int fan) {
  if (k == 1) return {{1.0}, {-1.0}};
  if (k == 2) {
    std::vector<std::vector<double>> out;
    for (int a = 0; a < fan; ++a) {
      const double th = 2.0 * std::numbers::pi * a / fan;
      out.push_back({std::cos(th), std::sin(th)});
    }
    return out;
  }
  throw DefectError("direction_fan: only one- and two-component G are supported");
}

DominationResult domination_check(const EmpiricalYoungMeasure& ym, const StateFunctional& E,
                                  const std::vector<StateFunctional>& G, int fan) {
  const auto dirs = direction_fan(G.size(), fan);
  DominationResult r;
  for (std::size_t c = 0; c < ym.size(); ++c) {
    const double gE = gap_of(ym.cloud(c), E);
    std::vector<double> gG(G.size());
    for (std::size_t k = 0; k < G.size(); ++k) gG[k] = gap_of(ym.cloud(c), G[k]);
    for (std::size_t d = 0; d < dirs.size(); ++d) {
      double proj = 0.0;
      for (std::size_t k = 0; k < G.size(); ++k) proj += dirs[d][k] * gG[k];
      const double margin = gE - std::abs(proj);
      if (margin < r.min_margin) r = {margin, c, d};
    }
  }
  return r;
}

DefectReport::DefectReport(const EmpiricalYoungMeasure& ym,
                           const std::vector<NamedFunctional>& functionals,
                           std::vector<double> ladder)
    : ladder_(std::move(ladder)) {
  check_ladder(ladder_);
  if (ladder_.empty()) throw DefectError("defect report: empty truncation ladder");
  for (const auto& f : functionals) {
    names_.push_back(f.name);
    convex_.push_back(f.convex);
  }
  std::vector<std::size_t> reported;
  for (std::size_t c = 0; c < ym.size(); ++c) {
    if (!ym.cell(c).interior) continue;
    reported.push_back(c);
    const MacroCell& mc = ym.cell(c);
    cell_ids_.push_back(std::to_string(mc.n) + ":" + std::to_string(mc.i) + ":" +
                        std::to_string(mc.j));
    weights_.push_back(ym.weight(c));
  }
  const std::size_t nm = ladder_.size();
  entries_.resize(reported.size() * functionals.size() * nm);
  const int count = static_cast<int>(reported.size());
#pragma omp parallel for schedule(static)
  for (int r = 0; r < count; ++r) {
    const auto cloud = ym.cloud(reported[r]);
    for (std::size_t f = 0; f < functionals.size(); ++f) {
      const TruncationSplit t = split_of(cloud, functionals[f].fn, ladder_);
      for (std::size_t m = 0; m < nm; ++m)
        entries_[(r * functionals.size() + f) * nm + m] = {static_cast<std::size_t>(r),
                                                           functionals[f].name,
                                                           ladder_[m],
                                                           t.total,
                                                           t.oscillation[m],
                                                           t.concentration[m]};
    }
  }
}

namespace {

std::size_t index_of(const std::vector<std::string>& names, const std::string& name) {
  auto it = std::find(names.begin(), names.end(), name);
  if (it == names.end()) throw DefectError("functional '" + name + "' not in report");
  return static_cast<std::size_t>(it - names.begin());
}

}  // namespace

std::vector<double> DefectReport::totals(const std::string& functional) const {
  const std::size_t f = index_of(names_, functional);
  const std::size_t nm = ladder_.size(), nf = names_.size();
  std::vector<double> out(cell_ids_.size());
  for (std::size_t r = 0; r < cell_ids_.size(); ++r) out[r] = entries_[(r * nf + f) * nm].total;
  return out;
}

double DefectReport::aggregate_total(const std::string& functional) const {
  const auto t = totals(functional);
  double s = 0.0;
  for (std::size_t r = 0; r < t.size(); ++r) s += weights_[r] * t[r];
  return s;
}

double DefectReport::aggregate_concentration(const std::string& functional,
                                             std::size_t m) const {
  const std::size_t f = index_of(names_, functional);
  const std::size_t nm = ladder_.size(), nf = names_.size();
  double s = 0.0;
  for (std::size_t r = 0; r < cell_ids_.size(); ++r)
    s += weights_[r] * entries_[(r * nf + f) * nm + m].concentration;
  return s;
}

double DefectReport::aggregate_oscillation(const std::string& functional, std::size_t m) const {
  return aggregate_total(functional) - aggregate_concentration(functional, m);
}

double DefectReport::min_convex_total() const {
  double m = kInfinity;
  const std::size_t nm = ladder_.size(), nf = names_.size();
  for (std::size_t r = 0; r < cell_ids_.size(); ++r)
    for (std::size_t f = 0; f < nf; ++f)
      if (convex_[f]) m = std::min(m, entries_[(r * nf + f) * nm].total);
  return m;
}

std::string DefectReport::to_csv() const {
  std::string out = "cell,functional,M,total,oscillation,concentration\n";
  for (const auto& e : entries_) {
    out += cell_ids_[e.cell] + "," + e.functional + "," + format_double(e.M) + "," +
           format_double(e.total) + "," + format_double(e.oscillation) + "," +
           format_double(e.concentration) + "\n";
  }
  for (const auto& name : names_)
    for (std::size_t m = 0; m < ladder_.size(); ++m) {
      const double conc = aggregate_concentration(name, m);
      const double tot = aggregate_total(name);
      out += "interior," + name + "," + format_double(ladder_[m]) + "," + format_double(tot) +
             "," + format_double(tot - conc) + "," + format_double(conc) + "\n";
    }
  return out;
}

void DefectReport::write_csv(const std::filesystem::path& path) const {
  write_text_file(path, to_csv());
}

std::pair<double, double> trace_constants(const ThermoParams& p) {
  const double a = p.dim() * (p.gamma() - 1.0);
  return {std::min(2.0, a), std::max(2.0, a)};
}

TraceComparison trace_comparison(const DefectReport& report, const ThermoParams& p,
                                 double tol) {
  TraceComparison out;
  std::tie(out.lambda1, out.lambda2) = trace_constants(p);
  const auto f11 = report.totals("F11");
  const auto f22 = report.totals("F22");
  const auto pr = report.totals("pressure");
  const auto e = report.totals("e_total");
  for (std::size_t c = 0; c < e.size(); ++c) {
    TraceTriple t{out.lambda1 * e[c], f11[c] + f22[c] + p.dim() * pr[c], out.lambda2 * e[c]};
    const double slack = tol * (1.0 + std::abs(e[c]));
    if (t.mid < t.lhs - slack || t.mid > t.rhs + slack) out.flagged.push_back(c);
    out.cells.push_back(t);
  }
  return out;
}

std::vector<double> dirac_score(const EmpiricalYoungMeasure& ym, const FarField& far,
                                const ThermoParams& p) {
  const double sr = far.rho_inf;
  const double sm = far.rho_inf * sound_speed(far.state(), p);
  const int d = p.dim();
  std::vector<double> out(ym.size());
  for (std::size_t c = 0; c < ym.size(); ++c) {
    const auto cloud = ym.cloud(c);
    const State b = mean(cloud);
    double acc = 0.0;
    for (const State& s : cloud) {
      double v = (s.rho - b.rho) * (s.rho - b.rho) / (sr * sr);
      for (int k = 0; k < d; ++k) v += (s.mom[k] - b.mom[k]) * (s.mom[k] - b.mom[k]) / (sm * sm);
      v += (s.S - b.S) * (s.S - b.S) / (sr * sr);
      acc += v;
    }
    out[c] = acc / static_cast<double>(cloud.size());
  }
  return out;
}

}  // namespace ec
