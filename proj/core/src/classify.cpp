#include "ec/classify.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <random>
#include <sstream>

#include "ec/csv.hpp"

namespace ec {

EntropyMinResult entropy_min_check(const GridField& field, double s0) {
  const Grid& g = field.grid();
  EntropyMinResult r;
  for (int n = 0; n < g.nt; ++n)
    for (int j = 0; j < g.ny; ++j)
      for (int i = 0; i < g.nx; ++i) {
        if (g.in_collar(i, j)) continue;
        const State& s = field.at(n, i, j);
        if (!(s.rho > 0.0)) {
          ++r.vacuum_skipped;
          continue;
        }
        const double m = s.S / s.rho - s0;
        if (m < r.margin) {
          r.margin = m;
          r.n = n;
          r.i = i;
          r.j = j;
          r.t = g.t(n);
          r.x = g.x(i);
          r.y = g.y(j);
        }
      }
  r.ok = r.margin >= -kEntropyMinTolerance;
  return r;
}

std::size_t vacuum_entropy_check(const GridField& field) {
  std::size_t count = 0;
  for (const State& s : field.data()) {
    if (s.rho != 0.0) continue;
    if (s.S != 0.0 || s.mom[0] != 0.0 || s.mom[1] != 0.0 || s.mom[2] != 0.0) ++count;
  }
  return count;
}

const char* to_string(NormVariant v) { return v == NormVariant::v1 ? "v1" : "v2"; }

double fitted_rate(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx, ly;
  for (std::size_t k = 0; k < x.size() && k < y.size(); ++k)
    if (y[k] > 0.0 && x[k] > 0.0) {
      lx.push_back(std::log(x[k]));
      ly.push_back(std::log(y[k]));
    }
  if (lx.size() < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    mx += lx[k];
    my += ly[k];
  }
  mx /= lx.size();
  my /= ly.size();
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t k = 0; k < lx.size(); ++k) {
    sxy += (lx[k] - mx) * (ly[k] - my);
    sxx += (lx[k] - mx) * (lx[k] - mx);
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

bool ConvergenceStudy::strictly_decreasing(double floor) const {
  for (const auto& row : rows) {
    const bool negligible =
        std::all_of(row.distance.begin(), row.distance.end(), [&](double d) { return d <= floor; });
    if (negligible) continue;
    for (std::size_t n = 1; n < row.distance.size(); ++n)
      if (!(row.distance[n] < row.distance[n - 1])) return false;
  }
  return true;
}

std::string ConvergenceStudy::to_csv() const {
  std::string out = "variant,variable,r,q,level,eps,distance,rate\n";
  for (const auto& row : rows)
    for (std::size_t n = 0; n < row.distance.size(); ++n)
      out += std::string(to_string(variant)) + "," + row.variable + "," + format_double(row.r) +
             "," + format_double(q) + "," + std::to_string(labels[n]) + "," +
             format_double(eps[n]) + "," + format_double(row.distance[n]) + "," +
             format_double(row.rate) + "\n";
  return out;
}

namespace {

// Level field truncated to the reference time window.
GridField match_window(const GridField& level, const Grid& ref) {
  const Grid& g = level.grid();
  if (std::abs(ref.T - g.T) <= 1e-12 * g.T) return level;
  const double steps = ref.T / g.dt();
  const int nt = static_cast<int>(std::lround(steps)) + 1;
  if (std::abs(steps - (nt - 1)) > 1e-9 || nt < 2 || nt > g.nt)
    throw ClassifyError("convergence_study: reference window is not a level time node");
  return truncate_time(level, nt);
}

}  // namespace

ConvergenceStudy convergence_study(const ApproximateSequence& seq, const GridField& ref,
                                   const Box& box, NormVariant variant, double q,
                                   std::uint64_t seed, int samples) {
  if (seq.size() == 0) throw ClassifyError("convergence_study: empty sequence");
  const double gamma = ref.params().gamma();
  ConvergenceStudy st;
  st.variant = variant;
  st.q = q;
  const double r_rho = variant == NormVariant::v1 ? 1.0 : gamma;
  const double r_mom = variant == NormVariant::v1 ? 1.0 : 2.0 * gamma / (gamma + 1.0);
  st.rows = {{"rho", r_rho, {}, 0.0}, {"mom", r_mom, {}, 0.0}, {"S", r_rho, {}, 0.0}};

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(box.x0, box.x1), uy(box.y0, box.y1), ut(0.0, 1.0);
  std::vector<std::array<double, 3>> points;
  for (int k = 0; k < samples; ++k) points.push_back({ut(rng), ux(rng), uy(rng)});

  for (const auto& lv : seq.levels()) {
    const GridField level = match_window(lv.field, ref.grid());
    const Grid& g = level.grid();
    if (!grids_nested(ref.grid(), g))
      throw ClassifyError("convergence_study: reference grid does not refine level " +
                          std::to_string(lv.label));
    const GridField r = restrict_to(ref, g);
    const int d = level.params().dim();
    std::vector<double> drho(g.size()), dmom(g.size()), dS(g.size());
    for (std::size_t k = 0; k < g.size(); ++k) {
      const State& a = level.data()[k];
      const State& b = r.data()[k];
      drho[k] = a.rho - b.rho;
      dS[k] = a.S - b.S;
      Vec3 dm{};
      for (int c = 0; c < d; ++c) dm[c] = a.mom[c] - b.mom[c];
      dmom[k] = std::sqrt(norm2(dm, d));
    }
    st.rows[0].distance.push_back(lq_loc_norm(g, drho, box, q, r_rho));
    st.rows[1].distance.push_back(lq_loc_norm(g, dmom, box, q, r_mom));
    st.rows[2].distance.push_back(lq_loc_norm(g, dS, box, q, r_rho));
    st.labels.push_back(lv.label);
    st.eps.push_back(lv.eps);

    std::vector<double> pw;
    for (const auto& p : points) {
      const int n = std::min(g.nt - 1, static_cast<int>(std::lround(p[0] * (g.nt - 1))));
      const int i = std::clamp(static_cast<int>((p[1] + g.L) / g.hx()), 0, g.nx - 1);
      const int j = std::clamp(static_cast<int>((p[2] + g.L) / g.hy()), 0, g.ny - 1);
      pw.push_back(std::abs(level.at(n, i, j).rho - r.at(n, i, j).rho));
    }
    st.pointwise.push_back(std::move(pw));
  }
  for (auto& row : st.rows) row.rate = fitted_rate(st.eps, row.distance);
  return st;
}

namespace {

struct Fnv {
  std::uint64_t h = 1469598103934665603ull;
  void bytes(const void* p, std::size_t n) {
    const auto* c = static_cast<const unsigned char*>(p);
    for (std::size_t k = 0; k < n; ++k) {
      h ^= c[k];
      h *= 1099511628211ull;
    }
  }
  template <typename T>
  void value(T v) {
    bytes(&v, sizeof(v));
  }
};

}  // namespace

std::string sequence_fingerprint(const ApproximateSequence& seq) {
  Fnv f;
  for (const auto& lv : seq.levels()) {
    f.value(lv.label);
    f.value(lv.eps);
    f.value(lv.kappa);
    f.value(lv.h);
    const Grid& g = lv.field.grid();
    f.value(g.nx);
    f.value(g.ny);
    f.value(g.nt);
    f.value(g.L);
    f.value(g.T);
    for (const State& s : lv.field.data()) {
      f.value(s.rho);
      f.value(s.mom[0]);
      f.value(s.mom[1]);
      f.value(s.mom[2]);
      f.value(s.S);
    }
  }
  std::ostringstream os;
  os << std::hex << f.h;
  return os.str();
}

const char* to_string(Regime r) { return r == Regime::first ? "first" : "second"; }

namespace {

// Averages the interior over blocks of b x b cells anchored at the first
// interior cell; collar cells are left untouched.
GridField interior_block_average(const GridField& field, int b) {
  const Grid& g = field.grid();
  int c0x = 0, c0y = 0;
  while (c0x < g.nx && g.in_collar(c0x, g.ny / 2)) ++c0x;
  while (c0y < g.ny && g.in_collar(g.nx / 2, c0y)) ++c0y;
  const int wx = g.nx - 2 * c0x, wy = g.ny - 2 * c0y;
  if (wx <= 0 || wy <= 0 || wx % b != 0 || wy % b != 0)
    throw ClassifyError("barycenter: macro cells do not tile the interior");
  GridField out = field;
  const double inv = 1.0 / (static_cast<double>(b) * b);
  for (int n = 0; n < g.nt; ++n)
    for (int J = 0; J < wy / b; ++J)
      for (int I = 0; I < wx / b; ++I) {
        State acc;
        for (int jj = 0; jj < b; ++jj)
          for (int ii = 0; ii < b; ++ii) {
            const State& s = field.at(n, c0x + I * b + ii, c0y + J * b + jj);
            acc.rho += s.rho;
            acc.S += s.S;
            for (int k = 0; k < 3; ++k) acc.mom[k] += s.mom[k];
          }
        acc.rho *= inv;
        acc.S *= inv;
        for (int k = 0; k < 3; ++k) acc.mom[k] *= inv;
        for (int jj = 0; jj < b; ++jj)
          for (int ii = 0; ii < b; ++ii) out.at(n, c0x + I * b + ii, c0y + J * b + jj) = acc;
      }
  return out;
}

std::map<Functional, std::vector<double>> split_by_functional(const ResidualReport& r) {
  std::map<Functional, std::vector<double>> out;
  for (const auto& e : r.entries()) out[e.functional].push_back(e.value);
  return out;
}

}  // namespace

BarycenterEvidence barycenter_evidence(const ApproximateSequence& seq,
                                       const std::vector<TestFunction>& tests,
                                       const BarycenterOptions& options) {
  if (seq.size() == 0) throw ClassifyError("barycenter: empty sequence");
  if (options.partition.micro_x != options.partition.micro_y)
    throw ClassifyError("barycenter: square macro cells required");
  const GridField& fine = seq.finest().field;
  const int b = options.partition.micro_x;
  ResidualOptions ro;
  ro.renormalization = options.renormalization;
  ro.workers = options.workers;
  const auto rh = split_by_functional(evaluate_residuals(interior_block_average(fine, b), tests, ro));
  const auto r2h =
      split_by_functional(evaluate_residuals(interior_block_average(fine, 2 * b), tests, ro));
  BarycenterEvidence ev;
  ev.source = sequence_fingerprint(seq);
  for (const auto& [f, vals] : rh) {
    const auto& coarse = r2h.at(f);
    std::vector<double> est(vals.size());
    for (std::size_t k = 0; k < vals.size(); ++k) est[k] = std::abs(vals[k] - coarse[k]) / 3.0;
    ev.values[f] = vals;
    ev.estimates[f] = std::move(est);
  }
  return ev;
}

const char* to_string(VerdictCategory c) {
  switch (c) {
    case VerdictCategory::consistent:
      return "consistent";
    case VerdictCategory::not_weak_solution:
      return "not_weak_solution";
    case VerdictCategory::contradiction:
      return "contradiction";
  }
  return "?";
}

int exit_code(VerdictCategory c) {
  switch (c) {
    case VerdictCategory::consistent:
      return 0;
    case VerdictCategory::not_weak_solution:
      return 2;
    case VerdictCategory::contradiction:
      return 3;
  }
  return 1;
}

namespace {

bool is_slack(Functional f) {
  return f == Functional::e3 || f == Functional::e4 || f == Functional::e4_renorm;
}

}  // namespace

ConvergenceVerdict verdict(const VerdictInputs& in) {
  if (!in.residuals || !in.barycenter || !in.defects)
    throw ClassifyError("verdict: residual, barycenter and defect evidence are required");
  if (in.residual_source != in.source || in.barycenter->source != in.source ||
      in.defect_source != in.source || (in.study && in.study_source != in.source))
    throw ClassifyError("verdict: inputs come from different sequences");

  ConvergenceVerdict v;
  v.levels = in.residuals->levels();
  for (Functional f : {Functional::e1, Functional::e2, Functional::e4, Functional::e4_renorm,
                       Functional::e3}) {
    std::vector<double> col;
    for (int lv : v.levels) col.push_back(in.residuals->max_abs(f, lv));
    if (!in.residuals->values(f, v.levels.empty() ? 0 : v.levels.front()).empty())
      v.consistency[f] = std::move(col);
  }
  for (int lv : v.levels) {
    v.worst_e3 = std::min(v.worst_e3, in.residuals->min(Functional::e3, lv));
    v.worst_e4 = std::min(v.worst_e4, in.residuals->min(Functional::e4, lv));
  }

  bool weak = true;
  for (const auto& [f, vals] : in.barycenter->values) {
    double est = 0.0;
    for (double e : in.barycenter->estimates.at(f)) est = std::max(est, e);
    const double tol = std::max(10.0 * est, in.tol_w_floor);
    v.tol_w[f] = tol;
    if (is_slack(f)) {
      double m = kInfinity;
      for (double x : vals) m = std::min(m, x);
      v.barycenter_max[f] = m;
      if (f != Functional::e4_renorm && m < -tol) weak = false;
    } else {
      double m = 0.0;
      for (double x : vals) m = std::max(m, std::abs(x));
      v.barycenter_max[f] = m;
      if (m > tol) weak = false;
    }
  }
  v.limit_is_weak_solution = weak;

  v.entropy_min_ok = in.entropy.ok;
  v.entropy_min_margin = in.entropy.margin;

  v.regime = in.regime;
  v.hypotheses.push_back({"vacuum entropy convention", in.vacuum_violations == 0});
  v.hypotheses.push_back({"initial relative energy bounded", std::isfinite(in.E0)});
  if (in.regime == Regime::second) {
    v.hypotheses.push_back({"initial entropy bounded below", in.initial_entropy.ok});
    bool renorm = false;
    auto it = in.barycenter->values.find(Functional::e4_renorm);
    if (it != in.barycenter->values.end())
      renorm = v.barycenter_max.at(Functional::e4_renorm) >= -v.tol_w.at(Functional::e4_renorm);
    v.hypotheses.push_back({"renormalized entropy slacks nonnegative", renorm});
  }
  v.hypotheses_hold = std::all_of(v.hypotheses.begin(), v.hypotheses.end(),
                                  [](const auto& h) { return h.second; });

  v.tol_d = in.tol_d_factor * in.E0;
  for (std::size_t m = 0; m < in.defects->ladder().size(); ++m)
    v.defect_ladder.push_back(in.defects->aggregate_concentration(in.defect_functional, m));
  v.defect_total = in.defects->aggregate_total(in.defect_functional);

  if (v.limit_is_weak_solution && v.hypotheses_hold) {
    v.prediction_checked = true;
    double worst = 0.0;
    for (double c : v.defect_ladder) worst = std::max(worst, c);
    v.defects_small = worst <= v.tol_d;
    if (!v.defects_small)
      v.contradictions.push_back("certified limit but concentration defect " +
                                 format_double(worst) + " exceeds tol_d " +
                                 format_double(v.tol_d));
    if (in.study) {
      v.distances_decreasing = in.study->strictly_decreasing();
      if (!v.distances_decreasing)
        v.contradictions.push_back("certified limit but distances to the reference do not decrease");
    } else {
      v.distances_decreasing = true;
    }
  }

  if (!v.limit_is_weak_solution)
    v.category = VerdictCategory::not_weak_solution;
  else if (!v.contradictions.empty())
    v.category = VerdictCategory::contradiction;
  else
    v.category = VerdictCategory::consistent;
  return v;
}

std::string ConvergenceVerdict::to_csv() const {
  std::string out = "key,value\n";
  auto row = [&](const std::string& k, const std::string& val) { out += k + "," + val + "\n"; };
  row("category", to_string(category));
  row("limit_is_weak_solution", limit_is_weak_solution ? "true" : "false");
  row("regime", to_string(regime));
  row("hypotheses_hold", hypotheses_hold ? "true" : "false");
  row("prediction_checked", prediction_checked ? "true" : "false");
  row("defects_small", defects_small ? "true" : "false");
  row("distances_decreasing", distances_decreasing ? "true" : "false");
  row("entropy_min_ok", entropy_min_ok ? "true" : "false");
  row("entropy_min_margin", format_double(entropy_min_margin));
  row("worst_e3", format_double(worst_e3));
  row("worst_e4", format_double(worst_e4));
  row("tol_d", format_double(tol_d));
  row("defect_total", format_double(defect_total));
  for (const auto& [f, t] : tol_w) row(std::string("tol_w_") + functional_id(f), format_double(t));
  for (const auto& [f, m] : barycenter_max)
    row(std::string("barycenter_") + functional_id(f), format_double(m));
  for (std::size_t m = 0; m < defect_ladder.size(); ++m)
    row("defect_ladder_" + std::to_string(m), format_double(defect_ladder[m]));
  for (const auto& [f, col] : consistency)
    for (std::size_t n = 0; n < col.size(); ++n)
      row(std::string("max_abs_") + functional_id(f) + "_level" + std::to_string(levels[n]),
          format_double(col[n]));
  for (std::size_t k = 0; k < contradictions.size(); ++k)
    row("contradiction_" + std::to_string(k), contradictions[k]);
  return out;
}

std::string ConvergenceVerdict::to_text() const {
  std::ostringstream os;
  double worst = 0.0;
  for (double c : defect_ladder) worst = std::max(worst, c);
  switch (category) {
    case VerdictCategory::consistent:
      os << "certified, defects " << format_double(worst) << "\n";
      break;
    case VerdictCategory::not_weak_solution:
      os << "limit is not a weak solution\n";
      break;
    case VerdictCategory::contradiction:
      os << "internal contradiction\n";
      break;
  }
  os << "regime: " << to_string(regime) << " (hypotheses "
     << (hypotheses_hold ? "hold" : "do not hold") << ")\n";
  for (const auto& [name, ok] : hypotheses) os << "  [" << (ok ? "x" : " ") << "] " << name << "\n";
  os << "barycenter residuals against tol_w:\n";
  for (const auto& [f, m] : barycenter_max)
    os << "  " << functional_id(f) << (is_slack(f) ? " min slack " : " max |r| ")
       << format_double(m) << " tol_w " << format_double(tol_w.at(f)) << "\n";
  os << "Jensen gap (aggregated) " << format_double(defect_total) << "\n";
  os << "concentration ladder (tol_d " << format_double(tol_d) << "):";
  for (double c : defect_ladder) os << " " << format_double(c);
  os << "\n";
  os << "entropy minimum margin " << format_double(entropy_min_margin)
     << (entropy_min_ok ? " (ok)" : " (violated)") << "\n";
  os << "worst slacks: E3 " << format_double(worst_e3) << ", E4 " << format_double(worst_e4)
     << "\n";
  if (prediction_checked)
    os << "prediction: defects " << (defects_small ? "small" : "LARGE") << ", distances "
       << (distances_decreasing ? "decreasing" : "NOT decreasing") << "\n";
  else
    os << "prediction: not asserted\n";
  for (const auto& c : contradictions) os << "contradiction: " << c << "\n";
  os << "note: the initial condition is compared on the first time slice only\n";
  return os.str();
}

}  // namespace ec
