#include "pipeline.hpp"

#include <charconv>
#include <cstdlib>
#include <fstream>
#include <ostream>
#include <sstream>

#include "ec/csv.hpp"
#include "ec/field_io.hpp"
#include "svg.hpp"

namespace ecv {

namespace fs = std::filesystem;

namespace {

void say(const RunOptions& o, const std::string& msg) {
  if (o.log) *o.log << "ecv: " << msg << std::endl;
}

ec::ApproximateSequence synthetic_sequence(const ExperimentConfig& cfg) {
  std::vector<ec::SequenceLevel> levels;
  const auto& base = cfg.solver;
  for (const auto& s : cfg.schedule()) {
    const ec::Grid g(base.grid.L, s.nx, s.ny, s.nt, base.grid.T, base.grid.buffer);
    ec::GridField f =
        cfg.source == Source::oscillation
            ? ec::synthetic_oscillation(cfg.oscillation.a, cfg.oscillation.b, s.nx / 2, g,
                                        base.far, base.params, cfg.oscillation.patch)
            : ec::synthetic_concentration(s.nx / 2, g, base.far, base.params);
    levels.push_back({s.label, s.eps, s.kappa, g.hx(), std::move(f)});
  }
  return ec::ApproximateSequence(std::move(levels));
}

// s - s0 over the interior of the first time slice.
ec::EntropyMinResult initial_entropy(const ec::GridField& f, double s0) {
  const ec::Grid& g = f.grid();
  ec::EntropyMinResult r;
  for (int j = 0; j < g.ny; ++j)
    for (int i = 0; i < g.nx; ++i) {
      if (g.in_collar(i, j)) continue;
      const ec::State& s = f.at(0, i, j);
      if (!(s.rho > 0.0)) {
        ++r.vacuum_skipped;
        continue;
      }
      const double m = s.S / s.rho - s0;
      if (m < r.margin) {
        r.margin = m;
        r.n = 0;
        r.i = i;
        r.j = j;
        r.x = g.x(i);
        r.y = g.y(j);
      }
    }
  r.ok = r.margin >= -ec::kEntropyMinTolerance;
  return r;
}

std::string barycenter_csv(const ec::BarycenterEvidence& ev) {
  std::string out = "functional,index,value,estimate\n";
  for (const auto& [f, vals] : ev.values) {
    const auto& est = ev.estimates.at(f);
    for (std::size_t k = 0; k < vals.size(); ++k)
      out += std::string(ec::functional_id(f)) + "," + std::to_string(k) + "," +
             ec::format_double(vals[k]) + "," + ec::format_double(est[k]) + "\n";
  }
  return out;
}

// Two-atom closed form of the aggregated Jensen gap: patch area times
// (E(a) + E(b)) / 2 - E((a + b) / 2).
std::string closed_form_csv(const ExperimentConfig& cfg, const ec::DefectReport& report) {
  const auto& a = cfg.oscillation.a;
  const auto& b = cfg.oscillation.b;
  ec::State mid;
  mid.rho = 0.5 * (a.rho + b.rho);
  mid.S = 0.5 * (a.S + b.S);
  for (int k = 0; k < 3; ++k) mid.mom[k] = 0.5 * (a.mom[k] + b.mom[k]);
  const double area = 4.0 * cfg.oscillation.patch * cfg.oscillation.patch;
  std::string out = "functional,closed_form,measured\n";
  for (const auto& fn : ec::registered_functionals(cfg.solver.far, cfg.solver.params)) {
    const double gap = area * (0.5 * (fn.fn(a) + fn.fn(b)) - fn.fn(mid));
    out += fn.name + "," + ec::format_double(gap) + "," +
           ec::format_double(report.aggregate_total(fn.name)) + "\n";
  }
  return out;
}

std::string residual_plot(const ec::ApproximateSequence& seq, const ec::ConvergenceVerdict& v) {
  std::vector<Series> series;
  for (auto f : {ec::Functional::e1, ec::Functional::e2, ec::Functional::e4}) {
    const auto it = v.consistency.find(f);
    if (it == v.consistency.end()) continue;
    Series s{std::string("max |") + ec::functional_id(f) + "|", {}, it->second};
    for (const auto& lv : seq.levels()) s.x.push_back(lv.eps);
    series.push_back(std::move(s));
  }
  return loglog_svg("consistency residuals", "eps", "max |E_i| over the lattice", series,
                    "all residuals vanish");
}

std::string distance_plot(const std::optional<ec::ConvergenceStudy>& study,
                          const std::vector<ec::ConvergenceStudy>& parts) {
  std::vector<Series> series;
  if (study)
    for (const auto& st : parts)
      for (const auto& row : st.rows)
        series.push_back({row.variable + " (" + ec::to_string(st.variant) + ")", st.eps,
                          row.distance});
  return loglog_svg("distance to the reference", "eps", "L^q-L^r_loc distance", series,
                    study ? "all distances vanish" : "no reference study");
}

}  // namespace

RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& opt) {
  const fs::path out = opt.out;
  fs::create_directories(out / "fields");
  fs::create_directories(out / "ledgers");

  ec::SolverConfig solver = cfg.solver;
  solver.workers = opt.workers;

  // 1. approximate sequence
  ec::ApproximateSequence seq;
  if (cfg.source == Source::nsf) {
    say(opt, "solving " + std::to_string(cfg.levels) + " levels");
    auto res = ec::make_sequence(solver, cfg.schedule());
    seq = std::move(res.sequence);
    for (std::size_t n = 0; n < seq.size(); ++n)
      ec::write_text_file(out / "ledgers" / ("level_" + std::to_string(seq.level(n).label) + ".csv"),
                          res.ledgers[n].to_csv());
  } else {
    seq = synthetic_sequence(cfg);
  }
  for (const auto& lv : seq.levels())
    ec::save_field(lv.field, out / "fields" / ("level_" + std::to_string(lv.label) + ".cefld"));
  const ec::GridField& finest = seq.finest().field;
  const std::string source = ec::sequence_fingerprint(seq);

  // 2. residuals on every level
  std::optional<ec::RenormalizationFamily> family;
  if (cfg.renormalization) family.emplace(cfg.renormalization->first, cfg.renormalization->second);
  const auto tests = ec::make_lattice(finest.grid(), cfg.lattice);
  say(opt, std::to_string(tests.size()) + " test functions");
  ec::ResidualReport residuals;
  for (const auto& lv : seq.levels()) {
    ec::ResidualOptions ro;
    ro.level = lv.label;
    ro.renormalization = family ? &*family : nullptr;
    ro.workers = opt.workers;
    residuals.append(ec::evaluate_residuals(lv.field, tests, ro));
  }
  residuals.write_csv(out / "residuals.csv");

  // 3. barycenter of the finest level
  ec::BarycenterOptions bo;
  bo.partition = cfg.partition;
  bo.renormalization = family ? &*family : nullptr;
  bo.workers = opt.workers;
  const auto bary = ec::barycenter_evidence(seq, tests, bo);
  ec::write_text_file(out / "barycenter.csv", barycenter_csv(bary));

  // 4. defects of the finest level
  const auto ym = ec::empirical_ym(finest, cfg.partition);
  const ec::DefectReport defects(
      ym, ec::registered_functionals(finest.far(), finest.params()), cfg.ladder);
  defects.write_csv(out / "defects.csv");
  if (cfg.source == Source::oscillation)
    ec::write_text_file(out / "closed_form.csv", closed_form_csv(cfg, defects));

  // 5. convergence to a high-resolution reference
  RunResult result;
  std::vector<ec::ConvergenceStudy> parts;
  if (cfg.source == Source::nsf && cfg.study.enabled) {
    say(opt, "reference run");
    const auto& lv = seq.finest();
    const auto ref = ec::reference_solution(solver, finest.grid(), lv.eps / cfg.study.eps_divisor,
                                            lv.kappa / cfg.study.eps_divisor, cfg.study.refine,
                                            cfg.study.window_threshold);
    ec::save_field(ref.field, out / "fields" / "reference.cefld");
    ec::write_text_file(out / "ledgers" / "reference.csv", ref.ledger.to_csv());
    const ec::Box box = cfg.study.box.value_or(ec::Box::interior(finest.grid()));
    ec::ConvergenceStudy all;
    std::string csv;
    for (auto variant : cfg.study.variants) {
      parts.push_back(ec::convergence_study(seq, ref.field, box, variant, cfg.study.q, opt.seed,
                                            cfg.study.samples));
      const std::string part = parts.back().to_csv();
      csv += csv.empty() ? part : part.substr(part.find('\n') + 1);
      for (const auto& row : parts.back().rows) all.rows.push_back(row);
      all.labels = parts.back().labels;
      all.eps = parts.back().eps;
    }
    if (ref.shrunk) csv += "# reference window shrunk to " + std::to_string(ref.window_nt) + " slices\n";
    ec::write_text_file(out / "study.csv", csv);
    result.study = std::move(all);
  }

  // 6. entropy bookkeeping and verdict
  const double s0 = cfg.s0.value_or(initial_entropy(finest, 0.0).margin);
  ec::VerdictInputs in;
  in.source = source;
  in.residuals = &residuals;
  in.residual_source = source;
  in.barycenter = &bary;
  in.defects = &defects;
  in.defect_source = source;
  if (result.study) {
    in.study = &*result.study;
    in.study_source = source;
  }
  in.initial_entropy = initial_entropy(finest, s0);
  in.entropy = ec::entropy_min_check(finest, s0);
  for (const auto& lv : seq.levels()) in.vacuum_violations += ec::vacuum_entropy_check(lv.field);
  in.regime = cfg.regime;
  in.E0 = ec::relative_energy_integral(finest, finest.slice(0));
  in.tol_w_floor = cfg.tol_w_floor;
  in.tol_d_factor = cfg.tol_d_factor;
  in.defect_functional = cfg.defect_functional;
  result.verdict = ec::verdict(in);

  std::string csv = result.verdict.to_csv();
  csv += "s0," + ec::format_double(s0) + "\n";
  csv += "E0," + ec::format_double(in.E0) + "\n";
  csv += "fingerprint," + source + "\n";
  ec::write_text_file(out / "verdict.csv", csv);
  ec::write_text_file(out / "verdict.txt", result.verdict.to_text());
  ec::write_text_file(out / "residual_vs_eps.svg", residual_plot(seq, result.verdict));
  ec::write_text_file(out / "distance_vs_eps.svg", distance_plot(result.study, parts));

  result.exit_code = ec::exit_code(result.verdict.category);
  say(opt, std::string("verdict ") + ec::to_string(result.verdict.category));
  return result;
}

int report(const fs::path& dir, std::ostream& out, std::ostream& err) {
  const fs::path text = dir / "verdict.txt";
  if (!fs::is_regular_file(text) || !fs::is_regular_file(dir / "verdict.csv")) {
    err << "ecv: " << dir.string() << " holds no verdict\n";
    return kUsage;
  }
  std::ifstream in(text, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  if (!in && !in.eof()) {
    err << "ecv: cannot read " << text.string() << "\n";
    return kUsage;
  }
  out << ss.str();
  return kConsistent;
}

std::uint64_t seed_from_env(std::uint64_t fallback) {
  const char* v = std::getenv("EC_SEED");
  if (!v || !*v) return fallback;
  std::uint64_t s = 0;
  const char* end = v + std::char_traits<char>::length(v);
  const auto res = std::from_chars(v, end, s);
  if (res.ec != std::errc() || res.ptr != end) return fallback;
  return s;
}

}  // namespace ecv
