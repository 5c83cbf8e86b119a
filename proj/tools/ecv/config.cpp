#include "config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <charconv>
#include <fstream>
#include <map>
#include <set>
#include <sstream>

namespace ecv {

namespace pt = boost::property_tree;

namespace {

const std::map<std::string, std::set<std::string>> kKnownKeys = {
    {"experiment", {"name", "source", "regime", "s0"}},
    {"grid", {"L", "T", "buffer", "nx", "nt"}},
    {"thermo", {"gamma", "rho_inf", "mom_x", "mom_y", "S_inf"}},
    {"solver", {"cfl", "rho_min", "E0_budget", "output_coarsening"}},
    {"schedule", {"levels", "eps1", "kappa_ratio"}},
    {"initial", {"kind", "density_amplitude", "temperature_amplitude", "radius", "xc", "yc"}},
    {"oscillation", {"a", "b", "patch"}},
    {"partition", {"micro_x", "micro_y", "micro_t"}},
    {"lattice",
     {"radius_fractions", "interior_time_radius", "initial_time_radius", "interior", "initial"}},
    {"study",
     {"enabled", "q", "variants", "refine", "eps_divisor", "window_threshold", "samples", "box"}},
    {"defect", {"ladder", "functional"}},
    {"renormalization", {"cap", "levels"}},
    {"verdict", {"tol_w_floor", "tol_d_factor"}},
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return {};
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  double v = 0.0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(key + ": '" + text + "' is not a number");
  return v;
}

int to_int(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  int v = 0;
  const auto res = std::from_chars(t.data(), t.data() + t.size(), v);
  if (res.ec != std::errc() || res.ptr != t.data() + t.size())
    throw ConfigError(key + ": '" + text + "' is not an integer");
  return v;
}

bool to_bool(const std::string& key, const std::string& text) {
  const std::string t = trim(text);
  if (t == "true" || t == "1" || t == "yes") return true;
  if (t == "false" || t == "0" || t == "no") return false;
  throw ConfigError(key + ": '" + text + "' is not a boolean");
}

std::vector<std::string> split(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

std::vector<double> to_list(const std::string& key, const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text)) out.push_back(to_double(key, item));
  return out;
}

class Reader {
 public:
  explicit Reader(const pt::ptree& tree) : tree_(tree) {}

  std::optional<std::string> raw(const std::string& section, const std::string& key) const {
    const auto sec = tree_.get_child_optional(pt::ptree::path_type(section, '\0'));
    if (!sec) return std::nullopt;
    const auto v = sec->get_optional<std::string>(pt::ptree::path_type(key, '\0'));
    if (!v) return std::nullopt;
    return trim(*v);
  }

  void get(const std::string& s, const std::string& k, double& out) const {
    if (auto v = raw(s, k)) out = to_double(s + "." + k, *v);
  }
  void get(const std::string& s, const std::string& k, int& out) const {
    if (auto v = raw(s, k)) out = to_int(s + "." + k, *v);
  }
  void get(const std::string& s, const std::string& k, bool& out) const {
    if (auto v = raw(s, k)) out = to_bool(s + "." + k, *v);
  }
  void get(const std::string& s, const std::string& k, std::string& out) const {
    if (auto v = raw(s, k)) out = *v;
  }
  void get(const std::string& s, const std::string& k, std::vector<double>& out) const {
    if (auto v = raw(s, k)) out = to_list(s + "." + k, *v);
  }

 private:
  const pt::ptree& tree_;
};

ec::State to_state(const std::string& key, const std::string& text) {
  const auto v = to_list(key, text);
  if (v.size() != 4) throw ConfigError(key + ": expected rho, m_x, m_y, S");
  return {v[0], {v[1], v[2], 0.0}, v[3]};
}

void check_keys(const pt::ptree& tree) {
  for (const auto& [section, body] : tree) {
    const auto it = kKnownKeys.find(section);
    if (it == kKnownKeys.end()) throw ConfigError("unknown section [" + section + "]");
    if (!body.data().empty()) throw ConfigError("key '" + section + "' outside any section");
    for (const auto& [key, value] : body)
      if (!it->second.count(key))
        throw ConfigError("unknown key '" + key + "' in [" + section + "]");
  }
}

}  // namespace

std::vector<ec::ScheduleLevel> ExperimentConfig::schedule() const {
  auto s = ec::geometric_schedule(eps1, solver.grid.nx, solver.grid.nt, levels);
  for (auto& lv : s) lv.kappa = kappa_ratio * lv.eps;
  return s;
}

ExperimentConfig parse_config(const std::string& ini_text) {
  pt::ptree tree;
  try {
    std::istringstream in(ini_text);
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw ConfigError(std::string("INI syntax: ") + e.what());
  }
  check_keys(tree);
  const Reader r(tree);
  ExperimentConfig c;

  r.get("experiment", "name", c.name);
  std::string text = "nsf";
  r.get("experiment", "source", text);
  if (text == "nsf") c.source = Source::nsf;
  else if (text == "oscillation") c.source = Source::oscillation;
  else if (text == "concentration") c.source = Source::concentration;
  else throw ConfigError("experiment.source: unknown source '" + text + "'");
  text = "first";
  r.get("experiment", "regime", text);
  if (text == "first") c.regime = ec::Regime::first;
  else if (text == "second") c.regime = ec::Regime::second;
  else throw ConfigError("experiment.regime: expected first or second");
  if (auto v = r.raw("experiment", "s0")) c.s0 = to_double("experiment.s0", *v);
  if (c.regime == ec::Regime::second && !c.s0)
    throw ConfigError("experiment.s0 is required for the second regime");

  double L = 1.0, T = 0.2, buffer = 0.25;
  int nx = 8, nt = 9;
  r.get("grid", "L", L);
  r.get("grid", "T", T);
  r.get("grid", "buffer", buffer);
  r.get("grid", "nx", nx);
  r.get("grid", "nt", nt);

  double gamma = 1.4;
  r.get("thermo", "gamma", gamma);
  double rho_inf = 1.0, mx = 0.0, my = 0.0, S_inf = 0.0;
  r.get("thermo", "rho_inf", rho_inf);
  r.get("thermo", "mom_x", mx);
  r.get("thermo", "mom_y", my);
  r.get("thermo", "S_inf", S_inf);

  try {
    c.solver.params = ec::ThermoParams(gamma, 2);
    c.solver.far = ec::FarField(rho_inf, {mx, my, 0.0}, S_inf);
    c.solver.grid = ec::Grid(L, nx, nx, nt, T, buffer);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  r.get("solver", "cfl", c.solver.cfl);
  r.get("solver", "rho_min", c.solver.rho_min);
  r.get("solver", "E0_budget", c.solver.E0_budget);
  r.get("solver", "output_coarsening", c.solver.output_coarsening);

  r.get("schedule", "levels", c.levels);
  r.get("schedule", "eps1", c.eps1);
  r.get("schedule", "kappa_ratio", c.kappa_ratio);
  if (c.levels < 1) throw ConfigError("schedule.levels must be >= 1");
  if (!(c.eps1 > 0.0)) throw ConfigError("schedule.eps1 must be > 0");
  if (!(c.kappa_ratio >= 0.0)) throw ConfigError("schedule.kappa_ratio must be >= 0");

  auto& ic = c.solver.initial;
  text = "constant";
  r.get("initial", "kind", text);
  try {
    ic.kind = ec::initial_kind_from_string(text);
  } catch (const std::exception& e) {
    throw ConfigError(e.what());
  }
  r.get("initial", "density_amplitude", ic.density_amplitude);
  r.get("initial", "temperature_amplitude", ic.temperature_amplitude);
  r.get("initial", "radius", ic.radius);
  r.get("initial", "xc", ic.xc);
  r.get("initial", "yc", ic.yc);

  if (auto v = r.raw("oscillation", "a")) c.oscillation.a = to_state("oscillation.a", *v);
  if (auto v = r.raw("oscillation", "b")) c.oscillation.b = to_state("oscillation.b", *v);
  r.get("oscillation", "patch", c.oscillation.patch);

  r.get("partition", "micro_x", c.partition.micro_x);
  r.get("partition", "micro_y", c.partition.micro_y);
  r.get("partition", "micro_t", c.partition.micro_t);

  r.get("lattice", "radius_fractions", c.lattice.radius_fractions);
  r.get("lattice", "interior_time_radius", c.lattice.interior_time_radius);
  r.get("lattice", "initial_time_radius", c.lattice.initial_time_radius);
  r.get("lattice", "interior", c.lattice.interior);
  r.get("lattice", "initial", c.lattice.initial);

  r.get("study", "enabled", c.study.enabled);
  r.get("study", "q", c.study.q);
  if (auto v = r.raw("study", "variants")) {
    c.study.variants.clear();
    for (const auto& name : split(*v)) {
      if (name == "v1") c.study.variants.push_back(ec::NormVariant::v1);
      else if (name == "v2") c.study.variants.push_back(ec::NormVariant::v2);
      else throw ConfigError("study.variants: unknown variant '" + name + "'");
    }
  }
  r.get("study", "refine", c.study.refine);
  r.get("study", "eps_divisor", c.study.eps_divisor);
  r.get("study", "window_threshold", c.study.window_threshold);
  r.get("study", "samples", c.study.samples);
  if (auto v = r.raw("study", "box")) {
    const auto b = to_list("study.box", *v);
    if (b.size() != 4) throw ConfigError("study.box: expected x0, x1, y0, y1");
    c.study.box = ec::Box{b[0], b[1], b[2], b[3]};
  }
  if (c.study.refine < 1) throw ConfigError("study.refine must be >= 1");
  if (!(c.study.q >= 1.0)) throw ConfigError("study.q must be >= 1");

  r.get("defect", "ladder", c.ladder);
  r.get("defect", "functional", c.defect_functional);
  if (c.ladder.empty()) throw ConfigError("defect.ladder must not be empty");

  if (r.raw("renormalization", "cap") || r.raw("renormalization", "levels")) {
    double cap = 0.0;
    std::vector<double> lv;
    r.get("renormalization", "cap", cap);
    r.get("renormalization", "levels", lv);
    c.renormalization = std::make_pair(cap, lv);
    try {
      ec::RenormalizationFamily check(cap, lv);
    } catch (const std::exception& e) {
      throw ConfigError(e.what());
    }
  }

  r.get("verdict", "tol_w_floor", c.tol_w_floor);
  r.get("verdict", "tol_d_factor", c.tol_d_factor);
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

}  // namespace ecv
