#pragma once

// Empirical Young measures over macro cells and the Jensen-gap defect
// bookkeeping built on them.

#include <cstddef>
#include <filesystem>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ec/fields.hpp"
#include "ec/thermo.hpp"

namespace ec {

class DefectError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Macro cells are blocks of micro_x x micro_y cells and micro_t time nodes.
/// They tile the whole box; the ones made of interior cells tile the
/// interior exactly.
struct MacroPartition {
  int micro_x = 16;
  int micro_y = 16;
  int micro_t = 1;

  /// Throws DefectError unless the partition fits `grid` and separates the
  /// collar from the interior.
  void validate(const Grid& grid) const;
};

struct MacroCell {
  int n = 0, i = 0, j = 0;  // macro indices (time, x, y)
  bool interior = false;
};

/// Equal-weight sample clouds, one per macro cell.
class EmpiricalYoungMeasure {
 public:
  EmpiricalYoungMeasure() = default;
  /// Generic clouds (every cell flagged interior).
  explicit EmpiricalYoungMeasure(std::vector<std::vector<State>> clouds);
  EmpiricalYoungMeasure(std::vector<MacroCell> cells, std::vector<std::size_t> offsets,
                        std::vector<State> atoms, std::vector<double> weights);

  std::size_t size() const { return cells_.size(); }
  const MacroCell& cell(std::size_t c) const { return cells_[c]; }
  std::span<const State> cloud(std::size_t c) const {
    return {atoms_.data() + offsets_[c], offsets_[c + 1] - offsets_[c]};
  }
  /// Quadrature weight of a macro cell in time-averaged interior integrals
  /// (area times the time weight of its nodes over T; 1 for generic clouds).
  double weight(std::size_t c) const { return weights_[c]; }

 private:
  std::vector<MacroCell> cells_;
  std::vector<std::size_t> offsets_{0};
  std::vector<State> atoms_;
  std::vector<double> weights_;
};

EmpiricalYoungMeasure empirical_ym(const GridField& field, const MacroPartition& part);

/// Componentwise mean per macro cell.
std::vector<State> barycenter(const EmpiricalYoungMeasure& ym);

/// Barycenters of a field's macro cells as a field on the macro grid
/// (requires micro_t = 1).
GridField barycenter_field(const GridField& field, const MacroPartition& part);

/// Piecewise-constant extension of a macro-grid field back onto `fine`.
GridField broadcast(const GridField& coarse, const Grid& fine);

using StateFunctional = std::function<double(const State&)>;

struct NamedFunctional {
  std::string name;
  bool convex = false;
  StateFunctional fn;
};

/// e_kin, e_int, e_total, e_rel, abs_dm, drho, dS, F11, F12, F22, pressure.
std::vector<NamedFunctional> registered_functionals(const FarField& far, const ThermoParams& p);
const NamedFunctional& find_functional(const std::vector<NamedFunctional>& set,
                                       const std::string& name);

/// mean E(atoms) - E(barycenter) per cell.
std::vector<double> jensen_gap(const EmpiricalYoungMeasure& ym, const StateFunctional& E);

struct TruncationSplit {
  double total = 0.0;
  std::vector<double> oscillation;    // per M
  std::vector<double> concentration;  // per M
};

/// concentration_M = mean (E(atom) - M)^+, oscillation_M = total - concentration_M.
std::vector<TruncationSplit> truncation_split(const EmpiricalYoungMeasure& ym,
                                              const StateFunctional& E,
                                              const std::vector<double>& ladder);

/// Unit directions for a k-dimensional G: +-1 for k = 1, `fan` equally spaced
/// angles for k = 2.
std::vector<std::vector<double>> direction_fan(std::size_t k, int fan = 16);

struct DominationResult {
  double min_margin = kInfinity;
  std::size_t worst_cell = 0;
  std::size_t worst_direction = 0;
};

/// margin = gap_E - |xi . gap_G| over every cell and fan direction.
DominationResult domination_check(const EmpiricalYoungMeasure& ym, const StateFunctional& E,
                                  const std::vector<StateFunctional>& G, int fan = 16);

struct DefectEntry {
  std::size_t cell = 0;
  std::string functional;
  double M = 0.0;
  double total = 0.0;
  double oscillation = 0.0;
  double concentration = 0.0;
};

/// Defects per interior macro cell, functional and threshold, plus
/// aggregated interior integrals (time averaged).
class DefectReport {
 public:
  DefectReport() = default;
  DefectReport(const EmpiricalYoungMeasure& ym, const std::vector<NamedFunctional>& functionals,
               std::vector<double> ladder);

  const std::vector<DefectEntry>& entries() const { return entries_; }
  const std::vector<double>& ladder() const { return ladder_; }
  const std::vector<std::string>& functionals() const { return names_; }
  std::size_t cells() const { return cell_ids_.size(); }

  /// Total Jensen gap of a functional per reported cell.
  std::vector<double> totals(const std::string& functional) const;
  /// Aggregated interior integral of total / oscillation / concentration.
  double aggregate_total(const std::string& functional) const;
  double aggregate_concentration(const std::string& functional, std::size_t m) const;
  double aggregate_oscillation(const std::string& functional, std::size_t m) const;
  /// Smallest total over convex functionals.
  double min_convex_total() const;

  /// Columns: cell,functional,M,total,oscillation,concentration. Aggregates
  /// use the cell id "interior".
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;

 private:
  std::vector<DefectEntry> entries_;
  std::vector<double> ladder_;
  std::vector<std::string> names_;
  std::vector<bool> convex_;
  std::vector<std::string> cell_ids_;
  std::vector<double> weights_;
};

struct TraceTriple {
  double lhs = 0.0;  // Lambda_1 R_eng
  double mid = 0.0;  // trace of the energy-flux defect
  double rhs = 0.0;  // Lambda_2 R_eng
};

struct TraceComparison {
  double lambda1 = 0.0;
  double lambda2 = 0.0;
  std::vector<TraceTriple> cells;
  std::vector<std::size_t> flagged;
};

/// (Lambda_1, Lambda_2) = (min, max){2, d (gamma - 1)}.
std::pair<double, double> trace_constants(const ThermoParams& p);

/// Uses the F11, F22, pressure and e_total totals of the report.
TraceComparison trace_comparison(const DefectReport& report, const ThermoParams& p,
                                 double tol = 1e-10);

/// Mean squared normalized distance of the atoms to the barycenter, scales
/// rho_inf, rho_inf c_inf and rho_inf.
std::vector<double> dirac_score(const EmpiricalYoungMeasure& ym, const FarField& far,
                                const ThermoParams& p);

}  // namespace ec
