#pragma once

// Decision procedure over residual, defect and convergence evidence: is the
// limit of a consistent family a weak solution, and if so do the predicted
// consequences (no defect, strong convergence) show up?

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ec/defect.hpp"
#include "ec/fields.hpp"
#include "ec/thermo.hpp"
#include "ec/weakform.hpp"

namespace ec {

class ClassifyError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct EntropyMinResult {
  bool ok = true;
  double margin = kInfinity;  // min over the interior of s - s0
  int n = -1, i = -1, j = -1;
  double t = 0.0, x = 0.0, y = 0.0;
  std::size_t vacuum_skipped = 0;
};

inline constexpr double kEntropyMinTolerance = 1e-10;

/// Interior scan of s - s0; vacuum cells are skipped.
EntropyMinResult entropy_min_check(const GridField& field, double s0);

/// Cells with rho = 0 and S != 0 or m != 0.
std::size_t vacuum_entropy_check(const GridField& field);

enum class NormVariant {
  v1,  // r = 1 for rho, m, S
  v2,  // r = gamma for rho and S, r = 2 gamma / (gamma + 1) for m
};

const char* to_string(NormVariant v);

struct StudyRow {
  std::string variable;  // rho, mom, S
  double r = 1.0;
  std::vector<double> distance;  // per level
  double rate = 0.0;             // least-squares slope of log d against log eps
};

struct ConvergenceStudy {
  NormVariant variant = NormVariant::v1;
  double q = 2.0;
  std::vector<int> labels;
  std::vector<double> eps;
  std::vector<StudyRow> rows;
  // |level - ref| of rho at sampled interior cells of each level, per level.
  std::vector<std::vector<double>> pointwise;

  bool strictly_decreasing(double floor = 1e-12) const;
  std::string to_csv() const;
};

/// Least-squares slope of log y against log x (pairs with y <= 0 skipped).
double fitted_rate(const std::vector<double>& x, const std::vector<double>& y);

/// Distances lq_loc_norm(level - ref restricted to the level grid) on box B.
/// The reference may be shorter in time than the levels; levels are then
/// truncated to the reference window. `seed` picks the pointwise sample.
ConvergenceStudy convergence_study(const ApproximateSequence& seq, const GridField& ref,
                                   const Box& box, NormVariant variant, double q = 2.0,
                                   std::uint64_t seed = 12345, int samples = 16);

/// Stable hash of a sequence (labels, parameters and every field value).
std::string sequence_fingerprint(const ApproximateSequence& seq);

enum class Regime { first, second };
const char* to_string(Regime r);

/// Barycenter residuals with their Richardson estimates, per functional.
struct BarycenterEvidence {
  std::string source;
  std::map<Functional, std::vector<double>> values;
  std::map<Functional, std::vector<double>> estimates;
};

struct BarycenterOptions {
  MacroPartition partition;
  const RenormalizationFamily* renormalization = nullptr;
  int workers = 1;
};

/// Residuals of the macro-cell barycenter of the finest level, evaluated by
/// broadcasting it back to the fine grid; estimates compare with the
/// barycenter over macro cells twice as large.
BarycenterEvidence barycenter_evidence(const ApproximateSequence& seq,
                                       const std::vector<TestFunction>& tests,
                                       const BarycenterOptions& options);

struct VerdictInputs {
  std::string source;  // fingerprint of the sequence all other inputs came from
  const ResidualReport* residuals = nullptr;
  std::string residual_source;
  const BarycenterEvidence* barycenter = nullptr;
  const DefectReport* defects = nullptr;
  std::string defect_source;
  const ConvergenceStudy* study = nullptr;  // optional
  std::string study_source;
  EntropyMinResult initial_entropy;  // on the initial slice
  EntropyMinResult entropy;          // on the finest level
  std::size_t vacuum_violations = 0;
  Regime regime = Regime::first;
  double E0 = 0.0;
  double tol_w_floor = 1e-12;
  double tol_d_factor = 1e-3;
  std::string defect_functional = "e_rel";
};

enum class VerdictCategory { consistent, not_weak_solution, contradiction };

const char* to_string(VerdictCategory c);
int exit_code(VerdictCategory c);

struct ConvergenceVerdict {
  // Per functional: max |E_i| per level.
  std::map<Functional, std::vector<double>> consistency;
  std::vector<int> levels;
  double worst_e3 = kInfinity;
  double worst_e4 = kInfinity;

  std::map<Functional, double> tol_w;
  std::map<Functional, double> barycenter_max;  // max |r| (E1, E2), min slack otherwise
  bool limit_is_weak_solution = false;

  bool entropy_min_ok = false;
  double entropy_min_margin = kInfinity;

  Regime regime = Regime::first;
  std::vector<std::pair<std::string, bool>> hypotheses;
  bool hypotheses_hold = false;

  double tol_d = 0.0;
  std::vector<double> defect_ladder;  // aggregated concentration per M
  double defect_total = 0.0;          // aggregated Jensen gap of the defect functional
  bool prediction_checked = false;
  bool defects_small = false;
  bool distances_decreasing = false;
  std::vector<std::string> contradictions;

  VerdictCategory category = VerdictCategory::contradiction;

  std::string to_csv() const;
  std::string to_text() const;
};

/// Throws ClassifyError when the inputs come from different sequences.
ConvergenceVerdict verdict(const VerdictInputs& in);

}  // namespace ec
