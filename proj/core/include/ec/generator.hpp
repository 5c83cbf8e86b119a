#pragma once

// Sources of approximate solution sequences:
//   - a viscous, heat-conducting (Navier-Stokes-Fourier type) regularization
//     solved with central differences on (rho, m, E) and Heun's method,
//   - analytic oscillation and concentration prototypes,
//   - a high-resolution reference run used as the proxy limit.
//
// The bundled solver is two-dimensional.

#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "ec/fields.hpp"
#include "ec/thermo.hpp"
#include "ec/weakform.hpp"

namespace ec {

class GeneratorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Raised when a run leaves the admissible range. `step` counts completed
/// time steps; `level` is -1 outside make_sequence.
class SolverAbort : public std::runtime_error {
 public:
  SolverAbort(const std::string& what, std::size_t step, int level = -1)
      : std::runtime_error(what), step_(step), level_(level) {}
  std::size_t step() const { return step_; }
  int level() const { return level_; }

 private:
  std::size_t step_;
  int level_;
};

enum class InitialKind {
  constant,     // the far field everywhere
  smooth_bump,  // density and temperature bumps (hot spot, s >= s_inf)
  cold_spot,    // low temperature, lower density: s above s_inf inside the spot
};

const char* to_string(InitialKind kind);
InitialKind initial_kind_from_string(const std::string& name);

/// Radial bump profiles b(r / radius) = (1 - r^2/radius^2)^4 around (xc, yc)
/// applied to the far-field density and temperature. The velocity is the
/// far-field velocity everywhere.
struct InitialCondition {
  InitialKind kind = InitialKind::constant;
  double density_amplitude = 0.2;      // rho = rho_inf (1 + a b)
  double temperature_amplitude = 0.2;  // theta = theta_inf (1 + a b)
  double radius = 0.35;
  double xc = 0.0;
  double yc = 0.0;

  State at(double x, double y, const FarField& far, const ThermoParams& p) const;
};

struct SolverConfig {
  Grid grid;
  FarField far;
  ThermoParams params;
  double eps = 0.0;    // shear viscosity
  double kappa = 0.0;  // heat conductivity
  double cfl = 0.4;
  InitialCondition initial;
  double E0_budget = kInfinity;  // bound on the interior initial relative energy
  double rho_min = 0.1;          // initial density floor; runs abort below rho_min / 10
  int output_coarsening = 1;     // block-average factor applied to stored slices
  int workers = 1;

  /// Throws GeneratorError when an invariant is violated.
  void validate() const;
};

/// Per-output-slice bookkeeping of a run (all integrals over the periodic box
/// at solver resolution).
struct SolverLedger {
  std::vector<double> time;
  std::vector<double> mass;
  std::vector<double> energy;
  std::vector<double> entropy;                 // integral of S
  std::vector<double> min_specific_entropy;    // over the interior
  std::vector<double> collar_deviation;
  std::vector<double> max_velocity_gradient;   // max |grad u| (Frobenius)
  std::size_t steps = 0;
  double max_step_energy_increase = 0.0;  // largest per-step increase of total energy
  double min_density = kInfinity;

  double mass_drift() const;  // max relative deviation from the initial mass
  std::string to_csv() const;
};

struct SolveResult {
  GridField field;
  SolverLedger ledger;
};

/// Initial data sampled on the solver grid.
GridField initial_field(const SolverConfig& cfg);

SolveResult nsf_solve(const SolverConfig& cfg);

struct ScheduleLevel {
  int label = 0;
  double eps = 0.0;
  double kappa = 0.0;
  int nx = 0;
  int ny = 0;
  int nt = 0;
};

struct SequenceResult {
  ApproximateSequence sequence;
  std::vector<SolverLedger> ledgers;
};

/// One nsf_solve per schedule entry, with the base grid's L, T and buffer.
SequenceResult make_sequence(const SolverConfig& base, const std::vector<ScheduleLevel>& schedule);

/// Geometric schedule eps_n = kappa_n = eps1 2^{-(n-1)}, nx = ny = nx1 2^{n-1},
/// nt - 1 = (nt1 - 1) 2^{n-1}, n = 1..levels.
std::vector<ScheduleLevel> geometric_schedule(double eps1, int nx1, int nt1, int levels);

/// Stripes of width L / n in x alternating a / b inside the centred square
/// patch |x|, |y| <= patch (which must lie inside the interior); far field
/// elsewhere. Time-constant.
GridField synthetic_oscillation(const State& a, const State& b, int n, const Grid& grid,
                                const FarField& far, const ThermoParams& params,
                                double patch);

/// Far field plus the momentum spike n 1_{[-L/2, -L/2 + L/n) x [-1/2, 1/2)} e_1,
/// stored as exact cell averages. The spike has L^1 mass L for every n.
GridField synthetic_concentration(int n, const Grid& grid, const FarField& far,
                                  const ThermoParams& params);

struct ReferenceResult {
  GridField field;     // on the study grid (restricted)
  SolverLedger ledger;
  int window_nt = 0;   // number of output slices inside the pre-shock window
  bool shrunk = false;
};

/// Pre-shock window test: t max|grad u| <= threshold.
int pre_shock_slices(const SolverLedger& ledger, double threshold = 0.5);

/// Runs the solver at `refine` times the spatial resolution of `study_grid`
/// with the given eps, kappa and stores the result restricted onto
/// `study_grid`. When the pre-shock window ends before T the field is
/// truncated and `shrunk` is set.
ReferenceResult reference_solution(const SolverConfig& base, const Grid& study_grid, double eps,
                                   double kappa, int refine = 4, double window_threshold = 0.5);

/// Space-time integral of sigma(u) : grad(phi_vec) with
/// sigma = eps (grad u + grad u^T), central differences at cell centres.
double viscous_work(const GridField& field, double eps, const VectorTestFunction& phi);

/// Space-time integral of psi (sigma : grad u / theta + kappa |grad theta|^2 / theta^2)
/// minus that of (kappa grad theta / theta) . grad psi.
double entropy_source(const GridField& field, double eps, double kappa, const TestFunction& psi);

}  // namespace ec
