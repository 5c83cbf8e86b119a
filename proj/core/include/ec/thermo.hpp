#pragma once

// Thermodynamic closure of the complete Euler system for a Boyle-Mariotte
// gas written in (density, momentum, total entropy) variables:
//
//   p(rho, S)     = rho^gamma exp(S / (cv rho))
//   rho e(rho, S) = cv p(rho, S),        cv = 1 / (gamma - 1)
//   e(rho, m, S)  = |m|^2 / (2 rho) + rho e(rho, S)
//
// The total energy is extended to vacuum as a convex lower semi-continuous
// function with values in [0, +inf]. All functions here are pure.

#include <array>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

namespace ec {

using Vec3 = std::array<double, 3>;

inline constexpr double kInfinity = std::numeric_limits<double>::infinity();

/// Raised when a plain thermodynamic function is evaluated outside rho > 0.
class DomainError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class ThermoParams {
 public:
  explicit ThermoParams(double gamma = 1.4, int dim = 2);

  double gamma() const { return gamma_; }
  /// Specific heat at constant volume; always 1 / (gamma - 1).
  double cv() const { return 1.0 / (gamma_ - 1.0); }
  int dim() const { return dim_; }

  friend bool operator==(const ThermoParams&, const ThermoParams&) = default;

 private:
  double gamma_;
  int dim_;
};

/// One thermodynamic point. Only the first dim() momentum components are
/// meaningful; the remaining ones are kept at zero.
struct State {
  double rho = 0.0;
  Vec3 mom{0.0, 0.0, 0.0};
  double S = 0.0;

  friend bool operator==(const State&, const State&) = default;
};

struct FarField {
  double rho_inf = 1.0;
  Vec3 mom_inf{0.0, 0.0, 0.0};
  double S_inf = 0.0;

  FarField() = default;
  FarField(double rho, Vec3 mom, double S);

  State state() const { return {rho_inf, mom_inf, S_inf}; }
  Vec3 velocity() const;

  friend bool operator==(const FarField&, const FarField&) = default;
};

/// Truncations chi_k(s) = min(s, k) at increasing cap levels k_1 < ... < k_K,
/// all bounded above by `cap`.
class RenormalizationFamily {
 public:
  RenormalizationFamily(double cap, std::vector<double> levels);

  double cap() const { return cap_; }
  std::size_t size() const { return levels_.size(); }
  double level(std::size_t k) const { return levels_.at(k); }

 private:
  double cap_;
  std::vector<double> levels_;
};

double dot(const Vec3& a, const Vec3& b, int dim);
double norm2(const Vec3& a, int dim);

double pressure(const State& state, const ThermoParams& p);
double internal_energy_density(const State& state, const ThermoParams& p);
double temperature(const State& state, const ThermoParams& p);
double specific_entropy(const State& state);
double sound_speed(const State& state, const ThermoParams& p);

/// Kinetic part of the extended energy (0 at rho = m = 0, +inf at rho = 0
/// with m != 0).
double kinetic_energy(const State& state, const ThermoParams& p);
/// Internal part of the extended energy (0 at rho = 0 with S <= 0, +inf at
/// rho = 0 with S > 0).
double internal_energy_extended(const State& state, const ThermoParams& p);

/// Total energy on R^{d+2} with the lower semi-continuous vacuum extension.
double extended_energy(const State& state, const ThermoParams& p);

/// Bregman divergence of the extended energy at the far-field state.
double relative_energy(const State& state, const FarField& ref, const ThermoParams& p);

/// Split of relative_energy into its kinetic and internal Bregman parts.
struct RelativeEnergyParts {
  double kinetic = 0.0;
  double internal = 0.0;
};
RelativeEnergyParts relative_energy_parts(const State& state, const FarField& ref,
                                          const ThermoParams& p);

/// Gradient of the (finite branch of the) energy in (rho, m, S) at a state
/// with rho > 0: (d/drho, d/dm_1..d/dm_d, d/dS) packed as rho, mom, S.
State energy_gradient(const State& state, const ThermoParams& p);

enum class LowerBoundVariant { v1, v2 };

/// True when the state lies in the near-field box where the quadratic branch
/// of the lower bound applies.
bool in_near_field(const State& state, const FarField& ref);

/// Raw case-split bound (without the calibration constant).
double lower_bound_shape(const State& state, const FarField& ref, const ThermoParams& p,
                         LowerBoundVariant variant);

/// Case-split bound multiplied by the calibration constant `c_lb`.
double relative_energy_lower_bound(const State& state, const FarField& ref,
                                   const ThermoParams& p, LowerBoundVariant variant,
                                   double c_lb);

/// Sampling box for the lower-bound sweeps, relative to the far field.
struct LowerBoundDomain {
  double rho_min_factor = 0.02;  // rho in [rho_min_factor, rho_max_factor] * rho_inf
  double rho_max_factor = 6.0;
  double mom_halfwidth = 6.0;  // m_i in m_inf_i +- mom_halfwidth * rho_inf
  double S_halfwidth = 6.0;    // S in S_inf +- S_halfwidth * rho_inf (v2: S >= 0)
};

/// Maps a point of the unit cube [0,1)^{d+2} to a state in the sweep domain.
State lower_bound_domain_point(std::span<const double> unit, const FarField& ref,
                               const ThermoParams& p, LowerBoundVariant variant,
                               const LowerBoundDomain& dom = {});

struct LowerBoundCalibration {
  double sweep_min = kInfinity;  // min relative_energy / shape over the Halton points
  double min_ratio = kInfinity;  // after local compass refinement, <= sweep_min
  State argmin{};
  std::size_t samples = 0;
};

/// Brute-force minimization of relative_energy / lower_bound_shape over a
/// Halton sweep of `samples` points, followed by a compass search from the
/// best sweep point.
LowerBoundCalibration calibrate_lower_bound(const FarField& ref, const ThermoParams& p,
                                            LowerBoundVariant variant, std::size_t samples,
                                            const LowerBoundDomain& dom = {});

/// Frozen calibration constants: 0.9 times the refined minimum of a 10^6-point
/// calibration, so fresh samples from the same domain keep a margin.
/// Returns 0 for far-field states that have not been calibrated.
double calibrated_c_lb(const FarField& ref, const ThermoParams& p, LowerBoundVariant variant);

double chi_apply(const RenormalizationFamily& fam, std::size_t k, double s);

}  // namespace ec
