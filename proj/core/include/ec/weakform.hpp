#pragma once

// Test functions and the weak-form consistency functionals.
//
// Residuals are LHS - RHS of the weak formulations with the initial-data
// terms moved to the left; slacks are oriented so that a nonnegative value
// means the inequality holds for that test function.
//
// Pairing: a test function is sampled on the field grid and differentiated
// with a summation-by-parts operator (central differences in the interior,
// one-sided closures at t = 0 and t = T) so that the discrete integration by
// parts against the trapezoid/midpoint quadrature is exact. Constant states
// then give residuals at round-off level.

#include <array>
#include <cstddef>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "ec/fields.hpp"
#include "ec/thermo.hpp"

namespace ec {

class WeakFormError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class TestKind {
  interior,  // support inside (0, T) x interior
  initial,   // centred at t = 0, support inside [0, T) x interior
};

const char* to_string(TestKind kind);

/// phi = b(t) b(x) b(y) with b(z) = (1 - z^2)^3 on |z| < 1, z scaled by the
/// radius along each axis.
struct Bump {
  double tc = 0.0, xc = 0.0, yc = 0.0;
  double rt = 1.0, rx = 1.0, ry = 1.0;
  TestKind kind = TestKind::interior;

  double value(double t, double x, double y) const;
  /// (d/dt, d/dx, d/dy)
  std::array<double, 3> gradient(double t, double x, double y) const;
};

/// Finite linear combination of bumps.
class TestFunction {
 public:
  TestFunction() = default;
  TestFunction(Bump b, std::string id);

  const std::string& id() const { return id_; }
  const std::vector<std::pair<double, Bump>>& terms() const { return terms_; }
  /// initial if any term is an initial-time bump.
  TestKind kind() const;

  double value(double t, double x, double y) const;
  std::array<double, 3> gradient(double t, double x, double y) const;

  friend TestFunction operator+(const TestFunction& a, const TestFunction& b);
  friend TestFunction operator*(double c, const TestFunction& f);

 private:
  std::vector<std::pair<double, Bump>> terms_;
  std::string id_;
};

/// Vector test function direction * shape.
struct VectorTestFunction {
  TestFunction shape;
  Vec3 direction{1.0, 0.0, 0.0};
};

/// Validated bump. Throws WeakFormError when the support leaves the
/// interior, reaches t = T, or (interior kind) reaches t = 0.
TestFunction bump(const Grid& grid, double tc, double xc, double yc, double rt, double rx,
                  double ry, TestKind kind, std::string id = {});

struct LatticeSpec {
  std::vector<double> radius_fractions{1.0 / 3.0, 0.5, 2.0 / 3.0};  // of the interior half-width
  double interior_time_radius = 0.45;  // fraction of T, centred at T/2
  double initial_time_radius = 0.6;    // fraction of T, centred at 0
  bool interior = true;
  bool initial = true;
};

/// Deterministic lattice: for each radius r, centres spaced r apart with
/// |c| + r <= W along each axis; one bump per centre and per enabled kind.
std::vector<TestFunction> make_lattice(const Grid& grid, const LatticeSpec& spec = {});

/// A test function sampled on a grid with its summation-by-parts
/// derivatives, restricted to the index box covering its support.
struct SampledTest {
  int n0 = 0, n1 = -1, i0 = 0, i1 = -1, j0 = 0, j1 = -1;  // inclusive
  std::vector<double> phi, dt, dx, dy;

  int nx() const { return i1 - i0 + 1; }
  int ny() const { return j1 - j0 + 1; }
  std::size_t at(int n, int i, int j) const {
    return (static_cast<std::size_t>(n - n0) * ny() + (j - j0)) * nx() + (i - i0);
  }
};

SampledTest sample_test(const TestFunction& phi, const Grid& grid);

double residual_continuity(const GridField& field, std::span<const State> initial,
                           const TestFunction& phi);
double residual_continuity(const GridField& field, const TestFunction& phi);

double residual_momentum(const GridField& field, std::span<const State> initial,
                         const VectorTestFunction& phi);
double residual_momentum(const GridField& field, const VectorTestFunction& phi);

/// Throws WeakFormError when psi has a negative sample.
double residual_entropy(const GridField& field, std::span<const State> initial,
                        const TestFunction& psi);
double residual_entropy(const GridField& field, const TestFunction& psi);

double residual_entropy_renormalized(const GridField& field, std::span<const State> initial,
                                     const RenormalizationFamily& fam, std::size_t k,
                                     const TestFunction& psi);
double residual_entropy_renormalized(const GridField& field, const RenormalizationFamily& fam,
                                     std::size_t k, const TestFunction& psi);

/// Interior integral of e_rel(initial) - e_rel(field at time node n_tau).
double relative_energy_slack(const GridField& field, std::span<const State> initial,
                             const FarField& far, int n_tau);

/// Interior integral of the relative energy of one slice.
double relative_energy_integral(const GridField& field, std::span<const State> slice);

/// Richardson-type quadrature error estimate |r(field) - r(coarse)| / 3 with
/// the field restricted to the grid of half resolution in space and time.
double quadrature_error_estimate(const GridField& field,
                                 const std::function<double(const GridField&)>& functional);

enum class Functional { e1, e2, e3, e4, e4_renorm };

const char* functional_id(Functional f);

struct ResidualEntry {
  int level = 0;
  Functional functional = Functional::e1;
  std::string test_id;
  double value = 0.0;
};

class ResidualReport {
 public:
  void add(int level, Functional f, std::string test_id, double value);
  void append(const ResidualReport& other);

  const std::vector<ResidualEntry>& entries() const { return entries_; }
  std::vector<double> values(Functional f, int level) const;
  std::vector<int> levels() const;
  double max_abs(Functional f, int level) const;
  /// Smallest value (most negative slack); +inf when absent.
  double min(Functional f, int level) const;

  /// Columns: level,functional,test_id,value
  std::string to_csv() const;
  void write_csv(const std::filesystem::path& path) const;

 private:
  std::vector<ResidualEntry> entries_;
};

struct ResidualOptions {
  int level = 0;
  bool momentum = true;
  bool entropy = true;
  bool relative_energy = true;
  const RenormalizationFamily* renormalization = nullptr;
  int workers = 1;
};

/// All functionals for one field over a list of test functions. Momentum
/// uses the two coordinate directions of every shape; entropy and
/// renormalized entropy use every lattice member (all nonnegative); the
/// relative-energy slack is reported at every time node n >= 1.
ResidualReport evaluate_residuals(const GridField& field, const std::vector<TestFunction>& tests,
                                  const ResidualOptions& options = {});

}  // namespace ec
