#pragma once

// Experiment description read from an INI file; see docs/config.md.

#include <array>
#include <filesystem>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "ec/classify.hpp"
#include "ec/defect.hpp"
#include "ec/generator.hpp"
#include "ec/weakform.hpp"

namespace ecv {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Source { nsf, oscillation, concentration };

struct OscillationSpec {
  ec::State a{0.5, {0.0, 0.0, 0.0}, 0.0};
  ec::State b{2.0, {0.0, 0.0, 0.0}, 0.0};
  double patch = 0.25;
};

struct StudySpec {
  bool enabled = true;
  double q = 2.0;
  std::vector<ec::NormVariant> variants{ec::NormVariant::v1, ec::NormVariant::v2};
  int refine = 4;                 // reference resolution / finest level resolution
  double eps_divisor = 8.0;       // reference eps = finest eps / divisor
  double window_threshold = 0.5;  // pre-shock window: t max|grad u| <= threshold
  int samples = 16;
  std::optional<ec::Box> box;     // default: the interior
};

struct ExperimentConfig {
  std::string name;
  Source source = Source::nsf;
  ec::Regime regime = ec::Regime::first;
  std::optional<double> s0;

  ec::SolverConfig solver;  // grid holds the first level
  int levels = 3;
  double eps1 = 0.05;
  double kappa_ratio = 1.0;  // kappa_n = kappa_ratio eps_n

  OscillationSpec oscillation;
  ec::MacroPartition partition;
  ec::LatticeSpec lattice;
  StudySpec study;

  std::vector<double> ladder{0.5, 1.0, 2.0, 4.0, 8.0};
  std::string defect_functional = "e_rel";
  std::optional<std::pair<double, std::vector<double>>> renormalization;  // cap, levels

  double tol_w_floor = 1e-12;
  double tol_d_factor = 1e-3;

  std::vector<ec::ScheduleLevel> schedule() const;
};

ExperimentConfig parse_config(const std::string& ini_text);
ExperimentConfig load_config(const std::filesystem::path& path);

}  // namespace ecv
