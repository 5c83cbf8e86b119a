#pragma once

// generator -> weakform -> defect -> classify, with every artifact written
// under one output directory.
//
// Layout of the output directory:
//   fields/level_<n>.cefld, fields/reference.cefld   CEFLD1 fields
//   ledgers/level_<n>.csv, ledgers/reference.csv      solver ledgers
//   residuals.csv, barycenter.csv, defects.csv, study.csv, closed_form.csv
//   verdict.csv, verdict.txt
//   distance_vs_eps.svg, residual_vs_eps.svg

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include "config.hpp"

namespace ecv {

enum ExitCode : int { kConsistent = 0, kUsage = 1, kNotWeak = 2, kContradiction = 3 };

struct RunOptions {
  std::filesystem::path out;
  int workers = 1;
  std::uint64_t seed = 12345;
  std::ostream* log = nullptr;
};

struct RunResult {
  ec::ConvergenceVerdict verdict;
  std::optional<ec::ConvergenceStudy> study;  // all variants' rows
  int exit_code = kUsage;
};

/// Throws on configuration, generator or IO failures.
RunResult run_experiment(const ExperimentConfig& cfg, const RunOptions& options);

/// Prints verdict.txt of an artifact directory. Returns kUsage when the
/// directory is not a complete artifact.
int report(const std::filesystem::path& dir, std::ostream& out, std::ostream& err);

/// EC_SEED when set and valid, else `fallback`.
std::uint64_t seed_from_env(std::uint64_t fallback = 12345);

}  // namespace ecv
