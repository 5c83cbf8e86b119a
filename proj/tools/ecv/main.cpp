// ecv: run a verification study from an INI config, or print the verdict
// of a finished one.

#include <CLI11.hpp>
#include <cstdlib>
#include <iostream>

#include "config.hpp"
#include "pipeline.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Weak-limit verification studies for the compressible Euler system"};
  app.require_subcommand(1);

  std::string config_path, out_dir, report_dir;
  int workers = 1;
  auto* run = app.add_subcommand("run", "run the study described by a config file");
  run->add_option("config", config_path, "INI config")->required();
  run->add_option("--out", out_dir, "artifact directory (default: out/<config name>)");
  run->add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);

  auto* rep = app.add_subcommand("report", "print the verdict of an artifact directory");
  rep->add_option("dir", report_dir, "artifact directory")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : ecv::kUsage;
  }

  if (*rep) return ecv::report(report_dir, std::cout, std::cerr);

  ecv::ExperimentConfig cfg;
  try {
    cfg = ecv::load_config(config_path);
  } catch (const std::exception& e) {
    std::cerr << "ecv: " << config_path << ": " << e.what() << "\n";
    return ecv::kUsage;
  }
  if (const char* s = std::getenv("EC_SEED"); s && *s && ecv::seed_from_env(0) != ecv::seed_from_env(1)) {
    std::cerr << "ecv: EC_SEED='" << s << "' is not an unsigned integer\n";
    return ecv::kUsage;
  }

  ecv::RunOptions opt;
  opt.out = out_dir.empty() ? std::filesystem::path("out") / std::filesystem::path(config_path).stem()
                            : std::filesystem::path(out_dir);
  opt.workers = workers;
  opt.seed = ecv::seed_from_env();
  opt.log = &std::cerr;
  try {
    const auto result = ecv::run_experiment(cfg, opt);
    std::cout << result.verdict.to_text();
    std::cout << "artifacts in " << opt.out.string() << "\n";
    return result.exit_code;
  } catch (const std::exception& e) {
    std::cerr << "ecv: " << e.what() << "\n";
    return ecv::kUsage;
  }
}
