#include <CLI11.hpp>

#include <iostream>

#include "finsler/experiments.hpp"

namespace {

int run(const std::string& config_path, const std::string& out_dir, const std::string& format, int threads) {
  auto cfg = finsler::load_config(config_path);
  if (threads > 0) cfg.threads = threads;
  const auto fmt = finsler::parse_format(format);
  const auto report = finsler::run_experiment(cfg);
  const std::filesystem::path dir = !out_dir.empty() ? out_dir : (!cfg.output.empty() ? cfg.output : ".");
  const auto path = finsler::emit_report(report, fmt, dir);
  finsler::log().info("wrote {}", path.string());
  for (const auto& c : report.checks)
    if (!c.pass())
      finsler::log().error("check failed: {} ({} {} vs {})", c.name, c.relation, c.left, c.right);
  std::cout << path.string() << (report.pass() ? " pass" : " FAIL") << "\n";
  return report.pass() ? 0 : 1;
}

int check_duality(const std::string& norm_json, int samples) {
  finsler::Json j;
  try {
    j = finsler::Json::parse(norm_json);
  } catch (const nlohmann::json::exception& e) {
    throw finsler::ConfigError(std::string("--norm: ") + e.what());
  }
  finsler::ExperimentConfig cfg;
  cfg.experiment = finsler::Experiment::duality;
  cfg.norm = finsler::norm_from_json(j);
  cfg.samples = samples;
  if (samples < 1) throw finsler::ConfigError("--samples must be at least 1");
  const auto report = finsler::run_duality(cfg);
  std::cout << finsler::render_json(report);
  return report.pass() ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dirichlet eigenvalues of the anisotropic p-Laplacian on rasterized planar domains"};
  app.require_subcommand(1);

  std::string config, out_dir, format = "json";
  int threads = 0;
  auto* run_cmd = app.add_subcommand("run", "run the experiment described by a JSON config");
  run_cmd->add_option("--config", config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("--out", out_dir, "output directory (default: the config's output field, else .)");
  run_cmd->add_option("--format", format, "report format")
      ->check(CLI::IsMember({"json", "csv", "svg-data"}));
  run_cmd->add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);

  std::string norm_json;
  int samples = 100;
  auto* dual_cmd = app.add_subcommand("check-duality", "check the norm/polar duality identities");
  dual_cmd->add_option("--norm", norm_json, "norm as JSON, e.g. {\"family\":\"lq\",\"q\":4}")->required();
  dual_cmd->add_option("--samples", samples, "number of samples")->check(CLI::PositiveNumber);

  CLI11_PARSE(app, argc, argv);
  try {
    if (*run_cmd) return run(config, out_dir, format, threads);
    return check_duality(norm_json, samples);
  } catch (const finsler::Error& e) {
    finsler::log().error("{}", e.what());
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
