#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "pulsedpg/cli.hpp"

namespace {

struct Overrides {
  std::string config;
  std::optional<std::string> regime;
  std::optional<std::string> case_name;
  std::optional<int> p;
  std::optional<double> c;
  std::optional<int> refinements;
  std::optional<double> theta;
  std::optional<std::string> out;
  std::optional<int> resolution;
  bool exact = false;
};

// Flag overrides are routed one by one through the strict parser so they
// obey the same validation as the file keys.
pulsedpg::RunConfig make_config(const Overrides& ov) {
  pulsedpg::RunConfig cfg;
  if (!ov.config.empty()) cfg = pulsedpg::load_config(ov.config);
  if (ov.regime)
    cfg.regime = pulsedpg::config_from_json({{"regime", *ov.regime}}).regime;
  if (ov.case_name)
    cfg.case_name =
        pulsedpg::config_from_json({{"case", *ov.case_name}}).case_name;
  if (ov.p) cfg.p = pulsedpg::config_from_json({{"p", *ov.p}}).p;
  if (ov.c) cfg.c = *ov.c;
  if (ov.refinements)
    cfg.refinements =
        pulsedpg::config_from_json({{"refinements", *ov.refinements}})
            .refinements;
  if (ov.theta)
    cfg.theta = pulsedpg::config_from_json({{"theta", *ov.theta}}).theta;
  if (ov.resolution)
    cfg.resolution =
        pulsedpg::config_from_json({{"resolution", *ov.resolution}}).resolution;
  if (ov.out) cfg.out = *ov.out;
  if (ov.exact) cfg.dump_exact = true;
  return cfg;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"space-time DPG solver for modulated pulse propagation"};
  app.fallthrough();
  app.require_subcommand(1);

  Overrides ov;
  app.add_option("--config", ov.config, "JSON run configuration");
  app.add_option("--regime", ov.regime, "hyperbolic or elliptic");
  app.add_option("--case", ov.case_name, "soliton1, soliton2 or gaussian_beam");
  app.add_option("--p", ov.p, "trial polynomial order");
  app.add_option("--c", ov.c, "elliptic flux scaling");
  app.add_option("--refinements", ov.refinements, "uniform refinement levels");
  app.add_option("--theta", ov.theta, "bulk marking fraction");
  app.add_option("--out", ov.out, "output CSV path");
  app.add_option("--resolution", ov.resolution, "raster resolution");
  app.add_flag("--exact", ov.exact, "dump the exact field instead of solving");

  CLI::App* c_solve = app.add_subcommand("solve", "single solve with a summary");
  CLI::App* c_conv =
      app.add_subcommand("convergence", "uniform refinement study");
  CLI::App* c_cstudy =
      app.add_subcommand("cstudy", "flux-scaling comparison (elliptic)");
  CLI::App* c_adapt = app.add_subcommand("adapt", "residual-driven adaptivity");
  CLI::App* c_dump = app.add_subcommand("dump", "field raster to CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    const pulsedpg::RunConfig cfg = make_config(ov);
    if (c_solve->parsed()) return pulsedpg::cmd_solve(cfg, std::cout);
    if (c_conv->parsed()) return pulsedpg::cmd_convergence(cfg, std::cout);
    if (c_cstudy->parsed()) return pulsedpg::cmd_cstudy(cfg, std::cout);
    if (c_adapt->parsed()) return pulsedpg::cmd_adapt(cfg, std::cout);
    if (c_dump->parsed()) return pulsedpg::cmd_dump(cfg, std::cout);
  } catch (const pulsedpg::SolverFailure& e) {
    std::cerr << "solver failure: " << e.what() << "\n";
    return 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
