// Command line front end for the experiment runner.
//
//   percr-lab run --config configs/homotopy.json [--out DIR] [--seed N]
//                 [--grid 400x64] [--s-half 6]
//   percr-lab emit-plot --report out/report.json --what area-vs-lambda [--out F]
//   percr-lab list-experiments
//
// Exit codes: 0 all rows pass, 1 numerical failure, 2 config or IO error.

#include <iostream>

#include <CLI11.hpp>

#include "percr/experiments.hpp"

namespace {

void apply_grid_override(percr::ExperimentConfig& cfg, const std::string& text) {
  const auto x = text.find('x');
  if (x == std::string::npos)
    throw percr::ConfigError("--grid expects NSxNT, e.g. 400x64");
  try {
    cfg.n_s = std::stoi(text.substr(0, x));
    cfg.n_t = std::stoi(text.substr(x + 1));
  } catch (const std::exception&) {
    throw percr::ConfigError("--grid expects NSxNT, e.g. 400x64");
  }
  if (cfg.n_s < 8 || cfg.n_t < 8)
    throw percr::ConfigError("--grid needs n_s, n_t >= 8");
}

void print_report(const percr::ExperimentReport& report) {
  for (const percr::CaseRow& row : report.rows) {
    std::printf("[%s] %-48s value=%-13.6g tol=%.3g (%s)%s%s\n",
                row.pass ? "pass" : "FAIL", row.label.c_str(), row.value,
                row.tolerance, row.tolerance_name.c_str(),
                row.note.empty() ? "" : "  ", row.note.c_str());
  }
  std::printf("verdict: %s (%zu rows)\n", report.pass ? "pass" : "FAIL",
              report.rows.size());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perturbed Cauchy-Riemann laboratory on the round sphere"};
  app.require_subcommand(1);

  std::string config_path, out_dir, grid_text, report_path, what, plot_out;
  double s_half = 0.0;
  unsigned long long seed = 0;
  bool have_seed = false, have_grid = false, have_s_half = false, have_out = false;

  CLI::App* cmd_run = app.add_subcommand("run", "run one experiment from a config");
  cmd_run->add_option("--config", config_path, "JSON config path")->required();
  cmd_run->add_option("--out", out_dir, "report output directory")
      ->each([&](const std::string&) { have_out = true; });
  cmd_run->add_option("--seed", seed, "override the config seed")
      ->each([&](const std::string&) { have_seed = true; });
  cmd_run->add_option("--grid", grid_text, "override grid as NSxNT")
      ->each([&](const std::string&) { have_grid = true; });
  cmd_run->add_option("--s-half", s_half, "override the half-length of the s-range")
      ->each([&](const std::string&) { have_s_half = true; });

  CLI::App* cmd_plot =
      app.add_subcommand("emit-plot", "write one plot series from a report");
  cmd_plot->add_option("--report", report_path, "report.json path")->required();
  cmd_plot->add_option("--what", what, "series name")->required();
  cmd_plot->add_option("--out", plot_out, "output file (default stdout)");

  app.add_subcommand("list-experiments", "print the experiment names");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (app.got_subcommand("list-experiments")) {
      for (const std::string& name : percr::experiment_names())
        std::printf("%s\n", name.c_str());
      return 0;
    }
    if (app.got_subcommand(cmd_plot)) {
      const percr::ExperimentReport report = percr::load_report(report_path);
      if (plot_out.empty())
        percr::emit_plot_data(report, what, std::cout);
      else
        percr::emit_plot_data(report, what, plot_out);
      return 0;
    }
    percr::ExperimentConfig cfg = percr::load_config(config_path);
    if (have_seed) {
      cfg.seed = seed;
      cfg.has_seed = true;
    }
    if (have_grid) apply_grid_override(cfg, grid_text);
    if (have_s_half) {
      if (!(s_half > 0.0)) throw percr::ConfigError("--s-half must be > 0");
      cfg.s_half = s_half;
    }
    if (have_out) cfg.output = out_dir;
    const percr::ExperimentReport report = percr::run(cfg);
    percr::write_report(report, cfg.output);
    print_report(report);
    return report.pass ? 0 : 1;
  } catch (const percr::ConfigError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    // Numerical trouble (chart tearing, invalid family data) rather than a
    // config problem.
    std::fprintf(stderr, "numerical failure: %s\n", e.what());
    return 1;
  }
}
