#include <iostream>

#include "CLI11.hpp"
#include "fluxlab/cli.hpp"

using namespace fluxlab;
using namespace fluxlab::cli;

namespace {

struct Common {
  int jobs = 1;
  std::optional<double> tol;
  std::optional<uint64_t> seed;
  std::string format = "records";
  bool timing = false;
};

struct Inline {
  std::string surface = "mobius";
  double w = 0.5;
  std::vector<std::string> defines;  // NAME=EXPR
  int steps = 0, order = 8, panels = 64;
  std::map<std::string, std::string> params;
};

ExperimentConfig inline_config(const Inline& in, const std::string& type) {
  std::string text = "[surface]\nkind = " + in.surface + "\nw = " + std::to_string(in.w) + "\n[fields]\n";
  for (const std::string& d : in.defines) {
    size_t eq = d.find('=');
    if (eq == std::string::npos) throw ConfigError("--define needs NAME=EXPR, got '" + d + "'");
    text += d + "\n";
  }
  text += "[integrator]\norder = " + std::to_string(in.order) + "\npanels = " + std::to_string(in.panels) + "\n";
  if (in.steps > 0) text += "steps = " + std::to_string(in.steps) + "\n";
  text += "[experiment " + type + "]\ntype = " + type + "\n";
  for (const auto& [k, v] : in.params)
    if (!v.empty()) text += k + " = " + v + "\n";
  return parse_config(text, "<command line>");
}

int emit(const ExperimentConfig& cfg, const Common& c) {
  RunOptions opt{c.jobs, c.tol, c.seed, c.timing};
  std::vector<ReportRow> rows = run_all(cfg, opt);
  if (c.format == "table") {
    std::cout << to_table(rows);
  } else {
    for (const ReportRow& r : rows) std::cout << to_record(r) << "\n";
  }
  return all_pass(rows) ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"fluxlab: flux, Calabi and Euler-class experiments on surfaces with boundary"};
  app.require_subcommand(0, 1);
  app.fallthrough();  // global flags may follow the subcommand
  Common common;
  std::string config_path;
  app.add_option("--config", config_path, "run the experiments of a config file");
  app.add_option("--jobs", common.jobs, "experiments run at once")->check(CLI::PositiveNumber);
  app.add_option("--tol", common.tol, "override every tolerance")->check(CLI::PositiveNumber);
  app.add_option("--seed", common.seed, "override the config seed");
  app.add_option("--format", common.format, "records or table")->check(CLI::IsMember({"records", "table"}));
  app.add_flag("--timing", common.timing, "add timing_ms to each row");

  Inline in;
  auto add_inline = [&](CLI::App* sub) {
    sub->add_option("--surface", in.surface, "disk, annulus or mobius")
        ->check(CLI::IsMember({"disk", "annulus", "mobius"}));
    sub->add_option("--w", in.w, "strip half-height")->check(CLI::PositiveNumber);
    sub->add_option("--define", in.defines, "named expression NAME=EXPR, repeatable");
    sub->add_option("--steps", in.steps, "integrator steps per unit time");
    sub->add_option("--order", in.order, "Gauss order");
    sub->add_option("--panels", in.panels, "panels per direction");
  };
  auto param = [&](CLI::App* sub, const std::string& flag, const std::string& key, const std::string& help) {
    sub->add_option(flag, in.params[key], help);
  };

  CLI::App* compute = app.add_subcommand("compute", "compute one invariant");
  compute->require_subcommand(1);
  CLI::App* c_flux = compute->add_subcommand("flux", "flux of a boundary-fixing map");
  add_inline(c_flux);
  param(c_flux, "--map", "map", "map spec, e.g. shear:t=1 or twist:cx=0.5,cy=0,r=0.2,t=1");
  param(c_flux, "--lambda", "lambda", "dx or pd");
  CLI::App* c_cal = compute->add_subcommand("calabi", "Calabi invariant");
  add_inline(c_cal);
  param(c_cal, "--map", "map", "map spec");
  param(c_cal, "--patch", "patch", "U or V (strips)");
  param(c_cal, "--section", "section", "1 or -1 (strips)");
  CLI::App* c_swept = compute->add_subcommand("swept-area", "swept area of an arc against the flux");
  add_inline(c_swept);
  param(c_swept, "--field", "field", "Hamiltonian name or shear:c");
  param(c_swept, "--arc", "arc", "cut or ax,ay,bx,by");
  param(c_swept, "--band", "band", "y0,y1 holding the field");

  CLI::App* verify = app.add_subcommand("verify", "run a verification suite");
  verify->require_subcommand(1);
  CLI::App* v_coc = verify->add_subcommand("cocycle", "Euler cocycle on random circle maps");
  add_inline(v_coc);
  param(v_coc, "--triples", "triples", "coboundary triples");
  param(v_coc, "--pairs", "pairs", "pairs for chi = c_F");
  param(v_coc, "--rot", "rot", "also check rotation-number integrality (true/false)");
  param(v_coc, "--n-iter", "n_iter", "iterations per translation number");
  CLI::App* v_tr = verify->add_subcommand("transgression", "transgression identity on the Moebius band");
  add_inline(v_tr);
  param(v_tr, "--pairs", "pairs", "number of pairs");
  param(v_tr, "--lambda", "lambda", "pd or dx");
  CLI::App* v_fl = verify->add_subcommand("flows", "boundary extension, kernel and homomorphism checks");
  add_inline(v_fl);
  param(v_fl, "--pairs", "pairs", "random pairs per property");

  CLI::App* demo = app.add_subcommand("demo", "worked examples");
  demo->require_subcommand(1);
  CLI::App* d_cell = demo->add_subcommand("cell-division", "split a twist into U and V pieces");
  add_inline(d_cell);
  param(d_cell, "--center", "center", "twist center x,y");
  param(d_cell, "--radius", "radius", "twist radius");
  param(d_cell, "--target", "target", "Calabi value of the input");

  CLI::App* list = app.add_subcommand("list", "list things");
  list->require_subcommand(1);
  CLI::App* l_surf = list->add_subcommand("surfaces", "supported surfaces");

  CLI::App* run = app.add_subcommand("run", "run a config file");
  run->add_option("--config", config_path, "config file")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (l_surf->parsed()) {
      std::cout << surfaces_listing();
      return 0;
    }
    if (!config_path.empty()) return emit(load_config(config_path), common);
    std::vector<std::pair<CLI::App*, std::string>> inline_cmds = {
        {c_flux, "flux"},   {c_cal, "calabi"},      {c_swept, "swept-area"},       {v_coc, "cocycle"},
        {v_tr, "transgression"}, {v_fl, "flows"}, {d_cell, "cell-division"}};
    for (auto& [sub, type] : inline_cmds) {
      if (!sub->parsed()) continue;
      return emit(inline_config(in, type), common);
    }
    std::cout << app.help();
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  }
}
