#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "fluxlab/flow.hpp"
#include "fluxlab/invariants.hpp"
#include "fluxlab/quadrature.hpp"
#include "fluxlab/surface.hpp"

namespace fluxlab::cli {

// "origin:line: message"
class ConfigError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SurfaceBlock {
  SurfaceKind kind = SurfaceKind::mobius;
  double w = 0.5;
  std::optional<double> collar_depth;  // default_collar_depth when absent
  double epsilon = 0.125;              // tube half-width of arcs

  QuotientSurface surface() const;
};

struct IntegratorBlock {
  int steps = 0;  // per unit time; 0 = default
  QuadratureSpec quadrature;
};

struct ExperimentSpec {
  std::string name;
  std::string type;  // flux, calabi, swept-area, cocycle, transgression, cell-division, flows
  std::map<std::string, std::string> params;
  int line = 0;
};

struct ExperimentConfig {
  std::string origin = "<config>";
  SurfaceBlock surface;
  std::map<std::string, Expr> fields;
  IntegratorBlock integrator;
  std::map<std::string, double> tolerances;  // by experiment type
  uint64_t seed = 1;
  std::vector<ExperimentSpec> experiments;
};

ExperimentConfig parse_config(const std::string& text, const std::string& origin = "<config>");
ExperimentConfig load_config(const std::string& path);

// Keys each experiment type accepts, for validation and the manual.
const std::vector<std::string>& experiment_keys(const std::string& type);
const std::vector<std::string>& experiment_types();

struct ReportRow {
  std::string experiment;
  std::string quantity;
  std::optional<double> value;
  std::optional<double> oracle;
  std::optional<double> abs_error;
  double tolerance = 0.0;
  bool pass = false;
  std::string anchor;
  std::optional<double> timing_ms;
  std::string error;  // runtime failure, empty otherwise
};

// pass = |value - oracle| <= tol
ReportRow check_row(std::string experiment, std::string quantity, double value, double oracle, double tol,
                    std::string anchor);

std::string to_record(const ReportRow& r);  // one JSON object, no newline
std::string to_table(const std::vector<ReportRow>& rows);

struct RunOptions {
  int jobs = 1;
  std::optional<double> tol;        // overrides every tolerance
  std::optional<uint64_t> seed;     // overrides the config seed
  bool timing = false;              // timing_ms makes reports run-dependent
};

// Rows of one experiment. Runtime failures become a single failing row.
std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg, const ExperimentSpec& e, const RunOptions& opt);
// All experiments, up to opt.jobs at a time; rows come back in config order.
std::vector<ReportRow> run_all(const ExperimentConfig& cfg, const RunOptions& opt);

inline bool all_pass(const std::vector<ReportRow>& rows) {
  for (const ReportRow& r : rows)
    if (!r.pass) return false;
  return true;
}

// Map specs: terms joined by " o " (composition, rightmost first), each
// name[:key=value,...] with name in identity, shear, twist, shift, flow, extension.
struct MapTerm {
  std::string name;
  std::map<std::string, std::string> params;
};
std::vector<MapTerm> parse_map_spec(const std::string& spec);

struct BuiltMap {
  FlowDiffeo map;
  // closed-form flux (dx and cut-arc dual) and Calabi value, when every term has one
  std::optional<double> flux_dx, flux_pd, calabi_disk;
  std::vector<TwistSite> sites;  // twist disks, for an adapted primitive
};
BuiltMap build_map(const ExperimentConfig& cfg, const std::string& spec);

std::string surfaces_listing();

}  // namespace fluxlab::cli
