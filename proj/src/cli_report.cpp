#include <cmath>

#include <fmt/format.h>

#include "fluxlab/cli.hpp"
#include "json.hpp"

namespace fluxlab::cli {

ReportRow check_row(std::string experiment, std::string quantity, double value, double oracle, double tol,
                    std::string anchor) {
  ReportRow r;
  r.experiment = std::move(experiment);
  r.quantity = std::move(quantity);
  r.value = value;
  r.oracle = oracle;
  r.abs_error = std::fabs(value - oracle);
  r.tolerance = tol;
  r.pass = *r.abs_error <= tol;  // NaN fails
  r.anchor = std::move(anchor);
  return r;
}

std::string to_record(const ReportRow& r) {
  auto opt = [](const std::optional<double>& v) -> nlohmann::json {
    if (!v || !std::isfinite(*v)) return nullptr;
    return *v;
  };
  nlohmann::ordered_json j;
  j["experiment"] = r.experiment;
  j["quantity"] = r.quantity;
  j["value"] = opt(r.value);
  j["oracle"] = opt(r.oracle);
  j["abs_error"] = opt(r.abs_error);
  j["tolerance"] = r.tolerance;
  j["pass"] = r.pass;
  j["anchor"] = r.anchor;
  if (r.timing_ms) j["timing_ms"] = *r.timing_ms;
  if (!r.error.empty()) j["error"] = r.error;
  return j.dump();
}

std::string to_table(const std::vector<ReportRow>& rows) {
  auto num = [](const std::optional<double>& v) { return v ? fmt::format("{:.6e}", *v) : std::string("-"); };
  size_t we = 10, wq = 8;
  bool timing = false;
  for (const ReportRow& r : rows) {
    we = std::max(we, r.experiment.size());
    wq = std::max(wq, r.quantity.size());
    timing = timing || r.timing_ms.has_value();
  }
  std::string out = fmt::format("{:<{}}  {:<{}}  {:>13}  {:>13}  {:>13}  {:>9}  {:<4}", "experiment", we, "quantity",
                                wq, "value", "oracle", "abs_error", "tol", "ok");
  if (timing) out += fmt::format("  {:>10}", "ms");
  out += "\n";
  int passed = 0;
  for (const ReportRow& r : rows) {
    out += fmt::format("{:<{}}  {:<{}}  {:>13}  {:>13}  {:>13}  {:>9.1e}  {:<4}", r.experiment, we, r.quantity, wq,
                       num(r.value), num(r.oracle), num(r.abs_error), r.tolerance, r.pass ? "pass" : "FAIL");
    if (timing) out += fmt::format("  {:>10}", r.timing_ms ? fmt::format("{:.1f}", *r.timing_ms) : "-");
    if (!r.error.empty()) out += "  " + r.error;
    out += "\n";
    passed += r.pass;
  }
  out += fmt::format("{} of {} checks passed\n", passed, rows.size());
  return out;
}

}  // namespace fluxlab::cli
