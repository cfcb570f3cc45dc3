#include <cmath>
#include <sstream>

#include "fluxlab/cli.hpp"

namespace fluxlab::cli {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t");
  if (a == std::string::npos) return "";
  return s.substr(a, s.find_last_not_of(" \t") - a + 1);
}

// commas inside parentheses belong to the value
std::vector<std::string> split_top(const std::string& s, char sep) {
  std::vector<std::string> out;
  int depth = 0;
  std::string cur;
  for (char ch : s) {
    if (ch == '(') ++depth;
    if (ch == ')') --depth;
    if (ch == sep && depth == 0) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  out.push_back(trim(cur));
  return out;
}

const std::map<std::string, std::vector<std::string>>& term_keys() {
  static const std::map<std::string, std::vector<std::string>> t = {
      {"identity", {}},
      {"shear", {"t"}},
      {"twist", {"cx", "cy", "r", "t"}},
      {"shift", {"c"}},
      {"flow", {"field", "t", "steps", "cx", "cy", "r"}},
      {"extension", {"xi", "t", "steps", "depth"}},
  };
  return t;
}

double number(const MapTerm& term, const std::string& key, std::optional<double> fallback = std::nullopt) {
  auto it = term.params.find(key);
  if (it == term.params.end()) {
    if (fallback) return *fallback;
    throw ConfigError(term.name + " needs " + key);
  }
  size_t used = 0;
  double v = 0;
  try {
    v = std::stod(it->second, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used == 0 || used != it->second.size() || !std::isfinite(v)) {
    throw ConfigError(term.name + ": '" + key + "' needs a number, got '" + it->second + "'");
  }
  return v;
}

const Expr& field(const ExperimentConfig& cfg, const MapTerm& term, const std::string& key) {
  auto it = term.params.find(key);
  if (it == term.params.end()) throw ConfigError(term.name + " needs " + key);
  auto f = cfg.fields.find(it->second);
  if (f == cfg.fields.end()) throw ConfigError("no field named '" + it->second + "'");
  return f->second;
}

int steps_for(const ExperimentConfig& cfg, const MapTerm& term, double t) {
  if (term.params.count("steps")) {
    double s = number(term, "steps");
    if (s < 1 || s != std::floor(s)) throw ConfigError(term.name + ": steps must be a positive integer");
    return static_cast<int>(s);
  }
  if (cfg.integrator.steps > 0) return std::max(1, static_cast<int>(std::ceil(cfg.integrator.steps * std::fabs(t))));
  return 0;
}

// a field declared to live in a disk must vanish outside it
void check_declared_support(const VectorField& F, const SupportSet& support, double t_end) {
  const QuotientSurface& S = F.surface();
  Rect d = S.domain();
  const int n = 48;
  for (double t : {0.0, 0.5 * t_end, t_end})
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < n; ++j) {
        Vec2 p{d.x0 + (d.x1 - d.x0) * (i + 0.5) / n, d.y0 + (d.y1 - d.y0) * (j + 0.5) / n};
        if (!S.inside(p) || support.contains(S, p)) continue;
        if (norm(F.value(t, p)) > 1e-12) {
          throw InvariantError("field " + F.provenance() + " is not zero outside its declared disk");
        }
      }
}

}  // namespace

std::vector<MapTerm> parse_map_spec(const std::string& spec) {
  std::vector<MapTerm> terms;
  std::string rest = " " + spec + " ";
  // " o " joins terms
  std::vector<std::string> parts;
  size_t pos = 0;
  while (true) {
    size_t k = rest.find(" o ", pos);
    if (k == std::string::npos) {
      parts.push_back(trim(rest.substr(pos)));
      break;
    }
    parts.push_back(trim(rest.substr(pos, k - pos)));
    pos = k + 2;
  }
  for (const std::string& part : parts) {
    if (part.empty()) throw ConfigError("empty term in map '" + spec + "'");
    MapTerm term;
    size_t colon = part.find(':');
    term.name = trim(part.substr(0, colon));
    auto known = term_keys().find(term.name);
    if (known == term_keys().end()) throw ConfigError("unknown map '" + term.name + "'");
    if (colon != std::string::npos) {
      for (const std::string& kv : split_top(part.substr(colon + 1), ',')) {
        size_t eq = kv.find('=');
        if (eq == std::string::npos) throw ConfigError(term.name + ": expected key=value, got '" + kv + "'");
        std::string k = trim(kv.substr(0, eq)), v = trim(kv.substr(eq + 1));
        const auto& keys = known->second;
        if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
          throw ConfigError(term.name + ": unknown key '" + k + "'");
        }
        if (term.params.count(k)) throw ConfigError(term.name + ": '" + k + "' given twice");
        term.params[k] = v;
      }
    }
    terms.push_back(std::move(term));
  }
  return terms;
}

BuiltMap build_map(const ExperimentConfig& cfg, const std::string& spec) {
  QuotientSurface S = cfg.surface.surface();
  std::vector<MapTerm> terms = parse_map_spec(spec);
  BuiltMap out{FlowDiffeo::identity(S), 0.0, 0.0, 0.0, {}};
  bool first = true;
  // rightmost term acts first
  for (auto it = terms.rbegin(); it != terms.rend(); ++it) {
    const MapTerm& term = *it;
    std::optional<FlowDiffeo> g;
    std::optional<double> fdx, fpd, cal;
    if (term.name == "identity") {
      g = FlowDiffeo::identity(S);
      fdx = fpd = cal = 0.0;
    } else if (term.name == "shear") {
      if (!S.strip()) throw ConfigError("shear needs a strip surface");
      double t = number(term, "t");
      g = FlowDiffeo::shear(S, t);
      // (eta - g*eta) ^ dx = -t y b'(y) omega, and int y b' = -int b = -3/8
      fdx = 0.375 * t;
      fpd = -0.375 * t;
    } else if (term.name == "twist") {
      double r = number(term, "r"), t = number(term, "t");
      Vec2 c{number(term, "cx"), number(term, "cy")};
      if (!(r > 0)) throw ConfigError("twist: r must be positive");
      g = FlowDiffeo::radial_twist(S, c, r, t);
      fdx = fpd = 0.0;
      // 2 pi R^4 t int_0^1 (1 - s)^8 / 8 ds
      cal = 2 * kPi * std::pow(r, 4) * t / 72.0;
      out.sites.push_back({c, r});
    } else if (term.name == "shift") {
      if (!S.strip()) throw ConfigError("shift needs a strip surface");
      double c = number(term, "c");
      VectorField F(S, Expr::constant(c), Expr::constant(0), SupportSet::everywhere(), "shift");
      g = flow_map(F, 1.0, 4);  // exact for a constant field
    } else if (term.name == "flow") {
      const Expr& H = field(cfg, term, "field");
      double t = number(term, "t", 1.0);
      SupportSet support = SupportSet::everywhere();
      bool disk = term.params.count("cx") || term.params.count("cy") || term.params.count("r");
      if (disk) support = SupportSet::disk(S, {number(term, "cx"), number(term, "cy")}, number(term, "r"));
      VectorField F = hamiltonian_field(S, H, std::nullopt, support);
      F.validate();
      if (disk) check_declared_support(F, support, t);
      g = memoized(flow_map(F, t, steps_for(cfg, term, t)));
    } else if (term.name == "extension") {
      if (S.kind == SurfaceKind::annulus) throw ConfigError("extension needs the disk or the Moebius band");
      const Expr& xi = field(cfg, term, "xi");
      double t = number(term, "t", 1.0);
      double depth = number(term, "depth", cfg.surface.collar_depth.value_or(default_collar_depth(S)));
      VectorField F = boundary_extension(S, xi, depth, default_collar_cutoff());
      g = memoized(flow_map(F, t, steps_for(cfg, term, t)));
    }
    auto add = [](std::optional<double>& acc, const std::optional<double>& v) {
      acc = (acc && v) ? std::optional<double>(*acc + *v) : std::nullopt;
    };
    out.map = first ? *g : compose_diffeos(*g, out.map);
    first = false;
    add(out.flux_dx, fdx);
    add(out.flux_pd, fpd);
    add(out.calabi_disk, cal);
  }
  return out;
}

std::string surfaces_listing() {
  std::ostringstream os;
  os << "kind     parameters                 boundary    notes\n"
     << "disk     (none)                     circle      unit disk, primitive (x dy - y dx)/2, area pi\n"
     << "annulus  w (default 0.5)            2 circles   [0,1) x [-w,w], x periodic, orientable\n"
     << "mobius   w (default 0.5)            circle      [0,1) x [-w,w], (x+1, y) ~ (x, -y)\n"
     << "\nshared keys: collar_depth (boundary extensions), epsilon (arc tube half-width, default 0.125)\n";
  return os.str();
}

}  // namespace fluxlab::cli
