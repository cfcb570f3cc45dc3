#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "fluxlab/cli.hpp"

namespace fluxlab::cli {

namespace {

std::string trim(const std::string& s) {
  size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

struct Located {
  const std::string& origin;
  int line;
  [[noreturn]] void fail(const std::string& msg) const {
    throw ConfigError(origin + ":" + std::to_string(line) + ": " + msg);
  }
};

double to_double(const Located& at, const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  double d = std::strtod(v.c_str(), &end);
  if (v.empty() || *end != '\0' || errno != 0) at.fail("'" + key + "' needs a number, got '" + v + "'");
  return d;
}

long to_int(const Located& at, const std::string& key, const std::string& v) {
  char* end = nullptr;
  errno = 0;
  long n = std::strtol(v.c_str(), &end, 10);
  if (v.empty() || *end != '\0' || errno != 0) at.fail("'" + key + "' needs an integer, got '" + v + "'");
  return n;
}

const std::map<std::string, std::vector<std::string>>& key_table() {
  static const std::map<std::string, std::vector<std::string>> t = {
      {"flux", {"map", "lambda"}},
      {"calabi", {"map", "patch", "section"}},
      {"swept-area", {"field", "arc", "band"}},
      {"cocycle", {"triples", "pairs", "rot", "n_iter"}},
      {"transgression", {"pairs", "lambda"}},
      {"cell-division", {"center", "radius", "target"}},
      {"flows", {"pairs"}},
  };
  return t;
}

}  // namespace

const std::vector<std::string>& experiment_types() {
  static const std::vector<std::string> types = [] {
    std::vector<std::string> v;
    for (const auto& [k, _] : key_table()) v.push_back(k);
    return v;
  }();
  return types;
}

const std::vector<std::string>& experiment_keys(const std::string& type) {
  auto it = key_table().find(type);
  if (it == key_table().end()) throw ConfigError("unknown experiment type '" + type + "'");
  return it->second;
}

QuotientSurface SurfaceBlock::surface() const {
  switch (kind) {
    case SurfaceKind::disk:
      return QuotientSurface::disk();
    case SurfaceKind::annulus:
      return QuotientSurface::annulus(w);
    default:
      return QuotientSurface::mobius(w);
  }
}

ExperimentConfig parse_config(const std::string& text, const std::string& origin) {
  ExperimentConfig cfg;
  cfg.origin = origin;
  std::istringstream in(text);
  std::string raw, section;
  int line = 0;
  ExperimentSpec* current = nullptr;
  std::vector<std::string> seen_sections;

  while (std::getline(in, raw)) {
    ++line;
    Located at{origin, line};
    std::string s = raw;
    size_t hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;

    if (s.front() == '[') {
      if (s.back() != ']') at.fail("unterminated section header");
      section = trim(s.substr(1, s.size() - 2));
      current = nullptr;
      if (section.rfind("experiment", 0) == 0) {
        std::string name = trim(section.substr(10));
        if (name.empty()) at.fail("experiment sections need a name: [experiment NAME]");
        for (const ExperimentSpec& e : cfg.experiments)
          if (e.name == name) at.fail("duplicate experiment '" + name + "'");
        cfg.experiments.push_back({name, "", {}, line});
        current = &cfg.experiments.back();
        section = "experiment";
        continue;
      }
      static const std::vector<std::string> known = {"surface", "fields", "integrator", "tolerances", "run"};
      if (std::find(known.begin(), known.end(), section) == known.end()) at.fail("unknown section [" + section + "]");
      if (std::find(seen_sections.begin(), seen_sections.end(), section) != seen_sections.end()) {
        at.fail("section [" + section + "] appears twice");
      }
      seen_sections.push_back(section);
      continue;
    }

    size_t eq = s.find('=');
    if (eq == std::string::npos) at.fail("expected 'key = value'");
    std::string key = trim(s.substr(0, eq)), value = trim(s.substr(eq + 1));
    if (key.empty()) at.fail("empty key");
    if (section.empty()) at.fail("'" + key + "' outside any section");

    if (section == "surface") {
      if (key == "kind") {
        try {
          cfg.surface.kind = parse_kind(value);
        } catch (const std::exception&) {
          at.fail("unknown surface kind '" + value + "' (disk, annulus, mobius)");
        }
      } else if (key == "w") {
        cfg.surface.w = to_double(at, key, value);
        if (!(cfg.surface.w > 0.0)) at.fail("w must be positive");
      } else if (key == "collar_depth") {
        cfg.surface.collar_depth = to_double(at, key, value);
        if (!(*cfg.surface.collar_depth > 0.0)) at.fail("collar_depth must be positive");
      } else if (key == "epsilon") {
        cfg.surface.epsilon = to_double(at, key, value);
        if (!(cfg.surface.epsilon > 0.0)) at.fail("epsilon must be positive");
      } else {
        at.fail("unknown key '" + key + "' in [surface]");
      }
    } else if (section == "fields") {
      if (cfg.fields.count(key)) at.fail("field '" + key + "' defined twice");
      try {
        cfg.fields.emplace(key, parse(value));
      } catch (const ParseError& e) {
        at.fail("field '" + key + "': " + e.what());
      } catch (const UnknownIdentifierError& e) {
        at.fail("field '" + key + "': " + e.what());
      }
    } else if (section == "integrator") {
      if (key == "steps") {
        cfg.integrator.steps = static_cast<int>(to_int(at, key, value));
        if (cfg.integrator.steps < 1) at.fail("steps must be at least 1");
      } else if (key == "order") {
        cfg.integrator.quadrature.order = static_cast<int>(to_int(at, key, value));
      } else if (key == "panels") {
        int p = static_cast<int>(to_int(at, key, value));
        cfg.integrator.quadrature.panels_x = cfg.integrator.quadrature.panels_y = p;
      } else if (key == "panels_x") {
        cfg.integrator.quadrature.panels_x = static_cast<int>(to_int(at, key, value));
      } else if (key == "panels_y") {
        cfg.integrator.quadrature.panels_y = static_cast<int>(to_int(at, key, value));
      } else {
        at.fail("unknown key '" + key + "' in [integrator]");
      }
      try {
        cfg.integrator.quadrature.validate();
      } catch (const std::exception& e) {
        at.fail(e.what());
      }
    } else if (section == "tolerances") {
      const auto& types = experiment_types();
      if (std::find(types.begin(), types.end(), key) == types.end()) {
        at.fail("tolerance for unknown experiment type '" + key + "'");
      }
      double tol = to_double(at, key, value);
      if (!(tol > 0.0)) at.fail("tolerances must be positive");
      cfg.tolerances[key] = tol;
    } else if (section == "run") {
      if (key != "seed") at.fail("unknown key '" + key + "' in [run]");
      long n = to_int(at, key, value);
      if (n < 0) at.fail("seed must be non-negative");
      cfg.seed = static_cast<uint64_t>(n);
    } else if (section == "experiment") {
      if (key == "type") {
        const auto& types = experiment_types();
        if (std::find(types.begin(), types.end(), value) == types.end()) {
          at.fail("unknown experiment type '" + value + "'");
        }
        current->type = value;
      } else {
        if (current->params.count(key)) at.fail("'" + key + "' given twice");
        current->params[key] = value;
      }
    }
  }

  // types and keys, checked once the whole section is known
  for (const ExperimentSpec& e : cfg.experiments) {
    Located at{origin, e.line};
    if (e.type.empty()) at.fail("experiment '" + e.name + "' has no type");
    const auto& keys = experiment_keys(e.type);
    for (const auto& [k, v] : e.params) {
      if (std::find(keys.begin(), keys.end(), k) == keys.end()) {
        at.fail("experiment '" + e.name + "': unknown key '" + k + "' for type " + e.type);
      }
    }
    // referenced names must resolve
    auto check_name = [&](const std::string& ref) {
      if (!cfg.fields.count(ref)) at.fail("experiment '" + e.name + "': no field named '" + ref + "'");
    };
    if (auto it = e.params.find("field"); it != e.params.end() && it->second.rfind("shear:", 0) != 0) {
      check_name(it->second);
    }
    if (auto it = e.params.find("map"); it != e.params.end()) {
      try {
        for (const MapTerm& t : parse_map_spec(it->second)) {
          for (const char* k : {"field", "xi"}) {
            auto p = t.params.find(k);
            if (p != t.params.end()) check_name(p->second);
          }
        }
      } catch (const ConfigError& err) {
        at.fail("experiment '" + e.name + "': " + err.what());
      }
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError(path + ": cannot read config");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str(), path);
}

}  // namespace fluxlab::cli
