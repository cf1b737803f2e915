#include "config.hpp"

#include <cctype>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <functional>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

namespace labvar::cli {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = 0, e = s.size();
  while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

[[noreturn]] void fail(const std::string& path, int line, const std::string& msg) {
  std::ostringstream os;
  if (!path.empty()) {
    os << path << ":";
    if (line > 0) os << line << ":";
    os << " ";
  }
  os << msg;
  throw ConfigError(os.str());
}

double parse_double(const std::string& path, int line, const std::string& key,
                    const std::string& text) {
  errno = 0;
  char* end = nullptr;
  double v = std::strtod(text.c_str(), &end);
  if (end == text.c_str() || *end != '\0' || errno == ERANGE)
    fail(path, line, "key '" + key + "' needs a number, got '" + text + "'");
  return v;
}

long long parse_int(const std::string& path, int line, const std::string& key,
                    const std::string& text) {
  errno = 0;
  char* end = nullptr;
  long long v = std::strtoll(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0' || errno == ERANGE)
    fail(path, line, "key '" + key + "' needs an integer, got '" + text + "'");
  return v;
}

std::uint64_t parse_uint(const std::string& path, int line, const std::string& key,
                         const std::string& text) {
  errno = 0;
  char* end = nullptr;
  unsigned long long v = std::strtoull(text.c_str(), &end, 10);
  if (end == text.c_str() || *end != '\0' || errno == ERANGE ||
      text.find('-') != std::string::npos)
    fail(path, line, "key '" + key + "' needs a nonnegative integer, got '" + text + "'");
  return v;
}

bool parse_bool(const std::string& path, int line, const std::string& key,
                const std::string& text) {
  if (text == "true" || text == "yes" || text == "on" || text == "1") return true;
  if (text == "false" || text == "no" || text == "off" || text == "0") return false;
  fail(path, line, "key '" + key + "' needs true or false, got '" + text + "'");
}

std::vector<std::string> parse_list(const std::string& path, int line,
                                    const std::string& key, const std::string& text) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream is(text);
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  if (out.empty())
    fail(path, line, "key '" + key + "' needs a comma-separated list, got '" + text + "'");
  return out;
}

Gauge parse_gauge(const std::string& path, int line, const std::string& text) {
  if (text == "symmetric") return Gauge::Symmetric;
  if (text == "x-weighted") return Gauge::XWeighted;
  if (text == "y-weighted") return Gauge::YWeighted;
  fail(path, line,
       "gauge must be symmetric, x-weighted, or y-weighted; got '" + text + "'");
}

const std::set<std::string> kSymmetryNames = {
    "all",        "none",       "energy",     "momentum_x",
    "momentum_y", "momentum_a", "momentum_b", "angular"};
const std::set<std::string> kPhiNames = {"all", "none", "linears", "bump", "hats"};

}  // namespace

RunConfig parse_config(std::istream& in, const std::string& path) {
  RunConfig cfg;
  std::string section;
  std::string raw;
  int line_no = 0;
  std::map<std::string, int> line_of;  // "section.key" -> line of assignment

  // One handler per known key; unknown keys and sections are errors so that
  // typos cannot silently fall back to defaults.
  using Setter = std::function<void(int, const std::string&)>;
  std::map<std::string, Setter> setters;
  auto add = [&](const std::string& sec, const std::string& key, Setter s) {
    setters[sec + "." + key] = std::move(s);
  };

  add("model", "kind", [&](int ln, const std::string& v) {
    std::string k = (v == "sw") ? "salmon" : v;
    if (k != "salmon" && k != "sg" && k != "custom")
      fail(path, ln, "model kind must be salmon, sg, or custom; got '" + v + "'");
    cfg.model_kind = k;
  });
  add("model", "f", [&](int ln, const std::string& v) { cfg.f = parse_double(path, ln, "f", v); });
  add("model", "g", [&](int ln, const std::string& v) { cfg.g = parse_double(path, ln, "g", v); });
  add("model", "gauge",
      [&](int ln, const std::string& v) { cfg.gauge = parse_gauge(path, ln, v); });
  add("model", "lagrangian", [&](int, const std::string& v) { cfg.lagrangian = v; });

  add("mesh", "nx", [&](int ln, const std::string& v) {
    cfg.nx = static_cast<int>(parse_int(path, ln, "nx", v));
  });
  add("mesh", "ny", [&](int ln, const std::string& v) {
    cfg.ny = static_cast<int>(parse_int(path, ln, "ny", v));
  });
  add("mesh", "lx", [&](int ln, const std::string& v) { cfg.lx = parse_double(path, ln, "lx", v); });
  add("mesh", "ly", [&](int ln, const std::string& v) { cfg.ly = parse_double(path, ln, "ly", v); });
  add("mesh", "periodic",
      [&](int ln, const std::string& v) { cfg.periodic = parse_bool(path, ln, "periodic", v); });
  add("mesh", "degree", [&](int ln, const std::string& v) {
    cfg.degree = static_cast<int>(parse_int(path, ln, "degree", v));
  });
  add("mesh", "perturb_amplitude", [&](int ln, const std::string& v) {
    cfg.perturb_amplitude = parse_double(path, ln, "perturb_amplitude", v);
  });
  add("mesh", "perturb_seed", [&](int ln, const std::string& v) {
    cfg.perturb_seed = parse_uint(path, ln, "perturb_seed", v);
  });
  add("mesh", "file", [&](int, const std::string& v) { cfg.mesh_file = v; });

  add("time", "t0", [&](int ln, const std::string& v) { cfg.t0 = parse_double(path, ln, "t0", v); });
  add("time", "t1", [&](int ln, const std::string& v) { cfg.t1 = parse_double(path, ln, "t1", v); });
  add("time", "slabs", [&](int ln, const std::string& v) {
    cfg.slabs = static_cast<int>(parse_int(path, ln, "slabs", v));
  });

  add("initial", "kind", [&](int ln, const std::string& v) {
    if (v != "rest" && v != "rigid-rotation" && v != "shear" && v != "file")
      fail(path, ln,
           "initial kind must be rest, rigid-rotation, shear, or file; got '" + v + "'");
    cfg.initial_kind = v;
  });
  add("initial", "omega",
      [&](int ln, const std::string& v) { cfg.omega = parse_double(path, ln, "omega", v); });
  add("initial", "c",
      [&](int ln, const std::string& v) { cfg.shear_c = parse_double(path, ln, "c", v); });
  add("initial", "file", [&](int, const std::string& v) { cfg.initial_file = v; });

  add("solver", "tolerance", [&](int ln, const std::string& v) {
    cfg.tolerance = parse_double(path, ln, "tolerance", v);
  });
  add("solver", "max_iterations", [&](int ln, const std::string& v) {
    cfg.max_iterations = static_cast<int>(parse_int(path, ln, "max_iterations", v));
  });
  add("solver", "backtrack", [&](int ln, const std::string& v) {
    cfg.backtrack = parse_double(path, ln, "backtrack", v);
  });

  add("diagnostics", "symmetries", [&](int ln, const std::string& v) {
    cfg.symmetries = parse_list(path, ln, "symmetries", v);
    for (const auto& s : cfg.symmetries)
      if (!kSymmetryNames.count(s))
        fail(path, ln, "unknown symmetry '" + s + "' (energy, momentum_x, momentum_y, "
                       "momentum_a, momentum_b, angular, all, none)");
  });
  add("diagnostics", "phi_family", [&](int ln, const std::string& v) {
    cfg.phi_family = parse_list(path, ln, "phi_family", v);
    for (const auto& s : cfg.phi_family)
      if (!kPhiNames.count(s))
        fail(path, ln, "unknown phi family entry '" + s +
                       "' (linears, bump, hats, all, none)");
  });
  add("diagnostics", "bump_center_a", [&](int ln, const std::string& v) {
    cfg.bump_center_a = parse_double(path, ln, "bump_center_a", v);
  });
  add("diagnostics", "bump_center_b", [&](int ln, const std::string& v) {
    cfg.bump_center_b = parse_double(path, ln, "bump_center_b", v);
  });
  add("diagnostics", "bump_radius", [&](int ln, const std::string& v) {
    cfg.bump_radius = parse_double(path, ln, "bump_radius", v);
  });
  add("diagnostics", "hat_count", [&](int ln, const std::string& v) {
    cfg.hat_count = static_cast<int>(parse_int(path, ln, "hat_count", v));
  });

  add("output", "directory",
      [&](int, const std::string& v) { cfg.output_directory = v; });

  const std::set<std::string> known_sections = {"model",  "mesh",        "time",
                                                "initial", "solver",     "diagnostics",
                                                "output"};

  while (std::getline(in, raw)) {
    ++line_no;
    std::string stripped = raw;
    // Comments run to end of line; a '#' or ';' inside a value is not
    // supported (the density grammar uses neither character).
    auto hash = stripped.find_first_of("#;");
    if (hash != std::string::npos) stripped = stripped.substr(0, hash);
    stripped = trim(stripped);
    if (stripped.empty()) continue;

    if (stripped.front() == '[') {
      if (stripped.back() != ']')
        fail(path, line_no, "malformed section header '" + stripped + "'");
      section = trim(stripped.substr(1, stripped.size() - 2));
      if (!known_sections.count(section))
        fail(path, line_no, "unknown section [" + section + "]");
      continue;
    }

    auto eq = stripped.find('=');
    if (eq == std::string::npos)
      fail(path, line_no, "expected 'key = value', got '" + stripped + "'");
    if (section.empty())
      fail(path, line_no, "key outside a [section]");
    std::string key = trim(stripped.substr(0, eq));
    std::string value = trim(stripped.substr(eq + 1));
    if (key.empty()) fail(path, line_no, "empty key");
    if (value.empty()) fail(path, line_no, "key '" + key + "' has no value");

    std::string full = section + "." + key;
    auto it = setters.find(full);
    if (it == setters.end())
      fail(path, line_no, "unknown key '" + key + "' in section [" + section + "]");
    if (line_of.count(full))
      fail(path, line_no, "duplicate key '" + key + "' in section [" + section +
                          "] (first set on line " + std::to_string(line_of[full]) + ")");
    line_of[full] = line_no;
    it->second(line_no, value);
  }

  // Cross-key validation; diagnostics cite the line that set the key when one
  // exists (defaulted keys report without a line).
  auto at = [&](const std::string& full) {
    auto it = line_of.find(full);
    return it == line_of.end() ? 0 : it->second;
  };

  if (cfg.g == 0.0) fail(path, at("model.g"), "g must be nonzero");
  if (cfg.model_kind == "sg" && cfg.f == 0.0)
    fail(path, at("model.f"), "the sg model needs a nonzero f");
  if (cfg.model_kind == "custom" && cfg.lagrangian.empty())
    fail(path, at("model.kind"), "custom models need [model] lagrangian");
  if (cfg.model_kind != "custom" && !cfg.lagrangian.empty())
    fail(path, at("model.lagrangian"),
         "[model] lagrangian is only meaningful for kind = custom");

  if (!cfg.mesh_file.empty()) {
    for (const char* k : {"nx", "ny", "lx", "ly", "periodic", "perturb_amplitude",
                          "perturb_seed"})
      if (line_of.count(std::string("mesh.") + k))
        fail(path, at(std::string("mesh.") + k),
             "a mesh file excludes the structured-mesh key '" + std::string(k) + "'");
  } else {
    if (cfg.nx < 1 || cfg.ny < 1)
      fail(path, at(cfg.nx < 1 ? "mesh.nx" : "mesh.ny"),
           "mesh dimensions must be at least 1");
    if (cfg.periodic && (cfg.nx < 2 || cfg.ny < 2))
      fail(path, at(cfg.nx < 2 ? "mesh.nx" : "mesh.ny"),
           "periodic meshes need nx and ny of at least 2");
    if (cfg.lx <= 0.0 || cfg.ly <= 0.0)
      fail(path, at(cfg.lx <= 0.0 ? "mesh.lx" : "mesh.ly"),
           "domain lengths must be positive");
    if (cfg.perturb_amplitude < 0.0)
      fail(path, at("mesh.perturb_amplitude"), "perturb_amplitude must be nonnegative");
  }
  if (cfg.degree != 1 && cfg.degree != 2)
    fail(path, at("mesh.degree"), "element degree must be 1 or 2");

  if (!(cfg.t1 > cfg.t0))
    fail(path, at("time.t1"), "t1 must exceed t0");
  if (cfg.slabs < 1) fail(path, at("time.slabs"), "slabs must be at least 1");

  if (cfg.initial_kind == "file" && cfg.initial_file.empty())
    fail(path, at("initial.kind"), "initial kind file needs [initial] file");
  if (cfg.initial_kind != "file" && !cfg.initial_file.empty())
    fail(path, at("initial.file"),
         "[initial] file is only meaningful for kind = file");

  if (!(cfg.tolerance > 0.0))
    fail(path, at("solver.tolerance"), "tolerance must be positive");
  if (cfg.max_iterations < 1)
    fail(path, at("solver.max_iterations"), "max_iterations must be at least 1");
  if (!(cfg.backtrack > 0.0 && cfg.backtrack < 1.0))
    fail(path, at("solver.backtrack"), "backtrack must lie strictly between 0 and 1");

  if (cfg.hat_count < 0)
    fail(path, at("diagnostics.hat_count"), "hat_count must be nonnegative");
  if (cfg.bump_radius && !(*cfg.bump_radius > 0.0))
    fail(path, at("diagnostics.bump_radius"), "bump_radius must be positive");

  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError(path + ": cannot open configuration file");
  return parse_config(in, path);
}

void print_default_config(std::ostream& out) {
  const RunConfig d;
  out << "# Configuration reference with every key at its default.\n"
      << "# Lines are 'key = value' grouped under [section] headers; '#' and ';'\n"
      << "# start comments.  Unknown sections or keys are rejected.\n"
      << "\n"
      << "[model]\n"
      << "# salmon: velocity-form shallow water; sg: semi-geostrophic;\n"
      << "# custom: the density given by 'lagrangian' over fields x, y, u, v\n"
      << "# with labels a, b, time t, and parameters f, g.\n"
      << "kind = " << d.model_kind << "\n"
      << "f = " << d.f << "\n"
      << "g = " << d.g << "\n"
      << "# gauge of the rotation potentials: symmetric | x-weighted | y-weighted\n"
      << "gauge = " << gauge_name(d.gauge) << "\n"
      << "# lagrangian = u*x_t + v*y_t - (u^2 + v^2)/2   (custom models only)\n"
      << "\n"
      << "[mesh]\n"
      << "# Structured nx-by-ny triangulation of [0,lx] x [0,ly]; alternatively\n"
      << "# 'file = path' loads a saved mesh and excludes the structured keys.\n"
      << "nx = " << d.nx << "\n"
      << "ny = " << d.ny << "\n"
      << "lx = " << d.lx << "\n"
      << "ly = " << d.ly << "\n"
      << "periodic = " << (d.periodic ? "true" : "false") << "\n"
      << "# continuous Lagrange element degree: 1 | 2\n"
      << "degree = " << d.degree << "\n"
      << "# deterministic vertex jitter (absolute length; 0 disables)\n"
      << "perturb_amplitude = " << d.perturb_amplitude << "\n"
      << "perturb_seed = " << d.perturb_seed << "\n"
      << "# file = mesh.txt\n"
      << "\n"
      << "[time]\n"
      << "t0 = " << d.t0 << "\n"
      << "t1 = " << d.t1 << "\n"
      << "slabs = " << d.slabs << "\n"
      << "\n"
      << "[initial]\n"
      << "# rest | rigid-rotation | shear | file\n"
      << "kind = " << d.initial_kind << "\n"
      << "# rigid-rotation: uniform velocity u = omega at t0\n"
      << "omega = " << d.omega << "\n"
      << "# shear: u = c * b at t0\n"
      << "c = " << d.shear_c << "\n"
      << "# file = state_000.txt   (a snapshot written by the run command)\n"
      << "\n"
      << "[solver]\n"
      << "# residual infinity-norm target of the per-slab Newton solve\n"
      << "tolerance = " << d.tolerance << "\n"
      << "max_iterations = " << d.max_iterations << "\n"
      << "# step shrink factor when a full Newton step fails\n"
      << "backtrack = " << d.backtrack << "\n"
      << "\n"
      << "[diagnostics]\n"
      << "# conservation identities to report: all | none | any of energy,\n"
      << "# momentum_x, momentum_y, momentum_a, momentum_b, angular\n"
      << "symmetries = all\n"
      << "# vorticity test functions: all | none | any of linears, bump, hats\n"
      << "phi_family = all\n"
      << "# bump_center_a / bump_center_b default to the domain center;\n"
      << "# bump_radius defaults to a quarter of the shorter side\n"
      << "hat_count = " << d.hat_count << "\n"
      << "\n"
      << "[output]\n"
      << "directory = " << d.output_directory << "\n";
}

}  // namespace labvar::cli
