#include "stringbreak/config.hpp"

#include <algorithm>
#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "stringbreak/errors.hpp"

namespace stringbreak {

const std::vector<std::string>& command_names() {
  static const std::vector<std::string> names{"spectrum", "crossing", "gapscaling", "ramp",
                                              "lzsweep",  "bubbles",  "scaling",    "lrphase",
                                              "lrpotential", "g0", "extended"};
  return names;
}

const std::vector<KeySpec>& config_schema() {
  using T = ValueType;
  static const std::vector<KeySpec> keys{
      {"command", T::Text, "", "experiment to run"},
      {"kernel", T::Text, "exp", "coupling family: exp | power"},
      {"xi", T::Real, "1", "exponential decay length (> 0)"},
      {"alpha", T::Real, "2.2", "power-law exponent (> 1)"},
      {"ell", T::Int, "5", "string length"},
      {"ell_list", T::IntList, "5,6,7,8,9,10,11", "string lengths for sweeps"},
      {"boundary", T::Text, "static", "exterior spins: static | dynamical"},
      {"n_ext", T::Int, "3", "dynamical exterior spins per side"},
      {"g", T::Real, "1.2", "transverse field"},
      {"h", T::Real, "0", "longitudinal field"},
      {"scan", T::Text, "h", "scanned control: h | g"},
      {"h_min", T::Real, "0", "lower end of an h scan"},
      {"h_max", T::Real, "0.5", "upper end of an h scan"},
      {"g_min", T::Real, "0", "lower end of a g scan"},
      {"g_max", T::Real, "1.5", "upper end of a g scan"},
      {"points", T::Int, "201", "points of a spectrum scan"},
      {"levels", T::Int, "8", "number of lowest levels"},
      {"ramp", T::Text, "h", "ramped control: h | g"},
      {"ramp_start", T::Real, "0", "initial value of the ramped control"},
      {"tau", T::Real, "100", "ramp time scale, control = t / tau"},
      {"tau_list", T::RealList, "4,5,6,8,10,12,15,20,25,30,40,50,60,80,100", "tau sweep"},
      {"h_final", T::Real, "1", "final value of the ramped control (h or g)"},
      {"h_final_list", T::RealList, "", "per-length final values (empty: 2 h_c)"},
      {"samples", T::Int, "201", "recorded samples per ramp"},
      {"step_dt", T::Real, "0.01", "propagation step"},
      {"krylov_dim", T::Int, "20", "maximum Krylov dimension per exponential"},
      {"krylov_tol", T::Real, "1e-12", "Krylov exponential error target"},
      {"norm_tol", T::Real, "1e-10", "allowed norm drift"},
      {"convergence_tol", T::Real, "1e-6", "step-halving tolerance (checked by tests)"},
      {"integrator", T::Text, "cf4", "cf4 | midpoint"},
      {"eig_tol", T::Real, "1e-10", "Lanczos residual target"},
      {"dense_max_sites", T::Int, "8", "largest system sent to the dense solver"},
      {"grid_points", T::Int, "201", "coarse grid of the gap-minimum search"},
      {"golden_tol", T::Real, "1e-8", "golden-section tolerance"},
      {"fit_window", T::Real, "1", "fit half-width in units of gap / slope"},
      {"fit_points", T::Int, "41", "points in the two-level fit"},
      {"alpha_list", T::RealList, "1.8,2,2.1,2.2,2.3,2.35,2.4,2.45,2.5", "alpha grid"},
      {"g_list", T::RealList, "0,0.25,0.5,0.75,1", "transverse fields for lrpotential"},
      {"ell_max", T::Int, "1000000", "largest length in the classical ell_c search"},
      {"g0_ell_max", T::Int, "64", "lengths 1..g0_ell_max at g = 0 in lrpotential"},
      {"h_c", T::Text, "auto", "critical field for the scaling fit (auto: fitted)"},
      {"tau_fit_min", T::Real, "0", "smallest tau used in the scaling fit"},
      {"tau_fit_max", T::Real, "inf", "largest tau used in the scaling fit"},
      {"collapse_tau", T::RealList, "25,50,100", "tau values exported for the collapse"},
      {"convention", T::Text, "first_principles", "first_principles | compact"},
      {"output_dir", T::Text, "out", "directory for CSV and JSON output"},
      {"threads", T::Int, "0", "worker threads (0: STRINGBREAK_THREADS or 1)"},
  };
  return keys;
}

namespace {

const KeySpec& spec_of(const std::string& key) {
  for (const auto& k : config_schema()) {
    if (k.name == key) return k;
  }
  throw ValidationError("unknown config key '" + key + "'");
}

std::string trim(const std::string& s) {
  const auto a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const auto b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

double parse_real(const std::string& key, const std::string& raw) {
  const std::string t = trim(raw);
  char* end = nullptr;
  errno = 0;
  const double v = std::strtod(t.c_str(), &end);
  if (t.empty() || *end != '\0' || errno == ERANGE || std::isnan(v)) {
    throw ValidationError("config key '" + key + "': expected a real number, got '" + raw + "'");
  }
  return v;
}

long parse_int(const std::string& key, const std::string& raw) {
  const std::string t = trim(raw);
  char* end = nullptr;
  errno = 0;
  const long v = std::strtol(t.c_str(), &end, 10);
  if (t.empty() || *end != '\0' || errno == ERANGE) {
    throw ValidationError("config key '" + key + "': expected an integer, got '" + raw + "'");
  }
  return v;
}

std::vector<std::string> split_list(const std::string& raw) {
  std::vector<std::string> out;
  std::stringstream ss(raw);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

ConfigValue parse_value(const KeySpec& spec, const std::string& raw) {
  switch (spec.type) {
    case ValueType::Int:
      return parse_int(spec.name, raw);
    case ValueType::Real:
      return parse_real(spec.name, raw);
    case ValueType::Text:
      return trim(raw);
    case ValueType::RealList: {
      std::vector<double> v;
      for (const auto& s : split_list(raw)) v.push_back(parse_real(spec.name, s));
      return v;
    }
    case ValueType::IntList: {
      std::vector<long> v;
      // "a..b" expands to every integer in [a, b]
      for (const auto& s : split_list(raw)) {
        const auto dots = s.find("..");
        if (dots == std::string::npos) {
          v.push_back(parse_int(spec.name, s));
          continue;
        }
        const long a = parse_int(spec.name, s.substr(0, dots));
        const long b = parse_int(spec.name, s.substr(dots + 2));
        if (b < a || b - a > 100000) {
          throw ValidationError("config key '" + spec.name + "': bad range '" + s + "'");
        }
        for (long x = a; x <= b; ++x) v.push_back(x);
      }
      return v;
    }
  }
  throw ValidationError("bad key type");
}

void require(bool ok, const std::string& key, const std::string& what) {
  if (!ok) throw ValidationError("config key '" + key + "': " + what);
}

void require_choice(const RunConfig& c, const std::string& key,
                    std::initializer_list<const char*> choices) {
  const auto& v = c.text(key);
  for (const char* ch : choices) {
    if (v == ch) return;
  }
  std::string list;
  for (const char* ch : choices) list += std::string(list.empty() ? "" : " | ") + ch;
  throw ValidationError("config key '" + key + "': expected " + list + ", got '" + v + "'");
}

void validate(const RunConfig& c) {
  require(!c.command.empty(), "command", "missing required key");
  const auto& names = command_names();
  require(std::find(names.begin(), names.end(), c.command) != names.end(), "command",
          "unknown command '" + c.command + "'");
  require_choice(c, "kernel", {"exp", "power"});
  require_choice(c, "boundary", {"static", "dynamical"});
  require_choice(c, "scan", {"h", "g"});
  require_choice(c, "ramp", {"h", "g"});
  require_choice(c, "integrator", {"cf4", "midpoint"});
  require_choice(c, "convention", {"first_principles", "compact"});
  require(c.real("xi") > 0 && std::isfinite(c.real("xi")), "xi", "kernel domain requires xi > 0");
  require(c.real("alpha") > 1.0 + 1e-6 && std::isfinite(c.real("alpha")), "alpha",
          "kernel domain requires alpha > 1");
  require(c.integer("ell") >= 1 && c.integer("ell") <= 24, "ell", "must lie in [1, 24]");
  for (long l : c.integers("ell_list")) require(l >= 1 && l <= 24, "ell_list", "lengths in [1, 24]");
  require(c.integer("n_ext") >= 1, "n_ext", "must be >= 1");
  require(c.real("g") >= 0, "g", "must be >= 0");
  require(c.integer("points") >= 2, "points", "must be >= 2");
  require(c.integer("levels") >= 0, "levels", "must be >= 0");
  require(c.real("tau") > 0, "tau", "must be > 0");
  for (double t : c.reals("tau_list")) require(t > 0, "tau_list", "entries must be > 0");
  require(c.integer("samples") >= 2, "samples", "must be >= 2");
  require(c.real("step_dt") > 0, "step_dt", "must be > 0");
  require(c.integer("krylov_dim") >= 2, "krylov_dim", "must be >= 2");
  require(c.real("krylov_tol") > 0, "krylov_tol", "must be > 0");
  require(c.real("norm_tol") > 0, "norm_tol", "must be > 0");
  require(c.real("eig_tol") > 0, "eig_tol", "must be > 0");
  require(c.integer("grid_points") >= 3, "grid_points", "must be >= 3");
  require(c.real("fit_window") > 0, "fit_window", "must be > 0");
  require(c.integer("fit_points") >= 4, "fit_points", "must be >= 4");
  for (double a : c.reals("alpha_list")) require(a > 1.0 + 1e-6, "alpha_list", "entries must exceed 1");
  for (double g : c.reals("g_list")) require(g >= 0, "g_list", "entries must be >= 0");
  require(c.integer("ell_max") >= 1, "ell_max", "must be >= 1");
  require(c.integer("g0_ell_max") >= 1, "g0_ell_max", "must be >= 1");
  require(c.integer("threads") >= 0, "threads", "must be >= 0");
  if (c.text("h_c") != "auto") parse_real("h_c", c.text("h_c"));
  require(!c.text("output_dir").empty(), "output_dir", "must not be empty");
}

template <typename T>
const T& get(const RunConfig& c, const std::string& key) {
  const auto it = c.values.find(key);
  if (it == c.values.end()) throw ValidationError("config key '" + key + "' not set");
  const T* v = std::get_if<T>(&it->second);
  if (!v) throw ValidationError("config key '" + key + "' has a different type");
  return *v;
}

}  // namespace

long RunConfig::integer(const std::string& key) const { return get<long>(*this, key); }
double RunConfig::real(const std::string& key) const { return get<double>(*this, key); }
const std::string& RunConfig::text(const std::string& key) const {
  return get<std::string>(*this, key);
}
const std::vector<double>& RunConfig::reals(const std::string& key) const {
  return get<std::vector<double>>(*this, key);
}
const std::vector<long>& RunConfig::integers(const std::string& key) const {
  return get<std::vector<long>>(*this, key);
}

void RunConfig::set(const std::string& key, const std::string& raw) {
  const auto& spec = spec_of(key);
  if (key == "command") {
    command = trim(raw);
    return;
  }
  values[key] = parse_value(spec, raw);
}

RunConfig parse_config(const std::string& text, const Overrides& overrides,
                       const std::string& command) {
  RunConfig c;
  for (const auto& k : config_schema()) {
    if (k.name != "command") c.values[k.name] = parse_value(k, k.default_text);
  }
  std::istringstream in(text);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config line " + std::to_string(line_no) + ": expected key=value");
    }
    const std::string key = trim(line.substr(0, eq));
    try {
      c.set(key, line.substr(eq + 1));
    } catch (const ValidationError& e) {
      throw ValidationError("config line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!command.empty()) {
    if (!c.command.empty() && c.command != command) {
      throw ValidationError("config key 'command': file says '" + c.command +
                            "' but '" + command + "' was requested");
    }
    c.command = command;
  }
  for (const auto& [key, raw] : overrides) c.set(key, raw);
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path, const Overrides& overrides,
                      const std::string& command) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ValidationError("cannot open config file '" + path + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_config(buf.str(), overrides, command);
}

std::string value_text(const ConfigValue& v) {
  auto real = [](double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return std::string(buf);
  };
  return std::visit(
      [&](const auto& x) -> std::string {
        using X = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<X, long>) {
          return std::to_string(x);
        } else if constexpr (std::is_same_v<X, double>) {
          return real(x);
        } else if constexpr (std::is_same_v<X, std::string>) {
          return x;
        } else if constexpr (std::is_same_v<X, std::vector<double>>) {
          std::string s;
          for (std::size_t i = 0; i < x.size(); ++i) s += (i ? "," : "") + real(x[i]);
          return s;
        } else {
          std::string s;
          for (std::size_t i = 0; i < x.size(); ++i) s += (i ? "," : "") + std::to_string(x[i]);
          return s;
        }
      },
      v);
}

std::string serialize(const RunConfig& config) {
  std::string out = "command=" + config.command + "\n";
  for (const auto& [key, value] : config.values) out += key + "=" + value_text(value) + "\n";
  return out;
}

}  // namespace stringbreak
