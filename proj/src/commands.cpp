#include "stringbreak/commands.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <thread>

#include "stringbreak/csv.hpp"
#include "stringbreak/dynamics.hpp"
#include "stringbreak/errors.hpp"
#include "stringbreak/fitting.hpp"
#include "stringbreak/statics.hpp"

#ifndef STRINGBREAK_VERSION
#define STRINGBREAK_VERSION "unknown"
#endif

namespace stringbreak {

namespace fs = std::filesystem;
using json = nlohmann::json;

std::string version_string() { return STRINGBREAK_VERSION; }

// ---- schemas ----

namespace {

using R = ColumnGroup::Repeat;

ColumnGroup col(std::string name) { return {std::move(name), R::Once, 0}; }
ColumnGroup levels_of(std::string prefix) { return {std::move(prefix), R::Levels, 0}; }
ColumnGroup sites_of(std::string prefix) { return {std::move(prefix), R::Ell, 1}; }

std::vector<ColumnGroup> cols(std::initializer_list<const char*> names) {
  std::vector<ColumnGroup> out;
  for (const char* n : names) out.push_back(col(n));
  return out;
}

const std::map<std::string, std::vector<CsvSchema>>& all_schemas() {
  static const std::map<std::string, std::vector<CsvSchema>> table = [] {
    std::map<std::string, std::vector<CsvSchema>> m;
    m["spectrum"] = {{"spectrum.csv", "lowest levels along the scan, m_k = <sigma^z> per site",
                      {col("control"), levels_of("E_"), levels_of("m_")}}};
    m["crossing"] = {
        {"crossing.csv", "E1 - E0 over the fit window and the fitted hyperbola",
         cols({"control", "gap", "gap_fit"})},
        {"crossing_fit.csv", "two-level fit of the avoided crossing",
         cols({"control_c", "gap_c", "slope", "residual", "gap_min", "x_min", "window_lo",
               "window_hi", "tau_star"})}};
    m["gapscaling"] = {
        {"gapscaling.csv", "crossing per length (excluded = 1 when left out of the fit)",
         cols({"ell", "h_c", "gap_c", "slope", "excluded"})},
        {"gapscaling_fit.csv", "gap_c ~ prefactor (g / base)^ell",
         cols({"g", "base", "prefactor", "rms_residual"})}};
    {
      std::vector<ColumnGroup> ramp{col("t"), col("control"), col("m_z"), sites_of("mz_site_"),
                                    levels_of("P_")};
      for (const char* n : {"P_beyond", "C", "V", "P_m", "E", "norm_error"}) ramp.push_back(col(n));
      m["ramp"] = {{"ramp.csv", "observables per sample (P_beyond = 1 - P_0 - P_1)", ramp},
                   {"bubbles.csv", "bubble histogram, long form", cols({"t", "r", "P_d"})}};
    }
    m["lzsweep"] = {
        {"lzsweep.csv", "final populations of each ramp against Landau-Zener",
         cols({"ell", "tau", "h_final", "P_0", "P_1", "P_beyond_max", "P_LZ", "P_m"})},
        {"lzsweep_crossings.csv", "avoided crossing per length",
         cols({"ell", "h_c", "gap_c", "slope", "tau_star"})}};
    m["bubbles"] = {
        {"bubbles.csv", "bubble histogram per length, long form",
         cols({"ell", "t", "control", "r", "P_d"})},
        {"bubbles_summary.csv", "sign change of m_z and mode of the final histogram",
         cols({"ell", "h_sb", "mode_r", "P_mode", "m_z_final"})},
        {"bubble_fields.csv", "classical crossing field of an r-bubble",
         cols({"ell", "r", "h_c"})}};
    m["scaling"] = {
        {"scaling_curves.csv", "m_z along each ramp", cols({"tau", "t", "control", "m_z"})},
        {"scaling.csv", "first sign change of m_z", cols({"tau", "h_sb", "delta_h"})},
        {"sign_changes.csv", "every sign change of m_z", cols({"tau", "index", "control"})},
        {"scaling_fit.csv", "h_sb - h_c = prefactor tau^exponent",
         cols({"h_c", "prefactor", "exponent", "rms_residual", "n_used"})},
        {"collapse.csv", "x = (h - h_c) tau^(-exponent)", cols({"tau", "x", "m_z"})}};
    m["lrphase"] = {{"lrphase.csv", "classical critical length (-1: none)",
                     cols({"alpha", "ell_c", "beyond_scan"})}};
    m["lrpotential"] = {
        {"lrpotential.csv", "potentials of the two lowest levels",
         cols({"g", "ell", "V_0", "V_1", "m_0", "m_1"})},
        {"lrpotential_lc.csv", "critical length per g (-1: none)", cols({"g", "ell_c", "breaks"})}};
    m["g0"] = {{"g0.csv", "classical energies and potentials (h_c: exponential kernel only)",
                cols({"ell", "E_s", "E_bs", "E_vac", "gap", "V_s", "V_bs", "h_c"})},
               {"g0_fields.csv", "frozen-spin fields on the string", cols({"ell", "site", "h_eff", "h_vac"})}};
    m["extended"] = {{"extended.csv", "string profile with static and dynamical exterior spins",
                      cols({"t", "control", "site", "m_static", "m_dynamical", "diff"})}};
    return m;
  }();
  return table;
}

}  // namespace

const std::vector<CsvSchema>& command_schemas(const std::string& command) {
  const auto& t = all_schemas();
  const auto it = t.find(command);
  if (it == t.end()) throw ValidationError("unknown command '" + command + "'");
  return it->second;
}

const CsvSchema& find_schema(const std::string& command, const std::string& file) {
  for (const auto& s : command_schemas(command)) {
    if (s.file == file) return s;
  }
  throw Error("no schema for " + command + "/" + file);
}

std::vector<std::string> expand_columns(const CsvSchema& schema, int levels, int ell) {
  std::vector<std::string> out;
  for (const auto& c : schema.columns) {
    const int n = c.repeat == R::Once ? 0 : (c.repeat == R::Levels ? levels : ell);
    if (c.repeat == R::Once) {
      out.push_back(c.name);
      continue;
    }
    for (int i = 0; i < n; ++i) out.push_back(c.name + std::to_string(c.first + i));
  }
  return out;
}

std::string schema_help(const std::string& command) {
  std::string out;
  for (const auto& s : command_schemas(command)) {
    out += "  " + s.file + ": ";
    for (std::size_t i = 0; i < s.columns.size(); ++i) {
      const auto& c = s.columns[i];
      if (i) out += ", ";
      if (c.repeat == R::Once) {
        out += c.name;
      } else if (c.repeat == R::Levels) {
        out += c.name + "0.." + c.name + "{levels-1}";
      } else {
        out += c.name + "1.." + c.name + "{ell}";
      }
    }
    out += "\n      " + s.description + "\n";
  }
  out += "  metadata.json: command, version, config, runtime_seconds, results, files\n";
  return out;
}

std::string command_summary(const std::string& command) {
  static const std::map<std::string, std::string> text{
      {"spectrum", "lowest levels along an h or g scan"},
      {"crossing", "locate and fit the string / broken-string avoided crossing"},
      {"gapscaling", "crossing gap against string length"},
      {"ramp", "one linear ramp with full observables"},
      {"lzsweep", "Landau-Zener comparison over lengths and ramp times"},
      {"bubbles", "bubble histograms after slow ramps"},
      {"scaling", "delayed breaking field against ramp time"},
      {"lrphase", "long-range phase boundaries and classical critical lengths"},
      {"lrpotential", "long-range string potential and critical length against g"},
      {"g0", "closed-form classical energies"},
      {"extended", "static against dynamical exterior spins"}};
  return text.at(command);
}

// ---- threading ----

int worker_count(const RunConfig& config) {
  long n = config.integer("threads");
  if (n <= 0) n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("STRINGBREAK_THREADS")) {
    char* end = nullptr;
    const long cap = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || cap < 1) {
      throw ValidationError("STRINGBREAK_THREADS must be a positive integer");
    }
    n = std::min(n, cap);
  }
  return static_cast<int>(n);
}

void parallel_for(std::size_t n, int workers, const std::function<void(std::size_t)>& f) {
  const std::size_t w = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, workers)));
  if (w <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr first;
  std::mutex mu;
  auto body = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= n) return;
      {
        std::lock_guard lock(mu);
        if (first) return;
      }
      try {
        f(i);
      } catch (...) {
        std::lock_guard lock(mu);
        if (!first) first = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  for (std::size_t k = 0; k < w; ++k) pool.emplace_back(body);
  for (auto& t : pool) t.join();
  if (first) std::rethrow_exception(first);
}

// ---- command plumbing ----

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

CouplingKernel kernel_of(const RunConfig& c) {
  return c.text("kernel") == "exp" ? CouplingKernel::exponential(c.real("xi"))
                                   : CouplingKernel::power_law(c.real("alpha"));
}

ChainSpec chain_of(const RunConfig& c, int ell) {
  if (c.text("boundary") == "dynamical") {
    return ChainSpec(ell, kernel_of(c), DynamicalExternal{static_cast<int>(c.integer("n_ext"))});
  }
  return ChainSpec(ell, kernel_of(c));
}

EigenOptions eigen_of(const RunConfig& c) {
  EigenOptions e;
  e.tol = c.real("eig_tol");
  e.dense_max_sites = static_cast<int>(c.integer("dense_max_sites"));
  return e;
}

CrossingOptions crossing_of(const RunConfig& c) {
  CrossingOptions o;
  o.grid_points = static_cast<int>(c.integer("grid_points"));
  o.golden_tol = c.real("golden_tol");
  o.window = c.real("fit_window");
  o.fit_points = static_cast<int>(c.integer("fit_points"));
  o.eigen = eigen_of(c);
  return o;
}

PropagatorConfig propagator_of(const RunConfig& c) {
  PropagatorConfig p;
  p.step_dt = c.real("step_dt");
  p.krylov_dim = static_cast<int>(c.integer("krylov_dim"));
  p.krylov_tol = c.real("krylov_tol");
  p.norm_tol = c.real("norm_tol");
  p.convergence_tol = c.real("convergence_tol");
  p.integrator = c.text("integrator") == "cf4" ? Integrator::CommutatorFree4 : Integrator::Midpoint;
  return p;
}

RampSchedule schedule_of(const RunConfig& c, double tau, double final_value) {
  RampSchedule s;
  const bool ramp_h = c.text("ramp") == "h";
  s.mode = ramp_h ? RampMode::RampH : RampMode::RampG;
  s.fixed = ramp_h ? c.real("g") : c.real("h");
  s.tau = tau;
  s.start = c.real("ramp_start");
  s.final_value = final_value;
  s.samples = static_cast<int>(c.integer("samples"));
  s.validate();
  return s;
}

int ell_of(const RunConfig& c) { return static_cast<int>(c.integer("ell")); }

std::vector<int> ells_of(const RunConfig& c) {
  std::vector<int> out;
  for (long l : c.integers("ell_list")) out.push_back(static_cast<int>(l));
  if (out.empty()) throw ValidationError("config key 'ell_list': must not be empty");
  return out;
}

// h window of the string-breaking crossing: [0, 2 h_c(g = 0)] when the closed
// form exists, otherwise [h_min, h_max].
std::pair<double, double> breaking_window(const RunConfig& c, const ChainSpec& chain) {
  if (chain.kernel().is_exponential() && chain.has_static_external()) {
    return {0.0, 2.0 * g0_breaking_field(chain)};
  }
  return {c.real("h_min"), c.real("h_max")};
}

CrossingFit breaking_crossing(const RunConfig& c, int ell) {
  const ChainSpec chain = chain_of(c, ell);
  const auto [lo, hi] = breaking_window(c, chain);
  return locate_avoided_crossing(chain, c.real("g"), lo, hi, ScanMode::ScanH, crossing_of(c));
}

double tau_star_or_nan(const CrossingFit& f) {
  return (f.gap_c > 0 && f.slope > 0) ? landau_zener_time(f.gap_c, f.slope) : kNaN;
}

json fit_json(const CrossingFit& f) {
  return {{"control_c", f.control_c}, {"gap_c", f.gap_c},     {"slope", f.slope},
          {"residual", f.residual},   {"gap_min", f.gap_min}, {"x_min", f.x_min},
          {"window_lo", f.window_lo}, {"window_hi", f.window_hi}, {"tau_star", tau_star_or_nan(f)}};
}

json config_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  for (const auto& [key, v] : c.values) {
    std::visit([&](const auto& x) { j[key] = x; }, v);
  }
  return j;
}

// Collects output files of one run.
class Output {
 public:
  Output(const RunConfig& c) : c_(c), dir_(c.text("output_dir")) {
    std::error_code ec;
    fs::create_directories(dir_, ec);
    if (ec) throw Error("cannot create output directory '" + dir_.string() + "': " + ec.message());
  }

  CsvWriter csv(const std::string& file, int levels = 0, int ell = 0) {
    const auto& schema = find_schema(c_.command, file);
    files_.push_back(file);
    return CsvWriter((dir_ / file).string(), expand_columns(schema, levels, ell));
  }

  const std::vector<std::string>& files() const { return files_; }
  const fs::path& dir() const { return dir_; }

 private:
  const RunConfig& c_;
  fs::path dir_;
  std::vector<std::string> files_;
};

json ramp_summary(const RampResult& r) {
  json j{{"steps", r.steps},
         {"max_norm_error", r.max_norm_error},
         {"krylov_matvecs", r.krylov.matvecs},
         {"krylov_substeps", r.krylov.substeps},
         {"krylov_max_error_estimate", r.krylov.max_error_estimate}};
  return j;
}

// ---- commands ----

json cmd_spectrum(const RunConfig& c, Output& out) {
  const ChainSpec chain = chain_of(c, ell_of(c));
  const bool scan_h = c.text("scan") == "h";
  const double lo = scan_h ? c.real("h_min") : c.real("g_min");
  const double hi = scan_h ? c.real("h_max") : c.real("g_max");
  const int points = static_cast<int>(c.integer("points"));
  const int levels = static_cast<int>(c.integer("levels"));
  if (levels < 1) throw ValidationError("config key 'levels': spectrum needs at least one level");
  std::vector<double> controls(points);
  for (int i = 0; i < points; ++i) controls[i] = lo + (hi - lo) * i / (points - 1);
  const double fixed = scan_h ? c.real("g") : c.real("h");
  const auto mode = scan_h ? ScanMode::ScanH : ScanMode::ScanG;
  const auto eig = eigen_of(c);

  std::vector<SpectrumSlice> slices(points);
  parallel_for(points, worker_count(c), [&](std::size_t i) {
    slices[i] = spectrum_scan(chain, fixed, std::span(&controls[i], 1), mode, levels, eig).front();
  });

  auto csv = out.csv("spectrum.csv", levels);
  double max_residual = 0.0;
  for (const auto& s : slices) {
    std::vector<double> row{s.control};
    row.insert(row.end(), s.energies.begin(), s.energies.end());
    row.insert(row.end(), s.magnetizations.begin(), s.magnetizations.end());
    csv.row(row);
    for (double r : s.residuals) max_residual = std::max(max_residual, r);
  }
  csv.close();
  return {{"points", points}, {"levels", levels}, {"max_residual", max_residual},
          {"dimension", std::size_t{1} << chain.num_dynamical()}};
}

json cmd_crossing(const RunConfig& c, Output& out) {
  const ChainSpec chain = chain_of(c, ell_of(c));
  const bool scan_h = c.text("scan") == "h";
  const double lo = scan_h ? c.real("h_min") : c.real("g_min");
  const double hi = scan_h ? c.real("h_max") : c.real("g_max");
  const double fixed = scan_h ? c.real("g") : c.real("h");
  const auto mode = scan_h ? ScanMode::ScanH : ScanMode::ScanG;
  const auto opt = crossing_of(c);
  const auto fit = locate_avoided_crossing(chain, fixed, lo, hi, mode, opt);

  const IsingHamiltonian ham(chain, make_fields(chain, scan_h ? 0.0 : fixed, scan_h ? fixed : 0.0));
  const int n = opt.fit_points;
  std::vector<double> xs(n), gaps(n);
  for (int i = 0; i < n; ++i) xs[i] = fit.window_lo + (fit.window_hi - fit.window_lo) * i / (n - 1);
  parallel_for(n, worker_count(c),
               [&](std::size_t i) { gaps[i] = two_level_gap(ham, fixed, xs[i], mode, opt.eigen); });
  auto csv = out.csv("crossing.csv");
  for (int i = 0; i < n; ++i) {
    csv.row({xs[i], gaps[i], hyperbola_gap(xs[i], fit.control_c, fit.gap_c, fit.slope)});
  }
  csv.close();
  auto fcsv = out.csv("crossing_fit.csv");
  fcsv.row({fit.control_c, fit.gap_c, fit.slope, fit.residual, fit.gap_min, fit.x_min,
            fit.window_lo, fit.window_hi, tau_star_or_nan(fit)});
  fcsv.close();
  json j = fit_json(fit);
  j[scan_h ? "h_c" : "g_c"] = fit.control_c;
  return j;
}

json cmd_gapscaling(const RunConfig& c, Output& out) {
  if (c.text("kernel") != "exp" || c.text("boundary") != "static") {
    throw ValidationError("gapscaling needs kernel=exp and boundary=static");
  }
  const auto ells = ells_of(c);
  std::vector<GapScalingPoint> points(ells.size());
  parallel_for(ells.size(), worker_count(c), [&](std::size_t i) {
    const auto f = breaking_crossing(c, ells[i]);
    points[i] = {ells[i], f.control_c, f.gap_c, f.slope, false};
  });
  const auto fit = fit_gap_scaling(c.real("g"), points);
  auto csv = out.csv("gapscaling.csv");
  for (const auto& p : fit.points) csv.row({double(p.ell), p.h_c, p.gap_c, p.slope, p.excluded ? 1.0 : 0.0});
  csv.close();
  auto fcsv = out.csv("gapscaling_fit.csv");
  fcsv.row({c.real("g"), fit.base, fit.prefactor, fit.rms_residual});
  fcsv.close();
  return {{"base", fit.base}, {"prefactor", fit.prefactor}, {"rms_residual", fit.rms_residual},
          {"warnings", fit.warnings}};
}

ObservableOptions observables_of(const RunConfig& c, int levels, bool potential, bool bubbles) {
  ObservableOptions o;
  o.levels = levels;
  o.potential = potential;
  o.bubbles = bubbles;
  o.eigen = eigen_of(c);
  return o;
}

json cmd_ramp(const RunConfig& c, Output& out) {
  const int ell = ell_of(c);
  const ChainSpec chain = chain_of(c, ell);
  const int levels = static_cast<int>(
      std::min<long>(c.integer("levels"), long{1} << std::min(chain.num_dynamical(), 30)));
  const auto sched = schedule_of(c, c.real("tau"), c.real("h_final"));
  const auto res = propagate_ramp(chain, sched, propagator_of(c), observables_of(c, levels, true, true));

  auto csv = out.csv("ramp.csv", levels, ell);
  auto bcsv = out.csv("bubbles.csv");
  double p_beyond_max = 0.0;
  for (const auto& s : res.samples) {
    std::vector<double> row{s.t, s.control, s.m_z};
    row.insert(row.end(), s.profile.begin(), s.profile.end());
    row.insert(row.end(), s.populations.begin(), s.populations.end());
    const double pb = levels >= 2 ? s.p_beyond : kNaN;
    if (levels >= 2) p_beyond_max = std::max(p_beyond_max, pb);
    for (double v : {pb, s.correlator, s.potential, s.p_m, s.energy, s.norm_error}) row.push_back(v);
    csv.row(row);
    for (std::size_t r = 0; r < s.bubbles.size(); ++r) bcsv.row({s.t, double(r), s.bubbles[r]});
  }
  csv.close();
  bcsv.close();

  json j = ramp_summary(res);
  std::vector<double> controls, mz;
  for (const auto& s : res.samples) {
    controls.push_back(s.control);
    mz.push_back(s.m_z);
  }
  j["sign_changes"] = sign_changes(controls, mz);
  const auto& last = res.samples.back();
  j["m_z_final"] = last.m_z;
  if (levels >= 2) {
    j["P_0_final"] = last.populations[0];
    j["P_1_final"] = last.populations[1];
    j["P_beyond_max"] = p_beyond_max;
  }
  return j;
}

json cmd_lzsweep(const RunConfig& c, Output& out) {
  if (c.text("ramp") != "h") throw ValidationError("lzsweep ramps h (ramp=h)");
  const auto ells = ells_of(c);
  const auto& taus = c.reals("tau_list");
  const auto& hf_list = c.reals("h_final_list");
  if (!hf_list.empty() && hf_list.size() != ells.size()) {
    throw ValidationError("config key 'h_final_list': needs one value per entry of ell_list");
  }
  const int workers = worker_count(c);
  std::vector<CrossingFit> fits(ells.size());
  parallel_for(ells.size(), workers, [&](std::size_t i) { fits[i] = breaking_crossing(c, ells[i]); });

  struct Job {
    std::size_t ell_index;
    double tau;
  };
  std::vector<Job> jobs;
  for (std::size_t i = 0; i < ells.size(); ++i) {
    for (double tau : taus) jobs.push_back({i, tau});
  }
  struct Row {
    double h_final, p0, p1, p_beyond_max, p_lz, p_m;
  };
  std::vector<Row> rows(jobs.size());
  const auto prop = propagator_of(c);
  parallel_for(jobs.size(), workers, [&](std::size_t k) {
    const auto [i, tau] = jobs[k];
    const ChainSpec chain = chain_of(c, ells[i]);
    const double hf = hf_list.empty() ? 2.0 * fits[i].control_c : hf_list[i];
    const auto res = propagate_ramp(chain, schedule_of(c, tau, hf), prop, observables_of(c, 2, false, false));
    double pb = 0.0;
    for (const auto& s : res.samples) pb = std::max(pb, s.p_beyond);
    const auto& last = res.samples.back();
    rows[k] = {hf, last.populations[0], last.populations[1], pb,
               landau_zener_probability(fits[i].gap_c, fits[i].slope, tau), last.p_m};
  });

  auto csv = out.csv("lzsweep.csv");
  json per_ell = json::array();
  for (std::size_t i = 0; i < ells.size(); ++i) {
    double max_diff = 0.0, max_beyond = 0.0;
    for (std::size_t k = 0; k < jobs.size(); ++k) {
      if (jobs[k].ell_index != i) continue;
      const auto& r = rows[k];
      csv.row({double(ells[i]), jobs[k].tau, r.h_final, r.p0, r.p1, r.p_beyond_max, r.p_lz, r.p_m});
      max_diff = std::max(max_diff, std::abs(r.p1 - r.p_lz));
      max_beyond = std::max(max_beyond, r.p_beyond_max);
    }
    per_ell.push_back({{"ell", ells[i]},
                       {"h_c", fits[i].control_c},
                       {"tau_star", tau_star_or_nan(fits[i])},
                       {"max_abs_P1_minus_PLZ", max_diff},
                       {"P_beyond_max", max_beyond}});
  }
  csv.close();
  auto fcsv = out.csv("lzsweep_crossings.csv");
  for (std::size_t i = 0; i < ells.size(); ++i) {
    fcsv.row({double(ells[i]), fits[i].control_c, fits[i].gap_c, fits[i].slope, tau_star_or_nan(fits[i])});
  }
  fcsv.close();
  return {{"lengths", per_ell}};
}

json cmd_bubbles(const RunConfig& c, Output& out) {
  const auto ells = ells_of(c);
  std::vector<RampResult> runs(ells.size());
  const auto prop = propagator_of(c);
  parallel_for(ells.size(), worker_count(c), [&](std::size_t i) {
    runs[i] = propagate_ramp(chain_of(c, ells[i]), schedule_of(c, c.real("tau"), c.real("h_final")),
                             prop, observables_of(c, 0, false, true));
  });
  auto csv = out.csv("bubbles.csv");
  auto scsv = out.csv("bubbles_summary.csv");
  json per_ell = json::array();
  for (std::size_t i = 0; i < ells.size(); ++i) {
    for (const auto& s : runs[i].samples) {
      for (std::size_t r = 0; r < s.bubbles.size(); ++r) {
        csv.row({double(ells[i]), s.t, s.control, double(r), s.bubbles[r]});
      }
    }
    const auto& last = runs[i].samples.back();
    const auto mode = std::max_element(last.bubbles.begin(), last.bubbles.end()) - last.bubbles.begin();
    double h_sb = kNaN;
    try {
      h_sb = locate_sign_change(runs[i]);
    } catch (const NotFoundError&) {
    }
    scsv.row({double(ells[i]), h_sb, double(mode), last.bubbles[mode], last.m_z});
    per_ell.push_back({{"ell", ells[i]}, {"h_sb", std::isnan(h_sb) ? json() : json(h_sb)},
                       {"mode_r", mode}, {"final_P_d", last.bubbles}, {"ramp", ramp_summary(runs[i])}});
  }
  csv.close();
  scsv.close();

  const auto convention =
      c.text("convention") == "compact" ? EnergyConvention::Compact : EnergyConvention::FirstPrinciples;
  auto fcsv = out.csv("bubble_fields.csv");
  for (int ell : ells) {
    const ChainSpec chain(ell, kernel_of(c));
    const auto fields = bubble_crossing_fields(chain, convention);
    for (std::size_t r = 0; r < fields.size(); ++r) fcsv.row({double(ell), double(r + 1), fields[r]});
  }
  fcsv.close();
  return {{"lengths", per_ell}};
}

json cmd_scaling(const RunConfig& c, Output& out) {
  if (c.text("ramp") != "h") throw ValidationError("scaling ramps h (ramp=h)");
  const int ell = ell_of(c);
  const ChainSpec chain = chain_of(c, ell);
  const auto& taus = c.reals("tau_list");
  const int workers = worker_count(c);

  json j;
  double h_c = 0.0;
  if (c.text("h_c") == "auto") {
    const auto fit = breaking_crossing(c, ell);
    h_c = fit.control_c;
    j["crossing"] = fit_json(fit);
  } else {
    h_c = std::strtod(c.text("h_c").c_str(), nullptr);
  }
  j["h_c"] = h_c;

  std::vector<RampResult> runs(taus.size());
  const auto prop = propagator_of(c);
  parallel_for(taus.size(), workers, [&](std::size_t i) {
    runs[i] = propagate_ramp(chain, schedule_of(c, taus[i], c.real("h_final")), prop,
                             observables_of(c, 0, false, false));
    runs[i].final_state.clear();
    runs[i].final_state.shrink_to_fit();
  });

  auto curves = out.csv("scaling_curves.csv");
  auto table = out.csv("scaling.csv");
  auto changes = out.csv("sign_changes.csv");
  std::vector<std::pair<double, double>> pairs;
  for (std::size_t i = 0; i < runs.size(); ++i) {
    std::vector<double> controls, mz;
    for (const auto& s : runs[i].samples) {
      curves.row({taus[i], s.t, s.control, s.m_z});
      controls.push_back(s.control);
      mz.push_back(s.m_z);
    }
    const auto all = sign_changes(controls, mz);
    for (std::size_t k = 0; k < all.size(); ++k) changes.row({taus[i], double(k), all[k]});
    const double h_sb = all.empty() ? kNaN : all.front();
    table.row({taus[i], h_sb, h_sb - h_c});
    if (!all.empty() && taus[i] >= c.real("tau_fit_min") && taus[i] <= c.real("tau_fit_max")) {
      pairs.emplace_back(taus[i], h_sb);
    }
  }
  curves.close();
  table.close();
  changes.close();

  const auto fit = scaling_fit(pairs, h_c);
  auto fcsv = out.csv("scaling_fit.csv");
  fcsv.row({h_c, fit.prefactor, fit.exponent, fit.rms_residual, double(fit.used.size())});
  fcsv.close();

  std::vector<RampResult> chosen;
  for (double t : c.reals("collapse_tau")) {
    const auto it = std::find(taus.begin(), taus.end(), t);
    if (it == taus.end()) {
      throw ValidationError("config key 'collapse_tau': " + format_real(t) + " is not in tau_list");
    }
    chosen.push_back(runs[it - taus.begin()]);
  }
  auto ccsv = out.csv("collapse.csv");
  for (const auto& p : collapse_curves(chosen, h_c, fit.exponent)) ccsv.row({p.tau, p.x, p.m_z});
  ccsv.close();

  j["prefactor"] = fit.prefactor;
  j["exponent"] = fit.exponent;
  j["rms_residual"] = fit.rms_residual;
  j["warnings"] = fit.warnings;
  return j;
}

json cmd_lrphase(const RunConfig& c, Output& out) {
  const auto pb = lr_phase_boundaries(c.reals("alpha_list"), c.integer("ell_max"));
  auto csv = out.csv("lrphase.csv");
  json table = json::array();
  for (const auto& l : pb.lc_table) {
    csv.row({l.alpha, l.ell_c ? double(*l.ell_c) : -1.0, l.beyond_scan ? 1.0 : 0.0});
    table.push_back({{"alpha", l.alpha},
                     {"ell_c", l.ell_c ? json(*l.ell_c) : json()},
                     {"beyond_scan", l.beyond_scan}});
  }
  csv.close();
  return {{"alpha_min", pb.alpha_min}, {"alpha_max", pb.alpha_max}, {"critical_lengths", table}};
}

json cmd_lrpotential(const RunConfig& c, Output& out) {
  if (c.text("boundary") != "static") throw ValidationError("lrpotential needs boundary=static");
  const auto& gs = c.reals("g_list");
  const auto ells = ells_of(c);
  std::vector<int> g0_ells;
  for (int l = 1; l <= c.integer("g0_ell_max"); ++l) g0_ells.push_back(l);
  std::vector<PotentialCurve> curves(gs.size());
  const auto kernel = kernel_of(c);
  const auto eig = eigen_of(c);
  parallel_for(gs.size(), worker_count(c), [&](std::size_t i) {
    curves[i] = static_potential_curve(kernel, gs[i], c.real("h"), gs[i] == 0.0 ? g0_ells : ells, eig);
  });
  auto csv = out.csv("lrpotential.csv");
  auto lcsv = out.csv("lrpotential_lc.csv");
  json per_g = json::array();
  for (std::size_t i = 0; i < gs.size(); ++i) {
    for (const auto& p : curves[i].points) {
      csv.row({gs[i], double(p.ell), p.v_ground, p.v_excited, p.m_ground, p.m_excited});
    }
    const double lc = curves[i].ell_c ? double(*curves[i].ell_c) : -1.0;
    lcsv.row({gs[i], lc, curves[i].breaks ? 1.0 : 0.0});
    per_g.push_back({{"g", gs[i]},
                     {"ell_c", curves[i].ell_c ? json(*curves[i].ell_c) : json()},
                     {"breaks", curves[i].breaks}});
  }
  csv.close();
  lcsv.close();
  return {{"critical_lengths", per_g}};
}

json cmd_g0(const RunConfig& c, Output& out) {
  const auto ells = ells_of(c);
  const double h = c.real("h");
  auto csv = out.csv("g0.csv");
  auto fcsv = out.csv("g0_fields.csv");
  for (int ell : ells) {
    const ChainSpec chain(ell, kernel_of(c));
    const double es = g0_string_energy(chain, h), ebs = g0_broken_energy(chain, h);
    const double ev = g0_vacuum_energy(chain, h);
    const double shift = 4.0 * h + potential_offset(chain);
    const double hc = chain.kernel().is_exponential() ? g0_breaking_field(chain) : kNaN;
    csv.row({double(ell), es, ebs, ev, g0_energy_gap(chain, h), es - ev + shift, ebs - ev + shift, hc});
    const auto he = effective_field(chain);
    const auto hv = vacuum_field(chain);
    for (int j = 0; j < ell; ++j) fcsv.row({double(ell), double(j + 1), he[j], hv[j]});
  }
  csv.close();
  fcsv.close();
  json j;
  if (c.text("kernel") == "exp") {
    const auto k = g0_potential_coefficients(kernel_of(c));
    j["coefficients"] = {{"a_s", k.a_s}, {"b_s", k.b_s}, {"a_bs", k.a_bs}, {"b_bs", k.b_bs}};
    const double xi = c.real("xi");
    const double q = std::exp(-1.0 / xi);
    // ell -> infinity limit of ell h_c(ell)
    j["ell_h_c_limit"] = 2.0 * (1.0 - 2.0 * q) / ((1.0 - q) * (1.0 - q));
  }
  return j;
}

json cmd_extended(const RunConfig& c, Output& out) {
  if (c.text("ramp") != "h") throw ValidationError("extended ramps h (ramp=h)");
  const int ell = ell_of(c);
  const auto cmp = run_extended_chain(c.real("tau"), c.real("g"), c.real("h_final"), propagator_of(c),
                                      static_cast<int>(c.integer("samples")),
                                      static_cast<int>(c.integer("n_ext")), ell, kernel_of(c));
  auto csv = out.csv("extended.csv");
  for (std::size_t k = 0; k < cmp.static_run.samples.size(); ++k) {
    const auto& a = cmp.static_run.samples[k];
    const auto& b = cmp.dynamical_run.samples[k];
    for (int j = 0; j < ell; ++j) {
      csv.row({a.t, a.control, double(j + 1), a.profile[j], b.profile[j], b.profile[j] - a.profile[j]});
    }
  }
  csv.close();
  json j{{"max_inner_difference", cmp.max_inner_difference},
         {"static", ramp_summary(cmp.static_run)},
         {"dynamical", ramp_summary(cmp.dynamical_run)}};
  return j;
}

}  // namespace

CommandReport run_command(const RunConfig& config) {
  using clock = std::chrono::steady_clock;
  const auto t0 = clock::now();
  Output out(config);
  static const std::map<std::string, json (*)(const RunConfig&, Output&)> table{
      {"spectrum", cmd_spectrum}, {"crossing", cmd_crossing},       {"gapscaling", cmd_gapscaling},
      {"ramp", cmd_ramp},         {"lzsweep", cmd_lzsweep},         {"bubbles", cmd_bubbles},
      {"scaling", cmd_scaling},   {"lrphase", cmd_lrphase},         {"lrpotential", cmd_lrpotential},
      {"g0", cmd_g0},             {"extended", cmd_extended}};
  const auto it = table.find(config.command);
  if (it == table.end()) throw ValidationError("unknown command '" + config.command + "'");

  CommandReport report;
  report.results = it->second(config, out);
  report.files = out.files();
  report.files.push_back("metadata.json");

  const double seconds = std::chrono::duration<double>(clock::now() - t0).count();
  json meta{{"command", config.command},
            {"version", version_string()},
            {"config", config_json(config)},
            {"config_text", serialize(config)},
            {"runtime_seconds", seconds},
            {"results", report.results},
            {"files", report.files}};
  const auto path = out.dir() / "metadata.json";
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << meta.dump(2) << '\n';
  if (!f) throw Error("cannot write " + path.string());
  return report;
}

int run_command_status(const RunConfig& config, std::string* message) {
  try {
    run_command(config);
    return 0;
  } catch (const ValidationError& e) {
    if (message) *message = e.what();
    return 1;
  } catch (const NumericalError& e) {
    if (message) *message = e.what();
    return 2;
  } catch (const std::exception& e) {
    if (message) *message = e.what();
    return 2;
  }
}

}  // namespace stringbreak
