#include "fsi/config.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

namespace fsi {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt(double v) {
  char buf[32];
  const auto r = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, r.ptr);
}

double to_double(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw Error("not a number: '" + s + "'");
  return v;
}

long long to_int(const std::string& s) {
  long long v = 0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw Error("not an integer: '" + s + "'");
  return v;
}

bool to_bool(const std::string& s) {
  if (s == "true" || s == "1" || s == "yes") return true;
  if (s == "false" || s == "0" || s == "no") return false;
  throw Error("not a boolean: '" + s + "'");
}

std::vector<double> to_doubles(const std::string& s) {
  std::istringstream is(s);
  std::vector<double> out;
  std::string tok;
  while (is >> tok) out.push_back(to_double(tok));
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string s;
  for (double x : v) s += (s.empty() ? "" : " ") + fmt(x);
  return s;
}

std::string case_name(CaseFlag c) { return c == CaseFlag::I ? "I" : c == CaseFlag::II ? "II" : "auto"; }

struct Key {
  std::string section, name;
  std::function<void(RunConfig&, const std::string&)> set;
  std::function<std::vector<std::string>(const RunConfig&)> get;
};

template <typename T>
Key num(const std::string& sec, const std::string& name, T RunConfig::*outer, double T::*field) {
  return {sec, name, [=](RunConfig& c, const std::string& v) { (c.*outer).*field = to_double(v); },
          [=](const RunConfig& c) { return std::vector<std::string>{fmt((c.*outer).*field)}; }};
}

Key top(const std::string& sec, const std::string& name, double RunConfig::*field) {
  return {sec, name, [=](RunConfig& c, const std::string& v) { c.*field = to_double(v); },
          [=](const RunConfig& c) { return std::vector<std::string>{fmt(c.*field)}; }};
}

const std::vector<Key>& keys() {
  static const std::vector<Key> k = [] {
    std::vector<Key> v;
    // geometry
    v.push_back({"geometry", "kind", [](RunConfig& c, const std::string& s) { c.geometry = parse_geometry_kind(s); },
                 [](const RunConfig& c) { return std::vector<std::string>{to_string(c.geometry)}; }});
    v.push_back({"geometry", "n1", [](RunConfig& c, const std::string& s) { c.n1 = to_int(s); },
                 [](const RunConfig& c) { return std::vector<std::string>{std::to_string(c.n1)}; }});
    v.push_back({"geometry", "n2", [](RunConfig& c, const std::string& s) { c.n2 = to_int(s); },
                 [](const RunConfig& c) { return std::vector<std::string>{std::to_string(c.n2)}; }});
    v.push_back(num("geometry", "length1", &RunConfig::geom, &GeometryParams::length1));
    v.push_back(num("geometry", "length2", &RunConfig::geom, &GeometryParams::length2));
    v.push_back(num("geometry", "major_radius", &RunConfig::geom, &GeometryParams::major_radius));
    v.push_back(num("geometry", "minor_radius", &RunConfig::geom, &GeometryParams::minor_radius));
    v.push_back(num("geometry", "slab_half_width", &RunConfig::geom, &GeometryParams::slab_half_width));
    v.push_back({"geometry", "cutoff",
                 [](RunConfig& c, const std::string& s) {
                   const auto x = to_doubles(s);
                   if (x.size() != 6) throw Error("cutoff needs six values m2 m1 m M M1 M2");
                   c.geom.custom_cutoff = true;
                   c.geom.cutoff = {x[0], x[1], x[2], x[3], x[4], x[5]};
                 },
                 [](const RunConfig& c) {
                   if (!c.geom.custom_cutoff) return std::vector<std::string>{};
                   const auto& p = c.geom.cutoff;
                   return std::vector<std::string>{join({p.m2, p.m1, p.m, p.M, p.M1, p.M2})};
                 }});
    v.push_back({"geometry", "table",
                 [](RunConfig& c, const std::string& s) {
                   c.geom.table = read_tabulated(s);
                   c.table_path = s;
                 },
                 [](const RunConfig& c) {
                   return c.table_path.empty() ? std::vector<std::string>{} : std::vector<std::string>{c.table_path};
                 }});
    // fluid
    v.push_back({"fluid", "dim", [](RunConfig& c, const std::string& s) { c.fluid.dim = static_cast<int>(to_int(s)); },
                 [](const RunConfig& c) { return std::vector<std::string>{std::to_string(c.fluid.dim)}; }});
    v.push_back({"fluid", "n",
                 [](RunConfig& c, const std::string& s) {
                   const auto x = to_doubles(s);
                   if (x.size() < 2 || x.size() > 3) throw Error("n needs two or three sizes");
                   c.fluid.n = {static_cast<Index>(x[0]), static_cast<Index>(x[1]),
                                x.size() == 3 ? static_cast<Index>(x[2]) : 1};
                 },
                 [](const RunConfig& c) {
                   std::vector<double> x{double(c.fluid.n[0]), double(c.fluid.n[1])};
                   if (c.fluid.dim == 3) x.push_back(double(c.fluid.n[2]));
                   return std::vector<std::string>{join(x)};
                 }});
    v.push_back({"fluid", "lo",
                 [](RunConfig& c, const std::string& s) {
                   const auto x = to_doubles(s);
                   if (x.size() < 2 || x.size() > 3) throw Error("lo needs two or three coordinates");
                   c.fluid.lo = {x[0], x[1], x.size() == 3 ? x[2] : 0.0};
                 },
                 [](const RunConfig& c) {
                   std::vector<double> x{c.fluid.lo[0], c.fluid.lo[1]};
                   if (c.fluid.dim == 3) x.push_back(c.fluid.lo[2]);
                   return std::vector<std::string>{join(x)};
                 }});
    v.push_back({"fluid", "periodic",
                 [](RunConfig& c, const std::string& s) {
                   const auto x = to_doubles(s);
                   if (x.size() < 2 || x.size() > 3) throw Error("periodic needs two or three flags");
                   for (std::size_t a = 0; a < 3; ++a) c.fluid.periodic[a] = a < x.size() && x[a] != 0.0;
                 },
                 [](const RunConfig& c) {
                   std::vector<double> x{double(c.fluid.periodic[0]), double(c.fluid.periodic[1])};
                   if (c.fluid.dim == 3) x.push_back(double(c.fluid.periodic[2]));
                   return std::vector<std::string>{join(x)};
                 }});
    v.push_back(top("fluid", "length", &RunConfig::fluid_length));
    v.push_back(top("fluid", "mu", &RunConfig::mu));
    v.push_back(top("fluid", "lambda", &RunConfig::lambda));
    // pressure
    v.push_back(num("pressure", "gamma", &RunConfig::law, &PressureLaw::gamma));
    v.push_back(num("pressure", "beta", &RunConfig::law, &PressureLaw::beta));
    v.push_back(num("pressure", "a_lower", &RunConfig::law, &PressureLaw::a_lower));
    v.push_back(num("pressure", "a_upper", &RunConfig::law, &PressureLaw::a_upper));
    v.push_back({"pressure", "term",
                 [](RunConfig& c, const std::string& s) {
                   const auto x = to_doubles(s);
                   if (x.size() != 3) throw Error("term needs C r s");
                   c.law.terms.push_back({x[0], x[1], x[2]});
                 },
                 [](const RunConfig& c) {
                   std::vector<std::string> out;
                   for (const auto& t : c.law.terms) out.push_back(join({t.C, t.r, t.s}));
                   return out;
                 }});
    // shell
    v.push_back(num("shell", "lambda_s", &RunConfig::elastic, &ElasticityParams::lambda_s));
    v.push_back(num("shell", "mu_s", &RunConfig::elastic, &ElasticityParams::mu_s));
    v.push_back(num("shell", "thickness", &RunConfig::elastic, &ElasticityParams::h_thick));
    v.push_back({"shell", "model",
                 [](RunConfig& c, const std::string& s) {
                   if (s == "nonlinear") c.elastic.model = KoiterModel::nonlinear;
                   else if (s == "linearized") c.elastic.model = KoiterModel::linearized;
                   else throw Error("model must be nonlinear or linearized");
                 },
                 [](const RunConfig& c) {
                   return std::vector<std::string>{c.elastic.model == KoiterModel::nonlinear ? "nonlinear" : "linearized"};
                 }});
    v.push_back(top("shell", "theta", &RunConfig::theta));
    v.push_back(top("shell", "tol", &RunConfig::shell_tol));
    v.push_back({"shell", "keep_inertia_factor",
                 [](RunConfig& c, const std::string& s) { c.keep_inertia_factor = to_bool(s); },
                 [](const RunConfig& c) { return std::vector<std::string>{c.keep_inertia_factor ? "true" : "false"}; }});
    // scheme
    v.push_back(num("scheme", "tau", &RunConfig::scheme, &SchemeParams::tau));
    v.push_back({"scheme", "substeps",
                 [](RunConfig& c, const std::string& s) { c.scheme.substeps = static_cast<int>(to_int(s)); },
                 [](const RunConfig& c) { return std::vector<std::string>{std::to_string(c.scheme.substeps)}; }});
    v.push_back(num("scheme", "dt_cap", &RunConfig::scheme, &SchemeParams::dt_cap));
    v.push_back(num("scheme", "delta", &RunConfig::scheme, &SchemeParams::delta));
    v.push_back(num("scheme", "omega", &RunConfig::scheme, &SchemeParams::omega));
    v.push_back(num("scheme", "zeta", &RunConfig::scheme, &SchemeParams::zeta));
    v.push_back(num("scheme", "kappa", &RunConfig::scheme, &SchemeParams::kappa));
    v.push_back(num("scheme", "t_end", &RunConfig::scheme, &SchemeParams::t_end));
    v.push_back({"scheme", "case",
                 [](RunConfig& c, const std::string& s) {
                   if (s == "I") c.scheme.case_flag = CaseFlag::I;
                   else if (s == "II") c.scheme.case_flag = CaseFlag::II;
                   else if (s == "auto") c.scheme.case_flag = CaseFlag::automatic;
                   else throw Error("case must be I, II or auto");
                 },
                 [](const RunConfig& c) { return std::vector<std::string>{case_name(c.scheme.case_flag)}; }});
    // initial data
    v.push_back({"initial", "scenario", [](RunConfig& c, const std::string& s) { c.initial.scenario = parse_scenario(s); },
                 [](const RunConfig& c) { return std::vector<std::string>{to_string(c.initial.scenario)}; }});
    v.push_back(num("initial", "rho0", &RunConfig::initial, &InitialSpec::rho0));
    v.push_back(num("initial", "ratio", &RunConfig::initial, &InitialSpec::ratio));
    v.push_back(num("initial", "amplitude", &RunConfig::initial, &InitialSpec::amplitude));
    v.push_back({"initial", "mode", [](RunConfig& c, const std::string& s) { c.initial.mode = static_cast<int>(to_int(s)); },
                 [](const RunConfig& c) { return std::vector<std::string>{std::to_string(c.initial.mode)}; }});
    v.push_back(num("initial", "pulse", &RunConfig::initial, &InitialSpec::pulse));
    v.push_back(num("initial", "w0", &RunConfig::initial, &InitialSpec::w0));
    v.push_back(num("initial", "mollify", &RunConfig::initial, &InitialSpec::mollify));
    // monitors
    v.push_back(num("monitor", "leak_tolerance", &RunConfig::monitor, &MonitorParams::leak_tolerance));
    v.push_back(num("monitor", "ledger_tolerance", &RunConfig::monitor, &MonitorParams::ledger_tolerance));
    v.push_back(num("monitor", "substep_tolerance", &RunConfig::monitor, &MonitorParams::substep_tolerance));
    v.push_back(num("monitor", "band_margin", &RunConfig::monitor, &MonitorParams::band_margin));
    v.push_back(num("monitor", "gamma_floor", &RunConfig::monitor, &MonitorParams::gamma_floor));
    // output
    v.push_back({"output", "dir", [](RunConfig& c, const std::string& s) { c.out_dir = s; },
                 [](const RunConfig& c) { return std::vector<std::string>{c.out_dir}; }});
    v.push_back({"output", "seed", [](RunConfig& c, const std::string& s) { c.seed = static_cast<std::uint64_t>(to_int(s)); },
                 [](const RunConfig& c) { return std::vector<std::string>{std::to_string(c.seed)}; }});
    return v;
  }();
  return k;
}

}  // namespace

Scenario parse_scenario(const std::string& s) {
  if (s == "rest") return Scenario::rest;
  if (s == "pressure-pulse") return Scenario::pressure_pulse;
  if (s == "shell-pluck") return Scenario::shell_pluck;
  if (s == "manufactured") return Scenario::manufactured;
  throw Error("unknown scenario '" + s + "'");
}

std::string to_string(Scenario s) {
  switch (s) {
    case Scenario::rest: return "rest";
    case Scenario::pressure_pulse: return "pressure-pulse";
    case Scenario::shell_pluck: return "shell-pluck";
    case Scenario::manufactured: return "manufactured";
  }
  return "rest";
}

namespace {

std::string join_problems(const std::vector<std::string>& p) {
  std::string s = "invalid configuration:";
  for (const auto& x : p) s += "\n  " + x;
  return s;
}

}  // namespace

ConfigError::ConfigError(std::vector<std::string> problems) : Error(join_problems(problems)), problems_(std::move(problems)) {}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  c.fluid.n = {32, 32, 1};
  c.fluid.lo = {0.0, -0.5, 0.0};
  c.fluid.periodic = {true, false, false};
  std::vector<std::string> problems;
  std::map<std::pair<std::string, std::string>, const Key*> index;
  for (const Key& k : keys()) index[{k.section, k.name}] = &k;

  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::string where = "line " + std::to_string(lineno) + ": ";
    if (line.front() == '[') {
      if (line.back() != ']') {
        problems.push_back(where + "malformed section header");
        continue;
      }
      section = trim(line.substr(1, line.size() - 2));
      bool known = false;
      for (const Key& k : keys()) known = known || k.section == section;
      if (!known) problems.push_back(where + "unknown section [" + section + "]");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      problems.push_back(where + "expected key = value");
      continue;
    }
    const std::string key = trim(line.substr(0, eq)), value = trim(line.substr(eq + 1));
    const auto it = index.find({section, key});
    if (it == index.end()) {
      problems.push_back(where + "unknown key '" + key + "' in [" + section + "]");
      continue;
    }
    try {
      it->second->set(c, value);
    } catch (const std::exception& e) {
      problems.push_back(where + section + "." + key + ": " + e.what());
    }
  }
  if (problems.empty()) {
    const auto v = config_violations(c);
    problems.insert(problems.end(), v.begin(), v.end());
  }
  if (!problems.empty()) throw ConfigError(problems);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string config_text(const RunConfig& c) {
  std::ostringstream os;
  std::string section;
  for (const Key& k : keys()) {
    const auto values = k.get(c);
    if (values.empty()) continue;
    if (k.section != section) {
      os << (section.empty() ? "" : "\n") << '[' << k.section << "]\n";
      section = k.section;
    }
    for (const auto& v : values) os << k.name << " = " << v << '\n';
  }
  return os.str();
}

CaseFlag effective_case(const RunConfig& c) {
  if (c.scheme.case_flag != CaseFlag::automatic) return c.scheme.case_flag;
  return c.scheme.zeta > 0.0 ? CaseFlag::II : CaseFlag::I;
}

std::vector<std::string> config_violations(const RunConfig& c) {
  std::vector<std::string> p;
  const auto& s = c.scheme;
  // pressure hypotheses
  for (const auto& v : violations(c.law)) p.push_back(v);
  if (!(s.kappa >= std::max({4.0, c.law.gamma, c.law.beta}) + 1.0))
    p.push_back("H2 regularization: kappa must be >= max(4, gamma, beta) + 1");
  // case matrix
  const double mx = std::max(c.law.gamma, c.law.beta);
  const CaseFlag cf = effective_case(c);
  if (cf == CaseFlag::I && !(mx > 2.0)) p.push_back("case I: requires max(gamma, beta) > 2");
  if (cf == CaseFlag::II) {
    if (!(s.zeta > 0.0)) p.push_back("case II: requires zeta > 0");
    if (!(mx >= 2.0)) p.push_back("case II: requires max(gamma, beta) >= 2");
  }
  // scheme
  if (!(s.tau > 0.0)) p.push_back("scheme: tau must be positive");
  if (s.substeps < 10) p.push_back("scheme: substeps must be >= 10 (dt <= tau / 10)");
  if (!(s.delta > 0.0 && s.delta < 1.0)) p.push_back("scheme: delta must lie in (0, 1)");
  if (!(s.omega > 0.0 && s.omega <= 1.0)) p.push_back("scheme: omega must lie in (0, 1]");
  if (!(s.zeta >= 0.0)) p.push_back("scheme: zeta must be >= 0");
  if (!(s.t_end > 0.0)) p.push_back("scheme: t_end must be positive");
  if (!(s.dt_cap > 0.0)) p.push_back("scheme: dt_cap must be positive");
  // shell
  if (!(c.elastic.lambda_s > 0.0 && c.elastic.mu_s > 0.0)) p.push_back("shell: Lame constants must be positive");
  if (!(c.elastic.h_thick > 0.0)) p.push_back("shell: thickness must be positive");
  if (!(c.theta > 0.0 && c.theta <= 1.0)) p.push_back("shell: theta must lie in (0, 1]");
  if (!(c.shell_tol > 0.0)) p.push_back("shell: tol must be positive");
  // geometry
  if (c.n1 < 4 || !(c.n2 >= 4 || c.n2 == 1)) p.push_back("geometry: grid too coarse (n1 >= 4, n2 >= 4 or n2 = 1)");
  if (c.geometry == GeometryKind::torus && !(c.geom.major_radius > c.geom.minor_radius && c.geom.minor_radius > 0.0))
    p.push_back("geometry: torus requires R > r > 0");
  if (c.geometry == GeometryKind::tabulated && c.geom.table.phi.empty()) p.push_back("geometry: tabulated kind needs a table");
  if (c.geometry != GeometryKind::flat_slab && c.n2 == 1) p.push_back("geometry: strip mode (n2 = 1) needs a flat slab");
  // fluid
  const FluidGrid& f = c.fluid;
  if (f.dim != 2 && f.dim != 3) p.push_back("fluid: dim must be 2 or 3");
  if (f.n[0] < 4 || f.n[1] < 4 || (f.dim == 3 && f.n[2] < 4) || (f.dim == 2 && f.n[2] != 1))
    p.push_back("fluid: grid too coarse or inconsistent with dim");
  if (!(c.fluid_length > 0.0)) p.push_back("fluid: length must be positive");
  if (!(c.mu > 0.0)) p.push_back("fluid: mu must be positive");
  if (!(c.lambda >= 0.0)) p.push_back("fluid: lambda must be >= 0");
  if (f.dim == 2 && !(c.geometry == GeometryKind::flat_slab && c.n2 == 1))
    p.push_back("fluid: a 2D box needs a flat-slab strip shell (n2 = 1)");
  if (p.empty()) {
    // the box must hold the whole band
    const double h = c.fluid_length / static_cast<double>(f.n[0]);
    const auto inside = [&](int a, double lo, double hi) {
      const auto sa = static_cast<std::size_t>(a);
      if (f.periodic[sa]) return true;
      return f.lo[sa] + 0.5 * h < lo && hi < f.lo[sa] + (static_cast<double>(f.n[sa]) - 0.5) * h;
    };
    if (c.geometry == GeometryKind::flat_slab) {
      const int wall = f.dim - 1;
      const double w = c.geom.slab_half_width;
      if (!inside(wall, -w, w)) p.push_back("fluid: box B must contain the band |z| <= slab_half_width");
      if (!f.periodic[0] || std::abs(c.geom.length1 - c.fluid_length) > 1e-12 * c.fluid_length)
        p.push_back("fluid: the first axis must be periodic with length = geometry length1");
      if (f.dim == 3 && (!f.periodic[1] ||
                         std::abs(c.geom.length2 - h * static_cast<double>(f.n[1])) > 1e-12 * c.geom.length2))
        p.push_back("fluid: the second axis must be periodic with length = geometry length2");
    } else if (f.dim == 3) {
      const double R = c.geom.major_radius, r = c.geom.minor_radius, ext = R + 1.95 * r;
      if (!inside(0, -ext, ext) || !inside(1, -ext, ext) || !inside(2, -1.95 * r, 1.95 * r))
        p.push_back("fluid: box B must contain the torus band");
    }
  }
  // initial data
  const auto& in = c.initial;
  if (!(in.rho0 >= 0.0)) p.push_back("initial: rho0 must be >= 0");
  if (in.rho0 > 0.0 && !(in.ratio >= c.law.a_lower && in.ratio <= c.law.a_upper))
    p.push_back("H1 cone: initial ratio Z0/rho0 outside [a_lower, a_upper]");
  if (!(in.pulse > -1.0)) p.push_back("initial: pulse must be > -1");
  if (in.mode < 0) p.push_back("initial: mode must be >= 0");
  if (!std::isfinite(in.amplitude) || !std::isfinite(in.w0)) p.push_back("initial: amplitude and w0 must be finite");
  // monitors
  const auto& m = c.monitor;
  if (!(m.leak_tolerance > 0.0 && m.ledger_tolerance > 0.0 && m.substep_tolerance > 0.0 && m.band_margin >= 0.0 &&
        m.gamma_floor >= 0.0))
    p.push_back("monitor: tolerances must be positive");
  return p;
}

RegularizedPressure regularized_pressure(const RunConfig& c) {
  RegularizedPressure r;
  r.base = c.law;
  r.delta = c.scheme.delta;
  r.kappa = c.scheme.kappa;
  return r;
}

StructureParams structure_params(const RunConfig& c) {
  StructureParams p;
  p.elastic = c.elastic;
  p.elastic.delta_reg = c.scheme.delta;
  p.elastic.zeta = c.scheme.zeta;
  p.delta = c.scheme.delta;
  p.tau = c.scheme.tau;
  p.substeps = c.scheme.substeps;
  p.theta = c.theta;
  p.tol = c.shell_tol;
  p.keep_inertia_factor = c.keep_inertia_factor;
  p.rule = c.derivative_rule;
  return p;
}

ReferenceGeometry build_reference(const RunConfig& c) {
  ParamGrid g{c.n1, c.n2, 1.0, 1.0};
  return build_reference(c.geometry, g, c.geom);
}

}  // namespace fsi
