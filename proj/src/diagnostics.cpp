#include "fsi/diagnostics.hpp"

#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <sstream>

#include "fsi/config.hpp"
#include "fsi/coupling.hpp"

namespace fsi {

namespace {

std::string num(double x) {
  char buf[64];
  const auto r = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, r.ptr);
}

double parse_num(const std::string& s) {
  double x = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), x);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size()) throw Error("not a number: '" + s + "'");
  return x;
}

// column name and member, in file order
struct Column {
  const char* name;
  double LedgerRow::*field;
};

constexpr Column columns[] = {
    {"t", &LedgerRow::t},
    {"kinetic_fluid", &LedgerRow::kinetic_fluid},
    {"helmholtz", &LedgerRow::helmholtz},
    {"dissipation_visc", &LedgerRow::dissipation_visc},
    {"kinetic_shell", &LedgerRow::kinetic_shell},
    {"koiter", &LedgerRow::koiter},
    {"koiter_reg", &LedgerRow::koiter_reg},
    {"dissipation_zeta", &LedgerRow::dissipation_zeta},
    {"penalty_mismatch", &LedgerRow::penalty_mismatch},
    {"penalty_trace", &LedgerRow::penalty_trace},
    {"penalty_injection", &LedgerRow::penalty_injection},
    {"numerical", &LedgerRow::numerical},
    {"reservoir", &LedgerRow::reservoir},
    {"rhs_initial", &LedgerRow::rhs_initial},
    {"lhs", &LedgerRow::lhs},
    {"rhs", &LedgerRow::rhs},
    {"slack", &LedgerRow::slack},
    {"exterior_fraction", &LedgerRow::exterior_fraction},
    {"mismatch", &LedgerRow::mismatch},
};

constexpr double LedgerRow::*cumulative[] = {&LedgerRow::dissipation_visc, &LedgerRow::dissipation_zeta,
                                              &LedgerRow::penalty_mismatch, &LedgerRow::penalty_trace,
                                              &LedgerRow::penalty_injection, &LedgerRow::numerical,
                                              &LedgerRow::mismatch};

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream is(line);
  while (std::getline(is, cur, sep)) out.push_back(cur);
  return out;
}

void write_vec(std::ostream& os, const std::vector<double>& v) {
  for (std::size_t k = 0; k < v.size(); ++k) os << (k ? " " : "") << num(v[k]);
  os << '\n';
}

std::vector<double> read_vec(std::istream& is, std::size_t n) {
  std::vector<double> v(n);
  std::string tok;
  for (auto& x : v) {
    if (!(is >> tok)) throw Error("checkpoint: truncated data");
    x = parse_num(tok);
  }
  return v;
}

void expect(std::istream& is, const std::string& word) {
  std::string tok;
  if (!(is >> tok) || tok != word) throw Error("checkpoint: expected '" + word + "', found '" + tok + "'");
}

}  // namespace

double LedgerRow::relative_slack() const { return slack / std::max(std::abs(rhs), 1e-300); }

std::string ledger_header() {
  std::string h = "window";
  for (const Column& c : columns) h += std::string(",") + c.name;
  return h;
}

std::string format_ledger_row(const LedgerRow& r) {
  std::string s = std::to_string(r.window);
  for (const Column& c : columns) s += "," + num(r.*c.field);
  return s;
}

LedgerRow parse_ledger_row(const std::string& line) {
  const auto f = split(line, ',');
  if (f.size() != std::size(columns) + 1) throw Error("ledger row has " + std::to_string(f.size()) + " fields");
  LedgerRow r;
  r.window = static_cast<int>(parse_num(f[0]));
  for (std::size_t k = 0; k < std::size(columns); ++k) r.*columns[k].field = parse_num(f[k + 1]);
  return r;
}

void write_ledger(std::ostream& os, const EnergyLedger& l) {
  os << ledger_header() << '\n';
  for (const LedgerRow& r : l.rows) os << format_ledger_row(r) << '\n';
}

EnergyLedger read_ledger(std::istream& is) {
  EnergyLedger l;
  std::string line;
  if (!std::getline(is, line) || line != ledger_header()) throw Error("ledger: bad header");
  while (std::getline(is, line))
    if (!line.empty()) l.rows.push_back(parse_ledger_row(line));
  return l;
}

bool cumulative_monotone(const EnergyLedger& l) {
  for (std::size_t k = 1; k < l.rows.size(); ++k)
    for (auto f : cumulative)
      if (l.rows[k].*f < l.rows[k - 1].*f) return false;
  return true;
}

double compactness_gap(const FluidGrid& ga, const FluidState& a, const FluidGrid& gb, const FluidState& b, double p) {
  const bool a_fine = ga.size() >= gb.size();
  const FluidGrid& fg = a_fine ? ga : gb;
  const FluidGrid& cg = a_fine ? gb : ga;
  const FluidState& fs = a_fine ? a : b;
  const FluidState& cs = a_fine ? b : a;
  for (int d = 0; d < fg.dim; ++d) {
    const auto sd = static_cast<std::size_t>(d);
    if (fg.n[sd] % cg.n[sd] != 0) throw Error("compactness gap: grids are not nested");
  }
  const auto frac = [](double r, double z) { return r + z > 0.0 ? r / (r + z) : 0.0; };
  double sum = 0.0;
  for (Index c = 0; c < fg.size(); ++c) {
    const auto q = fg.ijk(c);
    std::array<Index, 3> qc{};
    for (int d = 0; d < 3; ++d) {
      const auto sd = static_cast<std::size_t>(d);
      qc[sd] = q[sd] / (fg.n[sd] / cg.n[sd]);
    }
    const auto sc = static_cast<std::size_t>(cg.idx(qc[0], qc[1], qc[2]));
    const auto sf = static_cast<std::size_t>(c);
    const double fa = frac(fs.rho[sf], fs.Z[sf]), fb = frac(cs.rho[sc], cs.Z[sc]);
    const double d = a_fine ? a.rho[sf] : a.rho[sc];
    sum += d * std::pow(std::abs(fa - fb), p) * fg.volume();
  }
  return sum;
}

double trace_mismatch(const FluidGrid& grid, const FluidState& s, const TraceOperator& T, const NodeField& w) {
  const std::vector<Vec3> v = compute_trace(grid, s, T);
  double sum = 0.0;
  for (Index k = 0; k < T.nodes; ++k) {
    const auto sk = static_cast<std::size_t>(k);
    const Vec3 d = v[sk] - w[k] * T.normal[sk];
    sum += dot(d, d);
  }
  return sum * T.node_weight;
}

void write_field(std::ostream& os, const std::string& name, const std::array<Index, 3>& n, const std::vector<double>& v) {
  os << "FIELD " << name << ' ' << n[0] << ' ' << n[1] << ' ' << n[2] << '\n';
  write_vec(os, v);
}

std::vector<double> read_field(std::istream& is, const std::string& name, std::array<Index, 3>& n) {
  expect(is, "FIELD");
  expect(is, name);
  if (!(is >> n[0] >> n[1] >> n[2]) || n[0] < 1 || n[1] < 1 || n[2] < 1) throw Error("field " + name + ": bad size");
  return read_vec(is, static_cast<std::size_t>(n[0] * n[1] * n[2]));
}

void write_checkpoint(std::ostream& os, const Checkpoint& c, const FluidGrid& grid, const ParamGrid& pg) {
  os << "CKPT version " << c.version << ' ' << c.window << ' ' << num(c.tau) << '\n';
  os << "time " << num(c.time) << "\nmass0 " << num(c.mass0) << '\n';
  os << "config " << c.config.size() << '\n' << c.config << '\n';
  write_field(os, "rho", grid.n, c.fluid.rho);
  write_field(os, "Z", grid.n, c.fluid.Z);
  for (int a = 0; a < 3; ++a) write_field(os, "u" + std::to_string(a), grid.n, c.fluid.u[static_cast<std::size_t>(a)]);
  const std::array<Index, 3> sn{pg.n1, pg.n2, 1};
  write_field(os, "eta", sn, c.shell.eta.v);
  write_field(os, "w", sn, c.shell.w.v);
  os << "slots " << c.g_slots.size() << '\n';
  for (std::size_t m = 0; m < c.g_slots.size(); ++m) write_field(os, "g" + std::to_string(m), sn, c.g_slots[m].v);
}

Checkpoint read_checkpoint(std::istream& is) {
  Checkpoint c;
  expect(is, "CKPT");
  expect(is, "version");
  if (!(is >> c.version) || c.version != 1) throw Error("checkpoint: unsupported version");
  std::string tok;
  if (!(is >> c.window >> tok)) throw Error("checkpoint: bad header");
  c.tau = parse_num(tok);
  expect(is, "time");
  is >> tok;
  c.time = parse_num(tok);
  expect(is, "mass0");
  is >> tok;
  c.mass0 = parse_num(tok);
  expect(is, "config");
  std::size_t len = 0;
  if (!(is >> len)) throw Error("checkpoint: bad config length");
  is.get();
  c.config.resize(len);
  is.read(c.config.data(), static_cast<std::streamsize>(len));
  if (!is) throw Error("checkpoint: truncated config");

  const RunConfig cfg = parse_config(c.config);
  const FluidGrid grid = fluid_grid(cfg);
  const ReferenceGeometry ref = build_reference(cfg);
  const ParamGrid& pg = ref.grid;
  const auto check = [](const std::array<Index, 3>& got, const std::array<Index, 3>& want, const std::string& what) {
    if (got != want) throw Error("checkpoint: field " + what + " does not match the configured grid");
  };
  std::array<Index, 3> n{};
  c.fluid = FluidState(grid);
  c.fluid.rho = read_field(is, "rho", n);
  check(n, grid.n, "rho");
  c.fluid.Z = read_field(is, "Z", n);
  check(n, grid.n, "Z");
  for (int a = 0; a < 3; ++a) {
    c.fluid.u[static_cast<std::size_t>(a)] = read_field(is, "u" + std::to_string(a), n);
    check(n, grid.n, "u");
  }
  c.fluid.time = c.time;
  const std::array<Index, 3> sn{pg.n1, pg.n2, 1};
  c.shell = ShellState(pg);
  c.shell.eta.v = read_field(is, "eta", n);
  check(n, sn, "eta");
  c.shell.w.v = read_field(is, "w", n);
  check(n, sn, "w");
  c.shell.eta_start = c.shell.eta;
  c.shell.w_start = c.shell.w;
  c.shell.time = c.time;
  expect(is, "slots");
  std::size_t K = 0;
  is >> K;
  for (std::size_t m = 0; m < K; ++m) {
    NodeField g(pg);
    g.v = read_field(is, "g" + std::to_string(m), n);
    check(n, sn, "g");
    c.g_slots.push_back(std::move(g));
  }
  return c;
}

std::string code_version() {
#ifdef FSI_VERSION
  return FSI_VERSION;
#else
  return "unknown";
#endif
}

void write_run_meta(std::ostream& os, const std::string& config, std::uint64_t seed,
                    const std::map<std::string, std::string>& extra) {
  os << "code_version " << code_version() << '\n';
  os << "seed " << seed << '\n';
  for (const auto& [k, v] : extra) os << k << ' ' << v << '\n';
  os << "config\n" << config;
}

}  // namespace fsi
