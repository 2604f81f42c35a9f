#include "mlab/config.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "mlab/errors.hpp"

namespace mlab {

namespace {

std::string fmt17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string trim(const std::string& s) {
  std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool legal_key(const std::string& k) {
  if (k.empty() || k.front() == '.' || k.back() == '.') return false;
  for (char c : k)
    if (!(std::islower(static_cast<unsigned char>(c)) || std::isdigit(static_cast<unsigned char>(c)) ||
          c == '.' || c == '_' || c == '-'))
      return false;
  return true;
}

// Typed view over one leg's resolved key set. Every accessor marks its key
// used; whatever is left over at the end is an unknown key, reported by the
// name the user actually wrote (leg-prefixed when it came from an override).
class KeyView {
 public:
  void put(const std::string& key, const std::string& value, const std::string& written_as) {
    kv_[key] = value;
    written_[key] = written_as;
  }

  bool has(const std::string& key) const { return kv_.count(key) != 0; }

  std::string raw(const std::string& key) {
    auto it = kv_.find(key);
    if (it == kv_.end()) throw config_error("config: missing required key '" + key + "'");
    used_.insert(key);
    return it->second;
  }

  std::string raw_or(const std::string& key, const std::string& defv) {
    return has(key) ? raw(key) : defv;
  }

  double dbl(const std::string& key) { return to_double(key, raw(key)); }

  double dbl_or(const std::string& key, double defv) {
    return has(key) ? dbl(key) : defv;
  }

  long integer(const std::string& key) { return to_long(key, raw(key)); }

  long integer_or(const std::string& key, long defv) {
    return has(key) ? integer(key) : defv;
  }

  std::uint64_t u64_or(const std::string& key, std::uint64_t defv) {
    if (!has(key)) return defv;
    const std::string s = raw(key);
    std::uint64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      throw config_error("config: " + key + ": expected an unsigned integer, got '" + s + "'");
    return v;
  }

  bool flag_or(const std::string& key, bool defv) {
    if (!has(key)) return defv;
    const std::string s = raw(key);
    if (s == "true") return true;
    if (s == "false") return false;
    throw config_error("config: " + key + ": expected true or false, got '" + s + "'");
  }

  std::vector<std::string> unused() const {
    std::vector<std::string> out;
    for (const auto& [k, v] : kv_)
      if (!used_.count(k)) out.push_back(written_.at(k));
    return out;
  }

 private:
  double to_double(const std::string& key, const std::string& s) const {
    double v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size() || !std::isfinite(v))
      throw config_error("config: " + key + ": expected a finite number, got '" + s + "'");
    return v;
  }

  long to_long(const std::string& key, const std::string& s) const {
    long v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || p != s.data() + s.size())
      throw config_error("config: " + key + ": expected an integer, got '" + s + "'");
    return v;
  }

  std::map<std::string, std::string> kv_;
  std::map<std::string, std::string> written_;
  std::set<std::string> used_;
};

Potential build_potential(KeyView& kv) {
  const std::string family = kv.raw("potential.family");
  auto forbid = [&](const char* key) {
    if (kv.has(key))
      throw config_error("config: " + std::string(key) + " does not apply to potential.family = " +
                         family);
  };
  try {
    if (family == "kicked_rotor") {
      if (kv.dbl_or("potential.mass", 1.0) != 1.0)
        throw config_error("config: potential.mass: the rotor propagator fixes m = 1");
      forbid("potential.omega0");
      forbid("potential.a");
      forbid("potential.b");
      forbid("potential.lambda");
      forbid("potential.omega");
      return kicked_rotor(kv.dbl("potential.kappa"));
    }
    if (family == "harmonic") {
      forbid("potential.kappa");
      forbid("potential.a");
      forbid("potential.b");
      forbid("potential.lambda");
      forbid("potential.omega");
      return harmonic(kv.dbl_or("potential.mass", 1.0), kv.dbl("potential.omega0"));
    }
    if (family == "duffing") {
      forbid("potential.kappa");
      forbid("potential.omega0");
      return duffing(kv.dbl_or("potential.mass", 1.0), kv.dbl("potential.a"),
                     kv.dbl("potential.b"), kv.dbl("potential.lambda"),
                     kv.dbl("potential.omega"));
    }
    if (family == "free") {
      forbid("potential.kappa");
      forbid("potential.omega0");
      forbid("potential.a");
      forbid("potential.b");
      forbid("potential.lambda");
      forbid("potential.omega");
      return free_particle(kv.dbl_or("potential.mass", 1.0));
    }
  } catch (const config_error& e) {
    const std::string what = e.what();
    if (what.rfind("config:", 0) == 0) throw;
    throw config_error("config: potential: " + what);
  }
  throw config_error("config: potential.family: unknown family '" + family + "'");
}

Grid build_grid(KeyView& kv) {
  const long nx = kv.integer("grid.nx");
  const long np = kv.integer("grid.np");
  const std::string b = kv.raw("grid.boundary");
  Boundary boundary;
  if (b == "periodic")
    boundary = Boundary::periodic_x;
  else if (b == "box")
    boundary = Boundary::box;
  else
    throw config_error("config: grid.boundary: expected periodic or box, got '" + b + "'");
  try {
    return make_grid(static_cast<int>(nx), static_cast<int>(np), kv.dbl("grid.x_min"),
                     kv.dbl("grid.x_max"), kv.dbl("grid.p_min"), kv.dbl("grid.p_max"),
                     boundary);
  } catch (const error& e) {
    throw config_error("config: grid: " + std::string(e.what()));
  }
}

RunMode parse_mode(const std::string& key, const std::string& s) {
  if (s == "classical_liouville") return RunMode::classical_liouville;
  if (s == "classical_fokker_planck") return RunMode::classical_fokker_planck;
  if (s == "quantum_liouville") return RunMode::quantum_liouville;
  if (s == "quantum_master") return RunMode::quantum_master;
  if (s == "sme") return RunMode::sme;
  throw config_error("config: " + key + ": unknown mode '" + s + "'");
}

const char* mode_name(RunMode m) {
  switch (m) {
    case RunMode::classical_liouville: return "classical_liouville";
    case RunMode::classical_fokker_planck: return "classical_fokker_planck";
    case RunMode::quantum_liouville: return "quantum_liouville";
    case RunMode::quantum_master: return "quantum_master";
    case RunMode::sme: return "sme";
  }
  return "?";
}

LegConfig build_leg(const std::string& name, KeyView& kv, std::uint64_t seed,
                    const std::string& base_out_dir, bool multi_leg) {
  LegConfig leg;
  leg.name = name;
  leg.potential = build_potential(kv);
  leg.grid = build_grid(kv);
  leg.mode = parse_mode("evolve.mode", kv.raw("evolve.mode"));

  leg.dt = kv.dbl("evolve.dt");
  if (!(leg.dt > 0)) throw config_error("config: evolve.dt: must be positive");
  leg.t_final = kv.dbl("evolve.t_final");
  if (!(leg.t_final > 0)) throw config_error("config: evolve.t_final: must be positive");
  {
    const double n_real = leg.t_final / leg.dt;
    if (std::abs(n_real - std::lround(n_real)) > 1e-9 * std::max(1.0, n_real))
      throw config_error("config: evolve.dt: must tile [0, evolve.t_final] exactly");
  }
  if (leg.potential.has_kicks()) {
    const double per = 1.0 / leg.dt;
    if (std::abs(per - std::lround(per)) > 1e-9)
      throw config_error("config: evolve.dt: must divide the unit kick period");
  }

  // Geometry vs dynamics: kicks live on the ring, smooth potentials in the
  // box. Free streaming is legal on either.
  if (leg.potential.has_kicks() && leg.grid.boundary != Boundary::periodic_x)
    throw config_error("config: grid.boundary: kicked_rotor requires periodic");
  if (leg.potential.max_order() > 0 && leg.grid.boundary != Boundary::box)
    throw config_error("config: grid.boundary: a smooth potential requires box");

  leg.hbar = kv.dbl_or("state.hbar", 0.0);
  if (kv.has("state.hbar") && !(leg.hbar > 0))
    throw config_error("config: state.hbar: must be positive when given");
  leg.x0 = kv.dbl_or("state.x0", 0.0);
  leg.p0 = kv.dbl_or("state.p0", 0.0);
  leg.sigma_x = kv.dbl_or("state.sigma_x", 0.0);
  leg.sigma_p = kv.dbl_or("state.sigma_p", 0.0);

  const bool quantum = leg.mode == RunMode::quantum_liouville ||
                       leg.mode == RunMode::quantum_master || leg.mode == RunMode::sme;
  if (quantum && !(leg.hbar > 0))
    throw config_error("config: state.hbar: required for " + std::string(mode_name(leg.mode)));

  if (leg.mode == RunMode::sme) {
    // state.kind may linger from a shared base; the conditioned run always
    // starts from a pure packet, so the value is checked but not used.
    if (kv.has("state.kind")) {
      const std::string kind = kv.raw("state.kind");
      if (kind != "classical" && kind != "wigner")
        throw config_error("config: state.kind: expected classical or wigner, got '" + kind +
                           "'");
    }
    if (!(kv.dbl_or("state.sigma_x", 0.0) > 0))
      throw config_error("config: state.sigma_x: required and positive for sme");
    // The conditioned state is a pure packet, so sigma_p is determined.
    if (kv.has("state.sigma_p")) {
      const double implied = leg.hbar / (2.0 * leg.sigma_x);
      if (std::abs(leg.sigma_p - implied) > 1e-9 * implied)
        throw config_error("config: state.sigma_p: a pure packet requires hbar/(2 sigma_x) = " +
                           fmt17(implied));
    }
  } else {
    const std::string kind = kv.raw("state.kind");
    if (kind == "classical")
      leg.state_kind = StateKind::classical;
    else if (kind == "wigner")
      leg.state_kind = StateKind::wigner;
    else
      throw config_error("config: state.kind: expected classical or wigner, got '" + kind + "'");
    if (quantum && leg.state_kind != StateKind::wigner)
      throw config_error("config: state.kind: " + std::string(mode_name(leg.mode)) +
                         " acts on wigner states");
    if (!quantum && leg.state_kind != StateKind::classical)
      throw config_error("config: state.kind: " + std::string(mode_name(leg.mode)) +
                         " acts on classical states");
    if (!(leg.sigma_x > 0) || !(leg.sigma_p > 0))
      throw config_error("config: state.sigma_x/state.sigma_p: required and positive");
    if (leg.state_kind == StateKind::wigner &&
        leg.sigma_x * leg.sigma_p < 0.5 * leg.hbar * (1.0 - 1e-12))
      throw config_error(
          "config: state.sigma_x/state.sigma_p: sigma_x*sigma_p >= hbar/2 for a wigner state");
  }

  leg.D = kv.dbl_or("evolve.d", 0.0);
  const bool diffusive =
      leg.mode == RunMode::classical_fokker_planck || leg.mode == RunMode::quantum_master;
  if (leg.mode != RunMode::sme) {
    if (diffusive && !(leg.D > 0))
      throw config_error("config: evolve.d: " + std::string(mode_name(leg.mode)) +
                         " requires D > 0");
    if (!diffusive && leg.D != 0)
      throw config_error("config: evolve.d: " + std::string(mode_name(leg.mode)) +
                         " has no diffusion term");
  }

  leg.moyal.truncated = kv.flag_or("evolve.truncated", false);
  if (kv.has("evolve.lambda_max")) {
    if (!leg.moyal.truncated)
      throw config_error("config: evolve.lambda_max: only meaningful with evolve.truncated");
    const long lm = kv.integer("evolve.lambda_max");
    if (lm < 1 || lm % 2 == 0)
      throw config_error("config: evolve.lambda_max: must be an odd integer >= 1");
    leg.moyal.lambda_max = static_cast<int>(lm);
  } else if (leg.moyal.truncated) {
    throw config_error("config: evolve.truncated: requires evolve.lambda_max");
  }

  leg.record_every = static_cast<int>(kv.integer_or("evolve.record_every", 0));
  if (leg.record_every < 0)
    throw config_error("config: evolve.record_every: must be >= 0");
  leg.rec_gamma = kv.flag_or("evolve.record_gamma", false);
  leg.rec_purity = kv.flag_or("evolve.record_purity", false);
  leg.rec_l2 = kv.flag_or("evolve.record_l2", false);
  leg.rec_nu = kv.flag_or("evolve.record_nu", false);
  if (leg.mode == RunMode::sme &&
      (leg.rec_gamma || leg.rec_purity || leg.rec_l2 || leg.rec_nu || leg.record_every != 0))
    throw config_error(
        "config: evolve.record_*: sme logs a fixed column set at every step; cadence keys do "
        "not apply");

  // Conditioned-evolution parameters; on non-sme legs they may linger from a
  // shared base, in which case only the D = hbar^2 k consistency applies.
  leg.sme.k = kv.dbl_or("sme.k", 0.0);
  leg.sme.eta = kv.dbl_or("sme.eta", 0.0);
  leg.sme.n_traj = static_cast<int>(kv.integer_or("sme.n_traj", 1));
  leg.sme.dt = leg.dt;
  leg.sme.seed = seed;
  if (leg.mode == RunMode::sme) {
    if (!kv.has("sme.k")) throw config_error("config: missing required key 'sme.k'");
    if (!kv.has("sme.eta")) throw config_error("config: missing required key 'sme.eta'");
    try {
      validate_sme(leg.sme);  // messages already carry the "sme:" prefix
    } catch (const error& e) {
      throw config_error("config: " + std::string(e.what()));
    }
  }
  if (kv.has("sme.k") && kv.has("evolve.d") && leg.hbar > 0) {
    const double implied = leg.hbar * leg.hbar * leg.sme.k;
    if (std::abs(leg.D - implied) > 1e-9 * std::max(1.0, implied))
      throw config_error("config: evolve.d/sme.k: inconsistent, D = hbar^2 k requires D = " +
                         fmt17(implied));
  }

  leg.spectrum_at_end = kv.flag_or("output.spectrum", false);
  leg.snapshot_every = static_cast<int>(kv.integer_or("output.snapshot_every", 0));
  leg.checkpoint_every = static_cast<int>(kv.integer_or("output.checkpoint_every", 0));
  if (leg.snapshot_every < 0)
    throw config_error("config: output.snapshot_every: must be >= 0");
  if (leg.checkpoint_every < 0)
    throw config_error("config: output.checkpoint_every: must be >= 0");
  if (leg.mode == RunMode::sme) {
    if (leg.snapshot_every != 0)
      throw config_error("config: output.snapshot_every: applies to phase-space runs only");
  } else {
    // Chunk boundaries must land on record rows or the stitched log would
    // differ from an uninterrupted one.
    for (const char* key : {"output.snapshot_every", "output.checkpoint_every"}) {
      const int v = key[7] == 's' ? leg.snapshot_every : leg.checkpoint_every;
      if (v > 0 && (leg.record_every == 0 || v % leg.record_every != 0))
        throw config_error("config: " + std::string(key) +
                           ": must be a positive multiple of evolve.record_every");
    }
  }

  if (leg.spectrum_at_end || leg.rec_nu) {
    const char* who = leg.spectrum_at_end ? "output.spectrum" : "evolve.record_nu";
    if (!(leg.hbar > 0))
      throw config_error("config: state.hbar: required by " + std::string(who));
    if (leg.mode != RunMode::sme && !weyl_commensurate(leg.grid, leg.hbar))
      throw config_error("config: grid: " + std::string(who) +
                         " needs a weyl-commensurate grid (np*dp*dx = pi*hbar*J)");
  }

  leg.out_dir = multi_leg ? base_out_dir + "/" + name : base_out_dir;

  // Resume compatibility text: every semantic field except t_final and the
  // output directory.
  std::ostringstream os;
  os << "leg=" << name << "\nmode=" << mode_name(leg.mode) << "\npotential="
     << leg.potential.name() << " mass=" << fmt17(leg.potential.mass)
     << " kappa=" << fmt17(leg.potential.kappa) << " omega0=" << fmt17(leg.potential.omega0)
     << " A=" << fmt17(leg.potential.A) << " B=" << fmt17(leg.potential.B)
     << " lambda=" << fmt17(leg.potential.lambda) << " omega=" << fmt17(leg.potential.omega)
     << "\ngrid=" << leg.grid.nx << "x" << leg.grid.np << " [" << fmt17(leg.grid.x_min) << ","
     << fmt17(leg.grid.x_max) << ")x[" << fmt17(leg.grid.p_min) << "," << fmt17(leg.grid.p_max)
     << ") " << (leg.grid.boundary == Boundary::periodic_x ? "periodic" : "box")
     << "\nstate=" << (leg.state_kind == StateKind::wigner ? "wigner" : "classical")
     << " x0=" << fmt17(leg.x0) << " p0=" << fmt17(leg.p0) << " sx=" << fmt17(leg.sigma_x)
     << " sp=" << fmt17(leg.sigma_p) << " hbar=" << fmt17(leg.hbar)
     << "\nevolve= dt=" << fmt17(leg.dt) << " D=" << fmt17(leg.D)
     << " trunc=" << (leg.moyal.truncated ? leg.moyal.lambda_max : 0)
     << " rec=" << leg.record_every << (leg.rec_gamma ? " gamma" : "")
     << (leg.rec_purity ? " purity" : "") << (leg.rec_l2 ? " l2" : "")
     << (leg.rec_nu ? " nu" : "") << "\nsme= k=" << fmt17(leg.sme.k)
     << " eta=" << fmt17(leg.sme.eta) << " n_traj=" << leg.sme.n_traj << " seed=" << seed
     << "\noutput= spectrum=" << (leg.spectrum_at_end ? 1 : 0)
     << " snap=" << leg.snapshot_every << " ckpt=" << leg.checkpoint_every << "\n";
  leg.compat = os.str();

  const std::vector<std::string> stray = kv.unused();
  if (!stray.empty()) {
    std::string msg = "config: unknown key";
    if (stray.size() > 1) msg += "s";
    msg += " '";
    for (std::size_t i = 0; i < stray.size(); ++i) msg += (i ? "', '" : "") + stray[i];
    msg += "'";
    throw config_error(msg);
  }
  return leg;
}

}  // namespace

std::vector<std::pair<std::string, std::string>> parse_kv_text(const std::string& text) {
  std::vector<std::pair<std::string, std::string>> out;
  std::set<std::string> seen;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos)
      throw config_error("config: line " + std::to_string(lineno) +
                         ": expected 'key = value', got '" + line + "'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (!legal_key(key))
      throw config_error("config: line " + std::to_string(lineno) + ": malformed key '" + key +
                         "'");
    if (value.empty())
      throw config_error("config: line " + std::to_string(lineno) + ": empty value for '" + key +
                         "'");
    if (!seen.insert(key).second)
      throw config_error("config: line " + std::to_string(lineno) + ": duplicate key '" + key +
                         "'");
    out.emplace_back(key, value);
  }
  return out;
}

ExperimentConfig parse_config_text(const std::string& text) {
  const auto pairs = parse_kv_text(text);

  // Split base keys from leg overrides, keeping leg first-appearance order.
  std::vector<std::pair<std::string, std::string>> base;
  std::vector<std::string> leg_order;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> leg_keys;
  for (const auto& [key, value] : pairs) {
    if (key.rfind("leg.", 0) == 0) {
      const std::size_t dot = key.find('.', 4);
      if (dot == std::string::npos || dot == 4 || dot + 1 >= key.size())
        throw config_error("config: malformed leg key '" + key +
                           "' (expected leg.<name>.<key>)");
      const std::string name = key.substr(4, dot - 4);
      if (!leg_keys.count(name)) leg_order.push_back(name);
      leg_keys[name].emplace_back(key.substr(dot + 1), value);
    } else {
      base.emplace_back(key, value);
    }
  }

  // Experiment-wide keys live in the base only.
  std::string out_dir;
  std::uint64_t seed = 0;
  {
    KeyView probe;
    for (const auto& [k, v] : base) probe.put(k, v, k);
    out_dir = probe.raw("output.dir");
    seed = probe.u64_or("run.seed", 0);
  }
  for (const auto& [name, keys] : leg_keys)
    for (const auto& [k, v] : keys)
      if (k == "output.dir" || k == "run.seed")
        throw config_error("config: leg." + name + "." + k + ": experiment-wide key cannot be "
                           "overridden per leg");

  ExperimentConfig cfg;
  cfg.out_dir = out_dir;
  cfg.seed = seed;

  const bool multi = !leg_order.empty();
  if (!multi) leg_order.push_back("main");
  for (const std::string& name : leg_order) {
    if (!legal_key(name) || name.find('.') != std::string::npos)
      throw config_error("config: malformed leg name '" + name + "'");
    KeyView kv;
    for (const auto& [k, v] : base) kv.put(k, v, k);
    if (multi)
      for (const auto& [k, v] : leg_keys[name]) kv.put(k, v, "leg." + name + "." + k);
    kv.raw("output.dir");
    kv.u64_or("run.seed", 0);
    try {
      cfg.legs.push_back(build_leg(name, kv, seed, out_dir, multi));
    } catch (const config_error& e) {
      if (multi) throw config_error(std::string(e.what()) + " (leg '" + name + "')");
      throw;
    }
  }
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw io_error("config: cannot open: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config_text(ss.str());
}

}  // namespace mlab
