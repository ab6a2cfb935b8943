#include "mion/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <numbers>
#include <optional>
#include <sstream>

#include "mion/time_series.hpp"

namespace mion {

// -- expressions -------------------------------------------------------------

namespace {

class ExpressionParser {
 public:
  explicit ExpressionParser(std::string_view s) : s_(s) {}

  double parse() {
    const double v = sum();
    skip_space();
    if (i_ != s_.size()) fail("unexpected '" + std::string(1, s_[i_]) + "'");
    return v;
  }

 private:
  std::string_view s_;
  std::size_t i_ = 0;

  [[noreturn]] void fail(const std::string& what) const {
    throw ConfigError("cannot evaluate '" + std::string(s_) + "': " + what);
  }

  void skip_space() {
    while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
  }
  bool peek(char c) {
    skip_space();
    return i_ < s_.size() && s_[i_] == c;
  }
  bool accept(char c) {
    if (!peek(c)) return false;
    ++i_;
    return true;
  }

  double sum() {
    double v = product();
    for (;;) {
      if (accept('+')) {
        v += product();
      } else if (accept('-')) {
        v -= product();
      } else {
        return v;
      }
    }
  }

  double product() {
    double v = unary();
    for (;;) {
      if (accept('*')) {
        v *= unary();
      } else if (accept('/')) {
        const double d = unary();
        if (d == 0.0) fail("division by zero");
        v /= d;
      } else {
        return v;
      }
    }
  }

  double unary() {
    if (accept('-')) return -unary();
    if (accept('+')) return unary();
    return power();
  }

  double power() {
    const double base = primary();
    if (accept('^')) return std::pow(base, unary());
    return base;
  }

  double primary() {
    skip_space();
    if (i_ >= s_.size()) fail("unexpected end of expression");
    const char c = s_[i_];
    if (c == '(') {
      ++i_;
      const double v = sum();
      if (!accept(')')) fail("missing ')'");
      return v;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') {
      const double v = number();
      // implicit multiplication: 2pi, 3(1+x), 2 sqrt(2)
      skip_space();
      if (i_ < s_.size() &&
          (std::isalpha(static_cast<unsigned char>(s_[i_])) || s_[i_] == '(')) {
        return v * power();
      }
      return v;
    }
    if (std::isalpha(static_cast<unsigned char>(c))) return identifier();
    fail("unexpected '" + std::string(1, c) + "'");
  }

  double number() {
    const std::size_t start = i_;
    auto digits = [&] {
      while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
    };
    digits();
    if (i_ < s_.size() && s_[i_] == '.') {
      ++i_;
      digits();
    }
    if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
      std::size_t j = i_ + 1;
      if (j < s_.size() && (s_[j] == '+' || s_[j] == '-')) ++j;
      if (j < s_.size() && std::isdigit(static_cast<unsigned char>(s_[j]))) {
        i_ = j;
        digits();
      }
    }
    const std::string text(s_.substr(start, i_ - start));
    if (text == ".") fail("malformed number");
    return std::strtod(text.c_str(), nullptr);
  }

  double identifier() {
    const std::size_t start = i_;
    while (i_ < s_.size() &&
           (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_')) {
      ++i_;
    }
    const std::string name(s_.substr(start, i_ - start));
    if (name == "pi") return std::numbers::pi;
    static const std::map<std::string, double (*)(double)> functions{
        {"sqrt", [](double x) { return std::sqrt(x); }},
        {"exp", [](double x) { return std::exp(x); }},
        {"log", [](double x) { return std::log(x); }},
        {"sin", [](double x) { return std::sin(x); }},
        {"cos", [](double x) { return std::cos(x); }},
        {"abs", [](double x) { return std::abs(x); }},
    };
    const auto f = functions.find(name);
    if (f == functions.end()) fail("unknown name '" + name + "'");
    if (!accept('(')) fail(name + " needs parentheses");
    const double arg = sum();
    if (!accept(')')) fail("missing ')'");
    const double v = f->second(arg);
    if (!std::isfinite(v)) fail(name + " is undefined at " + std::to_string(arg));
    return v;
  }
};

}  // namespace

double evaluate_expression(std::string_view text) {
  const double v = ExpressionParser(text).parse();
  if (!std::isfinite(v)) {
    throw ConfigError("expression '" + std::string(text) + "' is not finite");
  }
  return v;
}

std::string_view to_string(ScenarioCheck c) {
  switch (c) {
    case ScenarioCheck::MonotonePDown:
      return "monotone_p_down";
    case ScenarioCheck::OscillatingPDown:
      return "oscillating_p_down";
    case ScenarioCheck::ConstantEnergy:
      return "constant_energy";
  }
  return "unknown";
}

const std::vector<std::string>& config_keys() {
  static const std::vector<std::string> keys{
      "name",         "omega",       "omega21",    "omega0",          "eta",
      "phi",          "k",           "kappa",      "initial",         "fock_n",
      "alpha",        "alpha_re",    "alpha_im",   "nbar",            "explicit_file",
      "reference_n",  "dim_fock",    "tail_budget", "mode",           "sideband_cutoff",
      "method",       "rel_tol",     "abs_tol",    "max_step",        "t_end",
      "samples",      "outputs",     "emit",       "compare",         "tol_p_down",
      "tol_position", "tol_energy",  "checks"};
  return keys;
}

const std::vector<std::string>& standard_channels() {
  using namespace channels;
  static const std::vector<std::string> names{
      kPDown,          kMeanPosition,      kMeanMomentum,     kMeanEnergy,
      kPositionSq,     kMomentumSq,        kPositionVariance, kMomentumVariance,
      kTraceError,     kHermiticityDefect, kMinEigenvalue,    kTailMass,
      kPurity};
  return names;
}

// -- file parsing ------------------------------------------------------------

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

std::string trim(std::string_view s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return std::string(s.substr(a, b - a));
}

std::vector<std::string> split_list(std::string_view s) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in{std::string(s)};
  while (std::getline(in, item, ',')) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

std::size_t edit_distance(std::string_view a, std::string_view b) {
  std::vector<std::size_t> row(b.size() + 1);
  for (std::size_t j = 0; j <= b.size(); ++j) row[j] = j;
  for (std::size_t i = 1; i <= a.size(); ++i) {
    std::size_t diag = row[0];
    row[0] = i;
    for (std::size_t j = 1; j <= b.size(); ++j) {
      const std::size_t up = row[j];
      row[j] = std::min({row[j] + 1, row[j - 1] + 1, diag + (a[i - 1] != b[j - 1])});
      diag = up;
    }
  }
  return row[b.size()];
}

std::string nearest(std::string_view word, const std::vector<std::string>& candidates) {
  std::string best;
  std::size_t best_d = std::numeric_limits<std::size_t>::max();
  for (const auto& c : candidates) {
    const std::size_t d = edit_distance(word, c);
    if (d < best_d) {
      best_d = d;
      best = c;
    }
  }
  return best_d <= std::max<std::size_t>(2, word.size() / 2) ? best : std::string{};
}

struct Unit {
  std::string name;
  double scale;  ///< to SI; ignored for relative units
  bool relative = false;
};

std::string unit_names(const std::vector<Unit>& units) {
  std::string s;
  for (const auto& u : units) s += (s.empty() ? "" : ", ") + u.name;
  return s;
}

const std::vector<Unit> kAngularUnits{{"rad/s", 1.0},        {"1/s", 1.0},
                                      {"s^-1", 1.0},         {"Hz", kTwoPi},
                                      {"kHz", kTwoPi * 1e3}, {"MHz", kTwoPi * 1e6},
                                      {"GHz", kTwoPi * 1e9}};
const std::vector<Unit> kRateUnits{{"1/s", 1.0},       {"s^-1", 1.0},
                                   {"1/ms", 1e3},      {"1/us", 1e6},
                                   {"kappa_crit", 0, true}, {"omega0", 0, true},
                                   {"rabi", 0, true}};
const std::vector<Unit> kTimeUnits{{"s", 1.0},         {"ms", 1e-3},
                                   {"us", 1e-6},       {"ns", 1e-9},
                                   {"1/rabi", 0, true}, {"rabi_periods", 0, true},
                                   {"1/kappa", 0, true}, {"1/omega0", 0, true}};
const std::vector<Unit> kAngleUnits{{"rad", 1.0}, {"deg", std::numbers::pi / 180.0}};

struct Entry {
  std::string value;
  int line;
};

class Reader {
 public:
  Reader(std::string_view origin, std::map<std::string, Entry> entries)
      : origin_(origin), entries_(std::move(entries)) {}

  bool has(const std::string& key) const { return entries_.count(key) != 0; }

  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    const auto it = entries_.find(key);
    const int line = it == entries_.end() ? 0 : it->second.line;
    std::string where = origin_;
    if (line > 0) where += ":" + std::to_string(line);
    throw ConfigError(where + ": " + key + ": " + what, key, line);
  }

  std::string text(const std::string& key, const std::string& fallback) const {
    const auto it = entries_.find(key);
    return it == entries_.end() ? fallback : it->second.value;
  }

  /// Evaluates "<expr> [unit]"; returns the number and the unit actually used.
  std::pair<double, const Unit*> quantity(const std::string& key,
                                          const std::vector<Unit>& units,
                                          bool unit_required) const {
    const std::string v = entries_.at(key).value;
    const Unit* unit = nullptr;
    std::string expr = v;
    const auto cut = v.find_last_of(" \t");
    if (cut != std::string::npos) {
      const std::string tail = v.substr(cut + 1);
      for (const auto& u : units) {
        if (u.name == tail) {
          unit = &u;
          expr = trim(v.substr(0, cut));
        }
      }
    }
    double number = 0.0;
    try {
      number = evaluate_expression(expr);
    } catch (const ConfigError& e) {
      if (unit == nullptr && cut != std::string::npos && !units.empty()) {
        fail(key, "unknown unit '" + v.substr(cut + 1) + "' (accepted: " +
                      unit_names(units) + ")");
      }
      fail(key, e.what());
    }
    if (unit == nullptr && unit_required) {
      fail(key, "missing unit (accepted: " + unit_names(units) + ")");
    }
    return {number, unit};
  }

  double real(const std::string& key, double fallback) const {
    if (!has(key)) return fallback;
    return quantity(key, {{"1", 1.0}}, false).first;
  }

  int integer(const std::string& key, int fallback) const {
    if (!has(key)) return fallback;
    const double v = real(key, 0.0);
    if (v != std::floor(v) || std::abs(v) > 1e9) fail(key, "must be an integer");
    return static_cast<int>(v);
  }

  std::string choice(const std::string& key, const std::string& fallback,
                     const std::vector<std::string>& options) const {
    const std::string v = text(key, fallback);
    if (std::find(options.begin(), options.end(), v) == options.end()) {
      std::string all;
      for (const auto& o : options) all += (all.empty() ? "" : ", ") + o;
      const std::string near = nearest(v, options);
      fail(key, "'" + v + "' is not one of " + all +
                    (near.empty() ? "" : " (did you mean '" + near + "'?)"));
    }
    return v;
  }

 private:
  std::string origin_;
  std::map<std::string, Entry> entries_;
};

std::map<std::string, Entry> tokenize(std::string_view text, std::string_view origin) {
  std::map<std::string, Entry> entries;
  std::istringstream in{std::string(text)};
  std::string raw;
  int line = 0;
  auto where = [&] { return std::string(origin) + ":" + std::to_string(line); };
  while (std::getline(in, raw)) {
    ++line;
    const auto hash = raw.find('#');
    const std::string body = trim(hash == std::string::npos ? raw : raw.substr(0, hash));
    if (body.empty()) continue;
    const auto eq = body.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(where() + ": expected 'key = value', got '" + body + "'", {}, line);
    }
    const std::string key = trim(body.substr(0, eq));
    const std::string value = trim(body.substr(eq + 1));
    if (key.empty()) throw ConfigError(where() + ": missing key before '='", {}, line);
    const auto& known = config_keys();
    if (std::find(known.begin(), known.end(), key) == known.end()) {
      const std::string near = nearest(key, known);
      throw ConfigError(where() + ": unknown key '" + key + "'" +
                            (near.empty() ? "" : " (did you mean '" + near + "'?)"),
                        key, line);
    }
    if (value.empty()) throw ConfigError(where() + ": " + key + ": empty value", key, line);
    if (entries.count(key)) {
      throw ConfigError(where() + ": " + key + ": duplicate key (first set on line " +
                            std::to_string(entries[key].line) + ")",
                        key, line);
    }
    entries[key] = {value, line};
  }
  return entries;
}

CMatrix read_explicit_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open explicit state file '" + path.string() + "'");
  std::vector<std::vector<Complex>> rows;
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    std::istringstream ls(line);
    std::vector<Complex> row;
    Complex z;
    while (ls >> z) row.push_back(z);
    if (!ls.eof()) {
      throw ConfigError("explicit state file '" + path.string() + "': unreadable entry in '" +
                        line + "'");
    }
    if (!row.empty()) rows.push_back(std::move(row));
  }
  const auto n = static_cast<Eigen::Index>(rows.size());
  if (n == 0) throw ConfigError("explicit state file '" + path.string() + "' is empty");
  CMatrix m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (static_cast<Eigen::Index>(rows[std::size_t(i)].size()) != n) {
      throw ConfigError("explicit state file '" + path.string() + "' is not square");
    }
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[std::size_t(i)][std::size_t(j)];
  }
  return m;
}

std::string format_double(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

bool valid_name(const std::string& s) {
  return !s.empty() && std::all_of(s.begin(), s.end(), [](char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_' || c == '.';
  });
}

}  // namespace

ScenarioConfig parse_config(std::string_view text, std::string_view origin,
                            const std::filesystem::path& base_dir) {
  const Reader r(origin, tokenize(text, origin));
  ScenarioConfig c;

  c.name = r.text("name", c.name);
  if (!valid_name(c.name)) r.fail("name", "use letters, digits, '-', '_' or '.' only");

  // trap
  for (const char* key : {"omega", "omega0", "eta"}) {
    if (!r.has(key)) r.fail(key, "required key is missing");
  }
  auto& trap = c.trap;
  {
    const auto [v, u] = r.quantity("omega", kAngularUnits, true);
    trap.omega = v * u->scale;
    if (!(trap.omega > 0)) r.fail("omega", "must be > 0");
  }
  std::vector<Unit> relative_to_omega = kAngularUnits;
  relative_to_omega.push_back({"omega", 0, true});
  auto angular = [&](const std::string& key) {
    const auto [v, u] = r.quantity(key, relative_to_omega, true);
    return u->relative ? v * trap.omega : v * u->scale;
  };
  if (r.has("omega21")) trap.omega21 = angular("omega21");
  trap.omega0 = angular("omega0");
  if (trap.omega0 < 0) r.fail("omega0", "must be >= 0");
  trap.eta = r.real("eta", 0.0);
  if (trap.eta < 0) r.fail("eta", "must be >= 0");
  trap.phi = -std::numbers::pi / 2;
  if (r.has("phi")) {
    const auto [v, u] = r.quantity("phi", kAngleUnits, true);
    trap.phi = v * u->scale;
  }
  trap.k_sideband = r.integer("k", 1);
  if (trap.k_sideband < 0) r.fail("k", "must be >= 0");

  // initial state
  const std::string initial =
      r.choice("initial", "fock", {"fock", "coherent", "thermal", "explicit"});
  auto forbid = [&](const std::string& key, const std::string& why) {
    if (r.has(key)) r.fail(key, why);
  };
  if (initial != "fock") forbid("fock_n", "only valid with initial = fock");
  if (initial != "coherent") {
    for (const char* key : {"alpha", "alpha_re", "alpha_im"}) {
      forbid(key, "only valid with initial = coherent");
    }
  }
  if (initial != "thermal") forbid("nbar", "only valid with initial = thermal");
  if (initial != "explicit") forbid("explicit_file", "only valid with initial = explicit");

  if (initial == "fock") {
    const int n = r.integer("fock_n", 0);
    if (n < 0) r.fail("fock_n", "must be >= 0");
    c.initial = FockState{n};
  } else if (initial == "coherent") {
    if (r.has("alpha") && (r.has("alpha_re") || r.has("alpha_im"))) {
      r.fail("alpha", "give either alpha or alpha_re/alpha_im");
    }
    const double re = r.has("alpha") ? r.real("alpha", 0.0) : r.real("alpha_re", 0.0);
    c.initial = CoherentState{{re, r.real("alpha_im", 0.0)}};
  } else if (initial == "thermal") {
    if (!r.has("nbar")) r.fail("nbar", "required for initial = thermal");
    const double nbar = r.real("nbar", 0.0);
    if (nbar < 0) r.fail("nbar", "must be >= 0");
    c.initial = ThermalState{nbar};
  } else {
    if (!r.has("explicit_file")) r.fail("explicit_file", "required for initial = explicit");
    std::filesystem::path p = r.text("explicit_file", "");
    if (p.is_relative()) p = base_dir / p;
    p = std::filesystem::absolute(p).lexically_normal();
    c.explicit_file = p.string();
    try {
      c.initial = ExplicitState{read_explicit_matrix(p)};
    } catch (const ConfigError& e) {
      r.fail("explicit_file", e.what());
    }
  }
  const auto [mean_n, sigma_n] = occupation_moments(c.initial);
  (void)sigma_n;
  c.reference_n = r.integer("reference_n", static_cast<int>(std::lround(mean_n)));
  if (c.reference_n < 0) r.fail("reference_n", "must be >= 0");

  const double rabi_ref = std::abs(rabi_frequency(c.reference_n, trap));
  auto need_rabi = [&](const std::string& key) {
    if (rabi_ref == 0.0) {
      r.fail(key, "relative unit needs a nonzero Rabi frequency Omega_{n,n+k} at n = " +
                      std::to_string(c.reference_n));
    }
    return rabi_ref;
  };

  // measurement strength
  if (r.has("kappa")) {
    const auto [v, u] = r.quantity("kappa", kRateUnits, true);
    if (!u->relative) {
      trap.kappa = v * u->scale;
    } else if (u->name == "kappa_crit") {
      trap.kappa = v * 4.0 * need_rabi("kappa");
    } else if (u->name == "rabi") {
      trap.kappa = v * need_rabi("kappa");
    } else {
      trap.kappa = v * trap.omega0;
    }
    if (trap.kappa < 0) r.fail("kappa", "must be >= 0");
  }
  try {
    trap.validate();
  } catch (const ValidationError& e) {
    r.fail("omega", e.what());
  }
  c.warnings = trap.regime_warnings();

  // truncation and dynamics
  if (r.has("tail_budget")) {
    c.tail_budget = r.real("tail_budget", kDefaultTailBudget);
    if (!(c.tail_budget > 0)) r.fail("tail_budget", "must be > 0");
  }
  if (r.text("dim_fock", "auto") == "auto") {
    c.dim_fock = default_fock_dim(c.initial, trap.k_sideband);
  } else {
    c.dim_fock = r.integer("dim_fock", 0);
    if (c.dim_fock < 2 || c.dim_fock <= trap.k_sideband) {
      r.fail("dim_fock", "must be >= 2 and > k");
    }
  }
  const std::string mode = r.choice("mode", "jcm", {"jcm", "full"});
  if (mode == "jcm") {
    forbid("sideband_cutoff", "only valid with mode = full");
    c.mode = ReducedJCM{};
  } else {
    FullCoupling fc = default_full_coupling(trap.k_sideband);
    if (r.text("sideband_cutoff", "auto") != "auto") {
      fc.sideband_cutoff = r.integer("sideband_cutoff", 0);
    }
    if (fc.sideband_cutoff < trap.k_sideband) r.fail("sideband_cutoff", "must be >= k");
    if (fc.sideband_cutoff >= c.dim_fock) r.fail("sideband_cutoff", "must be < dim_fock");
    c.mode = fc;
  }

  // integrator and time grid
  auto& ic = c.integrator;
  ic.method = r.choice("method", "adaptive", {"adaptive", "rk4"}) == "rk4"
                  ? Method::FixedRK4
                  : Method::DormandPrince;
  ic.rel_tol = r.real("rel_tol", ic.rel_tol);
  ic.abs_tol = r.real("abs_tol", ic.abs_tol);
  if (!(ic.rel_tol > 0)) r.fail("rel_tol", "must be > 0");
  if (!(ic.abs_tol > 0)) r.fail("abs_tol", "must be > 0");

  auto time_value = [&](const std::string& key) {
    const auto [v, u] = r.quantity(key, kTimeUnits, true);
    if (!u->relative) return v * u->scale;
    if (u->name == "1/rabi") return v / need_rabi(key);
    if (u->name == "rabi_periods") return v * 2.0 * std::numbers::pi / need_rabi(key);
    if (u->name == "1/kappa") {
      if (trap.kappa == 0.0) r.fail(key, "unit 1/kappa needs kappa > 0");
      return v / trap.kappa;
    }
    if (trap.omega0 == 0.0) r.fail(key, "unit 1/omega0 needs omega0 > 0");
    return v / trap.omega0;
  };

  const std::string max_step = r.text("max_step", "inf");
  if (max_step != "inf" && max_step != "auto") {
    ic.max_step = time_value("max_step");
    if (!(ic.max_step > 0)) r.fail("max_step", "must be > 0");
  }

  if (r.text("t_end", "auto") == "auto") {
    double t = 0.0;
    if (rabi_ref > 0) t = 10.0 * 2.0 * std::numbers::pi / rabi_ref;
    if (trap.kappa > 0) t = std::max(t, 40.0 / trap.kappa);
    if (t == 0.0) {
      r.fail("t_end", "no Rabi oscillation and no measurement: set t_end explicitly");
    }
    c.t_end = t;
  } else {
    c.t_end = time_value("t_end");
    if (!(c.t_end > 0)) r.fail("t_end", "must be > 0");
  }
  c.samples = r.integer("samples", c.samples);
  if (c.samples < 2) r.fail("samples", "must be >= 2");
  ic.sample_times = uniform_times(c.t_end, c.samples);
  if (ic.method == Method::FixedRK4 && !std::isfinite(ic.max_step)) {
    ic.max_step = c.t_end / (c.samples - 1);
  }

  // outputs and verdicts
  const auto& known = standard_channels();
  const std::string outputs = r.text("outputs", "all");
  if (outputs == "all") {
    c.outputs = known;
  } else {
    for (const auto& name : split_list(outputs)) {
      if (std::find(known.begin(), known.end(), name) == known.end()) {
        const std::string near = nearest(name, known);
        r.fail("outputs", "unknown channel '" + name + "'" +
                              (near.empty() ? "" : " (did you mean '" + near + "'?)"));
      }
      if (std::find(c.outputs.begin(), c.outputs.end(), name) == c.outputs.end()) {
        c.outputs.push_back(name);
      }
    }
    if (c.outputs.empty()) r.fail("outputs", "no channels selected");
  }
  const std::string emit = r.text("emit", "csv,json");
  c.emit_csv = c.emit_json = false;
  if (emit != "none") {
    for (const auto& e : split_list(emit)) {
      if (e == "csv") {
        c.emit_csv = true;
      } else if (e == "json") {
        c.emit_json = true;
      } else {
        r.fail("emit", "unknown format '" + e + "' (accepted: csv, json, none)");
      }
    }
  }
  c.compare = r.choice("compare", "auto", {"auto", "on", "off"}) != "off";
  c.tolerances.p_down = r.real("tol_p_down", c.tolerances.p_down);
  c.tolerances.mean_position = r.real("tol_position", c.tolerances.mean_position);
  c.tolerances.mean_energy = r.real("tol_energy", c.tolerances.mean_energy);
  for (const char* key : {"tol_p_down", "tol_position", "tol_energy"}) {
    if (r.has(key) && !(r.real(key, 0.0) > 0)) r.fail(key, "must be > 0");
  }
  const std::string checks = r.text("checks", "none");
  if (checks != "none") {
    const std::vector<std::string> names{"monotone_p_down", "oscillating_p_down",
                                         "constant_energy"};
    for (const auto& name : split_list(checks)) {
      const auto it = std::find(names.begin(), names.end(), name);
      if (it == names.end()) {
        const std::string near = nearest(name, names);
        r.fail("checks", "unknown check '" + name + "'" +
                             (near.empty() ? "" : " (did you mean '" + near + "'?)"));
      }
      c.checks.push_back(static_cast<ScenarioCheck>(it - names.begin()));
    }
  }
  return c;
}

ScenarioConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path.string() + "'");
  std::ostringstream text;
  text << in.rdbuf();
  const std::string body = text.str();
  ScenarioConfig c = parse_config(body, path.string(), path.parent_path());
  if (tokenize(body, path.string()).count("name") == 0 && valid_name(path.stem().string())) {
    c.name = path.stem().string();
  }
  return c;
}

std::string canonical_config(const ScenarioConfig& c) {
  std::ostringstream os;
  auto put = [&](const char* key, const std::string& value) {
    os << key << " = " << value << "\n";
  };
  const auto& t = c.trap;
  put("name", c.name);
  put("omega", format_double(t.omega) + " rad/s");
  put("omega21", format_double(t.omega21) + " rad/s");
  put("omega0", format_double(t.omega0) + " rad/s");
  put("eta", format_double(t.eta));
  put("phi", format_double(t.phi) + " rad");
  put("k", std::to_string(t.k_sideband));
  put("kappa", format_double(t.kappa) + " 1/s");
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, FockState>) {
          put("initial", "fock");
          put("fock_n", std::to_string(s.n));
        } else if constexpr (std::is_same_v<T, CoherentState>) {
          put("initial", "coherent");
          put("alpha_re", format_double(s.alpha.real()));
          put("alpha_im", format_double(s.alpha.imag()));
        } else if constexpr (std::is_same_v<T, ThermalState>) {
          put("initial", "thermal");
          put("nbar", format_double(s.nbar));
        } else {
          put("initial", "explicit");
          put("explicit_file", c.explicit_file);
        }
      },
      c.initial);
  put("reference_n", std::to_string(c.reference_n));
  put("dim_fock", std::to_string(c.dim_fock));
  put("tail_budget", format_double(c.tail_budget));
  if (const auto* fc = std::get_if<FullCoupling>(&c.mode)) {
    put("mode", "full");
    put("sideband_cutoff", std::to_string(fc->sideband_cutoff));
  } else {
    put("mode", "jcm");
  }
  const auto& ic = c.integrator;
  put("method", ic.method == Method::FixedRK4 ? "rk4" : "adaptive");
  put("rel_tol", format_double(ic.rel_tol));
  put("abs_tol", format_double(ic.abs_tol));
  put("max_step", std::isfinite(ic.max_step) ? format_double(ic.max_step) + " s" : "inf");
  put("t_end", format_double(c.t_end) + " s");
  put("samples", std::to_string(c.samples));
  std::string outputs;
  for (const auto& o : c.outputs) outputs += (outputs.empty() ? "" : ",") + o;
  put("outputs", outputs);
  std::string emit;
  if (c.emit_csv) emit = "csv";
  if (c.emit_json) emit += emit.empty() ? "json" : ",json";
  put("emit", emit.empty() ? "none" : emit);
  put("compare", c.compare ? "on" : "off");
  put("tol_p_down", format_double(c.tolerances.p_down));
  put("tol_position", format_double(c.tolerances.mean_position));
  put("tol_energy", format_double(c.tolerances.mean_energy));
  std::string checks;
  for (auto check : c.checks) checks += (checks.empty() ? "" : ",") + std::string(to_string(check));
  put("checks", checks.empty() ? "none" : checks);
  return os.str();
}

std::string config_hash(const ScenarioConfig& config) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char ch : canonical_config(config)) {
    h ^= ch;
    h *= 1099511628211ull;
  }
  char buf[32];
  std::snprintf(buf, sizeof buf, "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace mion
