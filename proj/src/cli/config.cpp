#include "ctb/cli/config.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>

#include "ctb/errors.hpp"
#include "ctb/kepler.hpp"
#include "ctb/secular.hpp"

namespace ctb::cli {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

[[noreturn]] void fail(std::size_t line, const std::string& msg) {
  throw ConfigError("config line " + std::to_string(line) + ": " + msg);
}

bool bare_key(std::string_view k) {
  if (k.empty()) return false;
  for (char c : k)
    if (!(std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-')) return false;
  return true;
}

std::string dotted_key(std::string_view raw, std::size_t line) {
  std::string out;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = raw.find('.', start);
    const std::string_view part = trim(raw.substr(start, dot == std::string_view::npos ? dot : dot - start));
    if (!bare_key(part)) fail(line, "invalid key '" + std::string(raw) + "'");
    if (!out.empty()) out += '.';
    out += part;
    if (dot == std::string_view::npos) break;
    start = dot + 1;
  }
  return out;
}

// Drops a trailing comment that is not inside a string.
std::string_view strip_comment(std::string_view s) {
  bool in_string = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_string = !in_string;
    if (s[i] == '#' && !in_string) return s.substr(0, i);
  }
  return s;
}

std::optional<double> parse_number(std::string_view s) {
  s = trim(s);
  if (s.empty()) return std::nullopt;
  std::string clean;
  for (char c : s)
    if (c != '_') clean += c;
  std::string_view v = clean;
  if (v.front() == '+') v.remove_prefix(1);
  if (v == "inf" || v == "nan" || v == "-inf" || v == "-nan") return std::nullopt;
  double out = 0.0;
  const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || ptr != v.data() + v.size()) return std::nullopt;
  return out;
}

ConfigDocument::Value parse_value(std::string_view s, std::size_t line) {
  s = trim(s);
  if (s.empty()) fail(line, "missing value");
  if (s == "true") return true;
  if (s == "false") return false;
  if (s.front() == '"') {
    if (s.size() < 2 || s.back() != '"') fail(line, "unterminated string");
    std::string out;
    for (std::size_t i = 1; i + 1 < s.size(); ++i) {
      if (s[i] != '\\') {
        out += s[i];
        continue;
      }
      if (++i + 1 >= s.size() + 1) fail(line, "dangling escape");
      switch (s[i]) {
        case 'n': out += '\n'; break;
        case 't': out += '\t'; break;
        case '"': out += '"'; break;
        case '\\': out += '\\'; break;
        default: fail(line, "unsupported escape");
      }
    }
    return out;
  }
  if (s.front() == '[') {
    if (s.back() != ']') fail(line, "unterminated array");
    std::vector<double> out;
    std::string_view body = trim(s.substr(1, s.size() - 2));
    while (!body.empty()) {
      const std::size_t comma = body.find(',');
      const std::string_view item = trim(body.substr(0, comma));
      if (!item.empty()) {
        const auto v = parse_number(item);
        if (!v) fail(line, "arrays may hold numbers only");
        out.push_back(*v);
      } else if (comma != std::string_view::npos) {
        fail(line, "empty array element");
      }
      if (comma == std::string_view::npos) break;
      body = trim(body.substr(comma + 1));
    }
    return out;
  }
  const auto v = parse_number(s);
  if (!v) fail(line, "cannot parse value '" + std::string(s) + "'");
  return *v;
}

}  // namespace

ConfigDocument ConfigDocument::parse(std::string_view text) {
  ConfigDocument doc;
  doc.text_ = std::string(text);
  std::string table;
  std::size_t line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    const std::string_view line = trim(strip_comment(raw));
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.size() < 3 || line.back() != ']' || line[1] == '[') fail(line_no, "malformed table header");
      table = dotted_key(line.substr(1, line.size() - 2), line_no);
      continue;
    }
    const std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) fail(line_no, "expected key = value");
    const std::string key = dotted_key(trim(line.substr(0, eq)), line_no);
    const std::string full = table.empty() ? key : table + "." + key;
    if (doc.values_.contains(full)) fail(line_no, "duplicate key '" + full + "'");
    doc.values_[full] = parse_value(line.substr(eq + 1), line_no);
  }
  return doc;
}

ConfigDocument ConfigDocument::load(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw ConfigError("cannot open config file '" + path + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return parse(ss.str());
}

const ConfigDocument::Value* ConfigDocument::find(const std::string& key) const {
  const auto it = values_.find(key);
  if (it == values_.end()) return nullptr;
  used_[key] = true;
  return &it->second;
}

std::optional<double> ConfigDocument::number(const std::string& key) const {
  const Value* v = find(key);
  if (!v) return std::nullopt;
  if (const double* d = std::get_if<double>(v)) return *d;
  throw ConfigError("'" + key + "' must be a number");
}

std::optional<long long> ConfigDocument::integer(const std::string& key) const {
  const auto d = number(key);
  if (!d) return std::nullopt;
  if (std::trunc(*d) != *d || std::abs(*d) > 9e15) throw ConfigError("'" + key + "' must be an integer");
  return static_cast<long long>(*d);
}

std::optional<bool> ConfigDocument::boolean(const std::string& key) const {
  const Value* v = find(key);
  if (!v) return std::nullopt;
  if (const bool* b = std::get_if<bool>(v)) return *b;
  throw ConfigError("'" + key + "' must be true or false");
}

std::optional<std::string> ConfigDocument::string(const std::string& key) const {
  const Value* v = find(key);
  if (!v) return std::nullopt;
  if (const std::string* s = std::get_if<std::string>(v)) return *s;
  throw ConfigError("'" + key + "' must be a string");
}

std::optional<std::vector<double>> ConfigDocument::numbers(const std::string& key) const {
  const Value* v = find(key);
  if (!v) return std::nullopt;
  if (const auto* a = std::get_if<std::vector<double>>(v)) return *a;
  throw ConfigError("'" + key + "' must be an array of numbers");
}

std::vector<std::string> ConfigDocument::unused() const {
  std::vector<std::string> out;
  for (const auto& [k, v] : values_)
    if (!used_.contains(k)) out.push_back(k);
  return out;
}

std::uint64_t fnv1a(std::string_view bytes) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

std::string hex_digest(std::uint64_t h) {
  static constexpr char digits[] = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i, h >>= 4) out[std::size_t(i)] = digits[h & 0xf];
  return out;
}

std::string_view command_name(Command c) {
  switch (c) {
    case Command::kepler: return "kepler";
    case Command::simulate: return "simulate";
    case Command::secular: return "secular";
    case Command::periodic: return "periodic";
    case Command::average: return "average";
    case Command::lift: return "lift";
  }
  return "?";
}

ReducedSystem RunConfig::reduced_system() const {
  if (polar) {
    ReducedSystem sys{masses, space, C};
    sys.validate();
    return sys;
  }
  return scaled_system(ScaledDelaunay{L_hat, ell, G_hat, g, C_hat, eps}, masses, space);
}

ReducedState RunConfig::initial_state() const {
  if (polar) return *polar;
  const ReducedSystem sys = reduced_system();
  return chart_from_delaunay(unscale(ScaledDelaunay{L_hat, ell, G_hat, g, C_hat, eps}, space.rho()), sys.kepler());
}

namespace {

template <class T>
void read(const ConfigDocument& doc, const std::string& key, T& field) {
  if constexpr (std::is_same_v<T, double>) {
    if (auto v = doc.number(key)) field = *v;
  } else if constexpr (std::is_same_v<T, bool>) {
    if (auto v = doc.boolean(key)) field = *v;
  } else if constexpr (std::is_same_v<T, std::string>) {
    if (auto v = doc.string(key)) field = *v;
  } else if constexpr (std::is_same_v<T, std::vector<double>>) {
    if (auto v = doc.numbers(key)) field = *v;
  } else if constexpr (std::is_same_v<T, std::size_t>) {
    if (auto v = doc.integer(key)) {
      if (*v < 0) throw ConfigError("'" + key + "' must be non-negative");
      field = std::size_t(*v);
    }
  } else if constexpr (std::is_same_v<T, int>) {
    if (auto v = doc.integer(key)) field = int(*v);
  } else if constexpr (std::is_same_v<T, std::optional<double>>) {
    if (auto v = doc.number(key)) field = *v;
  }
}

ReducedModel read_model(const ConfigDocument& doc, const std::string& key, ReducedModel def) {
  const auto s = doc.string(key);
  if (!s) return def;
  if (*s == "full") return ReducedModel::full;
  if (*s == "truncated") return ReducedModel::truncated;
  throw ConfigError("'" + key + "' must be \"full\" or \"truncated\"");
}

void require(bool ok, const std::string& msg) {
  if (!ok) throw ConfigError(msg);
}

void validate_common(const RunConfig& c) {
  require(std::isfinite(c.tol) && c.tol > 0.0 && c.tol < 1e-2, "tol must lie in (0, 1e-2)");
  if (c.command == Command::kepler) return;
  require(!c.space.is_flat(), "space.sign must be +1 or -1 for this command");
  if (c.polar) {
    const ReducedSystem sys = c.reduced_system();
    require(c.polar->phi > 0.0, "initial.phi must be positive");
    if (c.space.is_spherical()) require(c.polar->phi < std::numbers::pi, "initial.phi must be below pi");
    require(std::abs(c.polar->p_theta) <= sys.C, "|initial.p_theta| must not exceed initial.C");
    return;
  }
  require(c.eps > 0.0 && c.eps <= 0.2, "initial.eps must lie in (0, 0.2]");
  require(c.L_hat > 0.0 && c.C_hat > 0.0, "initial.L and initial.C must be positive");
  require(std::abs(c.G_hat) < c.L_hat, "|initial.G| must be below initial.L");
  require(std::abs(c.G_hat) <= c.C_hat, "|initial.G| must not exceed initial.C");
  require(c.G_hat != 0.0, "initial.G = 0 is a collision orbit");
  c.initial_state();  // rejects unbounded or degenerate orbits
}

}  // namespace

RunConfig make_run_config(Command cmd, const ConfigDocument& doc, const Overrides& ov) {
  RunConfig c;
  c.command = cmd;
  c.digest = hex_digest(fnv1a(doc.text()));
  try {
    if (auto kind = doc.string("experiment"); kind && *kind != command_name(cmd))
      throw ConfigError("config is for experiment '" + *kind + "', not '" + std::string(command_name(cmd)) + "'");

    int sign = 1;
    double rho = 1.0;
    if (auto s = doc.string("space.kind")) {
      if (*s == "sphere" || *s == "spherical") sign = 1;
      else if (*s == "hyperbolic") sign = -1;
      else if (*s == "flat") sign = 0;
      else throw ConfigError("space.kind must be sphere, hyperbolic or flat");
    }
    read(doc, "space.sign", sign);
    read(doc, "space.rho", rho);
    if (ov.flat_limit) rho = 1e6;
    require(std::isfinite(rho) && rho > 0.0, "space.rho must be positive");
    c.space = CurvedSpace::from_sign(sign, rho);

    double m1 = 0.3, m2 = 0.7;
    read(doc, "masses.m1", m1);
    read(doc, "masses.m2", m2);
    c.masses = MassPair::normalized(m1, m2);

    const std::string chart = doc.string("initial.chart").value_or("scaled_delaunay");
    if (chart == "polar") {
      ReducedState s{};
      read(doc, "initial.phi", s.phi);
      read(doc, "initial.p_phi", s.p_phi);
      read(doc, "initial.theta", s.theta);
      read(doc, "initial.p_theta", s.p_theta);
      read(doc, "initial.C", c.C);
      c.polar = s;
    } else if (chart == "scaled_delaunay") {
      read(doc, "initial.L", c.L_hat);
      read(doc, "initial.G", c.G_hat);
      read(doc, "initial.g", c.g);
      read(doc, "initial.ell", c.ell);
      read(doc, "initial.C", c.C_hat);
      read(doc, "initial.eps", c.eps);
    } else {
      throw ConfigError("initial.chart must be \"scaled_delaunay\" or \"polar\"");
    }

    read(doc, "tol", c.tol);
    read(doc, "output.dir", c.out_dir);
    std::string format = doc.string("output.format").value_or("csv");
    read(doc, "output.svg", c.svg);
    read(doc, "output.timestamp", c.timestamp);

    KeplerRun& k = c.kepler;
    read(doc, "kepler.m", k.m);
    read(doc, "kepler.M", k.M);
    read(doc, "kepler.L", k.L);
    read(doc, "kepler.G", k.G);
    read(doc, "kepler.alpha", k.alpha);
    read(doc, "kepler.epsilon", k.epsilon);
    read(doc, "kepler.g", k.g);
    read(doc, "kepler.periods", k.periods);
    read(doc, "kepler.samples", k.samples);

    SimulateRun& sim = c.simulate;
    read(doc, "simulate.t_end", sim.t_end);
    read(doc, "simulate.periods", sim.periods);
    read(doc, "simulate.samples", sim.samples);
    sim.model = read_model(doc, "simulate.model", sim.model);
    read(doc, "simulate.lift", sim.lift);

    SecularRun& sec = c.secular;
    read(doc, "secular.eps_values", sec.eps_values);
    read(doc, "secular.nodes", sec.nodes);
    read(doc, "secular.G_min", sec.G_min);
    read(doc, "secular.G_max", sec.G_max);
    read(doc, "secular.nG", sec.nG);
    read(doc, "secular.ng", sec.ng);

    AverageRun& av = c.average;
    read(doc, "average.eps_values", av.eps_values);
    read(doc, "average.nodes", av.nodes);
    read(doc, "average.order", av.order);
    if (auto p = doc.string("average.path")) {
      if (*p == "mean") av.flat_eccentric_path = false;
      else if (*p == "flat_eccentric") av.flat_eccentric_path = true;
      else throw ConfigError("average.path must be \"mean\" or \"flat_eccentric\"");
    }

    PeriodicRun& per = c.periodic;
    read(doc, "periodic.m", per.m);
    read(doc, "periodic.n", per.n);
    read(doc, "periodic.g0", per.g0);
    read(doc, "periodic.check_full", per.check_full);
    read(doc, "periodic.lift", per.lift);
    read(doc, "periodic.lift_revolutions", per.lift_revolutions);
    read(doc, "periodic.samples_per_revolution", per.samples_per_revolution);

    LiftRun& lf = c.lift;
    read(doc, "lift.periods", lf.periods);
    read(doc, "lift.samples", lf.samples);
    lf.model = read_model(doc, "lift.model", lf.model);

    if (const auto unused = doc.unused(); !unused.empty()) throw ConfigError("unknown config key '" + unused.front() + "'");

    if (ov.out_dir) c.out_dir = *ov.out_dir;
    if (ov.tol) c.tol = *ov.tol;
    if (ov.format) format = *ov.format;
    if (ov.svg) c.svg = true;
    if (ov.no_timestamp) c.timestamp = false;
    require(format == "csv" || format == "json", "format must be csv or json");
    c.json = format == "json";

    validate_common(c);
    switch (cmd) {
      case Command::kepler: {
        require(k.periods > 0.0, "kepler.periods must be positive");
        require(k.samples >= 2, "kepler.samples must be at least 2");
        const KeplerParams prm{k.m, k.M, c.space};
        prm.validate();
        if (k.L || k.G) {
          require(k.L && k.G, "kepler.L and kepler.G must be given together");
          require(std::abs(*k.G) <= *k.L && *k.G != 0.0, "need 0 < |kepler.G| <= kepler.L");
          ConicGeometry::from_actions(*k.L, *k.G, prm);
        } else {
          require(k.alpha > 0.0, "kepler.alpha must be positive");
          require(k.epsilon >= 0.0 && k.epsilon < 1.0, "kepler.epsilon must lie in [0, 1)");
          ConicGeometry::from_axes(k.alpha, k.epsilon, prm);
        }
        break;
      }
      case Command::simulate:
        require(!sim.t_end || *sim.t_end > 0.0, "simulate.t_end must be positive (empty time span)");
        require(sim.periods > 0.0, "simulate.periods must be positive (empty time span)");
        require(sim.samples >= 2, "simulate.samples must be at least 2");
        require(!sim.lift || c.space.is_spherical(), "simulate.lift needs the sphere");
        break;
      case Command::secular:
        require(c.polar == std::nullopt, "secular runs need scaled Delaunay initial data");
        require(!sec.eps_values.empty(), "secular.eps_values must not be empty");
        for (double e : sec.eps_values) require(e > 0.0 && e <= 0.2, "secular.eps_values must lie in (0, 0.2]");
        require(sec.nodes >= 16, "secular.nodes must be at least 16");
        require(sec.nG >= 3 && sec.ng >= 3, "secular grid needs at least 3 points per axis");
        require(sec.G_min <= sec.G_max, "secular.G_min must not exceed secular.G_max");
        require(std::max(std::abs(sec.G_min), std::abs(sec.G_max)) < std::min(c.L_hat, c.C_hat),
                "secular G range must stay inside |G| < min(L, C)");
        break;
      case Command::average:
        require(c.polar == std::nullopt, "average runs need scaled Delaunay initial data");
        require(!av.eps_values.empty(), "average.eps_values must not be empty");
        for (double e : av.eps_values) require(e > 0.0 && e <= 0.2, "average.eps_values must lie in (0, 0.2]");
        require(av.nodes >= 16, "average.nodes must be at least 16");
        require(av.order >= 2 && av.order <= 4, "average.order must be 2, 3 or 4");
        break;
      case Command::periodic:
        require(c.polar == std::nullopt, "periodic runs need scaled Delaunay initial data");
        require(per.m >= 25, "periodic.m must be at least 25 (eps = 1/sqrt(m) <= 0.2)");
        require(per.n >= 1, "periodic.n must be a positive integer");
        require(per.lift_revolutions >= 0.0, "periodic.lift_revolutions must be non-negative");
        require(per.samples_per_revolution >= 2, "periodic.samples_per_revolution must be at least 2");
        break;
      case Command::lift:
        require(c.space.is_spherical(), "lifting needs the sphere");
        require(lf.periods > 0.0, "lift.periods must be positive");
        require(lf.samples >= 2, "lift.samples must be at least 2");
        break;
    }
  } catch (const DomainError& e) {
    throw ConfigError(e.what());
  } catch (const RangeError& e) {
    throw ConfigError(e.what());
  } catch (const NearCollisionError& e) {
    throw ConfigError(e.what());
  }
  return c;
}

}  // namespace ctb::cli
