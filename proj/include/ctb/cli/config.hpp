#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "ctb/reduction.hpp"

namespace ctb::cli {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Parsed document of the TOML subset we accept: [tables], dotted keys,
// numbers, booleans, basic strings and flat arrays of numbers.
class ConfigDocument {
 public:
  using Value = std::variant<double, bool, std::string, std::vector<double>>;

  static ConfigDocument parse(std::string_view text);
  static ConfigDocument load(const std::string& path);

  bool has(const std::string& key) const { return values_.contains(key); }
  // Typed access; each read marks the key as used.
  std::optional<double> number(const std::string& key) const;
  std::optional<long long> integer(const std::string& key) const;
  std::optional<bool> boolean(const std::string& key) const;
  std::optional<std::string> string(const std::string& key) const;
  std::optional<std::vector<double>> numbers(const std::string& key) const;

  void set(const std::string& key, Value v) { values_[key] = std::move(v); }
  // Keys present in the document that no reader asked for.
  std::vector<std::string> unused() const;
  const std::string& text() const noexcept { return text_; }

 private:
  const Value* find(const std::string& key) const;

  std::map<std::string, Value> values_;
  mutable std::map<std::string, bool> used_;
  std::string text_;
};

std::uint64_t fnv1a(std::string_view bytes);
std::string hex_digest(std::uint64_t h);

enum class Command { kepler, simulate, secular, periodic, average, lift };

std::string_view command_name(Command c);

struct KeplerRun {
  double m = 1.0;
  double M = 1.0;
  // Orbit given by axes (alpha, epsilon) or by actions (L, G).
  std::optional<double> L, G;
  double alpha = 0.5;
  double epsilon = 0.3;
  double g = 0.0;
  double periods = 1.0;
  std::size_t samples = 257;
};

struct SimulateRun {
  std::optional<double> t_end;
  double periods = 100.0;  // fast Kepler periods
  std::size_t samples = 2001;
  ReducedModel model = ReducedModel::full;
  bool lift = false;
};

struct SecularRun {
  std::vector<double> eps_values{0.08, 0.04, 0.02};
  std::size_t nodes = 256;
  double G_min = 0.0, G_max = 0.0;  // default: 0.95 of the chart bound
  std::size_t nG = 81;
  std::size_t ng = 121;
};

struct AverageRun {
  std::vector<double> eps_values{0.08, 0.04, 0.02, 0.01};
  std::size_t nodes = 256;
  bool flat_eccentric_path = false;
  int order = 4;
};

struct PeriodicRun {
  int m = 400;
  int n = 1;
  double g0 = 0.0;
  bool check_full = false;
  bool lift = true;
  double lift_revolutions = 0.0;  // default: m
  std::size_t samples_per_revolution = 16;
};

struct LiftRun {
  double periods = 10.0;
  std::size_t samples = 1001;
  ReducedModel model = ReducedModel::full;
};

// Everything a run needs, validated against the physical constraints of the
// library before any computation.
struct RunConfig {
  Command command = Command::kepler;
  CurvedSpace space = CurvedSpace::spherical(1.0);
  MassPair masses = MassPair::normalized(0.3, 0.7);

  // Initial data: scaled Delaunay (L_hat, G_hat, g, ell, C_hat, eps), or a
  // polar chart point with total angular momentum C.
  double L_hat = 0.21, G_hat = 0.1, g = 0.5, ell = 0.0, C_hat = 1.0, eps = 0.02;
  std::optional<ReducedState> polar;
  double C = 1.0;

  double tol = 1e-12;
  std::string out_dir = ".";
  bool json = false;
  bool svg = false;
  bool timestamp = true;
  std::string digest;

  KeplerRun kepler;
  SimulateRun simulate;
  SecularRun secular;
  AverageRun average;
  PeriodicRun periodic;
  LiftRun lift;

  // The reduced system and initial chart point implied by the initial data.
  ReducedSystem reduced_system() const;
  ReducedState initial_state() const;
};

struct Overrides {
  std::optional<std::string> out_dir;
  std::optional<double> tol;
  std::optional<std::string> format;
  bool svg = false;
  bool no_timestamp = false;
  bool flat_limit = false;
};

RunConfig make_run_config(Command cmd, const ConfigDocument& doc, const Overrides& ov);

}  // namespace ctb::cli
