#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "fixbias/errors.hpp"
#include "fixbias/frex.hpp"

namespace fixbias::report {

/// Raised for anything wrong with the user's configuration; maps to exit code 1.
class ConfigError : public InvalidArgument {
 public:
  using InvalidArgument::InvalidArgument;
};

using KeyValues = std::map<std::string, std::string>;

namespace detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

}  // namespace detail

/// Parses `key = value` lines; `#` starts a comment.
inline KeyValues parse_key_values(std::istream& in, const std::string& source = "config") {
  KeyValues out;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const std::string t = detail::trim(line);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": expected key = value");
    }
    const std::string key = detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = detail::trim(std::string_view(t).substr(eq + 1));
    if (key.empty()) throw ConfigError(source + ":" + std::to_string(lineno) + ": empty key");
    if (!out.emplace(key, value).second) {
      throw ConfigError(source + ":" + std::to_string(lineno) + ": duplicate key '" + key + "'");
    }
  }
  return out;
}

inline KeyValues read_key_values(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_key_values(in, path);
}

/// Turns `--key value` and `--key=value` pairs into overrides.
inline KeyValues parse_overrides(const std::vector<std::string>& args) {
  KeyValues out;
  for (std::size_t i = 0; i < args.size(); ++i) {
    const std::string& a = args[i];
    if (a.rfind("--", 0) != 0 || a.size() < 3) throw ConfigError("unexpected argument '" + a + "'");
    std::string key = a.substr(2);
    std::string value;
    if (const auto eq = key.find('='); eq != std::string::npos) {
      value = key.substr(eq + 1);
      key.erase(eq);
    } else {
      if (i + 1 >= args.size()) throw ConfigError("missing value for --" + key);
      value = args[++i];
    }
    out[key] = value;
  }
  return out;
}

enum class ModelKind { ReluDiscrete, ReluQuadrature, FrexLattice, FrexFourier };

inline std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::ReluDiscrete: return "relu_discrete";
    case ModelKind::ReluQuadrature: return "relu_quadrature";
    case ModelKind::FrexLattice: return "frex_lattice";
    case ModelKind::FrexFourier: return "frex_fourier";
  }
  return "?";
}

inline bool is_relu(ModelKind m) { return m == ModelKind::ReluDiscrete || m == ModelKind::ReluQuadrature; }

enum class TargetKind { Sine, Poly, Smooth, Bumps, Csv, Params };

/// `sine:K`, `poly:c0,c1,...`, `smooth:K`, `bumps:COUNT`, `csv:PATH` (column f)
/// or `params:PATH` (column value, flat parameter coordinates).
struct TargetSpec {
  TargetKind kind = TargetKind::Sine;
  double frequency = 1.0;
  std::vector<double> coeffs;
  int order = 1;
  int count = 3;
  std::string path;
  std::string text = "sine:1";
};

enum class InitKind { Zero, Target };

struct ExperimentConfig {
  ModelKind model = ModelKind::ReluDiscrete;
  int n = 16;
  std::optional<int> m;
  LatticeBoundary boundary = LatticeBoundary::Periodic;
  TargetSpec target;
  std::optional<double> epsilon;
  long max_iters = 10'000'000;
  double tolerance = 1e-10;
  std::optional<long> record_every;
  std::uint64_t seed = 1;
  InitKind init = InitKind::Zero;
  bool allow_unstable = false;

  int k = 1;                      // rates: smoothness order
  double seed_scale = 1.0;        // rates: scale of the random seed parameters
  long rate_iters = 10'000;       // rates: run length
  long rate_lo = 100;             // rates: fit window
  std::optional<std::size_t> j_lo;  // spectrum / bias fit window
  std::optional<std::size_t> j_hi;
  std::optional<long> single_mode;  // bias: start from one mode
  long check_iters = 100;           // bias: multiplier check length
  int kernel_points = 11;
  long quadrature_points = 1'000'000;

  // plot
  std::string csv;
  std::string x;
  std::vector<std::string> y;
  bool logx = false;
  bool logy = false;
  std::string title;
  std::string svg = "plot.svg";

  long effective_record_every() const {
    return record_every ? *record_every : std::max(1L, max_iters / 10'000);
  }
};

namespace detail {

template <class T>
T parse_integer(const std::string& key, const std::string& v) {
  T out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw ConfigError("'" + key + "' must be an integer, got '" + v + "'");
  }
  return out;
}

inline double parse_real(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size() || !std::isfinite(out)) {
    throw ConfigError("'" + key + "' must be a finite real number, got '" + v + "'");
  }
  return out;
}

inline bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("'" + key + "' must be true or false, got '" + v + "'");
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) out.push_back(trim(item));
  return out;
}

inline TargetSpec parse_target(const std::string& text) {
  TargetSpec t;
  t.text = text;
  const auto colon = text.find(':');
  const std::string kind = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (kind == "sine") {
    t.kind = TargetKind::Sine;
    t.frequency = arg.empty() ? 1.0 : parse_real("target", arg);
  } else if (kind == "poly") {
    t.kind = TargetKind::Poly;
    if (arg.empty()) throw ConfigError("poly target needs coefficients, e.g. poly:0,0,1");
    for (const auto& c : split(arg, ',')) t.coeffs.push_back(parse_real("target", c));
  } else if (kind == "smooth") {
    t.kind = TargetKind::Smooth;
    t.order = arg.empty() ? 1 : parse_integer<int>("target", arg);
    if (t.order < 0) throw ConfigError("smooth target order must be nonnegative");
  } else if (kind == "bumps") {
    t.kind = TargetKind::Bumps;
    t.count = arg.empty() ? 3 : parse_integer<int>("target", arg);
    if (t.count < 0) throw ConfigError("bump count must be nonnegative");
  } else if (kind == "csv" || kind == "params") {
    t.kind = kind == "csv" ? TargetKind::Csv : TargetKind::Params;
    if (arg.empty()) throw ConfigError(kind + " target needs a path");
    t.path = arg;
  } else {
    throw ConfigError("unknown target '" + text + "' (expected sine:, poly:, smooth:, bumps:, csv: or params:)");
  }
  return t;
}

}  // namespace detail

/// Applies key/value pairs on top of `cfg`. Unknown keys are rejected.
inline void apply(ExperimentConfig& cfg, const KeyValues& kv) {
  using namespace detail;
  for (const auto& [key, v] : kv) {
    if (key == "model") {
      if (v == "relu_discrete") cfg.model = ModelKind::ReluDiscrete;
      else if (v == "relu_quadrature") cfg.model = ModelKind::ReluQuadrature;
      else if (v == "frex_lattice") cfg.model = ModelKind::FrexLattice;
      else if (v == "frex_fourier") cfg.model = ModelKind::FrexFourier;
      else throw ConfigError("unknown model '" + v + "'");
    } else if (key == "N") {
      cfg.n = parse_integer<int>(key, v);
    } else if (key == "M") {
      cfg.m = parse_integer<int>(key, v);
    } else if (key == "boundary") {
      if (v == "periodic") cfg.boundary = LatticeBoundary::Periodic;
      else if (v == "truncated") cfg.boundary = LatticeBoundary::Truncated;
      else throw ConfigError("boundary must be periodic or truncated");
    } else if (key == "target") {
      cfg.target = parse_target(v);
    } else if (key == "epsilon") {
      cfg.epsilon = parse_real(key, v);
    } else if (key == "max_iters") {
      cfg.max_iters = parse_integer<long>(key, v);
    } else if (key == "tolerance") {
      cfg.tolerance = parse_real(key, v);
    } else if (key == "record_every") {
      cfg.record_every = parse_integer<long>(key, v);
    } else if (key == "seed") {
      cfg.seed = parse_integer<std::uint64_t>(key, v);
    } else if (key == "init") {
      if (v == "zero") cfg.init = InitKind::Zero;
      else if (v == "target") cfg.init = InitKind::Target;
      else throw ConfigError("init must be zero or target");
    } else if (key == "allow_unstable") {
      cfg.allow_unstable = parse_bool(key, v);
    } else if (key == "k") {
      cfg.k = parse_integer<int>(key, v);
    } else if (key == "seed_scale") {
      cfg.seed_scale = parse_real(key, v);
    } else if (key == "rate_iters") {
      cfg.rate_iters = parse_integer<long>(key, v);
    } else if (key == "rate_lo") {
      cfg.rate_lo = parse_integer<long>(key, v);
    } else if (key == "j_lo") {
      cfg.j_lo = parse_integer<std::size_t>(key, v);
    } else if (key == "j_hi") {
      cfg.j_hi = parse_integer<std::size_t>(key, v);
    } else if (key == "single_mode") {
      cfg.single_mode = parse_integer<long>(key, v);
    } else if (key == "check_iters") {
      cfg.check_iters = parse_integer<long>(key, v);
    } else if (key == "kernel_points") {
      cfg.kernel_points = parse_integer<int>(key, v);
    } else if (key == "quadrature_points") {
      cfg.quadrature_points = parse_integer<long>(key, v);
    } else if (key == "csv") {
      cfg.csv = v;
    } else if (key == "x") {
      cfg.x = v;
    } else if (key == "y") {
      cfg.y = split(v, ',');
    } else if (key == "logx") {
      cfg.logx = parse_bool(key, v);
    } else if (key == "logy") {
      cfg.logy = parse_bool(key, v);
    } else if (key == "title") {
      cfg.title = v;
    } else if (key == "svg") {
      cfg.svg = v;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
}

inline void validate(const ExperimentConfig& cfg) {
  const int min_n = is_relu(cfg.model) ? 2 : 1;
  if (cfg.n < min_n) throw ConfigError("N must be at least " + std::to_string(min_n));
  if (cfg.n > 2048) throw ConfigError("N above 2048 is not supported");
  if (cfg.m && *cfg.m < 1) throw ConfigError("M must be positive");
  if (cfg.epsilon && !(*cfg.epsilon > 0.0)) throw ConfigError("epsilon must be positive");
  if (cfg.max_iters < 0) throw ConfigError("max_iters must be nonnegative");
  if (cfg.tolerance < 0.0) throw ConfigError("tolerance must be nonnegative");
  if (cfg.record_every && *cfg.record_every < 1) throw ConfigError("record_every must be at least 1");
  if (cfg.kernel_points < 2) throw ConfigError("kernel_points must be at least 2");
  if (cfg.quadrature_points < 1) throw ConfigError("quadrature_points must be positive");
  if (cfg.rate_iters < 1 || cfg.rate_lo < 1 || cfg.rate_lo >= cfg.rate_iters) {
    throw ConfigError("rate window needs 1 <= rate_lo < rate_iters");
  }
  if (cfg.check_iters < 0) throw ConfigError("check_iters must be nonnegative");
}

/// File values, then the seed from `env_seed` (if set), then command-line
/// overrides, which win over both.
inline ExperimentConfig load_config(const KeyValues& file, const KeyValues& overrides, const char* env_seed) {
  ExperimentConfig cfg;
  apply(cfg, file);
  if (env_seed && *env_seed) cfg.seed = detail::parse_integer<std::uint64_t>("FIXBIAS_SEED", env_seed);
  apply(cfg, overrides);
  validate(cfg);
  return cfg;
}

}  // namespace fixbias::report
