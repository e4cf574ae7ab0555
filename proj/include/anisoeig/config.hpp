#pragma once

#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "anisoeig/operators.hpp"
#include "anisoeig/qsd.hpp"

namespace anisoeig {

// Scenario files are plain structured text: one `key = value` per line,
// `#` comments, optional [qsd] section. See scenarios/ for examples.
struct QsdConfig {
  double eps = 0.0;
  long n_particles = 0;
  double dt = 0.0;
  std::vector<double> t_checkpoints;
  std::uint64_t seed = 0;
  InitialKind initial = InitialKind::Uniform;
  int cell_i = 0, cell_j = 0;
  bool fleming_viot = false;
  double resample_window = 0.25;
};

struct ScenarioConfig {
  Domain1D y_domain = Domain1D::Torus;
  Domain1D z_domain = Domain1D::Torus;
  int ny = 0, nz = 0;
  CoefficientSet coeffs;
  std::vector<double> eps_list;
  double tol = 1e-10;
  std::string out_dir = ".";
  std::optional<QsdConfig> qsd;

  Grid2D make_grid() const {
    return Grid2D(build_grid(y_domain, ny), build_grid(z_domain, nz));
  }
};

namespace detail {

inline std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

inline double parse_number(const std::string& v, const std::string& key,
                           int line) {
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (end == v.c_str() || *end != '\0')
    throw ConfigError(key + ": malformed number '" + v + "'", line);
  return x;
}

inline long parse_integer(const std::string& v, const std::string& key,
                          int line) {
  double x = parse_number(v, key, line);
  long l = static_cast<long>(x);
  if (static_cast<double>(l) != x)
    throw ConfigError(key + ": expected an integer, got '" + v + "'", line);
  return l;
}

inline std::vector<double> parse_list(const std::string& v,
                                      const std::string& key, int line) {
  std::vector<double> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) {
    item = trim(item);
    if (item.empty())
      throw ConfigError(key + ": empty list entry", line);
    out.push_back(parse_number(item, key, line));
  }
  if (out.empty()) throw ConfigError(key + ": empty list", line);
  return out;
}

inline bool parse_bool(const std::string& v, const std::string& key, int line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError(key + ": expected true/false, got '" + v + "'", line);
}

inline Domain1D parse_domain(const std::string& v, const std::string& key,
                             int line) {
  if (v == "torus") return Domain1D::Torus;
  if (v == "interval") return Domain1D::Interval;
  throw ConfigError(key + ": expected torus or interval, got '" + v + "'",
                    line);
}

inline Expr parse_coeff(const std::string& v, const std::string& key,
                        int line) {
  try {
    return Expr::parse(v);
  } catch (const ParseError& e) {
    throw ConfigError(key + ": " + e.what(), line);
  }
}

}  // namespace detail

inline ScenarioConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open scenario file '" + path + "'");

  ScenarioConfig cfg;
  bool have[5] = {false, false, false, false, false};  // A B a b c
  bool have_ny = false, have_nz = false, have_eps = false;
  std::string section;
  QsdConfig qsd;
  bool qsd_seen = false;
  bool qsd_have_eps = false, qsd_have_n = false, qsd_have_dt = false,
       qsd_have_checkpoints = false;

  std::string raw;
  int line = 0;
  while (std::getline(in, raw)) {
    ++line;
    std::string s = raw;
    if (auto hash = s.find('#'); hash != std::string::npos) s.erase(hash);
    s = detail::trim(s);
    if (s.empty()) continue;
    if (s.front() == '[') {
      if (s.back() != ']') throw ConfigError("unterminated section name", line);
      section = detail::trim(s.substr(1, s.size() - 2));
      if (section != "qsd" && !section.empty() && section != "scenario")
        throw ConfigError("unknown section [" + section + "]", line);
      if (section == "qsd") qsd_seen = true;
      continue;
    }
    auto eq = s.find('=');
    if (eq == std::string::npos)
      throw ConfigError("expected key = value", line);
    std::string key = detail::trim(s.substr(0, eq));
    std::string val = detail::trim(s.substr(eq + 1));
    if (key.empty() || val.empty())
      throw ConfigError("expected key = value", line);

    if (section == "qsd") {
      if (key == "eps") {
        qsd.eps = detail::parse_number(val, key, line);
        qsd_have_eps = true;
      } else if (key == "n_particles") {
        qsd.n_particles = detail::parse_integer(val, key, line);
        qsd_have_n = true;
      } else if (key == "dt") {
        qsd.dt = detail::parse_number(val, key, line);
        qsd_have_dt = true;
      } else if (key == "t_checkpoints") {
        qsd.t_checkpoints = detail::parse_list(val, key, line);
        qsd_have_checkpoints = true;
      } else if (key == "seed") {
        qsd.seed = static_cast<std::uint64_t>(detail::parse_integer(val, key, line));
      } else if (key == "initial") {
        if (val == "uniform") {
          qsd.initial = InitialKind::Uniform;
        } else if (val == "phi") {
          qsd.initial = InitialKind::Phi;
        } else if (val.rfind("cell:", 0) == 0) {
          qsd.initial = InitialKind::Cell;
          auto comma = val.find(',', 5);
          if (comma == std::string::npos)
            throw ConfigError("initial: expected cell:i,j", line);
          qsd.cell_i = static_cast<int>(detail::parse_integer(
              detail::trim(val.substr(5, comma - 5)), key, line));
          qsd.cell_j = static_cast<int>(detail::parse_integer(
              detail::trim(val.substr(comma + 1)), key, line));
        } else {
          throw ConfigError("initial: expected uniform, cell:i,j or phi", line);
        }
      } else if (key == "fleming_viot") {
        qsd.fleming_viot = detail::parse_bool(val, key, line);
      } else if (key == "resample_window") {
        qsd.resample_window = detail::parse_number(val, key, line);
      } else {
        throw ConfigError("unknown key '" + key + "' in [qsd]", line);
      }
      continue;
    }

    if (key == "y_domain") cfg.y_domain = detail::parse_domain(val, key, line);
    else if (key == "z_domain") cfg.z_domain = detail::parse_domain(val, key, line);
    else if (key == "ny") { cfg.ny = static_cast<int>(detail::parse_integer(val, key, line)); have_ny = true; }
    else if (key == "nz") { cfg.nz = static_cast<int>(detail::parse_integer(val, key, line)); have_nz = true; }
    else if (key == "A") { cfg.coeffs.A = detail::parse_coeff(val, key, line); have[0] = true; }
    else if (key == "B") { cfg.coeffs.B = detail::parse_coeff(val, key, line); have[1] = true; }
    else if (key == "a") { cfg.coeffs.a = detail::parse_coeff(val, key, line); have[2] = true; }
    else if (key == "b") { cfg.coeffs.b = detail::parse_coeff(val, key, line); have[3] = true; }
    else if (key == "c") { cfg.coeffs.c = detail::parse_coeff(val, key, line); have[4] = true; }
    else if (key == "eps_list") { cfg.eps_list = detail::parse_list(val, key, line); have_eps = true; }
    else if (key == "tol") cfg.tol = detail::parse_number(val, key, line);
    else if (key == "out_dir") cfg.out_dir = val;
    else throw ConfigError("unknown key '" + key + "'", line);
  }

  const char* coeff_names[5] = {"A", "B", "a", "b", "c"};
  for (int i = 0; i < 5; ++i)
    if (!have[i])
      throw ConfigError(std::string("missing coefficient ") + coeff_names[i]);
  if (!have_ny || !have_nz) throw ConfigError("missing grid size ny/nz");
  if (!have_eps) throw ConfigError("missing eps_list");

  for (double e : cfg.eps_list)
    if (!(e > 0.0)) throw ConfigError("eps_list: entries must be positive");
  for (std::size_t i = 1; i < cfg.eps_list.size(); ++i)
    if (!(cfg.eps_list[i] < cfg.eps_list[i - 1]))
      throw ConfigError("eps_list: not decreasing");
  if (!(cfg.tol > 0.0)) throw ConfigError("tol must be positive");

  // build the grid once to run the full coefficient validation
  try {
    Grid2D grid = cfg.make_grid();
    cfg.coeffs.validate(grid);
  } catch (const ConfigError&) {
    throw;
  } catch (const Error& e) {
    throw ConfigError(e.what());
  }

  if (qsd_seen) {
    if (!qsd_have_eps) throw ConfigError("[qsd]: missing eps");
    if (!qsd_have_n) throw ConfigError("[qsd]: missing n_particles");
    if (!qsd_have_dt) throw ConfigError("[qsd]: missing dt");
    if (!qsd_have_checkpoints) throw ConfigError("[qsd]: missing t_checkpoints");
    if (!(qsd.eps > 0.0)) throw ConfigError("[qsd]: eps must be positive");
    if (qsd.n_particles < 100)
      throw ConfigError("[qsd]: n_particles must be at least 100");
    if (!(qsd.dt > 0.0)) throw ConfigError("[qsd]: invalid dt");
    for (std::size_t i = 0; i < qsd.t_checkpoints.size(); ++i) {
      if (qsd.t_checkpoints[i] < 0.0)
        throw ConfigError("[qsd]: checkpoints must be nonnegative");
      if (i > 0 && !(qsd.t_checkpoints[i] > qsd.t_checkpoints[i - 1]))
        throw ConfigError("[qsd]: checkpoints must be increasing");
    }
    if (!(qsd.resample_window > 0.0))
      throw ConfigError("[qsd]: resample_window must be positive");
    cfg.qsd = qsd;
  }

  return cfg;
}

}  // namespace anisoeig
