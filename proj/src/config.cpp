#include "chtumor/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace chtumor {

namespace {

std::string trim(const std::string& s) {
  auto begin = s.find_first_not_of(" \t\r");
  auto end = s.find_last_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  return s.substr(begin, end - begin + 1);
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

double parse_number(const std::string& text) {
  auto parse_plain = [](const std::string& s) {
    std::size_t used = 0;
    double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  };
  std::string t = trim(text);
  try {
    auto slash = t.find('/');
    if (slash == std::string::npos) return parse_plain(t);
    double num = parse_plain(trim(t.substr(0, slash)));
    double den = parse_plain(trim(t.substr(slash + 1)));
    if (den == 0.0) throw std::invalid_argument(t);
    return num / den;
  } catch (const std::exception&) {
    throw ConfigError("not a number: '" + text + "'");
  }
}

IniFile IniFile::parse_file(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw ConfigError("cannot open config file: " + path);
  std::stringstream buf;
  buf << is.rdbuf();
  return parse_string(buf.str(), path);
}

IniFile IniFile::parse_string(const std::string& text,
                              const std::string& origin) {
  IniFile ini;
  ini.origin_ = origin;
  std::istringstream is(text);
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(is, line)) {
    ++lineno;
    auto comment = line.find_first_of("#;");
    if (comment != std::string::npos) line = line.substr(0, comment);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        ini.fail("unterminated section header", lineno);
      section = lower(trim(line.substr(1, line.size() - 2)));
      if (section.empty()) ini.fail("empty section name", lineno);
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      ini.fail("expected key = value", lineno);
    std::string key = lower(trim(line.substr(0, eq)));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) ini.fail("empty key", lineno);
    if (section.empty()) ini.fail("key outside any [section]", lineno);
    auto& sec = ini.sections_[section];
    if (sec.count(key)) ini.fail("duplicate key '" + key + "'", lineno);
    sec[key] = Entry{value, lineno, false};
  }
  return ini;
}

void IniFile::fail(const std::string& msg, int line) const {
  throw ConfigError(origin_ + ":" + std::to_string(line) + ": " + msg);
}

const IniFile::Entry* IniFile::find(const std::string& section,
                                    const std::string& key) const {
  auto sit = sections_.find(lower(section));
  if (sit == sections_.end()) return nullptr;
  auto kit = sit->second.find(lower(key));
  if (kit == sit->second.end()) return nullptr;
  kit->second.consumed = true;
  return &kit->second;
}

bool IniFile::has(const std::string& section, const std::string& key) const {
  return find(section, key) != nullptr;
}

std::string IniFile::get(const std::string& section,
                         const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e)
    throw ConfigError(origin_ + ": missing required key [" + section + "] " +
                      key);
  return e->value;
}

std::string IniFile::get_or(const std::string& section, const std::string& key,
                            const std::string& fallback) const {
  const Entry* e = find(section, key);
  return e ? e->value : fallback;
}

double IniFile::number(const std::string& section,
                       const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e)
    throw ConfigError(origin_ + ": missing required key [" + section + "] " +
                      key);
  try {
    return parse_number(e->value);
  } catch (const ConfigError& err) {
    fail(err.what(), e->line);
  }
}

double IniFile::number_or(const std::string& section, const std::string& key,
                          double fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  try {
    return parse_number(e->value);
  } catch (const ConfigError& err) {
    fail(err.what(), e->line);
  }
}

int IniFile::integer_or(const std::string& section, const std::string& key,
                        int fallback) const {
  double v = number_or(section, key, fallback);
  if (v != std::floor(v))
    throw ConfigError(origin_ + ": [" + section + "] " + key +
                      " must be an integer");
  return static_cast<int>(v);
}

bool IniFile::flag_or(const std::string& section, const std::string& key,
                      bool fallback) const {
  const Entry* e = find(section, key);
  if (!e) return fallback;
  std::string v = lower(e->value);
  if (v == "true" || v == "yes" || v == "on" || v == "1") return true;
  if (v == "false" || v == "no" || v == "off" || v == "0") return false;
  fail("expected a boolean, got '" + e->value + "'", e->line);
}

std::vector<double> IniFile::number_list(const std::string& section,
                                         const std::string& key) const {
  const Entry* e = find(section, key);
  if (!e)
    throw ConfigError(origin_ + ": missing required key [" + section + "] " +
                      key);
  std::vector<double> out;
  std::istringstream is(e->value);
  std::string item;
  while (std::getline(is, item, ',')) {
    item = trim(item);
    if (item.empty()) continue;
    try {
      out.push_back(parse_number(item));
    } catch (const ConfigError& err) {
      fail(err.what(), e->line);
    }
  }
  if (out.empty()) fail("empty list", e->line);
  return out;
}

void IniFile::require_all_consumed() const {
  for (const auto& [section, entries] : sections_)
    for (const auto& [key, entry] : entries)
      if (!entry.consumed)
        throw ConfigError(origin_ + ":" + std::to_string(entry.line) +
                          ": unknown key [" + section + "] " + key);
}

MeshPtr MeshSpec::build() const {
  if (dim == 1) return build_interval_mesh(a, b, n);
  if (dim == 2) {
    MarkerRule rule;
    if (markers == "symmetric_quarter") rule = symmetric_quarter_rule(x0, y0);
    else if (markers == "neumann")
      rule = [](const std::array<double, 3>&) { return BoundaryMarker::Neumann; };
    return build_rect_mesh(x0, y0, x1, y1, nx, ny, rule);
  }
  MarkerRule rule;
  if (markers == "symmetric_quarter") {
    double ax = x0, ay = y0, az = z0;
    rule = [ax, ay, az](const std::array<double, 3>& mid) {
      const double tol = 1e-12;
      if (std::abs(mid[0] - ax) < tol || std::abs(mid[1] - ay) < tol ||
          std::abs(mid[2] - az) < tol)
        return BoundaryMarker::Neumann;
      return BoundaryMarker::Robin;
    };
  }
  return build_box_mesh({x0, y0, z0}, {x1, y1, z1}, nx, ny, nz, rule);
}

double MeshSpec::grid_spacing() const {
  if (dim == 1) return (b - a) / n;
  if (dim == 2) return std::min((x1 - x0) / nx, (y1 - y0) / ny);
  return std::min({(x1 - x0) / nx, (y1 - y0) / ny, (z1 - z0) / nz});
}

double RunConfig::resolved_dt() const {
  if (dt > 0) return dt;
  double h = mesh.grid_spacing();
  return h * h;
}

namespace {

ScalarFn make_phi0(const RunConfig& cfg) {
  const double eps = cfg.params.epsilon;
  switch (cfg.profile) {
    case InitialProfile::Constant: {
      double v = cfg.phi_const;
      return [v](const std::array<double, 3>&) { return v; };
    }
    case InitialProfile::Tanh1D:
      return [eps](const std::array<double, 3>& x) {
        double r = std::abs(x[0] - 0.5);
        return -std::tanh((r - 0.2) / (std::sqrt(2.0) * eps));
      };
    case InitialProfile::Circle2D:
      return [eps](const std::array<double, 3>& x) {
        double rad = std::hypot(x[0], x[1]);
        double theta = std::atan2(x[1], x[0]);
        double r = rad - (2.0 + 0.1 * std::cos(2.0 * theta));
        return -std::tanh(r / (std::sqrt(2.0) * eps));
      };
    case InitialProfile::RandomSmooth: {
      // fixed-seed low-frequency Fourier sum in [-0.7, 0.7]
      std::mt19937 rng(cfg.seed);
      std::uniform_real_distribution<double> amp(-1.0, 1.0);
      std::vector<double> coeff(6);
      for (auto& c : coeff) c = amp(rng);
      double a = cfg.mesh.a, len = cfg.mesh.b - cfg.mesh.a;
      return [coeff, a, len](const std::array<double, 3>& x) {
        double s = 0;
        for (std::size_t k = 0; k < coeff.size(); ++k)
          s += coeff[k] * std::cos((k + 1) * M_PI * (x[0] - a) / len) /
               (k + 1.0);
        return 0.7 * std::tanh(s);
      };
    }
    case InitialProfile::Box3DQuartic:
      return [eps](const std::array<double, 3>& x) {
        double r = std::pow(0.5 * std::pow(x[0], 4) + 1.5 * std::pow(x[1], 4) +
                                1.5 * std::pow(x[2], 4),
                            0.25) /
                   3.0;
        return -std::tanh((r - 0.1) / (std::sqrt(2.0) * eps));
      };
    default:  // Box3DOctahedron
      return [eps](const std::array<double, 3>& x) {
        double r =
            (std::abs(x[0]) + std::abs(x[1]) + std::abs(x[2])) / 3.0;
        return -std::tanh((r - 0.2) / (std::sqrt(2.0) * eps));
      };
  }
}

}  // namespace

ScalarFn RunConfig::phi0() const { return make_phi0(*this); }

ScalarFn RunConfig::sigma0() const {
  double v = sigma_const;
  return [v](const std::array<double, 3>&) { return v; };
}

namespace {

ModelParams model_from_ini(const IniFile& ini) {
  ModelParams p;
  p.beta = ini.number_or("model", "beta", p.beta);
  p.epsilon = ini.number_or("model", "epsilon", p.epsilon);
  p.chi_phi = ini.number_or("model", "chi_phi", p.chi_phi);
  if (ini.has("model", "eta") && ini.has("model", "chi_sigma"))
    throw ConfigError(ini.origin() +
                      ": give either [model] eta or chi_sigma, not both");
  if (ini.has("model", "eta")) {
    double eta = ini.number("model", "eta");
    if (!(eta > 0)) throw ConfigError("eta must be positive");
    p.chi_sigma = p.chi_phi / eta;
  } else {
    p.chi_sigma = ini.number_or("model", "chi_sigma", p.chi_sigma);
  }
  p.K = ini.number_or("model", "k", p.K);
  p.lambda_p = ini.number_or("model", "lambda_p", p.lambda_p);
  p.lambda_a = ini.number_or("model", "lambda_a", p.lambda_a);
  p.lambda_c = ini.number_or("model", "lambda_c", p.lambda_c);
  p.M = ini.number_or("model", "m", p.M);
  p.m0 = ini.number_or("model", "m0", p.m0);
  p.trunc = ini.number_or("model", "trunc", p.trunc);
  std::string mode = ini.get_or("model", "nutrient_mode", "constant_inverse");
  if (mode == "constant_inverse")
    p.nutrient_mode = NutrientMode::ConstantInverseChiSigma;
  else if (mode == "generic")
    p.nutrient_mode = NutrientMode::Generic;
  else
    throw ConfigError("nutrient_mode must be constant_inverse or generic");
  p.n_const = ini.number_or("model", "n_const", p.n_const);
  p.C_tr = ini.number_or("model", "c_tr", p.C_tr);
  p.energy_psi_shift = ini.flag_or("model", "energy_psi_shift", false);
  return p;
}

NewtonSettings newton_from_ini(const IniFile& ini) {
  NewtonSettings s;
  s.abs_tol = ini.number_or("newton", "abs_tol", s.abs_tol);
  s.rel_tol = ini.number_or("newton", "rel_tol", s.rel_tol);
  s.max_iter = ini.integer_or("newton", "max_iter", s.max_iter);
  s.damping = ini.number_or("newton", "damping", s.damping);
  std::string solver = ini.get_or("newton", "linear_solver", "direct");
  if (solver == "direct") s.linear_solver = LinearSolverKind::Direct;
  else if (solver == "ilut") s.linear_solver = LinearSolverKind::IterativeILUT;
  else
    throw ConfigError("linear_solver must be direct or ilut");
  return s;
}

}  // namespace

RunConfig RunConfig::from_ini(const IniFile& ini) {
  RunConfig cfg;
  cfg.mesh.dim = ini.integer_or("mesh", "dim", 1);
  if (cfg.mesh.dim < 1 || cfg.mesh.dim > 3)
    throw ConfigError("mesh dim must be 1, 2 or 3");
  if (cfg.mesh.dim == 1) {
    cfg.mesh.a = ini.number_or("mesh", "a", 0.0);
    cfg.mesh.b = ini.number_or("mesh", "b", 1.0);
    cfg.mesh.n = ini.integer_or("mesh", "n", 32);
  } else {
    cfg.mesh.x0 = ini.number_or("mesh", "x0", 0.0);
    cfg.mesh.y0 = ini.number_or("mesh", "y0", 0.0);
    cfg.mesh.x1 = ini.number_or("mesh", "x1", 1.0);
    cfg.mesh.y1 = ini.number_or("mesh", "y1", 1.0);
    cfg.mesh.nx = ini.integer_or("mesh", "nx", 16);
    cfg.mesh.ny = ini.integer_or("mesh", "ny", 16);
    if (cfg.mesh.dim == 3) {
      cfg.mesh.z0 = ini.number_or("mesh", "z0", 0.0);
      cfg.mesh.z1 = ini.number_or("mesh", "z1", 1.0);
      cfg.mesh.nz = ini.integer_or("mesh", "nz", 16);
    }
  }
  cfg.mesh.markers = ini.get_or("mesh", "markers", "robin");
  cfg.mesh.adaptive = ini.flag_or("mesh", "adaptive", false);
  cfg.mesh.h_min = ini.number_or("mesh", "h_min", 0.0);
  cfg.mesh.adapt_every = ini.integer_or("mesh", "adapt_every", 10);
  cfg.mesh.threshold = ini.number_or("mesh", "threshold", 0.95);

  cfg.T = ini.number_or("time", "t", 0.1);
  std::string rule = ini.get_or("time", "dt_rule", "");
  if (!rule.empty() && rule != "h_squared")
    throw ConfigError("dt_rule must be h_squared when given");
  cfg.dt = ini.number_or("time", "dt", 0.0);
  if (cfg.dt <= 0 && rule.empty())
    throw ConfigError("[time] needs dt > 0 or dt_rule = h_squared");

  cfg.params = model_from_ini(ini);
  cfg.newton = newton_from_ini(ini);

  std::string prof = ini.get_or("initial", "profile", "constant");
  if (prof == "constant") cfg.profile = InitialProfile::Constant;
  else if (prof == "tanh_1d") cfg.profile = InitialProfile::Tanh1D;
  else if (prof == "circle_2d") cfg.profile = InitialProfile::Circle2D;
  else if (prof == "random_smooth") cfg.profile = InitialProfile::RandomSmooth;
  else if (prof == "box_3d_quartic") cfg.profile = InitialProfile::Box3DQuartic;
  else if (prof == "box_3d_octahedron")
    cfg.profile = InitialProfile::Box3DOctahedron;
  else
    throw ConfigError("unknown initial profile: " + prof);
  if ((cfg.profile == InitialProfile::Tanh1D && cfg.mesh.dim != 1) ||
      (cfg.profile == InitialProfile::Circle2D && cfg.mesh.dim != 2) ||
      (cfg.profile == InitialProfile::Box3DQuartic && cfg.mesh.dim != 3) ||
      (cfg.profile == InitialProfile::Box3DOctahedron && cfg.mesh.dim != 3))
    throw ConfigError("initial profile does not match the mesh dimension");
  cfg.phi_const = ini.number_or("initial", "phi_const", cfg.phi_const);
  cfg.sigma_const = ini.number_or("initial", "sigma_const", cfg.sigma_const);
  cfg.seed = static_cast<unsigned>(ini.integer_or("initial", "seed", 1));

  cfg.sigma_inf = ini.number_or("boundary", "sigma_inf", 1.0);
  cfg.out_dir = ini.get_or("output", "dir", "out");
  cfg.snapshots = ini.integer_or("output", "snapshots", 20);

  ini.require_all_consumed();
  return cfg;
}

RunConfig RunConfig::from_file(const std::string& path) {
  return from_ini(IniFile::parse_file(path));
}

void EocStudyConfig::validate() const {
  if (h_list.size() < 2)
    throw ConfigError("eoc: need at least two study levels");
  for (std::size_t i = 1; i < h_list.size(); ++i)
    if (!(h_list[i] < h_list[i - 1]))
      throw ConfigError("eoc: h_list must be strictly decreasing");
  if (!(h_ref < h_list.back()))
    throw ConfigError("eoc: reference h must be below every study level");
  for (double h : h_list) {
    double ratio = h / h_ref;
    if (std::abs(ratio - std::round(ratio)) > 1e-9)
      throw ConfigError("eoc: study meshes must nest into the reference");
  }
  if (!(T_pre > 0) || !(T > 0)) throw ConfigError("eoc: T and T_pre positive");
}

EocStudyConfig EocStudyConfig::from_ini(const IniFile& ini, bool quick) {
  EocStudyConfig cfg;
  if (ini.has("eoc", "h_list")) cfg.h_list = ini.number_list("eoc", "h_list");
  else if (quick)
    cfg.h_list = {1.0 / 32, 1.0 / 64, 1.0 / 128};
  else
    cfg.h_list = {1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256};
  cfg.h_ref = ini.number_or("eoc", "h_ref", quick ? 1.0 / 512 : 1.0 / 1024);
  cfg.T = ini.number_or("eoc", "t", 0.1);
  cfg.T_pre = ini.number_or("eoc", "t_pre", 0.01);
  cfg.params = model_from_ini(ini);
  cfg.newton = newton_from_ini(ini);
  cfg.out_dir = ini.get_or("output", "dir", "out");
  ini.require_all_consumed();
  cfg.validate();
  return cfg;
}

EocStudyConfig EocStudyConfig::from_file(const std::string& path, bool quick) {
  return from_ini(IniFile::parse_file(path), quick);
}

}  // namespace chtumor
