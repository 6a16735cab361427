#ifndef CHTUMOR_CONFIG_HPP
#define CHTUMOR_CONFIG_HPP

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "chtumor/model.hpp"
#include "chtumor/solver.hpp"

namespace chtumor {

class ConfigError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Sectioned key=value file. '#' and ';' start comments; values may be
/// plain numbers or dyadic fractions like 1/1024. Unknown keys are errors.
class IniFile {
public:
  static IniFile parse_file(const std::string& path);
  static IniFile parse_string(const std::string& text,
                              const std::string& origin = "<string>");

  bool has(const std::string& section, const std::string& key) const;
  std::string get(const std::string& section, const std::string& key) const;
  std::string get_or(const std::string& section, const std::string& key,
                     const std::string& fallback) const;
  double number(const std::string& section, const std::string& key) const;
  double number_or(const std::string& section, const std::string& key,
                   double fallback) const;
  int integer_or(const std::string& section, const std::string& key,
                 int fallback) const;
  bool flag_or(const std::string& section, const std::string& key,
               bool fallback) const;
  std::vector<double> number_list(const std::string& section,
                                  const std::string& key) const;

  /// Throws when any key was never read; call after building a config.
  void require_all_consumed() const;

  const std::string& origin() const { return origin_; }

private:
  struct Entry {
    std::string value;
    int line = 0;
    mutable bool consumed = false;
  };
  std::map<std::string, std::map<std::string, Entry>> sections_;
  std::string origin_;

  const Entry* find(const std::string& section, const std::string& key) const;
  [[noreturn]] void fail(const std::string& msg, int line) const;
};

double parse_number(const std::string& text);  // accepts "a/b" fractions

enum class InitialProfile {
  Constant,
  Tanh1D,          // -tanh((|x-0.5|-0.2)/(sqrt(2) eps)) on the unit interval
  Circle2D,        // perturbed circle r(x)=|x|-(2+0.1 cos 2theta)
  RandomSmooth,    // low-frequency random Fourier sum, seeded
  Box3DQuartic,    // quartic-radius dumbbell profile
  Box3DOctahedron  // octahedral profile
};

struct MeshSpec {
  int dim = 1;
  double a = 0.0, b = 1.0;          // 1D
  double x0 = 0, y0 = 0, x1 = 1, y1 = 1;  // 2D
  double z0 = 0, z1 = 1;            // 3D
  int n = 32, nx = 1, ny = 1, nz = 1;
  std::string markers = "robin";    // robin | neumann | symmetric_quarter
  bool adaptive = false;
  double h_min = 0.0;
  int adapt_every = 10;
  double threshold = 0.95;

  MeshPtr build() const;
  double grid_spacing() const;
};

struct RunConfig {
  MeshSpec mesh;
  double T = 0.1;
  double dt = 0.0;          // 0 means: use the dt = h^2 rule
  ModelParams params;
  InitialProfile profile = InitialProfile::Constant;
  double phi_const = -1.0;
  double sigma_const = 1.0;
  unsigned seed = 1;
  double sigma_inf = 1.0;   // constant-in-time boundary supply
  NewtonSettings newton;
  std::string out_dir = "out";
  int snapshots = 20;

  double resolved_dt() const;
  ScalarFn phi0() const;
  ScalarFn sigma0() const;

  static RunConfig from_ini(const IniFile& ini);
  static RunConfig from_file(const std::string& path);
};

struct EocStudyConfig {
  std::vector<double> h_list;  // strictly decreasing grid spacings
  double h_ref = 0.0;
  double T = 0.1;
  double T_pre = 0.01;
  ModelParams params;
  NewtonSettings newton;
  std::string out_dir = "out";

  void validate() const;
  static EocStudyConfig from_ini(const IniFile& ini, bool quick);
  static EocStudyConfig from_file(const std::string& path, bool quick);
};

}  // namespace chtumor

#endif
