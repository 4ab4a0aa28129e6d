#pragma once

#include <cerrno>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "aclsim/errors.hpp"

namespace aclsim {

/// Layer geometry of the three-layer beam (SI units, meters).
/// Layer 1 is the stiff host, layer 2 the viscoelastic core, layer 3 the piezoelectric layer.
/// The thin-beam assumption (h1 + h2 + h3 << L) is a modeling assumption and is not checked.
struct LayerGeometry {
  double length_L = 0.0;
  double width_b = 0.0;  // not used by the 1D model
  double h1 = 0.0;
  double h2 = 0.0;
  double h3 = 0.0;
};

/// Material constants. eps1/eps3 are the in-plane and transverse permittivities.
struct MaterialParams {
  double rho1 = 0.0;
  double rho3 = 0.0;
  double alpha1 = 0.0;
  double alpha3 = 0.0;
  double G2 = 0.0;
  double gamma = 0.0;  // any sign
  double eps1 = 0.0;
  double eps3 = 0.0;
  double mu = 0.0;
};

struct DerivedParams {
  double m = 0.0;   // rho1 h1 + rho3 h3
  double K1 = 0.0;  // rotational inertia
  double K2 = 0.0;  // bending stiffness
  double H = 0.0;   // (h1 + 2 h2 + h3) / 2
  double xi = 0.0;  // eps1 h3^2 / (12 eps3)
};

/// Violations are reported as data; an empty result means the config is admissible.
/// G2 = 0 and gamma = 0 are accepted so that decoupled reference problems can be built.
inline std::vector<std::string> validate_config(const LayerGeometry& g, const MaterialParams& p) {
  std::vector<std::string> out;
  auto positive = [&](const char* name, double v) {
    if (!(v > 0.0) || !std::isfinite(v)) out.push_back(std::string(name) + " must be > 0");
  };
  auto nonnegative = [&](const char* name, double v) {
    if (!(v >= 0.0) || !std::isfinite(v)) out.push_back(std::string(name) + " must be >= 0");
  };
  positive("length_L", g.length_L);
  positive("width_b", g.width_b);
  positive("h1", g.h1);
  positive("h2", g.h2);
  positive("h3", g.h3);
  positive("rho1", p.rho1);
  positive("rho3", p.rho3);
  positive("alpha1", p.alpha1);
  positive("alpha3", p.alpha3);
  nonnegative("G2", p.G2);
  if (!std::isfinite(p.gamma)) out.push_back("gamma must be finite");
  positive("eps1", p.eps1);
  positive("eps3", p.eps3);
  positive("mu", p.mu);
  return out;
}

inline DerivedParams derive_params(const LayerGeometry& g, const MaterialParams& p) {
  if (auto v = validate_config(g, p); !v.empty()) {
    std::string msg = "invalid configuration:";
    for (const auto& s : v) msg += " " + s + ";";
    throw InvalidConfig(msg);
  }
  DerivedParams d;
  d.m = p.rho1 * g.h1 + p.rho3 * g.h3;
  d.K1 = p.rho1 * g.h1 * g.h1 * g.h1 / 12.0 + p.rho3 * g.h3 * g.h3 * g.h3 / 12.0;
  d.K2 = p.alpha1 * g.h1 * g.h1 * g.h1 / 12.0 + p.alpha3 * g.h3 * g.h3 * g.h3 / 12.0;
  d.H = (g.h1 + 2.0 * g.h2 + g.h3) / 2.0;
  d.xi = p.eps1 * g.h3 * g.h3 / (12.0 * p.eps3);
  return d;
}

/// Validated geometry + materials together with the derived coefficients.
/// Immutable once built.
class BeamConfig {
 public:
  BeamConfig(LayerGeometry geometry, MaterialParams materials, bool strict_h2l = false)
      : geometry_(geometry),
        materials_(materials),
        derived_(derive_params(geometry, materials)),
        strict_h2l_(strict_h2l) {}

  const LayerGeometry& geometry() const noexcept { return geometry_; }
  const MaterialParams& materials() const noexcept { return materials_; }
  const DerivedParams& derived() const noexcept { return derived_; }
  /// When set, the bending space also pins the slope at x = L.
  bool strict_h2l() const noexcept { return strict_h2l_; }

  double length() const noexcept { return geometry_.length_L; }
  double xi() const noexcept { return derived_.xi; }

  BeamConfig with_materials(const MaterialParams& p) const { return {geometry_, p, strict_h2l_}; }
  BeamConfig with_geometry(const LayerGeometry& g) const { return {g, materials_, strict_h2l_}; }

 private:
  LayerGeometry geometry_;
  MaterialParams materials_;
  DerivedParams derived_;
  bool strict_h2l_;
};

/// Demonstration beam: aluminum-like host, soft core, piezo-ceramic-like top layer.
/// The numbers are illustrative choices; gamma is sized so that the
/// piezoelectric stiffening of layer 3 is roughly ten percent.
inline BeamConfig default_config() {
  LayerGeometry g;
  g.length_L = 1.0;
  g.width_b = 0.02;
  g.h1 = 0.01;
  g.h2 = 0.001;
  g.h3 = 0.005;
  MaterialParams p;
  p.rho1 = 2700.0;
  p.rho3 = 7500.0;
  p.alpha1 = 70.0e9;
  p.alpha3 = 60.0e9;
  p.G2 = 1.0e6;
  p.gamma = 8.0;
  p.eps1 = 1.0e-8;
  p.eps3 = 1.0e-8;
  p.mu = 1.2566e-6;
  return {g, p};
}

namespace detail {

inline std::string_view trim(std::string_view s) {
  const auto ws = " \t\r\n";
  auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

inline double parse_number(std::string_view text, int line, const std::string& key) {
  std::string s(text);
  if (s.empty()) throw ParseError(line, "missing value for '" + key + "'");
  char* end = nullptr;
  errno = 0;
  double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || errno == ERANGE)
    throw ParseError(line, "cannot parse '" + s + "' as a number for '" + key + "'");
  return v;
}

inline bool parse_bool(std::string_view text, int line, const std::string& key) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw ParseError(line, "cannot parse '" + std::string(text) + "' as a boolean for '" + key + "'");
}

}  // namespace detail

/// Parse the key-value config format:
///
///     [geometry]
///     length_L = 1.0
///     ...
///     [material]
///     rho1 = 2700
///     ...
///     [model]            # optional
///     strict_h2l = false
///
/// '#' and ';' start comments. Unknown sections/keys, duplicates and missing keys are errors.
inline BeamConfig parse_config(std::string_view text) {
  LayerGeometry g;
  MaterialParams p;
  bool strict = false;

  std::map<std::string, double*> geometry_keys{{"length_L", &g.length_L}, {"width_b", &g.width_b},
                                               {"h1", &g.h1},             {"h2", &g.h2},
                                               {"h3", &g.h3}};
  std::map<std::string, double*> material_keys{
      {"rho1", &p.rho1},   {"rho3", &p.rho3},   {"alpha1", &p.alpha1},
      {"alpha3", &p.alpha3}, {"G2", &p.G2},     {"gamma", &p.gamma},
      {"eps1", &p.eps1},   {"eps3", &p.eps3},   {"mu", &p.mu}};
  std::map<std::string, int> seen;  // "section.key" -> line

  std::string section;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    std::string_view line = raw;
    if (auto c = line.find_first_of("#;"); c != std::string_view::npos) line = line.substr(0, c);
    line = detail::trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated section header");
      section = std::string(detail::trim(line.substr(1, line.size() - 2)));
      if (section != "geometry" && section != "material" && section != "model")
        throw ParseError(line_no, "unknown section [" + section + "]");
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string_view::npos) throw ParseError(line_no, "expected 'key = value'");
    std::string key(detail::trim(line.substr(0, eq)));
    auto value = detail::trim(line.substr(eq + 1));
    if (section.empty()) throw ParseError(line_no, "key '" + key + "' outside of a section");
    if (key == "g3") throw ParseError(line_no, "the g3 boundary force port is not supported");
    std::string full = section + "." + key;
    if (auto it = seen.find(full); it != seen.end())
      throw ParseError(line_no, "duplicate key '" + key + "' (first on line " +
                                    std::to_string(it->second) + ")");

    if (section == "geometry") {
      auto it = geometry_keys.find(key);
      if (it == geometry_keys.end()) throw ParseError(line_no, "unknown geometry key '" + key + "'");
      *it->second = detail::parse_number(value, line_no, key);
    } else if (section == "material") {
      auto it = material_keys.find(key);
      if (it == material_keys.end()) throw ParseError(line_no, "unknown material key '" + key + "'");
      *it->second = detail::parse_number(value, line_no, key);
    } else {
      if (key != "strict_h2l") throw ParseError(line_no, "unknown model key '" + key + "'");
      strict = detail::parse_bool(value, line_no, key);
    }
    seen.emplace(full, line_no);
  }

  for (const auto& [k, _] : geometry_keys)
    if (!seen.count("geometry." + k)) throw ParseError(line_no, "missing [geometry] key '" + k + "'");
  for (const auto& [k, _] : material_keys)
    if (!seen.count("material." + k)) throw ParseError(line_no, "missing [material] key '" + k + "'");

  return BeamConfig(g, p, strict);
}

inline BeamConfig load_config(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw InvalidConfig("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_config(ss.str());
}

/// Render a config in the format accepted by parse_config (round-trips exactly).
inline std::string to_config_text(const BeamConfig& c) {
  auto num = [](double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return std::string(buf);
  };
  const auto& g = c.geometry();
  const auto& p = c.materials();
  std::string s = "[geometry]\n";
  s += "length_L = " + num(g.length_L) + "\n";
  s += "width_b = " + num(g.width_b) + "\n";
  s += "h1 = " + num(g.h1) + "\nh2 = " + num(g.h2) + "\nh3 = " + num(g.h3) + "\n";
  s += "\n[material]\n";
  s += "rho1 = " + num(p.rho1) + "\nrho3 = " + num(p.rho3) + "\n";
  s += "alpha1 = " + num(p.alpha1) + "\nalpha3 = " + num(p.alpha3) + "\n";
  s += "G2 = " + num(p.G2) + "\ngamma = " + num(p.gamma) + "\n";
  s += "eps1 = " + num(p.eps1) + "\neps3 = " + num(p.eps3) + "\nmu = " + num(p.mu) + "\n";
  s += "\n[model]\nstrict_h2l = " + std::string(c.strict_h2l() ? "true" : "false") + "\n";
  return s;
}

}  // namespace aclsim
