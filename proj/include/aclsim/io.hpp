#pragma once

#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

#include "aclsim/config.hpp"
#include "aclsim/errors.hpp"
#include "aclsim/integrator.hpp"
#include "aclsim/model.hpp"

namespace aclsim::io {

/// Fixed 17-significant-digit scientific format used by every CSV writer.
inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.16e", v);
  return buf;
}

/// FNV-1a, 64 bit.
inline std::uint64_t fnv1a(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline std::string hex(std::uint64_t v) {
  char buf[20];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

// ---------------------------------------------------------------------------
// Signals

enum class SignalTarget { SigmaS, IS, G1, G, Moment };
enum class SignalKind { Zero, Constant, Sine, Pulse };

/// Grammar: target=kind(args)
///   zero | constant(value) | sine(amplitude, freq_hz, phase) | pulse(value, t_on, t_off)
/// with target in {sigma_s, i_s, g1, g, M_moment}. Phase is in radians.
struct SignalSpec {
  SignalTarget target = SignalTarget::SigmaS;
  SignalKind kind = SignalKind::Zero;
  std::vector<double> args;
  std::string text;  // canonical source text

  double operator()(double t) const {
    switch (kind) {
      case SignalKind::Zero: return 0.0;
      case SignalKind::Constant: return args[0];
      case SignalKind::Sine: return args[0] * std::sin(2.0 * std::numbers::pi * args[1] * t + args[2]);
      case SignalKind::Pulse: return (t >= args[1] && t < args[2]) ? args[0] : 0.0;
    }
    return 0.0;
  }
};

inline const char* to_string(SignalTarget t) {
  switch (t) {
    case SignalTarget::SigmaS: return "sigma_s";
    case SignalTarget::IS: return "i_s";
    case SignalTarget::G1: return "g1";
    case SignalTarget::G: return "g";
    case SignalTarget::Moment: return "M_moment";
  }
  return "?";
}

inline SignalSpec parse_signal(std::string_view text) {
  auto fail = [&](const std::string& why) -> SignalSpec {
    throw Error("bad signal spec '" + std::string(text) + "': " + why);
  };
  SignalSpec s;
  s.text = std::string(text);
  const auto eq = text.find('=');
  if (eq == std::string_view::npos) return fail("expected target=kind(args)");
  const auto target = text.substr(0, eq);
  auto rest = text.substr(eq + 1);
  if (target == "sigma_s") s.target = SignalTarget::SigmaS;
  else if (target == "i_s") s.target = SignalTarget::IS;
  else if (target == "g1") s.target = SignalTarget::G1;
  else if (target == "g") s.target = SignalTarget::G;
  else if (target == "M_moment") s.target = SignalTarget::Moment;
  else return fail("unknown target '" + std::string(target) + "'");

  std::string_view name = rest;
  std::string_view arglist;
  if (auto open = rest.find('('); open != std::string_view::npos) {
    if (rest.back() != ')') return fail("missing ')'");
    name = rest.substr(0, open);
    arglist = rest.substr(open + 1, rest.size() - open - 2);
  }
  std::size_t expected = 0;
  if (name == "zero") s.kind = SignalKind::Zero;
  else if (name == "constant") s.kind = SignalKind::Constant, expected = 1;
  else if (name == "sine") s.kind = SignalKind::Sine, expected = 3;
  else if (name == "pulse") s.kind = SignalKind::Pulse, expected = 3;
  else return fail("unknown kind '" + std::string(name) + "'");

  std::string args(arglist);
  std::stringstream ss(args);
  std::string tok;
  while (!args.empty() && std::getline(ss, tok, ',')) {
    char* end = nullptr;
    const double v = std::strtod(tok.c_str(), &end);
    while (end && (*end == ' ' || *end == '\t')) ++end;
    if (end == tok.c_str() || *end != '\0' || !std::isfinite(v)) return fail("cannot parse argument '" + tok + "'");
    s.args.push_back(v);
  }
  if (s.args.size() != expected)
    return fail("expected " + std::to_string(expected) + " argument(s), got " + std::to_string(s.args.size()));
  if (s.kind == SignalKind::Sine && !(s.args[1] > 0.0)) return fail("sine frequency must be > 0");
  if (s.kind == SignalKind::Pulse && !(s.args[1] < s.args[2])) return fail("pulse needs t_on < t_off");
  return s;
}

/// Combine signal specs into port signals. A nonzero signal on the inactive electrical
/// port is a ModeViolation; several specs on one target are summed.
inline ActuationSignals build_signals(const std::vector<SignalSpec>& specs, ActuationMode mode) {
  ActuationSignals out;
  auto attach = [](std::function<double(double)>& slot, const SignalSpec& s) {
    if (!slot) {
      slot = s;
    } else {
      auto prev = slot;
      slot = [prev, s](double t) { return prev(t) + s(t); };
    }
  };
  for (const auto& s : specs) {
    if (s.kind == SignalKind::Zero) continue;
    switch (s.target) {
      case SignalTarget::SigmaS:
        if (mode == ActuationMode::Current) throw ModeViolation("sigma_s signal given under current actuation");
        attach(out.sigma_s, s);
        break;
      case SignalTarget::IS:
        if (mode == ActuationMode::Charge) throw ModeViolation("i_s signal given under charge actuation");
        attach(out.i_s, s);
        break;
      case SignalTarget::G1: attach(out.g1, s); break;
      case SignalTarget::G: attach(out.g, s); break;
      case SignalTarget::Moment: attach(out.moment, s); break;
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Probes

enum class ProbeField { V1, V3, W, Wx, Theta, Phi2 };

/// Grammar: field@x with field in {v1, v3, w, wx, theta, phi2}.
struct ProbeSpec {
  ProbeField field = ProbeField::W;
  double x = 0.0;
  std::string text;
};

inline ProbeSpec parse_probe(std::string_view text) {
  const auto at = text.find('@');
  if (at == std::string_view::npos) throw Error("bad probe spec '" + std::string(text) + "': expected field@x");
  ProbeSpec p;
  p.text = std::string(text);
  const auto f = text.substr(0, at);
  if (f == "v1") p.field = ProbeField::V1;
  else if (f == "v3") p.field = ProbeField::V3;
  else if (f == "w") p.field = ProbeField::W;
  else if (f == "wx") p.field = ProbeField::Wx;
  else if (f == "theta") p.field = ProbeField::Theta;
  else if (f == "phi2") p.field = ProbeField::Phi2;
  else throw Error("bad probe spec '" + std::string(text) + "': unknown field '" + std::string(f) + "'");
  std::string xs(text.substr(at + 1));
  char* end = nullptr;
  p.x = std::strtod(xs.c_str(), &end);
  if (xs.empty() || *end != '\0' || !std::isfinite(p.x))
    throw Error("bad probe spec '" + std::string(text) + "': cannot parse x");
  return p;
}

/// Check a probe against a system before a run: x in [0, L] and the field exists.
inline void validate_probe(const FemSystem& sys, const ProbeSpec& p) {
  if (!(p.x >= 0.0 && p.x <= sys.config.length()))
    throw OutOfDomain("probe '" + p.text + "': x outside [0, L]");
  if (p.field == ProbeField::Theta && sys.em == EmAssumption::Electrostatic)
    throw WrongVariant("probe '" + p.text + "': the electrostatic model has no magnetic field");
}

/// Field value at the probe location. theta under the quasi-static model is recovered
/// from the v3 velocity and the current i_s(t).
inline double evaluate_probe(const FemSystem& sys, const StateVector& s, const ProbeSpec& p, double t,
                             const ActuationSignals& signals) {
  switch (p.field) {
    case ProbeField::V1: return sys.v1_space.evaluate(sys.block(s.q, Block::V1), p.x);
    case ProbeField::V3: return sys.v3_space.evaluate(sys.block(s.q, Block::V3), p.x);
    case ProbeField::W: return sys.w_space.evaluate(sys.block(s.q, Block::W), p.x);
    case ProbeField::Wx: return sys.w_space.evaluate(sys.block(s.q, Block::W), p.x, 1);
    case ProbeField::Phi2: {
      const double xs[] = {p.x};
      return shear_phi2(sys, s.q, xs).front();
    }
    case ProbeField::Theta:
      if (sys.em == EmAssumption::FullyDynamic) return sys.theta_space->evaluate(sys.block(s.q, Block::Theta), p.x);
      if (sys.em == EmAssumption::QuasiStatic) {
        const auto f = recover_quasistatic_em(sys, sys.block(s.p, Block::V3), ActuationSignals::at(signals.i_s, t));
        return f.theta_space.evaluate(f.theta, p.x);
      }
      throw WrongVariant("the electrostatic model has no magnetic field");
  }
  return 0.0;
}

// ---------------------------------------------------------------------------
// Run manifest

/// Everything needed to reproduce a simulate run. Written before any output.
struct RunManifest {
  std::string tool_version;
  std::string config_path;
  std::string config_hash;  // FNV-1a of the config text
  std::string em;
  std::string mode;
  int n_elements = 0;
  double dt = 0.0;
  double t_final = 0.0;
  long snapshot_stride = 0;
  std::vector<std::string> signals;
  std::vector<std::string> probes;
  std::string output_dir;

  std::string to_text() const {
    std::string s;
    s += "tool_version = " + tool_version + "\n";
    s += "config_path = " + config_path + "\n";
    s += "config_hash = " + config_hash + "\n";
    s += "em = " + em + "\n";
    s += "actuation = " + mode + "\n";
    s += "nelems = " + std::to_string(n_elements) + "\n";
    s += "dt = " + format_double(dt) + "\n";
    s += "tfinal = " + format_double(t_final) + "\n";
    s += "snapshot_stride = " + std::to_string(snapshot_stride) + "\n";
    for (const auto& sig : signals) s += "signal = " + sig + "\n";
    for (const auto& p : probes) s += "probe = " + p + "\n";
    s += "out = " + output_dir + "\n";
    return s;
  }
  std::string hash() const { return hex(fnv1a(to_text())); }
};

// ---------------------------------------------------------------------------
// Writers

inline void write_series_csv(std::ostream& os, const Trajectory& tr, const std::vector<ProbeSpec>& probes,
                             const std::vector<std::vector<double>>& probe_values) {
  os << "t,E,residual";
  for (const auto& p : probes) os << "," << p.text;
  os << "\n";
  for (std::size_t k = 0; k < tr.times.size(); ++k) {
    os << format_double(tr.times[k]) << "," << format_double(tr.energy[k]) << ","
       << format_double(k == 0 ? 0.0 : tr.residual[k - 1]);
    for (const auto& col : probe_values) os << "," << format_double(col[k]);
    os << "\n";
  }
}

/// One "block index value" line per position DOF, then the velocities.
inline void write_snapshot(std::ostream& os, const FemSystem& sys, const StateVector& s, double t,
                           const std::string& manifest_hash) {
  os << "# manifest " << manifest_hash << "\n";
  os << "# t " << format_double(t) << "\n";
  for (const char* part : {"q", "p"}) {
    const auto& v = part[0] == 'q' ? s.q : s.p;
    for (const auto& r : sys.layout.blocks())
      for (int i = 0; i < r.size; ++i)
        os << part << "." << to_string(r.block) << " " << i << " " << format_double(v[r.offset + i]) << "\n";
  }
}

}  // namespace aclsim::io
