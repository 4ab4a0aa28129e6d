#pragma once

// Command implementations of the aclsim tool. Kept in a header so the test suite can
// drive the commands in-process.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "aclsim/aclsim.hpp"

namespace aclsim::cli {

namespace fs = std::filesystem;

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kBadFlags = 2, kInvalidConfig = 3, kSolverFailure = 4 };

struct LoadedConfig {
  BeamConfig config;
  std::string path;
  std::string hash;
};

inline LoadedConfig load(const std::string& path) {
  if (path.empty()) {
    auto c = default_config();
    return {c, "<builtin-default>", io::hex(io::fnv1a(to_config_text(c)))};
  }
  std::ifstream f(path);
  if (!f) throw InvalidConfig("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  const auto text = ss.str();
  return {parse_config(text), path, io::hex(io::fnv1a(text))};
}

inline std::string hz(double omega) { return io::format_double(omega / (2.0 * std::numbers::pi)); }

/// Maps library errors to exit codes; everything else propagates.
template <typename Fn>
int guarded(Fn&& fn, std::ostream& err) {
  try {
    return fn();
  } catch (const SolverFailure& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const InvalidConfig& e) {
    err << "invalid config: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const UnsupportedCombination& e) {
    err << "invalid config: unsupported combination: " << e.what() << "\n";
    return kInvalidConfig;
  } catch (const EigSolverFailure& e) {
    err << "solver failure: " << e.what() << "\n";
    return kSolverFailure;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kBadFlags;
  }
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string config;
  std::string em = "fullydynamic";
  std::string actuation = "charge";
  int nelems = 16;
  double dt = 1e-4;
  double tfinal = 0.01;
  std::vector<std::string> signals;
  std::vector<std::string> probes;
  std::string out = "run";
  long snapshot_stride = 0;
  bool export_system = false;
};

inline int cmd_simulate(const SimulateArgs& a, std::ostream& out, std::ostream& err) {
  const auto em = parse_em(a.em);
  const auto mode = parse_mode(a.actuation);
  if (!em || !mode) {
    err << "--em must be electrostatic|quasistatic|fullydynamic and --actuation charge|current\n";
    return kBadFlags;
  }
  if (a.nelems < 2) {
    err << "--nelems must be >= 2\n";
    return kBadFlags;
  }
  if (!(a.dt > 0.0) || !(a.tfinal >= a.dt)) {
    err << "--dt must be > 0 and --tfinal >= --dt\n";
    return kBadFlags;
  }
  if (a.snapshot_stride < 0) {
    err << "--snapshot-stride must be >= 0\n";
    return kBadFlags;
  }
  std::vector<io::SignalSpec> specs;
  std::vector<io::ProbeSpec> probes;
  try {
    for (const auto& s : a.signals) specs.push_back(io::parse_signal(s));
    for (const auto& p : a.probes) probes.push_back(io::parse_probe(p));
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kBadFlags;
  }

  return guarded(
      [&]() -> int {
        const auto cfg = load(a.config);
        const auto sys = assemble(cfg.config, fem::Mesh1D::uniform(cfg.config.length(), a.nelems), *em, *mode);
        ActuationSignals signals;
        try {
          signals = io::build_signals(specs, *mode);
          for (const auto& p : probes) io::validate_probe(sys, p);
        } catch (const Error& e) {
          err << e.what() << "\n";
          return kBadFlags;
        }

        io::RunManifest m;
        m.tool_version = version;
        m.config_path = cfg.path;
        m.config_hash = cfg.hash;
        m.em = a.em;
        m.mode = a.actuation;
        m.n_elements = a.nelems;
        m.dt = a.dt;
        m.t_final = a.tfinal;
        m.snapshot_stride = a.snapshot_stride;
        for (const auto& s : specs) m.signals.push_back(s.text);
        for (const auto& p : probes) m.probes.push_back(p.text);
        m.output_dir = a.out;

        const fs::path dir(a.out);
        fs::create_directories(dir);
        {
          std::ofstream mf(dir / "manifest.txt");
          mf << m.to_text();
        }
        const auto mhash = m.hash();
        if (a.export_system) export_system(sys, dir / "system");

        std::vector<std::vector<double>> probe_values(probes.size());
        const TimeGrid grid(a.tfinal, a.dt);
        const auto tr = simulate(sys, signals, grid, StateVector::zero(sys.size()), a.snapshot_stride,
                                 [&](long, double t, const StateVector& s) {
                                   for (std::size_t i = 0; i < probes.size(); ++i)
                                     probe_values[i].push_back(io::evaluate_probe(sys, s, probes[i], t, signals));
                                 });
        {
          std::ofstream csv(dir / "series.csv");
          io::write_series_csv(csv, tr, probes, probe_values);
        }
        if (!tr.snapshots.empty()) {
          fs::create_directories(dir / "snapshots");
          for (std::size_t i = 0; i < tr.snapshots.size(); ++i) {
            char name[32];
            std::snprintf(name, sizeof name, "state_%06zu.txt", i);
            std::ofstream sf(dir / "snapshots" / name);
            io::write_snapshot(sf, sys, tr.snapshots[i], tr.snapshot_times[i], mhash);
          }
        }
        out << "steps " << grid.n_steps() << ", E(T) = " << io::format_double(tr.energy.back())
            << ", max residual = " << io::format_double(tr.max_residual()) << "\n";
        out << "manifest " << mhash << " -> " << (dir / "series.csv").string() << "\n";
        return kOk;
      },
      err);
}

// ---------------------------------------------------------------------------

struct ModesArgs {
  std::string config;
  std::string em = "electrostatic";
  int nelems = 32;
  int k = 6;
  bool compare = false;
  std::string out = ".";
};

inline int cmd_modes(const ModesArgs& a, std::ostream& out, std::ostream& err) {
  const auto em = parse_em(a.em);
  if (!em) {
    err << "--em must be electrostatic|quasistatic|fullydynamic\n";
    return kBadFlags;
  }
  if (a.k < 1) {
    err << "--k must be >= 1\n";
    return kBadFlags;
  }
  if (a.nelems < 2) {
    err << "--nelems must be >= 2\n";
    return kBadFlags;
  }
  return guarded(
      [&]() -> int {
        const auto cfg = load(a.config);
        const auto mesh = fem::Mesh1D::uniform(cfg.config.length(), a.nelems);
        fs::create_directories(a.out);
        std::ofstream csv(fs::path(a.out) / "modes.csv");
        if (a.compare) {
          const auto t = compare_variants(cfg.config, mesh, a.k);
          csv << "mode,electrostatic,quasistatic,fullydynamic\n";
          out << "mode  electrostatic[Hz]  quasistatic[Hz]  fullydynamic[Hz]\n";
          for (int i = 0; i < a.k; ++i) {
            auto col = [i](const std::vector<double>& v) {
              return i < static_cast<int>(v.size()) ? io::format_double(v[i]) : std::string("nan");
            };
            auto colhz = [i](const std::vector<double>& v) {
              return i < static_cast<int>(v.size()) ? hz(v[i]) : std::string("nan");
            };
            csv << (i + 1) << "," << col(t.electrostatic) << "," << col(t.quasistatic) << "," << col(t.fullydynamic) << "\n";
            out << (i + 1) << "  " << colhz(t.electrostatic) << "  " << colhz(t.quasistatic) << "  "
                << colhz(t.fullydynamic) << "\n";
          }
          return kOk;
        }
        const auto sys = assemble(cfg.config, mesh, *em, ActuationMode::Charge);
        if (a.k > sys.size()) {
          err << "--k exceeds the number of DOFs (" << sys.size() << ")\n";
          return kBadFlags;
        }
        const auto r = modal_frequencies(sys, a.k);
        csv << "mode," << a.em << "\n";
        out << "mode  omega[rad/s]  f[Hz]\n";
        for (int i = 0; i < a.k; ++i) {
          csv << (i + 1) << "," << io::format_double(r.frequencies[i]) << "\n";
          out << (i + 1) << "  " << io::format_double(r.frequencies[i]) << "  " << hz(r.frequencies[i]) << "\n";
        }
        if (*em == EmAssumption::FullyDynamic)
          out << "max |Re lambda| / max |lambda| = " << io::format_double(r.max_real_part / r.max_abs_eigenvalue) << "\n";
        return kOk;
      },
      err);
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string config;
  bool quick = false;
  std::string inject_fault;  // "" or "gyro-sign"
};

inline int cmd_verify(const VerifyArgs& a, std::ostream& out, std::ostream& err) {
  VerifyOptions opt;
  opt.quick = a.quick;
  if (a.inject_fault == "gyro-sign") {
    opt.inject_gyro_sign_error = true;
  } else if (!a.inject_fault.empty()) {
    err << "unknown fault '" << a.inject_fault << "' (known: gyro-sign)\n";
    return kBadFlags;
  }
  return guarded(
      [&]() -> int {
        const auto cfg = load(a.config);
        const auto results = run_invariant_suite(cfg.config, opt);
        bool all = true;
        char line[256];
        for (const auto& r : results) {
          std::snprintf(line, sizeof line, "%-4s  %-34s  %.3e <= %.1e  %s\n", r.passed ? "PASS" : "FAIL", r.name.c_str(),
                        r.value, r.threshold, r.detail.c_str());
          out << line;
          all = all && r.passed;
        }
        out << (all ? "all checks passed\n" : "some checks FAILED\n");
        return all ? kOk : kCheckFailed;
      },
      err);
}

// ---------------------------------------------------------------------------

struct ConvergenceArgs {
  std::string config;
  std::string em = "electrostatic";
  std::vector<int> spatial;
  int reference_n = 256;
  std::vector<double> temporal;
  double dt_reference = 1e-4;
  int nelems = 8;
  double tfinal = 0.02;
  std::vector<std::string> signals{"sigma_s=sine(1e-4,50,0)"};
  std::string probe;  // default w@L
  std::string out = ".";
};

inline int cmd_convergence(const ConvergenceArgs& a, std::ostream& out, std::ostream& err) {
  const auto em = parse_em(a.em);
  if (!em) {
    err << "--em must be electrostatic|quasistatic|fullydynamic\n";
    return kBadFlags;
  }
  if (a.spatial.empty() && a.temporal.empty()) {
    err << "empty refinement list: give --spatial and/or --temporal\n";
    return kBadFlags;
  }
  for (int n : a.spatial)
    if (n < 2 || n >= a.reference_n) {
      err << "--spatial entries must be in [2, reference_n)\n";
      return kBadFlags;
    }
  for (double dt : a.temporal)
    if (!(dt > a.dt_reference) || !(a.tfinal >= dt)) {
      err << "--temporal entries must be > --dt-ref and <= --tfinal\n";
      return kBadFlags;
    }
  std::vector<io::SignalSpec> specs;
  try {
    for (const auto& s : a.signals) specs.push_back(io::parse_signal(s));
  } catch (const Error& e) {
    err << e.what() << "\n";
    return kBadFlags;
  }

  return guarded(
      [&]() -> int {
        const auto cfg = load(a.config);
        fs::create_directories(a.out);
        std::ofstream csv(fs::path(a.out) / "convergence.csv");
        csv << "study,parameter,value,error,order\n";
        auto nanstr = [](double v) { return std::isnan(v) ? std::string("nan") : io::format_double(v); };
        if (!a.spatial.empty()) {
          const auto rows = spatial_study(cfg.config, *em, a.spatial, a.reference_n);
          out << "spatial (omega1 vs n = " << a.reference_n << ")\n";
          for (const auto& r : rows) {
            csv << "spatial," << r.n_elements << "," << io::format_double(r.omega1) << "," << io::format_double(r.error)
                << "," << nanstr(r.order) << "\n";
            out << "  n = " << r.n_elements << "  omega1 = " << io::format_double(r.omega1)
                << "  error = " << io::format_double(r.error) << "  order = " << nanstr(r.order) << "\n";
          }
        }
        if (!a.temporal.empty()) {
          const auto mode = ActuationMode::Charge;
          const auto sys = assemble(cfg.config, fem::Mesh1D::uniform(cfg.config.length(), a.nelems), *em, mode);
          const auto signals = io::build_signals(specs, mode);
          const auto probe = io::parse_probe(a.probe.empty() ? "w@" + io::format_double(cfg.config.length()) : a.probe);
          io::validate_probe(sys, probe);
          const double tf = a.tfinal;
          const auto rows = temporal_study(sys, signals, tf, a.temporal, a.dt_reference,
                                           [&](const FemSystem& s, const StateVector& st) {
                                             return io::evaluate_probe(s, st, probe, tf, signals);
                                           });
          out << "temporal (" << probe.text << " at t = " << io::format_double(tf) << " vs dt = "
              << io::format_double(a.dt_reference) << ")\n";
          for (const auto& r : rows) {
            csv << "temporal," << io::format_double(r.dt) << "," << io::format_double(r.probe) << ","
                << io::format_double(r.error) << "," << nanstr(r.order) << "\n";
            out << "  dt = " << io::format_double(r.dt) << "  value = " << io::format_double(r.probe)
                << "  error = " << io::format_double(r.error) << "  order = " << nanstr(r.order) << "\n";
          }
        }
        return kOk;
      },
      err);
}

// ---------------------------------------------------------------------------

/// Parse argv and dispatch. Flag errors exit with 2.
inline int run(int argc, const char* const* argv, std::ostream& out = std::cout, std::ostream& err = std::cerr) {
  CLI::App app{"aclsim: finite-element simulator for charge/current actuated ACL beams"};
  app.set_version_flag("--version", std::string(version));
  app.require_subcommand(1);

  SimulateArgs sa;
  auto* sim = app.add_subcommand("simulate", "time integration with energy / power-balance tracking");
  sim->add_option("--config", sa.config, "config file (default: built-in demonstration beam)");
  sim->add_option("--em", sa.em, "electrostatic|quasistatic|fullydynamic")->capture_default_str();
  sim->add_option("--actuation", sa.actuation, "charge|current")->capture_default_str();
  sim->add_option("--nelems", sa.nelems, "number of elements")->capture_default_str();
  sim->add_option("--dt", sa.dt, "time step [s]")->capture_default_str();
  sim->add_option("--tfinal", sa.tfinal, "final time [s]")->capture_default_str();
  sim->add_option("--signal", sa.signals, "target=kind(args), repeatable");
  sim->add_option("--probe", sa.probes, "field@x, repeatable");
  sim->add_option("--out", sa.out, "output directory")->capture_default_str();
  sim->add_option("--snapshot-stride", sa.snapshot_stride, "write full states every N steps (0 = off)");
  sim->add_flag("--export-system", sa.export_system, "also write M, A, D and input maps as triplets");

  ModesArgs ma;
  auto* modes = app.add_subcommand("modes", "modal frequencies");
  modes->add_option("--config", ma.config, "config file");
  modes->add_option("--em", ma.em, "electrostatic|quasistatic|fullydynamic")->capture_default_str();
  modes->add_option("--nelems", ma.nelems, "number of elements")->capture_default_str();
  modes->add_option("--k", ma.k, "number of modes")->capture_default_str();
  modes->add_flag("--compare", ma.compare, "tabulate all three electromagnetic models");
  modes->add_option("--out", ma.out, "output directory")->capture_default_str();

  VerifyArgs va;
  auto* ver = app.add_subcommand("verify", "run the invariant suite");
  ver->add_option("--config", va.config, "config file");
  ver->add_flag("--quick", va.quick, "meshes with n <= 16 only");
  ver->add_option("--inject-fault", va.inject_fault, "test hook: gyro-sign");

  ConvergenceArgs ca;
  auto* conv = app.add_subcommand("convergence", "mesh / time-step refinement study");
  conv->add_option("--config", ca.config, "config file");
  conv->add_option("--em", ca.em, "electrostatic|quasistatic|fullydynamic")->capture_default_str();
  conv->add_option("--spatial", ca.spatial, "element counts, e.g. 8,16,32,64")->delimiter(',');
  conv->add_option("--reference-n", ca.reference_n, "reference mesh for the spatial study")->capture_default_str();
  conv->add_option("--temporal", ca.temporal, "time steps, e.g. 2e-3,1e-3,5e-4")->delimiter(',');
  conv->add_option("--dt-ref", ca.dt_reference, "reference time step")->capture_default_str();
  conv->add_option("--nelems", ca.nelems, "mesh for the temporal study")->capture_default_str();
  conv->add_option("--tfinal", ca.tfinal, "final time of the temporal study")->capture_default_str();
  conv->add_option("--signal", ca.signals, "drive of the temporal study (charge actuation)");
  conv->add_option("--probe", ca.probe, "probe of the temporal study (default w@L)");
  conv->add_option("--out", ca.out, "output directory")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, out, err);
    return kBadFlags;
  }

  if (*sim) return cmd_simulate(sa, out, err);
  if (*modes) return cmd_modes(ma, out, err);
  if (*ver) return cmd_verify(va, out, err);
  if (*conv) return cmd_convergence(ca, out, err);
  return kBadFlags;
}

}  // namespace aclsim::cli
