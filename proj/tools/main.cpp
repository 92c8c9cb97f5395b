// necklace: bands, eigs, gap, solve, simulate, verify.
//
// Exit codes: 0 ok, 2 usage, 3 certification failure, 4 non-convergence, 1 other errors.
// Options can come from an INI file (--config) with one [section] per subcommand;
// command-line flags override it. Every artifact <file> gets <file>.manifest.json.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <numbers>
#include <random>
#include <sstream>

#include <CLI11.hpp>

#include "necklace/errors.hpp"
#include "necklace/io.hpp"
#include "necklace/spectrum.hpp"
#include "necklace/timesim.hpp"

using namespace necklace;
namespace fs = std::filesystem;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 1;
constexpr int kExitUsage = 2;
constexpr int kExitCertification = 3;
constexpr int kExitConvergence = 4;

struct UsageError : Error {
  using Error::Error;
};

// effective value of every option of a subcommand (explicit, config file or default)
Json option_echo(const CLI::App& sub) {
  Json j = Json::object();
  for (const CLI::Option* o : sub.get_options()) {
    const std::string name = o->get_single_name();
    if (name.empty() || name == "help") continue;
    if (o->count() > 0) {
      const auto& r = o->results();
      j[name] = r.size() == 1 ? Json(r.front()) : Json(r);
    } else {
      j[name] = o->get_default_str();
    }
  }
  return j;
}

struct Run {
  RunManifest manifest;
  std::chrono::steady_clock::time_point start = std::chrono::steady_clock::now();
  std::vector<fs::path> artifacts;

  // records an artifact; manifests are written once the command finishes
  void artifact(const fs::path& p) { artifacts.push_back(p); }

  void finish(int code) {
    if (artifacts.empty()) return;
    manifest.exit_code = code;
    manifest.wall_clock_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest.outputs.clear();
    for (const auto& a : artifacts) manifest.add_output(a);
    for (const auto& a : artifacts) write_manifest(manifest_path(a), manifest);
  }
};

bool to_stdout(const std::string& path) { return path.empty() || path == "-"; }

// writes text to a file (recorded as an artifact) or to stdout
void emit(Run& run, const std::string& path, const std::string& text) {
  if (to_stdout(path)) {
    std::cout << text;
    return;
  }
  write_file(path, text);
  run.artifact(path);
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6e", v);
  return buf;
}

// ---------------------------------------------------------------------------

struct BandsArgs {
  std::vector<int> mrange{-3, 3};
  int lsamples = 257;
  bool cross_check = false;
  std::string output = "-";
};

int cmd_bands(const BandsArgs& a, Run& run) {
  if (a.mrange[0] > a.mrange[1]) throw UsageError("bands: empty m-range");
  if (a.lsamples < 2) throw UsageError("bands: --lsamples must be at least 2");
  std::ostringstream os;
  write_bands_csv(os, a.mrange[0], a.mrange[1], a.lsamples, a.cross_check);
  emit(run, a.output, os.str());
  if (a.cross_check) {
    const double d = max_band_discrepancy(a.mrange[0], a.mrange[1], a.lsamples);
    run.manifest.tolerances["band_cross_check"] = 1e-8;
    run.manifest.certificates["max_band_discrepancy"] = d;
    std::cerr << "max |closed form - monodromy| = " << fmt(d) << (d <= 1e-8 ? "" : " exceeds 1e-8") << '\n';
    if (!(d <= 1e-8)) return kExitCertification;
  }
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct EigsArgs {
  int cells = 4;
  int points = 8;
  std::string boundary = "periodic_cells";
  std::string dispersion = "exact";
  int harmonic = 0;
  int k0 = 1;
  double alpha = 0.0;
  std::string output = "-";
};

int cmd_eigs(const EigsArgs& a, Run& run) {
  if (a.harmonic != 0 && a.harmonic % 2 == 0) throw UsageError("eigs: --harmonic must be odd");
  const NecklaceGrid g(a.cells, a.points, boundary_from_string(a.boundary));
  const SpatialOperator op(g, dispersion_from_string(a.dispersion));
  const double shift = a.alpha - 0.25 * a.k0 * a.k0 * double(a.harmonic) * a.harmonic;
  std::ostringstream os;
  os << "index,mu_fd,lambda";
  if (a.harmonic != 0) os << ",shifted,sign";
  os << '\n' << std::setprecision(17);
  for (Eigen::Index i = 0; i < op.size(); ++i) {
    os << i << ',' << op.fd_eigenvalues()[i] << ',' << op.eigenvalues()[i];
    if (a.harmonic != 0) {
      const double d = op.eigenvalues()[i] + shift;
      os << ',' << d << ',' << (d > 0 ? '+' : d < 0 ? '-' : '0');
    }
    os << '\n';
  }
  emit(run, a.output, os.str());
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct GapArgs {
  int k0 = 1;
  double alpha = 0.0;
  double A = -1.0;  // < 0: A = alpha
  int kappa = 0;    // 0: kappa_min
  std::string output = "-";
};

int cmd_gap(const GapArgs& a, Run& run) {
  const double A = a.A < 0.0 ? a.alpha : a.A;
  if (!(A >= a.alpha && a.alpha >= 0.0)) throw UsageError("gap: need A >= alpha >= 0");
  const int kappa_min = minimal_kappa(a.k0, A, a.alpha);
  const int kappa = a.kappa > 0 ? a.kappa : kappa_min;
  const FrequencyConfig c{a.k0, kappa, a.alpha, A, 3.0, kappa};
  c.validate();
  const GapCertificate cert = delta_star(c);
  Json j = to_json(cert, kappa_min);
  j["kappa"] = kappa;
  j["k0"] = a.k0;
  j["alpha"] = a.alpha;
  j["A"] = A;
  j["delta_sqrt"] = delta_sqrt(c);
  if (!to_stdout(a.output)) j["manifest"] = manifest_path(a.output).filename().string();
  run.manifest.certificates["gap"] = Json{{"kappa", kappa}, {"delta_star", cert.delta_star}, {"certified", cert.certified}};
  emit(run, a.output, j.dump(2) + "\n");
  return cert.certified ? kExitOk : kExitCertification;
}

// ---------------------------------------------------------------------------

struct SolveArgs {
  double p = 3.0;
  double alpha = 0.0;
  double A = -1.0;
  int k0 = 1;
  int kappa = 5;
  bool auto_kappa = false;
  int harmonics = 4;
  int cells = 24;
  int points = 24;
  std::string boundary = "periodic_cells";
  std::string sign = "focusing";
  std::string method = "nehari";
  bool force_uncertified = false;
  unsigned seed = 0;
  std::string output = "breather.json";
  SolverOptions options;
};

// seed != 0: multiplicative random perturbation of the deterministic seed, kept on H+
TimeFourierField perturbed_seed(const BreatherProblem& P, unsigned seed) {
  TimeFourierField s = P.seed();
  if (seed == 0) return s;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> d(-0.05, 0.05);
  for (Eigen::Index i = 0; i < s.coefficients.size(); ++i) s.coefficients.data()[i] *= 1.0 + d(rng);
  return P.project(s, ModeSign::plus);
}

Json certificate_summary(const GapCertificate& cert, int kappa_min) { return to_json(cert, kappa_min); }

int cmd_solve(SolveArgs a, Run& run) {
  const double A = a.A < 0.0 ? a.alpha : a.A;
  if (!(A >= a.alpha && a.alpha >= 0.0)) throw UsageError("solve: need A >= alpha >= 0");
  if (a.method != "nehari" && a.method != "newton") throw UsageError("solve: unknown method '" + a.method + "'");
  const int kappa_min = minimal_kappa(a.k0, A, a.alpha);
  const int kappa = a.auto_kappa ? kappa_min : a.kappa;
  const FrequencyConfig c = FrequencyConfig::with_harmonics(a.k0, kappa, a.alpha, A, a.p, a.harmonics);
  const GapCertificate cert = delta_star(c);
  Json cj = certificate_summary(cert, kappa_min);
  run.manifest.certificates["gap"] = cj;
  if (!cert.certified) {
    if (!a.force_uncertified)
      throw CertificationFailure("solve: kappa = " + std::to_string(kappa) +
                                 " is not certified (delta_star = " + fmt(cert.delta_star) +
                                 "); use --auto-kappa or --force-uncertified");
    std::cerr << "warning: solving an uncertified configuration\n";
  }
  a.options.threads = run.manifest.threads;
  const NecklaceGrid g(a.cells, a.points, boundary_from_string(a.boundary));
  const BreatherProblem P(c, g, nonlinearity_from_string(a.sign), a.options);
  P.require_nonresonant();
  run.manifest.certificates["discrete_min_abs_eigenvalue"] = P.min_abs_eigenvalue();
  const TimeFourierField start = perturbed_seed(P, a.seed);
  const BreatherState s = a.method == "nehari" ? P.nehari_minimize(start) : P.newton_solve(start);

  const fs::path out = a.output;
  write_breather(out, s, a.options, cj, manifest_path(out).filename().string());
  run.artifact(out);
  fs::path csv = out;
  run.artifact(csv.replace_extension(".csv"));

  const Diagnostics& d = s.diagnostics;
  std::cout << "method " << to_string(s.method) << ": " << s.message << " after " << s.iterations << " iterations\n"
            << "J = " << std::setprecision(12) << d.J_value << ", pde_residual = " << fmt(d.pde_residual)
            << ", nehari = " << fmt(std::max(d.nehari_self, d.nehari_minus))
            << ", ground_state_defect = " << fmt(d.ground_state_defect) << '\n'
            << "wrote " << out.string() << '\n';
  return s.converged ? kExitOk : kExitConvergence;
}

// ---------------------------------------------------------------------------

struct SimulateArgs {
  std::string input;
  double dt = 0.0;  // 0: h / 2
  int periods = 1;
  std::string observables;
  std::string report = "-";
  bool linear = false;
};

int cmd_simulate(const SimulateArgs& a, Run& run) {
  const BreatherFile f = read_breather(a.input);
  run.manifest.add_input(a.input);
  const TimeFourierField& field = f.state.field;
  if (a.periods < 1) throw UsageError("simulate: --periods must be positive");
  const double dt = a.dt > 0.0 ? a.dt : 0.5 * field.grid.step();
  TimesimOptions to;
  to.dispersion = f.options.dispersion;
  to.linear = a.linear;
  const WaveIntegrator W(field.grid, field.config.alpha, field.config.p, f.state.sign, to);
  std::vector<Observation> obs;
  const ReturnReport r = simulate(f.state, dt, a.periods, W, a.observables.empty() ? nullptr : &obs);
  if (!a.observables.empty()) {
    std::ostringstream os;
    write_observables_csv(os, obs);
    emit(run, a.observables, os.str());
  }
  Json j{{"input", a.input},         {"dt", r.dt},
         {"steps", r.steps},         {"periods", a.periods},
         {"period", r.period},       {"return_error", r.return_error},
         {"antiperiod_error", r.antiperiod_error}, {"energy_drift", r.energy_drift},
         {"energy_oscillation", r.energy_oscillation}, {"tail_growth", r.tail_growth},
         {"flux_residual", r.flux_residual},       {"initial_flux_residual", r.initial_flux_residual}};
  if (!to_stdout(a.report)) j["manifest"] = manifest_path(a.report).filename().string();
  emit(run, a.report, j.dump(2) + "\n");
  return kExitOk;
}

// ---------------------------------------------------------------------------

struct VerifyArgs {
  std::string input;
  double tol = 1e-9;
  std::string output;
};

int cmd_verify(const VerifyArgs& a, Run& run) {
  const BreatherFile f = read_breather(a.input);
  run.manifest.add_input(a.input);
  run.manifest.tolerances["verify"] = a.tol;
  const TimeFourierField& field = f.state.field;
  SolverOptions o = f.options;
  o.threads = run.manifest.threads;
  // fresh assembly: a new operator and eigendecomposition, nothing reused from the solve
  const BreatherProblem P(field.config, field.grid, f.state.sign, o);
  const Diagnostics fresh = P.diagnose(field);
  const Diagnostics& stored = f.state.diagnostics;

  Json rows = Json::array();
  bool ok = true;
  const auto a_list = scalar_diagnostics(stored);
  const auto b_list = scalar_diagnostics(fresh);
  for (std::size_t i = 0; i < a_list.size(); ++i) {
    const double x = a_list[i].second, y = b_list[i].second;
    const bool both_nan = std::isnan(x) && std::isnan(y);
    const double diff = both_nan ? 0.0 : std::abs(x - y);
    const bool pass = both_nan || diff <= a.tol * (1.0 + std::max(std::abs(x), std::abs(y)));
    ok = ok && pass;
    rows.push_back(Json{{"name", a_list[i].first}, {"stored", x}, {"recomputed", y}, {"difference", diff}, {"pass", pass}});
    std::cout << (pass ? "ok   " : "FAIL ") << a_list[i].first << " stored " << fmt(x) << " recomputed " << fmt(y)
              << '\n';
  }
  const bool counts = stored.negative_modes == fresh.negative_modes &&
                      stored.expected_negative_modes == fresh.expected_negative_modes &&
                      stored.dominant_harmonic == fresh.dominant_harmonic;
  ok = ok && counts;
  std::cout << (counts ? "ok   " : "FAIL ") << "mode counts\n";
  std::cout << (ok ? "verified" : "verification failed") << '\n';
  if (!a.output.empty()) {
    Json j{{"input", a.input}, {"tolerance", a.tol}, {"passed", ok}, {"diagnostics", rows},
           {"mode_counts_match", counts}, {"manifest", manifest_path(a.output).filename().string()}};
    emit(run, a.output, j.dump(2) + "\n");
  }
  return ok ? kExitOk : kExitCertification;
}

// ---------------------------------------------------------------------------

int replay(const fs::path& manifest_file, int (*again)(const std::vector<std::string>&));

int run_cli(const std::vector<std::string>& args) {
  CLI::App app{"necklace: spectra, gap certificates, breathers and their time evolution on the necklace graph",
               "necklace"};
  app.set_version_flag("--version", std::string(NECKLACE_VERSION));
  app.set_config("--config", "", "INI file with one [section] per subcommand");
  app.option_defaults()->always_capture_default();
  int threads = 1;
  std::string replay_file;
  app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--replay", replay_file, "re-run a manifest and compare output hashes")->check(CLI::ExistingFile);
  app.require_subcommand(0, 1);

  BandsArgs ba;
  auto* bands = app.add_subcommand("bands", "band functions lambda_m(l) on an l-grid (CSV)");
  bands->add_option("--mrange", ba.mrange, "band index range m_min m_max")->expected(2);
  bands->add_option("--lsamples", ba.lsamples, "quasimomentum samples on [-1/2, 1/2]");
  bands->add_flag("--cross-check", ba.cross_check, "add monodromy columns and check them to 1e-8");
  bands->add_option("-o,--output", ba.output, "CSV file, - for stdout");

  EigsArgs ea;
  auto* eigs = app.add_subcommand("eigs", "discrete spectrum of the truncated symmetric operator (CSV)");
  eigs->add_option("--cells", ea.cells, "cells -N..N")->check(CLI::PositiveNumber);
  eigs->add_option("--points", ea.points, "points per edge M")->check(CLI::Range(4, 1 << 20));
  eigs->add_option("--boundary", ea.boundary)->check(CLI::IsMember({"dirichlet_truncation", "periodic_cells"}));
  eigs->add_option("--dispersion", ea.dispersion)->check(CLI::IsMember({"second_order", "exact"}));
  eigs->add_option("--harmonic", ea.harmonic, "odd k: add lambda - omega^2 k^2 + alpha and its sign");
  eigs->add_option("--k0", ea.k0);
  eigs->add_option("--alpha", ea.alpha);
  eigs->add_option("-o,--output", ea.output, "CSV file, - for stdout");

  GapArgs ga;
  auto* gap = app.add_subcommand("gap", "certify the spectral gap condition (JSON)");
  gap->add_option("--k0", ga.k0, "omega = k0 / 2, odd");
  gap->add_option("--alpha", ga.alpha);
  gap->add_option("--A", ga.A, "upper bound for alpha (default alpha)");
  gap->add_option("--kappa", ga.kappa, "certify this kappa instead of kappa_min");
  gap->add_option("-o,--output", ga.output, "JSON file, - for stdout");

  SolveArgs sa;
  auto* solve = app.add_subcommand("solve", "compute a breather (JSON header + CSV payload)");
  solve->add_option("--p", sa.p, "power of the nonlinearity");
  solve->add_option("--alpha", sa.alpha);
  solve->add_option("--A", sa.A, "upper bound for alpha (default alpha)");
  solve->add_option("--k0", sa.k0);
  solve->add_option("--kappa", sa.kappa);
  solve->add_flag("--auto-kappa", sa.auto_kappa, "use kappa_min");
  solve->add_option("--harmonics,-J", sa.harmonics)->check(CLI::PositiveNumber);
  solve->add_option("--cells,-N", sa.cells)->check(CLI::PositiveNumber);
  solve->add_option("--points,-M", sa.points)->check(CLI::Range(4, 1 << 20));
  solve->add_option("--boundary", sa.boundary)->check(CLI::IsMember({"dirichlet_truncation", "periodic_cells"}));
  solve->add_option("--sign", sa.sign)->check(CLI::IsMember({"focusing", "defocusing"}));
  solve->add_option("--method", sa.method)->check(CLI::IsMember({"nehari", "newton"}));
  solve->add_flag("--force-uncertified", sa.force_uncertified);
  solve->add_option("--seed", sa.seed, "0: deterministic seed; otherwise RNG seed of a 5% perturbation");
  std::string dispersion = "exact";
  solve->add_option("--dispersion", dispersion)->check(CLI::IsMember({"second_order", "exact"}));
  solve->add_option("--time-samples", sa.options.time_samples, "0 selects 8 J");
  solve->add_option("--tol-outer", sa.options.outer_tol);
  solve->add_option("--tol-inner", sa.options.inner_tol);
  solve->add_option("--tol-newton", sa.options.newton_tol);
  solve->add_option("--tol-pivot", sa.options.pivot_tol);
  solve->add_option("--max-outer", sa.options.outer_max_iter);
  solve->add_option("--max-inner", sa.options.inner_max_iter);
  solve->add_option("--max-newton", sa.options.newton_max_iter);
  solve->add_flag("--continuation,!--no-continuation", sa.options.newton_continuation);
  solve->add_flag("--nehari-start,!--no-nehari-start", sa.options.newton_nehari_start);
  solve->add_option("--seed-amplitude", sa.options.seed_amplitude);
  solve->add_option("--seed-width", sa.options.seed_width_cells, "in cells");
  solve->add_option("--seed-center", sa.options.seed_center, "x coordinate");
  solve->add_option("-o,--output", sa.output, "breather JSON file");

  SimulateArgs ma;
  auto* sim = app.add_subcommand("simulate", "Verlet integration of breather initial data");
  sim->add_option("-i,--input", ma.input, "breather JSON file")->required()->check(CLI::ExistingFile);
  sim->add_option("--dt", ma.dt, "largest step (default h/2)");
  sim->add_option("--periods", ma.periods);
  sim->add_option("--observables", ma.observables, "CSV: t, energy, l2_norm, tail_mass, return_gap");
  sim->add_option("--report", ma.report, "JSON summary, - for stdout");
  sim->add_flag("--linear", ma.linear, "drop the nonlinearity");

  VerifyArgs va;
  auto* verify = app.add_subcommand("verify", "recompute the diagnostics of a breather file from scratch");
  verify->add_option("-i,--input", va.input, "breather JSON file")->required()->check(CLI::ExistingFile);
  verify->add_option("--tol", va.tol, "|a - b| <= tol (1 + max(|a|, |b|))");
  verify->add_option("-o,--output", va.output, "JSON report");

  std::vector<const char*> argv;
  for (const auto& s : args) argv.push_back(s.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }
  if (!replay_file.empty()) return replay(replay_file, run_cli);

  CLI::App* sub = nullptr;
  for (auto* s : app.get_subcommands()) sub = s;
  if (!sub) {
    std::cerr << app.help();
    return kExitUsage;
  }

  Eigen::setNbThreads(threads);
  Run run;
  run.manifest.command = sub->get_name();
  run.manifest.argv = args;
  run.manifest.config = option_echo(*sub);
  run.manifest.tool_version = NECKLACE_VERSION;
  run.manifest.threads = threads;

  int code = kExitError;
  try {
    if (sub == bands) code = cmd_bands(ba, run);
    else if (sub == eigs) code = cmd_eigs(ea, run);
    else if (sub == gap) code = cmd_gap(ga, run);
    else if (sub == solve) {
      sa.options.dispersion = dispersion_from_string(dispersion);
      run.manifest.tolerances = to_json(sa.options);
      code = cmd_solve(sa, run);
    } else if (sub == sim) code = cmd_simulate(ma, run);
    else if (sub == verify) code = cmd_verify(va, run);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    code = kExitUsage;
  } catch (const SchemaError& e) {
    std::cerr << "invalid input: " << e.what() << '\n';
    code = kExitUsage;
  } catch (const DomainError& e) {
    std::cerr << "invalid parameters: " << e.what() << '\n';
    code = kExitUsage;
  } catch (const DiscreteResonance& e) {
    std::cerr << "certification failure: " << e.what() << '\n';
    code = kExitCertification;
  } catch (const CertificationFailure& e) {
    std::cerr << "certification failure: " << e.what() << '\n';
    code = kExitCertification;
  } catch (const ConvergenceFailure& e) {
    std::cerr << "no convergence: " << e.what() << '\n';
    code = kExitConvergence;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    code = kExitError;
  }
  run.finish(code);
  return code;
}

int replay(const fs::path& manifest_file, int (*again)(const std::vector<std::string>&)) {
  const RunManifest m = RunManifest::from_json(Json::parse(read_file(manifest_file)));
  std::cerr << "replaying: ";
  for (const auto& s : m.argv) std::cerr << s << ' ';
  std::cerr << '\n';
  const int code = again(m.argv);
  if (code != m.exit_code) {
    std::cerr << "replay exit code " << code << " differs from the recorded " << m.exit_code << '\n';
    return code == kExitOk ? kExitError : code;
  }
  bool same = true;
  for (const auto& [path, sha] : m.outputs) {
    const bool match = fs::exists(path) && file_sha1(path) == sha;
    std::cerr << (match ? "identical " : "DIFFERS   ") << path << '\n';
    same = same && match;
  }
  return same ? kExitOk : kExitCertification;
}

}  // namespace

int main(int argc, char** argv) {
  std::vector<std::string> args(argv, argv + argc);
  return run_cli(args);
}
