#include "necklace/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>

#include <openssl/sha.h>

#include "necklace/errors.hpp"

namespace necklace {

namespace fs = std::filesystem;

namespace {

template <class T>
T get(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw SchemaError(std::string("missing key '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("key '") + key + "': " + e.what());
  }
}

// JSON has no NaN / inf; store them as null and read them back as NaN
Json number(double v) { return std::isfinite(v) ? Json(v) : Json(nullptr); }

double number_from(const Json& j, const char* key) {
  if (!j.contains(key)) throw SchemaError(std::string("missing key '") + key + "'");
  const Json& v = j.at(key);
  if (v.is_null()) return std::numeric_limits<double>::quiet_NaN();
  if (!v.is_number()) throw SchemaError(std::string("key '") + key + "' is not a number");
  return v.get<double>();
}

std::string format_double(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct DofLabel {
  int cell = 0;
  Edge edge = Edge::link;
  int local = 0;
  double x = 0.0;
};

// first (cell, edge, local) occurrence of every symmetric degree of freedom
std::vector<DofLabel> dof_labels(const NecklaceGrid& g) {
  std::vector<DofLabel> out(g.dof_count(true));
  std::vector<bool> seen(out.size(), false);
  for (int c = 0; c < g.cell_count(); ++c) {
    const int n = g.first_cell() + c;
    for (Edge e : {Edge::link, Edge::upper})
      for (int i = 0; i <= g.points_per_edge(); ++i) {
        const auto idx = g.node_index(n, e, i, true);
        if (idx < 0 || seen[idx]) continue;
        seen[idx] = true;
        out[idx] = {n, e, i, g.x_coordinate(n, e, i)};
      }
  }
  return out;
}

}  // namespace

Json to_json(const FrequencyConfig& c) {
  return Json{{"k0", c.k0},       {"kappa", c.kappa}, {"alpha", c.alpha},        {"A", c.A},
              {"p", c.p},         {"K", c.K},         {"omega", c.omega()},      {"harmonics", c.harmonic_count()}};
}

FrequencyConfig frequency_config_from_json(const Json& j) {
  FrequencyConfig c;
  c.k0 = get<int>(j, "k0");
  c.kappa = get<int>(j, "kappa");
  c.alpha = get<double>(j, "alpha");
  c.A = get<double>(j, "A");
  c.p = get<double>(j, "p");
  c.K = get<int>(j, "K");
  try {
    c.validate();
  } catch (const DomainError& e) {
    throw SchemaError(std::string("config: ") + e.what());
  }
  return c;
}

Json to_json(const NecklaceGrid& g) {
  return Json{{"cells_half_width", g.half_width()},
              {"points_per_edge", g.points_per_edge()},
              {"boundary", to_string(g.boundary())},
              {"step", g.step()},
              {"dofs", g.dof_count(true)}};
}

NecklaceGrid grid_from_json(const Json& j) {
  try {
    return NecklaceGrid(get<int>(j, "cells_half_width"), get<int>(j, "points_per_edge"),
                        boundary_from_string(get<std::string>(j, "boundary")));
  } catch (const DomainError& e) {
    throw SchemaError(std::string("grid: ") + e.what());
  }
}

Json to_json(const SolverOptions& o) {
  return Json{{"dispersion", to_string(o.dispersion)},
              {"time_samples", o.time_samples},
              {"pivot_tol", o.pivot_tol},
              {"inner_tol", o.inner_tol},
              {"inner_max_iter", o.inner_max_iter},
              {"outer_tol", o.outer_tol},
              {"outer_max_iter", o.outer_max_iter},
              {"newton_tol", o.newton_tol},
              {"newton_max_iter", o.newton_max_iter},
              {"jacobian_regularization", o.jacobian_regularization},
              {"newton_continuation", o.newton_continuation},
              {"newton_nehari_start", o.newton_nehari_start},
              {"seed_amplitude", o.seed_amplitude},
              {"seed_width_cells", o.seed_width_cells},
              {"seed_center", o.seed_center},
              {"threads", o.threads}};
}

SolverOptions solver_options_from_json(const Json& j) {
  SolverOptions o;
  try {
    o.dispersion = dispersion_from_string(get<std::string>(j, "dispersion"));
  } catch (const DomainError& e) {
    throw SchemaError(e.what());
  }
  o.time_samples = get<int>(j, "time_samples");
  o.pivot_tol = get<double>(j, "pivot_tol");
  o.inner_tol = get<double>(j, "inner_tol");
  o.inner_max_iter = get<int>(j, "inner_max_iter");
  o.outer_tol = get<double>(j, "outer_tol");
  o.outer_max_iter = get<int>(j, "outer_max_iter");
  o.newton_tol = get<double>(j, "newton_tol");
  o.newton_max_iter = get<int>(j, "newton_max_iter");
  o.jacobian_regularization = get<double>(j, "jacobian_regularization");
  o.newton_continuation = get<bool>(j, "newton_continuation");
  o.newton_nehari_start = get<bool>(j, "newton_nehari_start");
  o.seed_amplitude = get<double>(j, "seed_amplitude");
  o.seed_width_cells = get<double>(j, "seed_width_cells");
  o.seed_center = get<double>(j, "seed_center");
  o.threads = get<int>(j, "threads");
  return o;
}

std::vector<std::pair<std::string, double>> scalar_diagnostics(const Diagnostics& d) {
  return {{"pde_residual", d.pde_residual},
          {"nehari_self", d.nehari_self},
          {"nehari_minus", d.nehari_minus},
          {"J_value", d.J_value},
          {"oriented_J", d.oriented_J},
          {"lp_integral", d.lp_integral},
          {"ground_state_defect", d.ground_state_defect},
          {"calH_norm", d.calH_norm},
          {"H_norm", d.H_norm},
          {"embedding_ratio", d.embedding_ratio},
          {"l2_norm", d.l2_norm},
          {"flux_residual_max", d.flux_residual_max},
          {"dropped_harmonic_ratio", d.dropped_harmonic_ratio},
          {"min_abs_eigenvalue", d.min_abs_eigenvalue}};
}

Json to_json(const Diagnostics& d) {
  Json j = Json::object();
  for (const auto& [name, v] : scalar_diagnostics(d)) j[name] = number(v);
  j["negative_modes"] = d.negative_modes;
  j["expected_negative_modes"] = d.expected_negative_modes;
  j["dominant_harmonic"] = d.dominant_harmonic;
  j["cell_mass"] = d.cell_mass;
  j["tail_mass"] = d.tail_mass;
  Json flux = Json::array();
  for (const auto& f : d.flux) flux.push_back(Json{{"cell", f.cell}, {"middle", f.middle}, {"x", f.x}, {"residual", f.residual}});
  j["flux"] = flux;
  return j;
}

Diagnostics diagnostics_from_json(const Json& j) {
  Diagnostics d;
  d.pde_residual = number_from(j, "pde_residual");
  d.nehari_self = number_from(j, "nehari_self");
  d.nehari_minus = number_from(j, "nehari_minus");
  d.J_value = number_from(j, "J_value");
  d.oriented_J = number_from(j, "oriented_J");
  d.lp_integral = number_from(j, "lp_integral");
  d.ground_state_defect = number_from(j, "ground_state_defect");
  d.calH_norm = number_from(j, "calH_norm");
  d.H_norm = number_from(j, "H_norm");
  d.embedding_ratio = number_from(j, "embedding_ratio");
  d.l2_norm = number_from(j, "l2_norm");
  d.flux_residual_max = number_from(j, "flux_residual_max");
  d.dropped_harmonic_ratio = number_from(j, "dropped_harmonic_ratio");
  d.min_abs_eigenvalue = number_from(j, "min_abs_eigenvalue");
  d.negative_modes = get<int>(j, "negative_modes");
  d.expected_negative_modes = get<int>(j, "expected_negative_modes");
  d.dominant_harmonic = get<int>(j, "dominant_harmonic");
  d.cell_mass = get<std::vector<double>>(j, "cell_mass");
  d.tail_mass = get<std::vector<double>>(j, "tail_mass");
  for (const auto& f : get<Json>(j, "flux"))
    d.flux.push_back({get<int>(f, "cell"), get<bool>(f, "middle"), get<double>(f, "x"), get<double>(f, "residual")});
  return d;
}

Json to_json(const GapCertificate& cert, int kappa_min) {
  return Json{{"delta_star", number(cert.delta_star)},
              {"delta", number(cert.delta)},
              {"delta0", cert.delta0},
              {"kappa_min", kappa_min},
              {"worst_pair", Json{{"m", cert.worst.m}, {"k", cert.worst.k}, {"l", cert.worst.l}}},
              {"certified", cert.certified},
              {"k_enumerated", cert.k_enumerated},
              {"tail_bound", number(cert.tail_bound)},
              {"regions", cert.regions}};
}

// ---------------------------------------------------------------------------

std::string git_blob_sha1(const std::string& content) {
  const std::string data = "blob " + std::to_string(content.size()) + '\0' + content;
  unsigned char md[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(data.data()), data.size(), md);
  std::ostringstream os;
  for (unsigned char c : md) os << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(c);
  return os.str();
}

std::string read_file(const fs::path& p) {
  std::ifstream is(p, std::ios::binary);
  if (!is) throw Error("cannot open " + p.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

void write_file(const fs::path& p, const std::string& content) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw Error("cannot write " + p.string());
  os << content;
  if (!os) throw Error("write failed: " + p.string());
}

std::string file_sha1(const fs::path& p) { return git_blob_sha1(read_file(p)); }

void write_breather(const fs::path& json_path, const BreatherState& state, const SolverOptions& options,
                    const Json& certificate, const std::string& manifest_name) {
  const TimeFourierField& f = state.field;
  const int J = f.harmonic_count();
  std::ostringstream csv;
  csv << "index,cell,edge,local,x";
  for (int j = 1; j <= J; ++j) csv << ",a_" << j;
  csv << '\n';
  const auto labels = dof_labels(f.grid);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const auto& l = labels[i];
    csv << i << ',' << l.cell << ',' << edge_symbol(l.edge) << ',' << l.local << ',' << format_double(l.x);
    for (int j = 0; j < J; ++j) csv << ',' << format_double(f.coefficients(static_cast<Eigen::Index>(i), j));
    csv << '\n';
  }
  fs::path csv_path = json_path;
  csv_path.replace_extension(".csv");
  const std::string payload = csv.str();
  write_file(csv_path, payload);

  Json harmonics = Json::array();
  for (int j = 1; j <= J; ++j) harmonics.push_back(f.harmonic(j));
  Json history = Json::array();
  for (const auto& h : state.history)
    history.push_back(Json{{"iteration", h.iteration}, {"value", number(h.value)}, {"residual", number(h.residual)},
                           {"step", number(h.step)}});

  Json header{{"format", kFormatVersion},
              {"config", to_json(f.config)},
              {"grid", to_json(f.grid)},
              {"sign", to_string(state.sign)},
              {"method", to_string(state.method)},
              {"converged", state.converged},
              {"iterations", state.iterations},
              {"message", state.message},
              {"harmonics", harmonics},
              {"period", f.period()},
              {"solver", to_json(options)},
              {"diagnostics", to_json(state.diagnostics)},
              {"certificate", certificate},
              {"history", history},
              {"payload",
               Json{{"file", csv_path.filename().string()},
                    {"sha1", git_blob_sha1(payload)},
                    {"rows", labels.size()},
                    {"columns", J}}},
              {"manifest", manifest_name}};
  write_file(json_path, header.dump(2) + "\n");
}

BreatherFile read_breather(const fs::path& json_path) {
  Json h;
  try {
    h = Json::parse(read_file(json_path));
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(json_path.string() + ": " + e.what());
  }
  if (get<std::string>(h, "format") != kFormatVersion) throw SchemaError("unsupported breather format");
  BreatherFile out;
  out.header = h;
  TimeFourierField& f = out.state.field;
  f.config = frequency_config_from_json(get<Json>(h, "config"));
  f.grid = grid_from_json(get<Json>(h, "grid"));
  out.state.sign = nonlinearity_from_string(get<std::string>(h, "sign"));
  const std::string method = get<std::string>(h, "method");
  if (method == "nehari") out.state.method = Method::nehari;
  else if (method == "newton") out.state.method = Method::newton;
  else if (method == "inner") out.state.method = Method::inner;
  else throw SchemaError("unknown method '" + method + "'");
  out.state.converged = get<bool>(h, "converged");
  out.state.iterations = get<int>(h, "iterations");
  out.state.message = get<std::string>(h, "message");
  out.options = solver_options_from_json(get<Json>(h, "solver"));
  out.state.diagnostics = diagnostics_from_json(get<Json>(h, "diagnostics"));
  out.certificate = h.contains("certificate") ? h.at("certificate") : Json(nullptr);

  const Json payload = get<Json>(h, "payload");
  const fs::path csv_path = json_path.parent_path() / get<std::string>(payload, "file");
  const std::string text = read_file(csv_path);
  if (git_blob_sha1(text) != get<std::string>(payload, "sha1")) throw SchemaError("payload hash mismatch");
  const int J = get<int>(payload, "columns");
  if (J != f.config.harmonic_count()) throw SchemaError("payload column count differs from the config");
  const auto labels = dof_labels(f.grid);
  if (get<std::size_t>(payload, "rows") != labels.size()) throw SchemaError("payload row count differs from the grid");

  f.coefficients.resize(static_cast<Eigen::Index>(labels.size()), J);
  std::istringstream is(text);
  std::string line;
  std::getline(is, line);
  std::string expected = "index,cell,edge,local,x";
  for (int j = 1; j <= J; ++j) expected += ",a_" + std::to_string(j);
  if (line != expected) throw SchemaError("payload header '" + line + "'");
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (!std::getline(is, line)) throw SchemaError("payload truncated");
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cols.push_back(c);
    if (cols.size() != static_cast<std::size_t>(5 + J)) throw SchemaError("payload row " + std::to_string(i));
    try {
      if (std::stoul(cols[0]) != i || std::stoi(cols[1]) != labels[i].cell || cols[2].size() != 1 ||
          cols[2][0] != edge_symbol(labels[i].edge) || std::stoi(cols[3]) != labels[i].local)
        throw SchemaError("payload row " + std::to_string(i) + " does not match the grid layout");
      for (int j = 0; j < J; ++j) f.coefficients(static_cast<Eigen::Index>(i), j) = std::stod(cols[5 + j]);
    } catch (const std::logic_error&) {
      throw SchemaError("payload row " + std::to_string(i) + ": not a number");
    }
  }
  return out;
}

// ---------------------------------------------------------------------------

void RunManifest::add_input(const fs::path& p) { inputs.emplace_back(p.string(), file_sha1(p)); }
void RunManifest::add_output(const fs::path& p) { outputs.emplace_back(p.string(), file_sha1(p)); }

Json RunManifest::to_json() const {
  auto files = [](const std::vector<std::pair<std::string, std::string>>& v) {
    Json a = Json::array();
    for (const auto& [p, h] : v) a.push_back(Json{{"path", p}, {"sha1", h}});
    return a;
  };
  return Json{{"command", command},
              {"argv", argv},
              {"config", config},
              {"tolerances", tolerances},
              {"certificates", certificates},
              {"inputs", files(inputs)},
              {"outputs", files(outputs)},
              {"tool_version", tool_version},
              {"wall_clock_seconds", wall_clock_seconds},
              {"exit_code", exit_code},
              {"threads", threads}};
}

RunManifest RunManifest::from_json(const Json& j) {
  RunManifest m;
  m.command = get<std::string>(j, "command");
  m.argv = get<std::vector<std::string>>(j, "argv");
  m.config = get<Json>(j, "config");
  m.tolerances = get<Json>(j, "tolerances");
  m.certificates = get<Json>(j, "certificates");
  for (const auto& f : get<Json>(j, "inputs")) m.inputs.emplace_back(get<std::string>(f, "path"), get<std::string>(f, "sha1"));
  for (const auto& f : get<Json>(j, "outputs")) m.outputs.emplace_back(get<std::string>(f, "path"), get<std::string>(f, "sha1"));
  m.tool_version = get<std::string>(j, "tool_version");
  m.wall_clock_seconds = get<double>(j, "wall_clock_seconds");
  m.exit_code = get<int>(j, "exit_code");
  m.threads = get<int>(j, "threads");
  return m;
}

fs::path manifest_path(const fs::path& artifact) { return fs::path(artifact.string() + ".manifest.json"); }

void write_manifest(const fs::path& path, const RunManifest& m) { write_file(path, m.to_json().dump(2) + "\n"); }

}  // namespace necklace
