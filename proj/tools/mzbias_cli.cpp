// Command-line front end: each subcommand writes plot-ready CSV/JSON files
// into --out together with <command>_meta.json holding the resolved config.

#include <cmath>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "mzbias/bias.hpp"
#include "mzbias/calibration.hpp"
#include "mzbias/io.hpp"
#include "mzbias/mesh_graph.hpp"
#include "mzbias/parallel.hpp"
#include "mzbias/path_count.hpp"
#include "mzbias/photonics.hpp"
#include "mzbias/random.hpp"
#include "mzbias/stats.hpp"

namespace fs = std::filesystem;
using namespace mzbias;

namespace {

constexpr const char* kVersion = "1.0.0";

struct ConfigError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};
struct BudgetError : std::length_error {
  using std::length_error::length_error;
};

struct RunConfig {
  int m = 12;
  std::string arch = "clements";
  std::string ensemble = "haar";
  std::string input;
  int photons = 2;
  int trials = 100;
  int unitaries = 200;
  int repeats = 1;
  double bs_sigma = 1e-2;
  double phase_sigma = 1e-3;
  double noise = 1.0;
  double meas_noise = 0.0;
  std::uint64_t seed = 1;
  double k = 1.0;
  std::string measure = "all";
  std::string spread = "standard_error";
  long s = 1, a = 2, b = 2;
  std::vector<int> ms = {30, 60, 120, 240};
  std::string out = ".";
  int workers = 1;
};

Json config_to_json(const RunConfig& c) {
  return {{"m", c.m},
          {"arch", c.arch},
          {"ensemble", c.ensemble},
          {"input", c.input},
          {"photons", c.photons},
          {"trials", c.trials},
          {"unitaries", c.unitaries},
          {"repeats", c.repeats},
          {"bs_sigma", c.bs_sigma},
          {"phase_sigma", c.phase_sigma},
          {"noise", c.noise},
          {"meas_noise", c.meas_noise},
          {"seed", c.seed},
          {"k", c.k},
          {"measure", c.measure},
          {"spread", c.spread},
          {"s", c.s},
          {"a", c.a},
          {"b", c.b},
          {"ms", c.ms},
          {"out", c.out},
          {"workers", c.workers}};
}

template <typename T>
void take(const Json& j, const char* key, T& field) {
  if (!j.contains(key)) return;
  try {
    field = j.at(key).get<T>();
  } catch (const Json::exception& e) {
    throw ConfigError(std::string("config key '") + key + "': " + e.what());
  }
}

// Accepts a bare config object or a <command>_meta.json sidecar.
void apply_json(const Json& file, RunConfig& c) {
  if (!file.is_object()) throw ConfigError("config file must hold a JSON object");
  const Json& j = file.contains("command") && file.contains("config") ? file.at("config") : file;
  if (!j.is_object()) throw ConfigError("'config' must be a JSON object");
  const Json known = config_to_json(c);
  for (const auto& [key, value] : j.items())
    if (!known.contains(key)) throw ConfigError("unknown config key '" + key + "'");
  take(j, "m", c.m);
  take(j, "arch", c.arch);
  take(j, "ensemble", c.ensemble);
  take(j, "input", c.input);
  take(j, "photons", c.photons);
  take(j, "trials", c.trials);
  take(j, "unitaries", c.unitaries);
  take(j, "repeats", c.repeats);
  take(j, "bs_sigma", c.bs_sigma);
  take(j, "phase_sigma", c.phase_sigma);
  take(j, "noise", c.noise);
  take(j, "meas_noise", c.meas_noise);
  take(j, "seed", c.seed);
  take(j, "k", c.k);
  take(j, "measure", c.measure);
  take(j, "spread", c.spread);
  take(j, "s", c.s);
  take(j, "a", c.a);
  take(j, "b", c.b);
  take(j, "ms", c.ms);
  take(j, "out", c.out);
  take(j, "workers", c.workers);
}

void require(bool ok, const std::string& what) {
  if (!ok) throw ConfigError(what);
}

void cap(bool ok, const std::string& what) {
  if (!ok) throw BudgetError(what);
}

void validate(const RunConfig& c) {
  require(c.m >= 1, "m must be >= 1");
  require(c.photons >= 1, "photons must be >= 1");
  require(c.trials >= 1 && c.unitaries >= 1 && c.repeats >= 1, "counts must be >= 1");
  require(c.bs_sigma >= 0 && c.phase_sigma >= 0 && c.noise >= 0 && c.meas_noise >= 0, "noise levels must be >= 0");
  require(c.k > 0, "k must be positive");
  require(c.workers >= 1, "workers must be >= 1");
  require(c.spread == "standard_error" || c.spread == "sample_std", "spread must be standard_error or sample_std");
}

NoiseModel noise_of(const RunConfig& c) {
  NoiseModel n;
  n.bs_sigma = c.bs_sigma * c.noise;
  n.phase_sigma = c.phase_sigma * c.noise;
  n.seed = c.seed;
  return n;
}

std::string path_in(const RunConfig& c, const std::string& name) { return (fs::path(c.out) / name).string(); }

void write_meta(const RunConfig& c, const std::string& command, Json extra) {
  Json meta = {{"command", command}, {"version", kVersion}, {"config", config_to_json(c)}};
  for (auto& [key, value] : extra.items()) meta[key] = value;
  write_json_file(path_in(c, command + "_meta.json"), meta);
}

void progress(const std::string& msg) { std::cerr << "[mzbias] " << msg << '\n'; }

ComplexMatrix ensemble_unitary(const RunConfig& c) {
  const Ensemble e = parse_ensemble(c.ensemble);
  switch (e) {
    case Ensemble::Haar: return haar_random(c.m, derive_seed({c.seed, 0, 0}));
    case Ensemble::Fourier: return fourier(c.m);
    case Ensemble::UniformPhases:
      return reconstruct(uniform_phase_random(c.m, parse_architecture(c.arch), derive_seed({c.seed, 0, 0})));
    case Ensemble::FixedUnitary:
      require(!c.input.empty(), "ensemble 'file' needs --input");
      return matrix_from_json(read_json_file(c.input));
  }
  throw ConfigError("unknown ensemble");
}

std::vector<std::vector<std::string>> string_grid(int m) {
  return std::vector<std::vector<std::string>>(m, std::vector<std::string>(m));
}

// ---------------------------------------------------------------- commands

void run_decompose(const RunConfig& c) {
  const ComplexMatrix u = ensemble_unitary(c);
  const Architecture a = parse_architecture(c.arch);
  const MeshParameters p = decompose(u, a);
  const double err = (reconstruct(p) - u).norm();
  write_json_file(path_in(c, "decompose_mesh.json"), mesh_to_json(p));
  write_json_file(path_in(c, "decompose_unitary.json"), matrix_to_json(u));
  write_meta(c, "decompose", {{"roundtrip_frobenius_error", err}});
  std::cout << Json{{"cells", p.cells.size()}, {"roundtrip_frobenius_error", err}}.dump() << '\n';
}

void run_reconstruct(const RunConfig& c) {
  require(!c.input.empty(), "reconstruct needs --input <mesh.json>");
  const MeshParameters p = mesh_from_json(read_json_file(c.input));
  const ComplexMatrix u = reconstruct(p);
  write_json_file(path_in(c, "reconstruct_unitary.json"), matrix_to_json(u));
  write_meta(c, "reconstruct", {{"unitarity_deviation", unitarity_deviation(u)}});
  std::cout << Json{{"m", p.m}, {"unitarity_deviation", unitarity_deviation(u)}}.dump() << '\n';
}

void run_paths(const RunConfig& c) {
  cap(c.m <= 200, "paths: m capped at 200");
  const Architecture a = parse_architecture(c.arch);
  const MeshGraph g(c.m, a);
  Eigen::MatrixXd log_count(c.m, c.m), total(c.m, c.m), mean_len(c.m, c.m);
  Json exact = Json::array();
  auto count_str = string_grid(c.m);
  bool closed_form_agrees = true;
  for (int in = 0; in < c.m; ++in) {
    const auto stats = path_stats_from(g, in);
    for (int out = 0; out < c.m; ++out) {
      const auto& s = stats[out];
      log_count(out, in) = log_big(s.count) / std::log(10.0);
      total(out, in) = s.total_length.convert_to<double>();
      mean_len(out, in) = s.mean_length.convert_to<double>();
      count_str[out][in] = s.count.str();
      const BigInt formula =
          a == Architecture::Rectangular ? count_rectangular(c.m, out + 1, in + 1) : count_triangular(c.m, out + 1, in + 1);
      closed_form_agrees = closed_form_agrees && formula == s.count;
      exact.push_back({{"output", out}, {"input", in}, {"count", s.count.str()}, {"total_length", s.total_length.str()}});
    }
  }
  write_heatmap_file(path_in(c, "paths_log10_count.csv"), log_count);
  write_heatmap_file(path_in(c, "paths_count.csv"), count_str);
  write_heatmap_file(path_in(c, "paths_total_length.csv"), total);
  write_heatmap_file(path_in(c, "paths_mean_length.csv"), mean_len);
  write_json_file(path_in(c, "paths_exact.json"), {{"m", c.m}, {"architecture", c.arch}, {"pairs", exact}});
  write_meta(c, "paths", {{"closed_form_agrees", closed_form_agrees}, {"length_unit", "edges input to output"}});
}

void run_flow(const RunConfig& c) {
  cap(c.m <= 200, "flow: m capped at 200");
  const MeshGraph g(c.m, parse_architecture(c.arch));
  const auto phi = flow_all(g, c.k);
  const auto reach = reach_sets(g);
  std::ofstream out(path_in(c, "flow.csv"));
  out << "layer,row,flow,sensitivity_index\n";
  std::vector<double> alpha;
  for (int k = 0; k < g.num_cells(); ++k) {
    const auto& r = reach[g.cell_node(k)];
    alpha.push_back(static_cast<double>(r.inputs.count() + r.outputs.count()) + c.m - 1);
    out << g.cells()[k].layer << ',' << g.cells()[k].mode << ',' << format_double(phi[k]) << ','
        << static_cast<int>(alpha.back()) << '\n';
  }
  write_meta(c, "flow", {{"spearman_flow_vs_index", g.num_cells() > 1 ? spearman(phi, alpha) : 0.0}});
}

void run_centrality(const RunConfig& c) {
  cap(c.m <= 64, "centrality: m capped at 64");
  const MeshGraph g(c.m, parse_architecture(c.arch));
  std::vector<Centrality> measures;
  if (c.measure == "all") {
    measures = {Centrality::Closeness, Centrality::Betweenness, Centrality::Degree,
                Centrality::Eigenvector, Centrality::Katz, Centrality::PageRank};
  } else {
    measures = {parse_centrality(c.measure)};
  }
  std::vector<std::vector<double>> values;
  for (auto m : measures) values.push_back(centrality(g, m));
  std::ofstream out(path_in(c, "centrality.csv"));
  out << "node,kind,layer,row";
  for (auto m : measures) out << ',' << to_string(m);
  out << '\n';
  for (int v = 0; v < g.num_nodes(); ++v) {
    const auto& n = g.node(v);
    out << v << ',' << (n.kind == NodeKind::Input ? "input" : n.kind == NodeKind::Cell ? "cell" : "output") << ','
        << n.layer << ',' << n.mode;
    for (const auto& col : values) out << ',' << format_double(col[v]);
    out << '\n';
  }
  write_json_file(path_in(c, "graph.json"), graph_to_json(g));
  write_meta(c, "centrality", {});
}

void run_zeta(const RunConfig& c) {
  cap(c.m <= 64, "zeta: m capped at 64");
  cap(static_cast<double>(c.unitaries) * c.trials * c.m * c.m * c.m <= 5e11, "zeta: compute budget exceeded");
  ZetaConfig z;
  z.m = c.m;
  z.architecture = parse_architecture(c.arch);
  z.ensemble = parse_ensemble(c.ensemble);
  z.n_unitaries = c.unitaries;
  z.n_trials = c.trials;
  z.noise = noise_of(c);
  z.workers = c.workers;
  if (z.ensemble == Ensemble::FixedUnitary) z.fixed_unitary = ensemble_unitary(c);
  progress("zeta: " + std::to_string(c.unitaries) + " unitaries x " + std::to_string(c.trials) + " trials");
  const ZetaResult r = zeta_map(z);
  write_heatmap_file(path_in(c, "zeta.csv"), r.zeta);
  write_heatmap_file(path_in(c, "zeta_re.csv"), r.real_mean);
  write_heatmap_file(path_in(c, "zeta_im.csv"), r.imag_mean);
  write_meta(c, "zeta",
             {{"gamma1", r.gamma1},
              {"gamma2", r.gamma2},
              {"unitaries_used", r.n_unitaries},
              {"normalization", "per run: each averaged term scaled to unit maximum, then halved sum"},
              {"averaging", "pooled over unitaries and trials with equal weights"}});
}

void run_mpbias(const RunConfig& c) {
  require(c.photons >= 2 && c.photons <= 4, "mpbias: photons must be 2, 3 or 4");
  require(c.trials >= 2, "mpbias: trials must be >= 2");
  require(c.photons <= c.m, "mpbias: photons must not exceed m");
  const double states = binomial(c.m, c.photons).convert_to<double>();
  cap(states * states * c.trials <= 2e9, "mpbias: compute budget exceeded");
  const ComplexMatrix u = ensemble_unitary(c);
  const Architecture a = parse_architecture(c.arch);
  BiasConfig cfg;
  cfg.photons = c.photons;
  cfg.trials = c.trials;
  cfg.noise = noise_of(c);
  cfg.workers = c.workers;
  cfg.spread = c.spread == "sample_std" ? SpreadEstimator::SampleStd : SpreadEstimator::StandardError;
  progress("mpbias: " + std::to_string(static_cast<long>(states * states)) + " pairs x " + std::to_string(c.trials) +
           " trials");
  const BiasMaps r = multi_photon_bias(u, a, cfg);
  write_heatmap_file(path_in(c, "mpbias_delta_ij.csv"), r.delta_ij);
  write_heatmap_file(path_in(c, "mpbias_param_counts.csv"), r.parameter_counts.cast<double>());

  const auto layout = mesh_layout(c.m, a);
  Json xi = Json::array();
  for (Eigen::Index id = 0; id < r.delta_xi.size(); ++id) {
    const auto& pos = layout[id / 2];
    xi.push_back({{"layer", pos.layer}, {"row", pos.mode}, {"phase", id % 2 == 0 ? "psi" : "theta"},
                  {"delta", r.delta_xi(id)}});
  }
  Json pairs = Json::array();
  for (const auto& p : r.pairs) {
    pairs.push_back({{"v", to_string(r.states[p.v])}, {"w", to_string(r.states[p.w])}, {"p", p.p}, {"delta", p.delta},
                     {"sigma", p.sigma}});
  }
  write_json_file(path_in(c, "mpbias_delta_xi.json"), xi);
  write_json_file(path_in(c, "mpbias_pairs.json"), pairs);
  write_json_file(path_in(c, "mpbias_unitary.json"), matrix_to_json(u));
  write_meta(c, "mpbias",
             {{"mean_significance", r.mean_significance},
              {"skipped_pairs", r.skipped_pairs},
              {"spearman_delta_vs_param_count",
               spearman(flatten(r.delta_ij), flatten(r.parameter_counts.cast<double>()))}});
}

void run_depsets(const RunConfig& c) {
  cap(c.m <= 100, "depsets: m capped at 100");
  const DependencySets d(c.m, parse_architecture(c.arch));
  Json elements = Json::array();
  for (int i = 0; i < c.m; ++i)
    for (int j = 0; j < c.m; ++j) elements.push_back({{"output", i}, {"input", j}, {"parameters", d.element(i, j)}});
  write_json_file(path_in(c, "depsets.json"),
                  {{"m", c.m},
                   {"architecture", c.arch},
                   {"id_scheme", "cell c: psi 2c, theta 2c+1; output phase of mode i: m(m-1)+i"},
                   {"elements", elements}});
  const Eigen::MatrixXd counts = d.internal_counts().cast<double>();
  write_heatmap_file(path_in(c, "depsets_counts.csv"), counts);
  write_heatmap_file(path_in(c, "depsets_counts_normalized.csv"), counts / std::max(1.0, counts.maxCoeff()));
  write_meta(c, "depsets", {});
}

void run_calibrate(const RunConfig& c) {
  require(c.m >= 2, "calibrate: m must be >= 2");
  cap(c.m <= 16, "calibrate: m capped at 16");
  require(c.arch == "clements" || c.arch == "rectangular", "calibrate: only the rectangular mesh is supported");
  const auto laws = random_laws(c.m, derive_seed({c.seed, 0, 0}));
  SimulatedDevice dev(c.m, laws, c.meas_noise, derive_seed({c.seed, 0, 1}));
  const CalibrationEstimate est = calibrate(dev);
  write_json_file(path_in(c, "calibrate_estimate.json"), estimate_to_json(est, laws));
  Json extra = {{"max_abs_error", est.max_error()}};
  if (c.repeats >= 2) {
    progress("calibrate: " + std::to_string(c.repeats) + " repeats");
    const ErrorMaps maps = calibration_error_map(c.m, c.repeats, c.meas_noise, c.seed, {}, c.workers);
    std::ofstream out(path_in(c, "calibrate_error_map.csv"));
    out << "layer,row,psi0,beta,theta0,alpha,diagonal_order,psi_order\n";
    for (std::size_t k = 0; k < maps.layout.size(); ++k) {
      out << maps.layout[k].layer << ',' << maps.layout[k].mode << ',' << format_double(maps.psi0(k)) << ','
          << format_double(maps.beta(k)) << ',' << format_double(maps.theta0(k)) << ',' << format_double(maps.alpha(k))
          << ',' << maps.diagonal_order[k] << ',' << maps.psi_order[k] << '\n';
    }
  }
  write_meta(c, "calibrate", extra);
  std::cout << Json{{"max_abs_error", est.max_error()}}.dump() << '\n';
}

void run_catalan(const RunConfig& c) {
  cap(c.a <= 100000 && c.b <= 100000, "catalan: a and b capped at 1e5");
  const BigInt v = catalan_trapezoid(c.s, c.a, c.b);
  std::cout << Json{{"s", c.s}, {"a", c.a}, {"b", c.b}, {"value", v.str()}}.dump() << '\n';
}

void run_asymptotics(const RunConfig& c) {
  std::ofstream out(path_in(c, "asymptotics.csv"));
  out << "m,case,approx_log_ratio,exact_log_ratio,relative_error\n";
  for (int m : c.ms) {
    cap(m <= 5000, "asymptotics: m capped at 5000");
    for (auto rc : {RatioCase::Corner11, RatioCase::EdgeHalf}) {
      if (rc == RatioCase::EdgeHalf && m % 2 != 0) continue;
      const double approx = asymptotic_log_ratio(m, rc), exact = exact_log_ratio(m, rc);
      out << m << ',' << to_string(rc) << ',' << format_double(approx) << ',' << format_double(exact) << ','
          << format_double(std::abs(approx - exact) / std::abs(exact)) << '\n';
    }
  }
  write_meta(c, "asymptotics", {{"w", kEdgeExponent}});
}

void emit_error(const std::string& type, const std::string& msg) {
  std::cerr << Json{{"error", type}, {"message", msg}}.dump() << '\n';
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;
  cfg.workers = default_workers();
  std::string json_config;

  CLI::App app{"Noise bias analysis for Mach-Zehnder meshes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);

  auto add_common = [&](CLI::App* s) {
    s->add_option("--m", cfg.m, "mode count");
    s->add_option("--arch", cfg.arch, "reck or clements")
        ->check(CLI::IsMember({"reck", "clements", "triangular", "rectangular"}));
    s->add_option("--ensemble", cfg.ensemble, "haar, uniform, fourier or file")
        ->check(CLI::IsMember({"haar", "uniform", "fourier", "file"}));
    s->add_option("--input", cfg.input, "input JSON file");
    s->add_option("--photons", cfg.photons, "photon number N");
    s->add_option("--trials", cfg.trials, "noise trials per unitary");
    s->add_option("--unitaries", cfg.unitaries, "unitaries per ensemble");
    s->add_option("--repeats", cfg.repeats, "calibration repeats");
    s->add_option("--bs-sigma", cfg.bs_sigma, "beamsplitter amplitude std");
    s->add_option("--phase-sigma", cfg.phase_sigma, "phase std in radians");
    s->add_option("--noise", cfg.noise, "scale applied to both noise sigmas");
    s->add_option("--meas-noise", cfg.meas_noise, "relative power measurement noise");
    s->add_option("--seed", cfg.seed, "master seed");
    s->add_option("--k", cfg.k, "flow moment order");
    s->add_option("--measure", cfg.measure, "centrality measure or 'all'");
    s->add_option("--spread", cfg.spread, "standard_error or sample_std");
    s->add_option("--s", cfg.s, "trapezoid s");
    s->add_option("--a", cfg.a, "trapezoid a");
    s->add_option("--b", cfg.b, "trapezoid b");
    s->add_option("--ms", cfg.ms, "mode counts for asymptotics")->delimiter(',');
    s->add_option("--out", cfg.out, "output directory");
    s->add_option("--workers", cfg.workers, "worker threads (default: MZBIAS_WORKERS or hardware)");
    s->add_option("--json-config", json_config, "JSON config overriding flags");
  };

  struct Command {
    const char* name;
    const char* help;
    void (*run)(const RunConfig&);
  };
  const std::vector<Command> commands = {
      {"decompose", "decompose a unitary onto a mesh", run_decompose},
      {"reconstruct", "rebuild the unitary of a mesh file", run_reconstruct},
      {"paths", "path count and length heatmaps", run_paths},
      {"flow", "flow and sensitivity index per cell", run_flow},
      {"centrality", "graph centralities per node", run_centrality},
      {"zeta", "single-photon sensitivity map", run_zeta},
      {"mpbias", "multi-photon bias attribution", run_mpbias},
      {"depsets", "parameter dependency sets", run_depsets},
      {"calibrate", "simulated calibration", run_calibrate},
      {"catalan", "Catalan trapezoid value", run_catalan},
      {"asymptotics", "architecture count ratios", run_asymptotics},
  };
  std::vector<CLI::App*> subs;
  for (const auto& c : commands) {
    auto* s = app.add_subcommand(c.name, c.help);
    add_common(s);
    subs.push_back(s);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    emit_error("usage", e.what());
    return 2;
  }

  try {
    if (!json_config.empty()) apply_json(read_json_file(json_config), cfg);
    validate(cfg);
    fs::create_directories(cfg.out);
    for (std::size_t i = 0; i < commands.size(); ++i)
      if (subs[i]->parsed()) commands[i].run(cfg);
  } catch (const ConfigError& e) {
    emit_error("config", e.what());
    return 2;
  } catch (const BudgetError& e) {
    emit_error("budget", e.what());
    return 4;
  } catch (const Json::exception& e) {
    emit_error("config", e.what());
    return 2;
  } catch (const std::exception& e) {
    emit_error("runtime", e.what());
    return 3;
  }
  return 0;
}
