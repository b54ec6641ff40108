// Command-line front end: simulate, fit, cluster, graph, eval, fetch-shuttle
// and reproduce.

#include "exmix/errors.hpp"
#include "exmix/eval.hpp"
#include "exmix/graph.hpp"
#include "exmix/ingest.hpp"
#include "exmix/io.hpp"
#include "exmix/pipeline.hpp"
#include "exmix/shuttle.hpp"
#include "exmix/simulate.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kUsageExit = 64;
constexpr int kUnexpectedExit = 1;

struct GlobalOptions {
  std::uint64_t seed = 0;
  std::string out_dir = ".";
};

struct SimulateOptions {
  exmix::SyntheticSpec spec;
  std::size_t support_factor = 0;
  std::string stem = "simulated";
};

struct FitOptions {
  std::string data;
  std::vector<std::string> drop_columns;
  bool standardized = false;
  bool sign_double = false;
  std::optional<double> extreme_quantile;
  std::optional<double> r0;
  std::optional<std::size_t> top_n0;
  std::string support_path;
  std::string support_data;
  exmix::DamexConfig damex;
  std::optional<double> k_ratio;
  exmix::FitConfig fit;
  std::string stem = "fit";
};

struct GraphOptions {
  std::string model;
  std::string gamma;
  std::optional<std::size_t> n_clusters;
  double edge_threshold = 0.05;
  int layout_iterations = 50;
  std::vector<std::string> formats{"json"};
  std::string stem = "graph";
};

struct EvalOptions {
  std::string truth;
  std::string model;
  std::string gamma;
  std::string pred;
};

struct FetchOptions {
  std::string cache_dir;
  bool offline = false;
};

struct ReproduceOptions {
  std::string preset = "all";
  int seeds = 0;
  std::string cache_dir;
  bool offline = false;
};

fs::path out_path(const GlobalOptions& g, const std::string& name) { return fs::path(g.out_dir) / name; }

std::vector<std::string> column_names(const std::string& prefix, std::size_t n) {
  std::vector<std::string> out;
  for (std::size_t j = 0; j < n; ++j) out.push_back(prefix + std::to_string(j));
  return out;
}

json spec_to_json(const exmix::SyntheticSpec& s) {
  return {{"d", s.d}, {"K", s.K}, {"nu", s.nu}, {"lambda", s.lambda}, {"r0", s.r0},
          {"n0", s.n0}, {"seed", s.seed}, {"max_face_size", s.max_face_size}, {"rho_floor", s.rho_floor}};
}

json errors_to_json(const exmix::ParamErrors& e) {
  return {{"err_rho", e.err_rho}, {"err_nu", e.err_nu}, {"err_lambda", e.err_lambda}};
}

std::vector<std::string> node_faces(const exmix::SupportSet& support, const std::vector<std::size_t>& labels) {
  const auto faces = support.component_faces();
  std::vector<std::string> out;
  for (auto l : labels) out.push_back(faces.at(l).to_string());
  return out;
}

exmix::PosteriorMatrix load_gamma(const std::string& path, std::vector<std::size_t>& row_ids) {
  std::ifstream in(path);
  if (!in) throw exmix::IoError("cannot open " + path);
  return exmix::gamma_from_csv(in, &row_ids);
}

exmix::ThetaParams load_model(const std::string& path) {
  auto j = exmix::parse_json(exmix::read_text_file(path), path);
  return exmix::theta_from_json(j.contains("theta") ? j.at("theta") : j);
}

void cmd_simulate(const GlobalOptions& g, SimulateOptions o) {
  o.spec.seed = g.seed;
  const auto sample = exmix::sample_dataset(o.spec);
  const auto names = column_names("v", o.spec.d);
  exmix::write_text_file(out_path(g, o.stem + ".csv"), exmix::to_csv(sample.v, names));
  json truth;
  truth["spec"] = spec_to_json(o.spec);
  truth["labels"] = sample.labels;
  truth["theta"] = exmix::theta_to_json(sample.theta_true);
  exmix::write_text_file(out_path(g, o.stem + ".json"), truth.dump(1) + "\n");
  if (o.support_factor > 0) {
    const auto extra = exmix::sample_from(sample.theta_true, o.spec.n0 * o.support_factor,
                                          exmix::derive_seed(g.seed, "support-sample"));
    exmix::write_text_file(out_path(g, o.stem + ".support.csv"), exmix::to_csv(extra.v, names));
  }
  std::cout << "wrote " << sample.v.rows() << " rows from " << sample.theta_true.K() << " faces and "
            << sample.theta_true.support().d1() << " singletons to " << out_path(g, o.stem + ".csv").string() << "\n";
}

exmix::StandardizedDataset standardize(exmix::RawDataset raw, const FitOptions& o) {
  exmix::validate(raw);
  if (o.sign_double) raw = exmix::sign_double(raw);
  if (o.standardized) return {raw.rows, "as-given"};
  return exmix::empirical_pareto_transform(raw);
}

exmix::RawDataset load_table(const std::string& path, const std::vector<std::string>& drop) {
  auto raw = exmix::read_csv_file(path);
  for (const auto& c : drop) exmix::take_column(raw, c);
  return raw;
}

void cmd_fit(const GlobalOptions& g, FitOptions o) {
  const auto data = standardize(load_table(o.data, o.drop_columns), o);

  exmix::SupportSet support;
  if (!o.support_path.empty()) {
    support = exmix::support_from_json(exmix::parse_json(exmix::read_text_file(o.support_path), o.support_path));
  } else {
    const auto support_data =
        o.support_data.empty() ? data : standardize(load_table(o.support_data, o.drop_columns), o);
    if (o.k_ratio) {
      o.damex.k = static_cast<std::size_t>(std::ceil(*o.k_ratio * static_cast<double>(support_data.n())));
    }
    support = exmix::estimate_support(support_data.v, o.damex);
  }

  exmix::ExtremeSubset extremes;
  if (o.r0) {
    extremes = exmix::select_extremes_above(data, *o.r0);
  } else if (o.top_n0) {
    extremes = exmix::select_top(data, *o.top_n0);
  } else {
    extremes = exmix::select_extremes(data, o.extreme_quantile.value_or(exmix::default_extreme_quantile(data.n())));
  }

  o.fit.seed = exmix::derive_seed(g.seed, "init");
  const auto result = exmix::fit(exmix::gather_rows(data.v, extremes.indices), support, extremes.r0, o.fit);

  json model = exmix::fit_to_json(result);
  model["extreme_rows"] = extremes.indices;
  model["source"] = data.source;
  exmix::write_text_file(out_path(g, o.stem + ".model.json"), model.dump(1) + "\n");
  exmix::write_text_file(out_path(g, o.stem + ".support.json"), exmix::support_to_json(support).dump(1) + "\n");
  exmix::write_text_file(out_path(g, o.stem + ".gamma.csv"), exmix::gamma_to_csv(result.gamma, extremes.indices));
  exmix::write_text_file(out_path(g, o.stem + ".trace.jsonl"), exmix::trace_to_jsonl(result.trace));
  for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
  std::cout << "fitted " << support.K() << " faces and " << support.d1() << " singletons on " << extremes.n0()
            << " extreme rows (r0 = " << extremes.r0 << "): " << result.iterations << " iterations, "
            << (result.converged ? "converged" : "not converged") << "\n";
}

void cmd_cluster(const GlobalOptions& g, const GraphOptions& o) {
  const auto theta = load_model(o.model);
  std::vector<std::size_t> rows;
  const auto gamma = load_gamma(o.gamma, rows);
  const auto hard = exmix::hard_assign(gamma);
  const auto graph = exmix::similarity_matrix(gamma, rows);
  const auto spectral =
      exmix::spectral_clustering(graph, o.n_clusters.value_or(theta.components()), exmix::derive_seed(g.seed, "kmeans"));
  json out;
  out["rows"] = rows;
  out["hard"] = hard.labels;
  out["hard_faces"] = node_faces(theta.support(), hard.labels);
  out["spectral"] = spectral.labels;
  out["n_clusters"] = spectral.n_clusters;
  exmix::write_text_file(out_path(g, o.stem + ".clusters.json"), out.dump(1) + "\n");
  std::cout << "clustered " << rows.size() << " rows into " << spectral.n_clusters << " spectral clusters\n";
}

void cmd_graph(const GlobalOptions& g, const GraphOptions& o) {
  std::vector<exmix::GraphFormat> formats;
  for (const auto& f : o.formats) formats.push_back(exmix::parse_graph_format(f));
  const auto theta = load_model(o.model);
  std::vector<std::size_t> rows;
  const auto gamma = load_gamma(o.gamma, rows);

  const auto full = exmix::similarity_matrix(gamma, rows);
  const auto hard = exmix::hard_assign(gamma);
  const auto clusters = exmix::spectral_clustering(full, o.n_clusters.value_or(theta.components()), exmix::derive_seed(g.seed, "kmeans"));
  exmix::GraphExport out{exmix::threshold_edges(full, o.edge_threshold), clusters, {},
                         node_faces(theta.support(), hard.labels)};
  out.layout = exmix::fr_layout(out.graph, o.layout_iterations, exmix::derive_seed(g.seed, "layout"));
  for (auto f : formats) {
    const auto path = out_path(g, o.stem + "." + exmix::format_extension(f));
    exmix::write_text_file(path, exmix::render_graph(out, f));
    std::cout << "wrote " << path.string() << " (" << out.graph.n() << " nodes, " << out.graph.edge_count()
              << " edges)\n";
  }
}

void cmd_eval(const EvalOptions& o) {
  const auto truth = exmix::parse_json(exmix::read_text_file(o.truth), o.truth);
  const auto true_labels = truth.at("labels").get<std::vector<std::size_t>>();
  json metrics;
  std::vector<std::size_t> pred;
  if (!o.model.empty()) {
    if (o.gamma.empty()) throw exmix::InputError("--model needs --gamma");
    const auto theta = load_model(o.model);
    std::vector<std::size_t> rows;
    const auto gamma = load_gamma(o.gamma, rows);
    if (!truth.contains("theta")) throw exmix::InputError("truth file has no theta");
    const auto theta_true = exmix::theta_from_json(truth.at("theta"));
    const auto map = exmix::component_map(theta.support(), theta_true.support());
    pred = exmix::translate_labels(exmix::hard_assign(gamma).labels, map);
    std::vector<std::size_t> truth_rows;
    for (auto r : rows) truth_rows.push_back(true_labels.at(r));
    metrics["support_exact"] = exmix::same_support(theta.support(), theta_true.support());
    if (metrics["support_exact"].get<bool>()) {
      metrics["param_errors"] =
          errors_to_json(exmix::param_errors(exmix::align_components(theta, theta_true.support()), theta_true));
    }
    metrics["labeling_error"] = exmix::labeling_error(pred, truth_rows);
    metrics["purity"] = exmix::purity(pred, truth_rows);
    metrics["n"] = pred.size();
  } else {
    if (o.pred.empty()) throw exmix::InputError("give --pred, or --model with --gamma");
    const auto p = exmix::parse_json(exmix::read_text_file(o.pred), o.pred);
    pred = p.at(p.contains("labels") ? "labels" : "hard").get<std::vector<std::size_t>>();
    metrics["labeling_error"] = exmix::labeling_error(pred, true_labels);
    metrics["purity"] = exmix::purity(pred, true_labels);
    metrics["n"] = pred.size();
  }
  std::cout << metrics.dump(1) << "\n";
}

std::string cache_dir_or_default(const GlobalOptions& g, const std::string& dir) {
  return dir.empty() ? out_path(g, "cache").string() : dir;
}

void cmd_fetch_shuttle(const GlobalOptions& g, const FetchOptions& o) {
  const auto data = exmix::load_shuttle(cache_dir_or_default(g, o.cache_dir), !o.offline);
  std::cout << (data.downloaded ? "downloaded " : "cached ") << data.cache_file.string() << ": "
            << data.attributes.n() << " rows after dropping class 1, " << data.attributes.d() << " attributes\n";
}

void cmd_reproduce(const GlobalOptions& g, const ReproduceOptions& o) {
  const bool all = o.preset == "all";
  if (!all && o.preset != "estimation" && o.preset != "noise-sweep" && o.preset != "shuttle") {
    throw exmix::InputError("unknown preset '" + o.preset + "' (expected estimation, noise-sweep, shuttle or all)");
  }
  json report;
  if (all || o.preset == "estimation" || o.preset == "noise-sweep") {
    const bool params_only = o.preset == "estimation";
    const int seeds = o.seeds > 0 ? o.seeds : (params_only ? 10 : 5);
    std::vector<double> lambdas(exmix::kLambdaSweep.begin(), exmix::kLambdaSweep.end());
    if (params_only) lambdas = {1.0};
    for (double lambda : lambdas) {
      json row;
      double errors = 0, rho = 0, nu = 0, lam = 0;
      int exact = 0;
      for (int s = 0; s < seeds; ++s) {
        exmix::SyntheticSpec spec;
        spec.lambda = lambda;
        spec.seed = exmix::derive_seed(g.seed, "replicate-" + std::to_string(s));
        const auto run = exmix::run_simulation(spec);
        errors += static_cast<double>(run.labeling_errors);
        if (run.errors) {
          ++exact;
          rho += run.errors->err_rho;
          nu += run.errors->err_nu;
          lam += run.errors->err_lambda;
        }
      }
      row["lambda"] = lambda;
      row["datasets"] = seeds;
      row["exact_support"] = exact;
      row["mean_labeling_errors"] = errors / seeds;
      if (exact > 0) row["mean_param_errors"] = {{"err_rho", rho / exact}, {"err_nu", nu / exact}, {"err_lambda", lam / exact}};
      std::cout << row.dump() << "\n";
      report["simulation"].push_back(row);
    }
  }
  if (all || o.preset == "shuttle") {
    const auto dir = cache_dir_or_default(g, o.cache_dir);
    if (o.offline && !exmix::shuttle_cached(dir)) {
      std::cout << "shuttle data not cached in " << dir << "; skipping the purity preset\n";
    } else {
      const auto data = exmix::load_shuttle(dir, !o.offline);
      exmix::ShuttleOptions opts;
      opts.fit.seed = exmix::derive_seed(g.seed, "init");
      for (std::size_t n0 : {100, 200, 300, 400, 500}) {
        const auto run = exmix::run_shuttle(data, n0, opts);
        json row{{"n0", run.n0}, {"purity", run.purity}, {"K", run.support.K()}, {"d1", run.support.d1()}};
        std::cout << row.dump() << "\n";
        report["shuttle"].push_back(row);
      }
    }
  }
  exmix::write_text_file(out_path(g, "reproduce-" + o.preset + ".json"), report.dump(1) + "\n");
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Clustering and mapping of extreme observations with Dirichlet mixtures"};
  app.set_config("--config", "", "Key = value config file; command-line flags take precedence");
  app.require_subcommand(1);

  GlobalOptions global;
  app.add_option("--seed", global.seed, "Root seed for every random stream")->capture_default_str();
  app.add_option("--out-dir", global.out_dir, "Directory for output files")->capture_default_str();

  SimulateOptions sim;
  auto* simulate = app.add_subcommand("simulate", "Draw a labeled synthetic sample");
  simulate->add_option("--d", sim.spec.d, "Dimension")->capture_default_str();
  simulate->add_option("--k-faces", sim.spec.K, "Number of faces with at least two coordinates")->capture_default_str();
  simulate->add_option("--nu", sim.spec.nu, "Dirichlet concentration")->capture_default_str();
  simulate->add_option("--lambda", sim.spec.lambda, "Noise rate")->capture_default_str();
  simulate->add_option("--n0", sim.spec.n0, "Number of points")->capture_default_str();
  simulate->add_option("--r0", sim.spec.r0, "Radial threshold")->capture_default_str();
  simulate->add_option("--max-face-size", sim.spec.max_face_size, "Largest face size")->capture_default_str();
  simulate->add_option("--rho-floor", sim.spec.rho_floor, "Lower end of the unnormalized rho entries")->capture_default_str();
  simulate->add_option("--support-sample-factor", sim.support_factor,
                       "Also write a <stem>.support.csv sample this many times larger, for support estimation");
  simulate->add_option("--stem", sim.stem, "Output file stem")->capture_default_str();

  FitOptions fopt;
  auto* fitcmd = app.add_subcommand("fit", "Estimate the support and fit the mixture");
  fitcmd->add_option("--data", fopt.data, "CSV with a header row")->required();
  fitcmd->add_option("--drop-column", fopt.drop_columns, "Column to ignore (repeatable)");
  fitcmd->add_flag("--standardized", fopt.standardized, "Data is already on the unit-Pareto scale");
  fitcmd->add_flag("--sign-double", fopt.sign_double, "Split every feature into positive and negative parts");
  auto* q = fitcmd->add_option("--extreme-quantile", fopt.extreme_quantile, "Radius quantile used as r0");
  auto* r0 = fitcmd->add_option("--r0", fopt.r0, "Absolute radial threshold");
  auto* top = fitcmd->add_option("--top-n0", fopt.top_n0, "Fit on the n0 rows of largest radius");
  q->excludes(r0)->excludes(top);
  r0->excludes(top);
  fitcmd->add_option("--support", fopt.support_path, "Support JSON to use instead of estimating one");
  fitcmd->add_option("--support-data", fopt.support_data, "Separate CSV to estimate the support on");
  auto* kopt = fitcmd->add_option("--k", fopt.damex.k, "Tail sample size for support estimation");
  fitcmd->add_option("--k-ratio", fopt.k_ratio, "Tail sample size as a fraction of n")->excludes(kopt);
  fitcmd->add_option("--eps", fopt.damex.eps, "Rectangle thickness")->capture_default_str();
  fitcmd->add_option("--mu-min", fopt.damex.mu_min, "Mass threshold for keeping a face");
  fitcmd->add_option("--max-iter", fopt.fit.max_iter, "EM iteration limit")->capture_default_str();
  fitcmd->add_option("--tol", fopt.fit.tol, "Absolute stopping tolerance (default 1e-6 * n0)");
  fitcmd->add_option("--nu-init", fopt.fit.nu_init, "Initial concentration")->capture_default_str();
  fitcmd->add_option("--lambda-init", fopt.fit.lambda_init, "Initial noise rate")->capture_default_str();
  fitcmd->add_option("--nu-max", fopt.fit.nu_max, "Upper bound on concentrations")->capture_default_str();
  fitcmd->add_option("--stem", fopt.stem, "Output file stem")->capture_default_str();

  GraphOptions copt;
  auto* cluster = app.add_subcommand("cluster", "Hard and spectral clustering of the extreme rows");
  cluster->add_option("--model", copt.model, "Model JSON written by fit")->required();
  cluster->add_option("--gamma", copt.gamma, "Posterior CSV written by fit")->required();
  cluster->add_option("--n-clusters", copt.n_clusters, "Spectral clusters (default: number of components)");
  cluster->add_option("--stem", copt.stem, "Output file stem")->capture_default_str();

  GraphOptions gopt;
  auto* graph = app.add_subcommand("graph", "Export the similarity graph with clusters and a layout");
  graph->add_option("--model", gopt.model, "Model JSON written by fit")->required();
  graph->add_option("--gamma", gopt.gamma, "Posterior CSV written by fit")->required();
  graph->add_option("--n-clusters", gopt.n_clusters, "Spectral clusters (default: number of components)");
  graph->add_option("--edge-threshold", gopt.edge_threshold, "Drop edges lighter than this")->capture_default_str();
  graph->add_option("--layout-iterations", gopt.layout_iterations, "Force-directed layout steps")->capture_default_str();
  graph->add_option("--format", gopt.formats, "graphml, dot or json (repeatable)")->capture_default_str();
  graph->add_option("--stem", gopt.stem, "Output file stem")->capture_default_str();

  EvalOptions eopt;
  auto* eval = app.add_subcommand("eval", "Score assignments against a simulate truth file");
  eval->add_option("--truth", eopt.truth, "JSON written by simulate")->required();
  eval->add_option("--model", eopt.model, "Model JSON written by fit");
  eval->add_option("--gamma", eopt.gamma, "Posterior CSV written by fit");
  eval->add_option("--pred", eopt.pred, "JSON with a labels array");

  FetchOptions fetch_opt;
  auto* fetch = app.add_subcommand("fetch-shuttle", "Download and cache the shuttle data");
  fetch->add_option("--cache-dir", fetch_opt.cache_dir, "Cache directory (default <out-dir>/cache)");
  fetch->add_flag("--offline", fetch_opt.offline, "Fail instead of downloading");

  ReproduceOptions ropt;
  auto* reproduce = app.add_subcommand("reproduce", "Run the simulation and shuttle experiment presets");
  reproduce->add_option("--preset", ropt.preset, "estimation, noise-sweep, shuttle or all")->capture_default_str();
  reproduce->add_option("--seeds", ropt.seeds, "Datasets per configuration (default 10 for estimation, 5 otherwise)");
  reproduce->add_option("--cache-dir", ropt.cache_dir, "Shuttle cache directory (default <out-dir>/cache)");
  reproduce->add_flag("--offline", ropt.offline, "Skip the shuttle preset when nothing is cached");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kUsageExit;
  }

  try {
    if (*simulate) cmd_simulate(global, sim);
    if (*fitcmd) cmd_fit(global, fopt);
    if (*cluster) cmd_cluster(global, copt);
    if (*graph) cmd_graph(global, gopt);
    if (*eval) cmd_eval(eopt);
    if (*fetch) cmd_fetch_shuttle(global, fetch_opt);
    if (*reproduce) cmd_reproduce(global, ropt);
  } catch (const exmix::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kUnexpectedExit;
  }
  return 0;
}
