#include "exmix/pipeline.hpp"

#include "exmix/errors.hpp"
#include "exmix/graph.hpp"
#include "exmix/ingest.hpp"

#include <cmath>

namespace exmix {

std::size_t damex_k(const DamexConfig& config, std::size_t n) {
  if (config.k) return *config.k;
  return static_cast<std::size_t>(std::ceil(std::sqrt(static_cast<double>(n))));
}

double damex_mu_min(const DamexConfig& config, std::size_t k) {
  if (config.mu_min) return *config.mu_min;
  return 2.0 / static_cast<double>(k);
}

SupportSet estimate_support(const RowMatrix& v, const DamexConfig& config) {
  const auto k = damex_k(config, static_cast<std::size_t>(v.rows()));
  const auto mass = estimate_mass(v, k, config.eps);
  return complete_coverage(recover_support(mass, damex_mu_min(config, k), static_cast<std::size_t>(v.cols())));
}

SimulationRun run_simulation(const SyntheticSpec& spec, const SimulationOptions& options) {
  auto sample = sample_dataset(spec);
  SupportSet support;
  if (options.support_sample_factor > 0) {
    const auto extra = sample_from(sample.theta_true, spec.n0 * options.support_sample_factor,
                                   derive_seed(spec.seed, "support-sample"));
    support = estimate_support(extra.v, options.damex);
  } else {
    support = estimate_support(sample.v, options.damex);
  }

  FitConfig fit_config = options.fit;
  fit_config.seed = derive_seed(spec.seed, "init");
  auto result = fit(sample.v, support, spec.r0, fit_config);

  SimulationRun run{std::move(sample), std::move(support), std::move(result), false, {}, 0, std::nullopt};
  const auto& truth = run.sample.theta_true;
  run.support_exact = same_support(run.support, truth.support());
  const auto map = component_map(run.support, truth.support());
  run.predicted = translate_labels(hard_assign(run.fit.gamma).labels, map);
  run.labeling_errors = labeling_error(run.predicted, run.sample.labels);
  if (run.support_exact) {
    run.errors = param_errors(align_components(run.fit.theta, truth.support()), truth);
  }
  return run;
}

ShuttleRun run_shuttle(const ShuttleData& data, std::size_t n0, const ShuttleOptions& options) {
  const auto raw = options.sign_double ? sign_double(data.attributes) : data.attributes;
  const auto standardized = empirical_pareto_transform(raw);
  auto support = estimate_support(standardized.v, options.damex);
  const auto extremes = select_top(standardized, n0);
  auto result = fit(gather_rows(standardized.v, extremes.indices), support, extremes.r0, options.fit);
  ShuttleRun run{extremes.n0(), std::move(support), std::move(result), extremes.indices, {}, 0.0};
  run.clusters = hard_assign(run.fit.gamma).labels;
  std::vector<std::size_t> classes;
  for (auto i : extremes.indices) classes.push_back(data.classes[i]);
  run.purity = purity(run.clusters, classes);
  return run;
}

}  // namespace exmix
