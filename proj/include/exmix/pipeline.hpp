#pragma once

#include "exmix/damex.hpp"
#include "exmix/em.hpp"
#include "exmix/eval.hpp"
#include "exmix/shuttle.hpp"
#include "exmix/simulate.hpp"

#include <cstddef>
#include <optional>
#include <vector>

namespace exmix {

struct DamexConfig {
  std::optional<std::size_t> k;  // defaults to ceil(sqrt(n))
  double eps = 0.5;
  std::optional<double> mu_min;  // defaults to 2 / k, i.e. faces hit at least 3 times
};

std::size_t damex_k(const DamexConfig& config, std::size_t n);
double damex_mu_min(const DamexConfig& config, std::size_t k);

// estimate_mass, recover_support, then complete_coverage.
SupportSet estimate_support(const RowMatrix& v, const DamexConfig& config);

struct SimulationOptions {
  // The support is estimated on a separate sample of this many times n0
  // points from the same generator; 0 estimates it on the fitted sample.
  std::size_t support_sample_factor = 10;
  DamexConfig damex{50, 0.5, 0.04};
  FitConfig fit;
};

struct SimulationRun {
  LabeledSample sample;
  SupportSet support;
  FitResult fit;
  bool support_exact = false;
  // Hard assignments expressed as true component indices (kNoComponent when
  // the assigned face is not a true face).
  std::vector<std::size_t> predicted;
  std::size_t labeling_errors = 0;
  std::optional<ParamErrors> errors;  // only when the support is exact
};

SimulationRun run_simulation(const SyntheticSpec& spec, const SimulationOptions& options = {});

struct ShuttleOptions {
  bool sign_double = false;
  DamexConfig damex;
  FitConfig fit;
};

struct ShuttleRun {
  std::size_t n0 = 0;
  SupportSet support;
  FitResult fit;
  std::vector<std::size_t> rows;      // indices of the extreme rows
  std::vector<std::size_t> clusters;  // hard assignments
  double purity = 0.0;
};

// Rank-transforms every row, estimates the support on the full sample, fits
// on the n0 rows of largest radius and scores the hard assignments against
// the class labels.
ShuttleRun run_shuttle(const ShuttleData& data, std::size_t n0, const ShuttleOptions& options = {});

}  // namespace exmix
