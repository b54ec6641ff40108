#pragma once

#include "exmix/damex.hpp"
#include "exmix/mixture.hpp"

#include <cstddef>
#include <limits>
#include <vector>

namespace exmix {

struct ParamErrors {
  double err_rho = 0.0;     // mean |rho_hat - rho| over all K * d entries
  double err_nu = 0.0;      // mean over the K faces
  double err_lambda = 0.0;  // mean over the K + d1 components
};

// Both thetas must list the same faces and singletons in the same order;
// throws SupportMismatch otherwise.
ParamErrors param_errors(const ThetaParams& theta_hat, const ThetaParams& theta_true);

inline constexpr std::size_t kNoComponent = std::numeric_limits<std::size_t>::max();

// For each component of `from`, the index of the component of `to` with the
// same face, or kNoComponent.
std::vector<std::size_t> component_map(const SupportSet& from, const SupportSet& to);

// Reorders theta_hat's components into the order of `reference`. Throws
// SupportMismatch unless the two supports agree as sets.
ThetaParams align_components(const ThetaParams& theta_hat, const SupportSet& reference);

// Translates labels through component_map; unmatched components give kNoComponent.
std::vector<std::size_t> translate_labels(const std::vector<std::size_t>& labels,
                                          const std::vector<std::size_t>& map);

// #{i : pred_i != truth_i}. Throws LengthMismatch.
std::size_t labeling_error(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth);

// (1/n) sum over clusters of the size of the majority class. Throws
// LengthMismatch, or InputError on empty input.
double purity(const std::vector<std::size_t>& clusters, const std::vector<std::size_t>& classes);

}  // namespace exmix
