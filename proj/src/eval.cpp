#include "exmix/eval.hpp"

#include "exmix/errors.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <string>

namespace exmix {

namespace {

bool same_order(const SupportSet& a, const SupportSet& b) {
  return a.d == b.d && a.faces == b.faces && a.singletons == b.singletons;
}

}  // namespace

ParamErrors param_errors(const ThetaParams& theta_hat, const ThetaParams& theta_true) {
  if (!same_order(theta_hat.support(), theta_true.support())) {
    throw SupportMismatch("estimated and true supports differ or are ordered differently");
  }
  ParamErrors out;
  const auto K = static_cast<double>(theta_true.K());
  const auto d = static_cast<double>(theta_true.d());
  if (theta_true.K() > 0) {
    out.err_rho = (theta_hat.rho() - theta_true.rho()).cwiseAbs().sum() / (K * d);
    out.err_nu = (theta_hat.nu() - theta_true.nu()).cwiseAbs().sum() / K;
  }
  out.err_lambda = (theta_hat.lambda() - theta_true.lambda()).cwiseAbs().sum() /
                   static_cast<double>(theta_true.components());
  return out;
}

std::vector<std::size_t> component_map(const SupportSet& from, const SupportSet& to) {
  std::map<Face, std::size_t> index;
  const auto target = to.component_faces();
  for (std::size_t k = 0; k < target.size(); ++k) index.emplace(target[k], k);
  std::vector<std::size_t> out;
  for (const auto& f : from.component_faces()) {
    const auto it = index.find(f);
    out.push_back(it == index.end() ? kNoComponent : it->second);
  }
  return out;
}

ThetaParams align_components(const ThetaParams& theta_hat, const SupportSet& reference) {
  const auto& support = theta_hat.support();
  if (!same_support(support, reference)) {
    throw SupportMismatch("estimated support differs from the reference support");
  }
  const auto map = component_map(reference, support);  // reference index -> estimate index
  const auto K = static_cast<Eigen::Index>(reference.K());
  Eigen::MatrixXd rho(K, static_cast<Eigen::Index>(reference.d));
  Eigen::VectorXd nu(K);
  Eigen::VectorXd lambda(static_cast<Eigen::Index>(reference.components()));
  for (std::size_t k = 0; k < reference.components(); ++k) {
    const auto src = static_cast<Eigen::Index>(map[k]);
    const auto dst = static_cast<Eigen::Index>(k);
    lambda(dst) = theta_hat.lambda()(src);
    if (dst < K) {
      rho.row(dst) = theta_hat.rho().row(src);
      nu(dst) = theta_hat.nu()(src);
    }
  }
  SupportSet ordered = reference;
  ordered.dropped_nested = support.dropped_nested;
  return ThetaParams(std::move(ordered), std::move(rho), std::move(nu), std::move(lambda),
                     theta_hat.r0());
}

std::vector<std::size_t> translate_labels(const std::vector<std::size_t>& labels,
                                          const std::vector<std::size_t>& map) {
  std::vector<std::size_t> out;
  out.reserve(labels.size());
  for (auto l : labels) out.push_back(l < map.size() ? map[l] : kNoComponent);
  return out;
}

std::size_t labeling_error(const std::vector<std::size_t>& pred, const std::vector<std::size_t>& truth) {
  if (pred.size() != truth.size()) {
    throw LengthMismatch("predicted and true label vectors differ in length (" +
                         std::to_string(pred.size()) + " vs " + std::to_string(truth.size()) + ")");
  }
  std::size_t errors = 0;
  for (std::size_t i = 0; i < pred.size(); ++i) errors += pred[i] != truth[i];
  return errors;
}

double purity(const std::vector<std::size_t>& clusters, const std::vector<std::size_t>& classes) {
  if (clusters.size() != classes.size()) throw LengthMismatch("cluster and class vectors differ in length");
  if (clusters.empty()) throw InputError("purity of an empty labeling");
  std::map<std::size_t, std::map<std::size_t, std::size_t>> table;
  for (std::size_t i = 0; i < clusters.size(); ++i) ++table[clusters[i]][classes[i]];
  std::size_t majority = 0;
  for (const auto& [cluster, counts] : table) {
    std::size_t best = 0;
    for (const auto& [cls, c] : counts) best = std::max(best, c);
    majority += best;
  }
  return static_cast<double>(majority) / static_cast<double>(clusters.size());
}

}  // namespace exmix
