#include "exmix/simulate.hpp"

#include "exmix/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>
#include <string>

namespace exmix {

void validate_spec(const SyntheticSpec& spec) {
  if (spec.d < 2) throw InputError("d must be at least 2");
  if (spec.K < 1) throw InputError("K must be at least 1");
  if (!(spec.nu > 0.0) || !std::isfinite(spec.nu)) throw InputError("nu must be positive");
  if (!(spec.lambda > 0.0) || !std::isfinite(spec.lambda)) throw InputError("lambda must be positive");
  if (!(spec.r0 > 0.0) || !std::isfinite(spec.r0)) throw InputError("r0 must be positive");
  if (spec.n0 < 1) throw InputError("n0 must be positive");
  if (spec.max_face_size < 2) throw InputError("max_face_size must be at least 2");
  if (!(spec.rho_floor >= 0.0 && spec.rho_floor < 1.0)) throw InputError("rho_floor must lie in [0, 1)");
}

SupportSet random_support(std::size_t d, std::size_t K, std::uint64_t seed,
                          std::size_t max_face_size) {
  if (d < 2) throw InputError("d must be at least 2");
  if (max_face_size < 2) throw InputError("max_face_size must be at least 2");
  if (d < 64) {
    const double feasible = std::ldexp(1.0, static_cast<int>(d)) - static_cast<double>(d) - 1.0;
    if (static_cast<double>(K) > feasible) {
      throw InfeasibleK("K = " + std::to_string(K) + " exceeds 2^d - d - 1 for d = " + std::to_string(d));
    }
  }
  const std::size_t top = std::min(max_face_size, d);
  Rng rng(seed);
  std::uniform_int_distribution<std::size_t> size_dist(2, top);
  std::vector<int> coords(d);
  std::iota(coords.begin(), coords.end(), 0);

  SupportSet out;
  out.d = d;
  // A draw can paint itself into a corner (a large early face blocks every
  // later one), so a stuck draw starts over from scratch.
  constexpr int kRestarts = 200;
  const std::size_t per_face_attempts = 200;
  for (int restart = 0; restart < kRestarts && out.faces.size() < K; ++restart) {
    out.faces.clear();
    std::size_t misses = 0;
    while (out.faces.size() < K && misses < per_face_attempts) {
      const auto size = size_dist(rng);
      std::vector<int> members;
      std::sample(coords.begin(), coords.end(), std::back_inserter(members),
                  static_cast<std::ptrdiff_t>(size), rng);
      Face face(std::move(members));
      const bool clash = std::any_of(out.faces.begin(), out.faces.end(),
                                     [&](const Face& f) { return f.nested_with(face); });
      if (clash) {
        ++misses;
        continue;
      }
      misses = 0;
      out.faces.push_back(std::move(face));
    }
  }
  if (out.faces.size() < K) {
    throw InfeasibleK("could not place " + std::to_string(K) + " non-nested faces in dimension " +
                      std::to_string(d));
  }
  out.face_mass.assign(K, 0.0);
  std::vector<bool> covered(d, false);
  for (const auto& f : out.faces) {
    for (int j : f.members()) covered[static_cast<std::size_t>(j)] = true;
  }
  for (std::size_t j = 0; j < d; ++j) {
    if (!covered[j]) out.singletons.push_back(static_cast<int>(j));
  }
  out.singleton_mass.assign(out.singletons.size(), 0.0);
  return out;
}

ThetaParams random_theta(const SupportSet& support, double nu, double lambda, double r0,
                         std::uint64_t seed, double rho_floor) {
  Rng rng(seed);
  std::uniform_real_distribution<double> unif(rho_floor, 1.0);
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(support.K()),
                                              static_cast<Eigen::Index>(support.d));
  for (std::size_t k = 0; k < support.K(); ++k) {
    for (int j : support.faces[k].members()) {
      double u = 0.0;
      while (u <= 0.0) u = unif(rng);
      raw(static_cast<Eigen::Index>(k), j) = u;
    }
  }
  return ThetaParams(support, project_rho(support, raw),
                     Eigen::VectorXd::Constant(static_cast<Eigen::Index>(support.K()), nu),
                     Eigen::VectorXd::Constant(static_cast<Eigen::Index>(support.components()), lambda),
                     r0);
}

std::vector<double> sample_point(const ThetaParams& theta, std::size_t k, Rng& rng) {
  if (k >= theta.components()) throw InputError("component index out of range");
  const auto& support = theta.support();
  const auto kk = static_cast<Eigen::Index>(k);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  std::exponential_distribution<double> noise(theta.lambda()(kk));

  std::vector<double> v(theta.d());
  for (auto& x : v) x = 1.0 + noise(rng);

  double u = 0.0;
  while (u <= 0.0) u = unif(rng);
  const double r = theta.r0() / u;
  const auto mem = support.members(k);
  if (k >= support.K()) {
    v[static_cast<std::size_t>(mem[0])] = r;
    return v;
  }
  const double pi = theta.weight(k);
  const double nu = theta.nu()(kk);
  std::vector<double> g(mem.size());
  double total = 0.0;
  for (std::size_t m = 0; m < mem.size(); ++m) {
    std::gamma_distribution<double> gamma(nu * theta.rho()(kk, mem[m]) / pi, 1.0);
    g[m] = gamma(rng);
    total += g[m];
  }
  for (std::size_t m = 0; m < mem.size(); ++m) v[static_cast<std::size_t>(mem[m])] = r * g[m] / total;
  return v;
}

LabeledSample sample_from(const ThetaParams& theta, std::size_t n, std::uint64_t seed) {
  const auto C = theta.components();
  std::vector<double> probs(C);
  for (std::size_t k = 0; k < C; ++k) probs[k] = theta.weight(k);
  const double total = std::accumulate(probs.begin(), probs.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-9) {
    throw InvalidTheta("component probabilities sum to " + std::to_string(total));
  }
  Rng rng(seed);
  std::discrete_distribution<std::size_t> pick(probs.begin(), probs.end());
  LabeledSample out{RowMatrix(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(theta.d())), {}, theta};
  out.labels.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = pick(rng);
    const auto x = sample_point(theta, k, rng);
    for (std::size_t j = 0; j < x.size(); ++j) {
      out.v(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = x[j];
    }
    out.labels.push_back(k);
  }
  return out;
}

ThetaParams spec_theta(const SyntheticSpec& spec) {
  validate_spec(spec);
  const auto support =
      random_support(spec.d, spec.K, derive_seed(spec.seed, "support"), spec.max_face_size);
  return random_theta(support, spec.nu, spec.lambda, spec.r0, derive_seed(spec.seed, "theta"),
                      spec.rho_floor);
}

LabeledSample sample_dataset(const SyntheticSpec& spec) {
  return sample_from(spec_theta(spec), spec.n0, derive_seed(spec.seed, "sample"));
}

}  // namespace exmix
