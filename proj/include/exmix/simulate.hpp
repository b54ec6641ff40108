#pragma once

#include "exmix/damex.hpp"
#include "exmix/mixture.hpp"
#include "exmix/random.hpp"
#include "exmix/types.hpp"

#include <Eigen/Dense>

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace exmix {

struct SyntheticSpec {
  std::size_t d = 100;
  std::size_t K = 50;
  double nu = 20.0;
  double lambda = 1.0;
  double r0 = 100.0;
  std::size_t n0 = 1000;
  std::uint64_t seed = 0;
  // Face sizes are drawn uniformly from {2, ..., max_face_size}.
  std::size_t max_face_size = 4;
  // Unnormalized rho entries are uniform on (rho_floor, 1) before projection.
  double rho_floor = 0.5;
};

// Noise rates used across the simulation sweep.
inline constexpr std::array<double, 5> kLambdaSweep{1.0, 0.75, 0.5, 0.25, 0.1};

void validate_spec(const SyntheticSpec& spec);

struct LabeledSample {
  RowMatrix v;
  std::vector<std::size_t> labels;  // component index in [0, K + d1)
  ThetaParams theta_true;
};

// K distinct non-nested faces, each a uniform subset of size uniform in
// {2, ..., max_face_size}; coordinates covered by no face become singletons.
// Throws InfeasibleK when rejection sampling gives up.
SupportSet random_support(std::size_t d, std::size_t K, std::uint64_t seed,
                          std::size_t max_face_size = 4);

// rho = project_rho(uniform(rho_floor, 1) entries on the face pattern).
ThetaParams random_theta(const SupportSet& support, double nu, double lambda, double r0,
                         std::uint64_t seed, double rho_floor = 0.5);

// One draw from component k: R = r0 / U on the face times a Dirichlet angle
// (R itself for a singleton), 1 + Exp(lambda_k) elsewhere.
std::vector<double> sample_point(const ThetaParams& theta, std::size_t k, Rng& rng);

// n i.i.d. points from the mixture with component probabilities (pi_1..pi_K,
// 1/d, ..., 1/d).
LabeledSample sample_from(const ThetaParams& theta, std::size_t n, std::uint64_t seed);

// Support and theta from the "support" and "theta" sub-streams of spec.seed,
// then n0 points from the "sample" sub-stream.
ThetaParams spec_theta(const SyntheticSpec& spec);
LabeledSample sample_dataset(const SyntheticSpec& spec);

}  // namespace exmix
