#pragma once

#include "exmix/damex.hpp"
#include "exmix/mixture.hpp"
#include "exmix/types.hpp"

#include <Eigen/Dense>

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace exmix {

// gamma(i, k) = P(Z_ik = 1 | V_i, theta); rows sum to one.
struct PosteriorMatrix {
  Eigen::MatrixXd gamma;
};

struct FitConfig {
  int max_iter = 200;
  std::optional<double> tol;  // absolute; defaults to 1e-6 * n0
  double nu_init = 20.0;
  double lambda_init = 0.01;
  std::uint64_t seed = 0;
  // Upper bound on the Dirichlet concentrations. Without it a component that
  // captures a single point can drive nu to infinity.
  double nu_max = 1e3;
  double dead_mass = 1e-8;  // components with sum_i gamma_ik below this are frozen
  int optimizer_iterations = 500;
  int optimizer_restarts = 3;
  // Called with the starting point (iteration 0) and after every M-step.
  std::function<void(int iteration, const ThetaParams& theta)> on_iterate;
};

struct IterationRecord {
  int iteration = 0;
  double q = 0.0;      // Q(theta_t, gamma_t)
  double bound = 0.0;  // q plus the entropy of gamma_t
  double e_step_ms = 0.0;
  double lambda_ms = 0.0;
  double rho_nu_ms = 0.0;
};

struct FitResult {
  ThetaParams theta;
  PosteriorMatrix gamma;  // posteriors at the final theta
  // Likelihood lower bound Q(theta_t, gamma_t) + H(gamma_t) per iteration,
  // where gamma_t are the posteriors the t-th M-step was run on. Unlike Q
  // alone it cannot decrease, and it drives the stopping rule.
  std::vector<double> q_trace;
  std::vector<IterationRecord> trace;
  int iterations = 0;
  bool converged = false;
  std::vector<std::size_t> frozen_components;
  std::vector<std::string> warnings;
};

struct QSplit {
  double q1 = 0.0;  // weights and Dirichlet terms, depends on (rho, nu)
  double q2 = 0.0;  // noise terms, depends on lambda
  double c = 0.0;   // radial/Jacobian and singleton weight terms
  double total() const { return q1 + q2 + c; }
};

struct RhoNuStep {
  Eigen::MatrixXd rho;
  Eigen::VectorXd nu;
  double q1_before = 0.0;
  double q1_after = 0.0;
  bool improved = false;
};

// Throws AllComponentsZero when some row has zero density under every component.
PosteriorMatrix e_step(const RowMatrix& v, const ThetaParams& theta);

// Closed-form maximizer of the noise block. Components with no off-face
// coordinate, and those flagged in `frozen`, keep their previous rate. Throws
// DeadComponent if an unfrozen component has zero posterior mass.
Eigen::VectorXd m_step_lambda(const RowMatrix& v, const PosteriorMatrix& gamma,
                              const SupportSet& support, const Eigen::VectorXd& previous,
                              const std::vector<bool>& frozen = {});

// Maximizes the (rho, nu) block subject to the column constraints, starting
// from theta. Never returns a point with lower Q1 than theta.
RhoNuStep m_step_rho_nu(const RowMatrix& v, const PosteriorMatrix& gamma,
                        const ThetaParams& theta, const FitConfig& config = {},
                        const std::vector<bool>& frozen = {});

double q1_value(const RowMatrix& v, const PosteriorMatrix& gamma, const SupportSet& support,
                const Eigen::MatrixXd& rho, const Eigen::VectorXd& nu);
double q_value(const RowMatrix& v, const PosteriorMatrix& gamma, const ThetaParams& theta);
// -sum_ik gamma_ik log gamma_ik.
double posterior_entropy(const PosteriorMatrix& gamma);
QSplit q_split(const RowMatrix& v, const PosteriorMatrix& gamma, const ThetaParams& theta);

// Starting point: nu = nu_init, lambda = lambda_init, rho = project_rho of a
// uniform random matrix on the face pattern.
ThetaParams initial_theta(const SupportSet& support, double r0, const FitConfig& config);

FitResult fit(const RowMatrix& v, const SupportSet& support, double r0,
              const FitConfig& config = {});

}  // namespace exmix
