#pragma once

#include "exmix/damex.hpp"
#include "exmix/types.hpp"

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <vector>

namespace exmix {

inline constexpr double kConstraintTolerance = 1e-8;

// Parameters of the sub-asymptotic Dirichlet mixture, in the product
// parametrization rho(k, j) = pi_k * m_k(j). rho is K x d and zero off the
// face pattern; every coordinate covered by a face has its rho column summing
// to 1/d. Immutable once constructed; the constructor validates.
class ThetaParams {
 public:
  ThetaParams(SupportSet support, Eigen::MatrixXd rho, Eigen::VectorXd nu,
              Eigen::VectorXd lambda, double r0);

  const SupportSet& support() const { return support_; }
  const Eigen::MatrixXd& rho() const { return rho_; }
  const Eigen::VectorXd& nu() const { return nu_; }
  const Eigen::VectorXd& lambda() const { return lambda_; }
  double r0() const { return r0_; }
  std::size_t d() const { return support_.d; }
  std::size_t K() const { return support_.K(); }
  std::size_t components() const { return support_.components(); }

  // Mixture weight of component k: row sum of rho for faces, 1/d for singletons.
  double weight(std::size_t k) const;

  ThetaParams with_rho_nu(Eigen::MatrixXd rho, Eigen::VectorXd nu) const;
  ThetaParams with_lambda(Eigen::VectorXd lambda) const;

 private:
  SupportSet support_;
  Eigen::MatrixXd rho_;
  Eigen::VectorXd nu_;
  Eigen::VectorXd lambda_;
  double r0_;
};

// Throws InvalidTheta describing the first violated constraint.
void validate_theta(const SupportSet& support, const Eigen::MatrixXd& rho,
                    const Eigen::VectorXd& nu, const Eigen::VectorXd& lambda, double r0);

struct ComponentView {
  std::vector<double> pi;             // K + d1 weights
  std::vector<std::vector<double>> m;  // K centers, indexed like the face members
};

ComponentView rho_to_view(const ThetaParams& theta);
Eigen::MatrixXd rho_from_view(const SupportSet& support, const ComponentView& view);

// Column normalization of a nonnegative matrix with the face sparsity pattern
// so that every covered column sums to 1/d. Throws UncoveredCoordinate when a
// non-singleton coordinate lies in no face, InputError on a pattern mismatch.
Eigen::MatrixXd project_rho(const SupportSet& support, const Eigen::MatrixXd& raw);

struct PolarDecomposition {
  double r = 0.0;                  // sum of v over the face
  std::vector<double> w;           // v / r over the face
  std::vector<double> noise;       // v off the face
};

PolarDecomposition polar(std::span<const double> v, const std::vector<int>& members);

// Dirichlet on the sub-simplex with mean m and concentration nu, with respect
// to the (|m| - 1)-dimensional Lebesgue measure. Throws BoundaryPoint when a
// coordinate of w is not positive.
double dirichlet_log_density(std::span<const double> w, std::span<const double> m, double nu);
double dirichlet_density(std::span<const double> w, std::span<const double> m, double nu);

// Translated exponential lambda * exp(-lambda (x - 1)) on x >= 1, zero below.
double noise_log_density(double x, double lambda);
double noise_density(double x, double lambda);

// log p(v | z_k = 1, theta). -inf when an off-face coordinate is below 1.
// Throws DegeneratePolar when the face radius is zero.
double conditional_log_density(std::span<const double> v, std::size_t k, const ThetaParams& theta);
double conditional_density(std::span<const double> v, std::size_t k, const ThetaParams& theta);

// log(r0 * sum_k pi_k p(v | z_k = 1)).
double mixture_log_density(std::span<const double> v, const ThetaParams& theta);
double mixture_density(std::span<const double> v, const ThetaParams& theta);

// n x (K + d1) matrix of conditional log densities, one row per observation.
Eigen::MatrixXd conditional_log_matrix(const RowMatrix& v, const ThetaParams& theta);

double log_sum_exp(std::span<const double> x);

}  // namespace exmix
