#include "exmix/mixture.hpp"

#include "exmix/errors.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace exmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::vector<bool> face_coverage(const SupportSet& support) {
  std::vector<bool> covered(support.d, false);
  for (const auto& f : support.faces) {
    for (int j : f.members()) {
      if (j >= static_cast<int>(support.d)) throw InvalidTheta("face member outside [0, d)");
      covered[static_cast<std::size_t>(j)] = true;
    }
  }
  return covered;
}

}  // namespace

void validate_theta(const SupportSet& support, const Eigen::MatrixXd& rho,
                    const Eigen::VectorXd& nu, const Eigen::VectorXd& lambda, double r0) {
  const auto K = static_cast<Eigen::Index>(support.K());
  const auto d = static_cast<Eigen::Index>(support.d);
  if (d < 1) throw InvalidTheta("dimension must be positive");
  if (support.components() == 0) throw InvalidTheta("support has no component");
  if (rho.rows() != K || rho.cols() != d) throw InvalidTheta("rho must be K x d");
  if (nu.size() != K) throw InvalidTheta("nu must have K entries");
  if (lambda.size() != static_cast<Eigen::Index>(support.components())) {
    throw InvalidTheta("lambda must have K + d1 entries");
  }
  if (!(r0 > 0.0) || !std::isfinite(r0)) throw InvalidTheta("r0 must be positive");
  for (Eigen::Index k = 0; k < K; ++k) {
    if (!(nu(k) > 0.0) || !std::isfinite(nu(k))) {
      throw InvalidTheta("nu[" + std::to_string(k) + "] must be positive");
    }
  }
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    if (!(lambda(k) > 0.0) || !std::isfinite(lambda(k))) {
      throw InvalidTheta("lambda[" + std::to_string(k) + "] must be positive");
    }
  }
  for (std::size_t a = 0; a < support.faces.size(); ++a) {
    if (support.faces[a].size() < 2) throw InvalidTheta("faces must have at least 2 members");
    for (std::size_t b = a + 1; b < support.faces.size(); ++b) {
      if (support.faces[a].nested_with(support.faces[b])) {
        throw InvalidTheta("faces " + support.faces[a].to_string() + " and " +
                           support.faces[b].to_string() + " are nested");
      }
    }
  }
  const auto covered = face_coverage(support);
  std::vector<bool> singleton(support.d, false);
  for (int j : support.singletons) {
    if (j < 0 || j >= d) throw InvalidTheta("singleton outside [0, d)");
    if (covered[static_cast<std::size_t>(j)]) {
      throw InvalidTheta("singleton " + std::to_string(j) + " lies inside a face");
    }
    if (singleton[static_cast<std::size_t>(j)]) throw InvalidTheta("duplicate singleton");
    singleton[static_cast<std::size_t>(j)] = true;
  }
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& face = support.faces[static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < d; ++j) {
      const bool in = face.contains(static_cast<int>(j));
      if (in && !(rho(k, j) > 0.0)) {
        throw InvalidTheta("rho must be positive on face members");
      }
      if (!in && rho(k, j) != 0.0) throw InvalidTheta("rho must vanish off the face");
    }
  }
  const double target = 1.0 / static_cast<double>(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    if (singleton[static_cast<std::size_t>(j)]) continue;
    if (!covered[static_cast<std::size_t>(j)]) {
      throw InvalidTheta("coordinate " + std::to_string(j) + " is neither covered nor a singleton");
    }
    if (std::abs(rho.col(j).sum() - target) > kConstraintTolerance) {
      throw InvalidTheta("rho column " + std::to_string(j) + " does not sum to 1/d");
    }
  }
}

ThetaParams::ThetaParams(SupportSet support, Eigen::MatrixXd rho, Eigen::VectorXd nu,
                         Eigen::VectorXd lambda, double r0)
    : support_(std::move(support)),
      rho_(std::move(rho)),
      nu_(std::move(nu)),
      lambda_(std::move(lambda)),
      r0_(r0) {
  validate_theta(support_, rho_, nu_, lambda_, r0_);
}

double ThetaParams::weight(std::size_t k) const {
  if (k < K()) return rho_.row(static_cast<Eigen::Index>(k)).sum();
  return 1.0 / static_cast<double>(d());
}

ThetaParams ThetaParams::with_rho_nu(Eigen::MatrixXd rho, Eigen::VectorXd nu) const {
  return ThetaParams(support_, std::move(rho), std::move(nu), lambda_, r0_);
}

ThetaParams ThetaParams::with_lambda(Eigen::VectorXd lambda) const {
  return ThetaParams(support_, rho_, nu_, std::move(lambda), r0_);
}

ComponentView rho_to_view(const ThetaParams& theta) {
  ComponentView view;
  const auto& support = theta.support();
  for (std::size_t k = 0; k < theta.components(); ++k) view.pi.push_back(theta.weight(k));
  for (std::size_t k = 0; k < support.K(); ++k) {
    std::vector<double> m;
    for (int j : support.faces[k].members()) {
      m.push_back(theta.rho()(static_cast<Eigen::Index>(k), j) / view.pi[k]);
    }
    view.m.push_back(std::move(m));
  }
  return view;
}

Eigen::MatrixXd rho_from_view(const SupportSet& support, const ComponentView& view) {
  Eigen::MatrixXd rho = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(support.K()),
                                              static_cast<Eigen::Index>(support.d));
  for (std::size_t k = 0; k < support.K(); ++k) {
    const auto& members = support.faces[k].members();
    for (std::size_t i = 0; i < members.size(); ++i) {
      rho(static_cast<Eigen::Index>(k), members[i]) = view.pi[k] * view.m[k][i];
    }
  }
  return rho;
}

Eigen::MatrixXd project_rho(const SupportSet& support, const Eigen::MatrixXd& raw) {
  const auto K = static_cast<Eigen::Index>(support.K());
  const auto d = static_cast<Eigen::Index>(support.d);
  if (raw.rows() != K || raw.cols() != d) throw InputError("raw rho must be K x d");
  for (Eigen::Index k = 0; k < K; ++k) {
    const auto& face = support.faces[static_cast<std::size_t>(k)];
    for (Eigen::Index j = 0; j < d; ++j) {
      const bool in = face.contains(static_cast<int>(j));
      if (in != (raw(k, j) > 0.0)) throw InputError("raw rho does not match the face pattern");
    }
  }
  const auto covered = face_coverage(support);
  std::vector<bool> singleton(support.d, false);
  for (int j : support.singletons) singleton[static_cast<std::size_t>(j)] = true;
  Eigen::MatrixXd rho = raw;
  for (Eigen::Index j = 0; j < d; ++j) {
    if (!covered[static_cast<std::size_t>(j)]) {
      if (!singleton[static_cast<std::size_t>(j)]) {
        throw UncoveredCoordinate("coordinate " + std::to_string(j) + " belongs to no face");
      }
      continue;
    }
    rho.col(j) /= static_cast<double>(d) * raw.col(j).sum();
  }
  return rho;
}

PolarDecomposition polar(std::span<const double> v, const std::vector<int>& members) {
  PolarDecomposition p;
  std::size_t next = 0;
  for (std::size_t j = 0; j < v.size(); ++j) {
    if (next < members.size() && members[next] == static_cast<int>(j)) {
      p.r += v[j];
      ++next;
    } else {
      p.noise.push_back(v[j]);
    }
  }
  if (!(p.r > 0.0)) throw DegeneratePolar("face radius is not positive");
  for (int j : members) p.w.push_back(v[static_cast<std::size_t>(j)] / p.r);
  return p;
}

double dirichlet_log_density(std::span<const double> w, std::span<const double> m, double nu) {
  double out = std::lgamma(nu);
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (!(w[i] > 0.0)) throw BoundaryPoint("simplex point has a zero coordinate");
    const double a = nu * m[i];
    out += (a - 1.0) * std::log(w[i]) - std::lgamma(a);
  }
  return out;
}

double dirichlet_density(std::span<const double> w, std::span<const double> m, double nu) {
  return std::exp(dirichlet_log_density(w, m, nu));
}

double noise_log_density(double x, double lambda) {
  if (x < 1.0) return kNegInf;
  return std::log(lambda) - lambda * (x - 1.0);
}

double noise_density(double x, double lambda) {
  if (x < 1.0) return 0.0;
  return lambda * std::exp(-lambda * (x - 1.0));
}

double conditional_log_density(std::span<const double> v, std::size_t k, const ThetaParams& theta) {
  const auto& support = theta.support();
  if (v.size() != theta.d()) throw InputError("observation has the wrong dimension");
  if (k >= theta.components()) throw InputError("component index out of range");
  const auto members = support.members(k);
  const auto p = polar(v, members);
  const double lam = theta.lambda()(static_cast<Eigen::Index>(k));
  double out = -static_cast<double>(members.size() + 1) * std::log(p.r);
  if (k < theta.K()) {
    const auto ki = static_cast<Eigen::Index>(k);
    const double pi = theta.weight(k);
    std::vector<double> m;
    for (int j : members) m.push_back(theta.rho()(ki, j) / pi);
    out += dirichlet_log_density(p.w, m, theta.nu()(ki));
  }
  for (double x : p.noise) out += noise_log_density(x, lam);
  return out;
}

double conditional_density(std::span<const double> v, std::size_t k, const ThetaParams& theta) {
  return std::exp(conditional_log_density(v, k, theta));
}

double log_sum_exp(std::span<const double> x) {
  double hi = kNegInf;
  for (double a : x) hi = std::max(hi, a);
  if (hi == kNegInf) return kNegInf;
  double s = 0.0;
  for (double a : x) s += std::exp(a - hi);
  return hi + std::log(s);
}

double mixture_log_density(std::span<const double> v, const ThetaParams& theta) {
  std::vector<double> terms;
  for (std::size_t k = 0; k < theta.components(); ++k) {
    terms.push_back(std::log(theta.weight(k)) + conditional_log_density(v, k, theta));
  }
  return std::log(theta.r0()) + log_sum_exp(terms);
}

double mixture_density(std::span<const double> v, const ThetaParams& theta) {
  return std::exp(mixture_log_density(v, theta));
}

Eigen::MatrixXd conditional_log_matrix(const RowMatrix& v, const ThetaParams& theta) {
  if (static_cast<std::size_t>(v.cols()) != theta.d()) {
    throw InputError("observations have the wrong dimension");
  }
  const auto& support = theta.support();
  const auto C = theta.components();
  const auto n = v.rows();
  Eigen::MatrixXd out(n, static_cast<Eigen::Index>(C));

  std::vector<std::vector<int>> members(C);
  std::vector<std::vector<double>> means(support.K());
  for (std::size_t k = 0; k < C; ++k) members[k] = support.members(k);
  for (std::size_t k = 0; k < support.K(); ++k) {
    const double pi = theta.weight(k);
    for (int j : members[k]) means[k].push_back(theta.rho()(static_cast<Eigen::Index>(k), j) / pi);
  }

  std::vector<double> w;
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = row_span(v, i);
    double excess = 0.0;
    std::vector<int> below_one;
    for (std::size_t j = 0; j < row.size(); ++j) {
      excess += row[j] - 1.0;
      if (row[j] < 1.0) below_one.push_back(static_cast<int>(j));
    }
    for (std::size_t k = 0; k < C; ++k) {
      const auto& mem = members[k];
      const auto kk = static_cast<Eigen::Index>(k);
      const bool impossible = std::any_of(below_one.begin(), below_one.end(), [&](int j) {
        return !std::binary_search(mem.begin(), mem.end(), j);
      });
      if (impossible) {
        out(i, kk) = kNegInf;
        continue;
      }
      double r = 0.0;
      double face_excess = 0.0;
      for (int j : mem) {
        r += row[static_cast<std::size_t>(j)];
        face_excess += row[static_cast<std::size_t>(j)] - 1.0;
      }
      if (!(r > 0.0)) throw DegeneratePolar("face radius is not positive");
      const double lam = theta.lambda()(kk);
      const auto n_noise = static_cast<double>(row.size() - mem.size());
      double value = -static_cast<double>(mem.size() + 1) * std::log(r) +
                     n_noise * std::log(lam) - lam * (excess - face_excess);
      if (k < support.K()) {
        w.clear();
        for (int j : mem) w.push_back(row[static_cast<std::size_t>(j)] / r);
        value += dirichlet_log_density(w, means[k], theta.nu()(kk));
      }
      out(i, kk) = value;
    }
  }
  return out;
}

}  // namespace exmix
