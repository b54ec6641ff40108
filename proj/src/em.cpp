#include "exmix/em.hpp"

#include "exmix/errors.hpp"
#include "exmix/random.hpp"

#include <boost/math/special_functions/digamma.hpp>
#include <ceres/ceres.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <string>

namespace exmix {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double digamma(double x) { return boost::math::digamma(x); }

double elapsed_ms(std::chrono::steady_clock::time_point since) {
  return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - since)
      .count();
}

// Posterior-weighted sufficient statistics of the Dirichlet block: mass[k] =
// sum_i gamma_ik and log_w[k][m] = sum_i gamma_ik log w_ik(m).
struct DirichletStats {
  std::vector<double> mass;
  std::vector<std::vector<double>> log_w;
};

DirichletStats dirichlet_stats(const RowMatrix& v, const PosteriorMatrix& gamma,
                               const SupportSet& support) {
  DirichletStats s;
  s.mass.assign(support.K(), 0.0);
  s.log_w.resize(support.K());
  for (std::size_t k = 0; k < support.K(); ++k) {
    const auto& mem = support.faces[k].members();
    s.log_w[k].assign(mem.size(), 0.0);
    const auto kk = static_cast<Eigen::Index>(k);
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const double g = gamma.gamma(i, kk);
      if (g == 0.0) continue;
      double r = 0.0;
      for (int j : mem) r += v(i, j);
      s.mass[k] += g;
      for (std::size_t m = 0; m < mem.size(); ++m) {
        s.log_w[k][m] += g * std::log(v(i, mem[m]) / r);
      }
    }
  }
  return s;
}

double q1_from_stats(const DirichletStats& s, const SupportSet& support,
                     const Eigen::MatrixXd& rho, const Eigen::VectorXd& nu) {
  double q = 0.0;
  for (std::size_t k = 0; k < support.K(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const auto& mem = support.faces[k].members();
    const double pi = rho.row(kk).sum();
    const double G = s.mass[k];
    q += G * (std::log(pi) + std::lgamma(nu(kk)));
    for (std::size_t m = 0; m < mem.size(); ++m) {
      const double a = nu(kk) * rho(kk, mem[m]) / pi;
      q += -G * std::lgamma(a) + (a - 1.0) * s.log_w[k][m];
    }
  }
  return q;
}

// Unconstrained coordinates for the (rho, nu) block. Each covered column j
// with free entries F_j carries logits z with the first one pinned at zero:
// rho(f, j) = (1/d - frozen mass of column j) * softmax(z)_f. Each unfrozen
// concentration is nu = nu_max * sigmoid(eta).
class RhoNuParametrization {
 public:
  RhoNuParametrization(const SupportSet& support, const std::vector<bool>& frozen, double nu_max)
      : support_(support), frozen_(frozen), nu_max_(nu_max) {
    const auto d = support.d;
    std::vector<std::vector<int>> faces_of(d);
    for (std::size_t k = 0; k < support.K(); ++k) {
      for (int j : support.faces[k].members()) faces_of[static_cast<std::size_t>(j)].push_back(static_cast<int>(k));
    }
    for (std::size_t j = 0; j < d; ++j) {
      Column col;
      col.j = static_cast<int>(j);
      for (int k : faces_of[j]) {
        if (frozen_[static_cast<std::size_t>(k)]) {
          col.frozen.push_back(k);
        } else {
          col.free.push_back(k);
        }
      }
      if (col.free.empty()) continue;
      col.offset = n_params_;
      n_params_ += static_cast<int>(col.free.size()) - 1;
      columns_.push_back(std::move(col));
    }
    for (std::size_t k = 0; k < support.K(); ++k) {
      if (frozen_[k]) continue;
      nu_index_.emplace_back(static_cast<int>(k), n_params_++);
    }
  }

  int size() const { return n_params_; }

  // Writes the coordinates of (rho, nu). Column entries are strictly positive
  // for a valid theta, so the logits exist; nu is clamped below nu_max.
  std::vector<double> encode(const Eigen::MatrixXd& rho, const Eigen::VectorXd& nu) const {
    std::vector<double> x(static_cast<std::size_t>(n_params_), 0.0);
    for (const auto& col : columns_) {
      const double base = std::log(rho(col.free[0], col.j));
      for (std::size_t f = 1; f < col.free.size(); ++f) {
        x[static_cast<std::size_t>(col.offset) + f - 1] = std::log(rho(col.free[f], col.j)) - base;
      }
    }
    for (const auto& [k, idx] : nu_index_) {
      const double p = std::clamp(nu(k) / nu_max_, 1e-300, 1.0 - 1e-12);
      x[static_cast<std::size_t>(idx)] = std::log(p) - std::log1p(-p);
    }
    return x;
  }

  // Fills the free entries of rho and nu from x; frozen entries are left as
  // they are in the inputs.
  void decode(const double* x, Eigen::MatrixXd& rho, Eigen::VectorXd& nu) const {
    const double target = 1.0 / static_cast<double>(support_.d);
    for (const auto& col : columns_) {
      double rest = target;
      for (int k : col.frozen) rest -= rho(k, col.j);
      double hi = 0.0;
      for (std::size_t f = 1; f < col.free.size(); ++f) hi = std::max(hi, x[col.offset + static_cast<int>(f) - 1]);
      double total = std::exp(-hi);
      for (std::size_t f = 1; f < col.free.size(); ++f) total += std::exp(x[col.offset + static_cast<int>(f) - 1] - hi);
      rho(col.free[0], col.j) = rest * std::exp(-hi) / total;
      for (std::size_t f = 1; f < col.free.size(); ++f) {
        rho(col.free[f], col.j) = rest * std::exp(x[col.offset + static_cast<int>(f) - 1] - hi) / total;
      }
    }
    for (const auto& [k, idx] : nu_index_) {
      const double eta = x[idx];
      nu(k) = nu_max_ / (1.0 + std::exp(-eta));
    }
  }

  // Chain rule from (dQ/drho, dQ/dnu) to dQ/dx.
  void pullback(const Eigen::MatrixXd& rho, const Eigen::VectorXd& nu,
                const Eigen::MatrixXd& grad_rho, const Eigen::VectorXd& grad_nu,
                double* grad_x) const {
    for (const auto& col : columns_) {
      double rest = 0.0;
      double mean = 0.0;
      for (int k : col.free) rest += rho(k, col.j);
      for (int k : col.free) mean += grad_rho(k, col.j) * rho(k, col.j) / rest;
      for (std::size_t f = 1; f < col.free.size(); ++f) {
        const int k = col.free[f];
        grad_x[col.offset + static_cast<int>(f) - 1] = rho(k, col.j) * (grad_rho(k, col.j) - mean);
      }
    }
    for (const auto& [k, idx] : nu_index_) {
      grad_x[idx] = grad_nu(k) * nu(k) * (1.0 - nu(k) / nu_max_);
    }
  }

 private:
  struct Column {
    int j = 0;
    int offset = 0;
    std::vector<int> free;
    std::vector<int> frozen;
  };

  const SupportSet& support_;
  std::vector<bool> frozen_;
  double nu_max_;
  int n_params_ = 0;
  std::vector<Column> columns_;
  std::vector<std::pair<int, int>> nu_index_;
};

class NegativeQ1 final : public ceres::FirstOrderFunction {
 public:
  NegativeQ1(const DirichletStats& stats, const SupportSet& support,
             const RhoNuParametrization& param, Eigen::MatrixXd rho, Eigen::VectorXd nu,
             double scale)
      : stats_(stats), support_(support), param_(param), rho_(std::move(rho)),
        nu_(std::move(nu)), scale_(scale) {}

  bool Evaluate(const double* x, double* cost, double* gradient) const override {
    Eigen::MatrixXd rho = rho_;
    Eigen::VectorXd nu = nu_;
    param_.decode(x, rho, nu);
    Eigen::MatrixXd grad_rho = Eigen::MatrixXd::Zero(rho.rows(), rho.cols());
    Eigen::VectorXd grad_nu = Eigen::VectorXd::Zero(nu.size());
    double q = 0.0;
    for (std::size_t k = 0; k < support_.K(); ++k) {
      const auto kk = static_cast<Eigen::Index>(k);
      const auto& mem = support_.faces[k].members();
      const double pi = rho.row(kk).sum();
      const double G = stats_.mass[k];
      const double conc = nu(kk);
      if (!(pi > 0.0) || !(conc > 0.0)) return false;
      q += G * (std::log(pi) + std::lgamma(conc));
      // d Q1 / d m_j for the face's mean coordinates.
      std::vector<double> grad_m(mem.size());
      double weighted = 0.0;
      double grad_conc = G * digamma(conc);
      for (std::size_t m = 0; m < mem.size(); ++m) {
        const double mean = rho(kk, mem[m]) / pi;
        const double a = conc * mean;
        if (!(a > 0.0)) return false;
        q += -G * std::lgamma(a) + (a - 1.0) * stats_.log_w[k][m];
        const double per_a = -G * digamma(a) + stats_.log_w[k][m];
        grad_m[m] = conc * per_a;
        weighted += mean * grad_m[m];
        grad_conc += mean * per_a;
      }
      for (std::size_t m = 0; m < mem.size(); ++m) {
        grad_rho(kk, mem[m]) = G / pi + (grad_m[m] - weighted) / pi;
      }
      grad_nu(kk) = grad_conc;
    }
    if (!std::isfinite(q)) return false;
    *cost = -q / scale_;
    if (gradient != nullptr) {
      param_.pullback(rho, nu, grad_rho, grad_nu, gradient);
      for (int p = 0; p < param_.size(); ++p) {
        gradient[p] = -gradient[p] / scale_;
        if (!std::isfinite(gradient[p])) return false;
      }
    }
    return true;
  }

  int NumParameters() const override { return param_.size(); }

 private:
  const DirichletStats& stats_;
  const SupportSet& support_;
  const RhoNuParametrization& param_;
  Eigen::MatrixXd rho_;
  Eigen::VectorXd nu_;
  double scale_;
};

std::vector<bool> frozen_or_none(const std::vector<bool>& frozen, std::size_t n) {
  if (frozen.empty()) return std::vector<bool>(n, false);
  if (frozen.size() != n) throw InputError("frozen mask has the wrong length");
  return frozen;
}

}  // namespace

PosteriorMatrix e_step(const RowMatrix& v, const ThetaParams& theta) {
  const Eigen::MatrixXd logp = conditional_log_matrix(v, theta);
  const auto C = logp.cols();
  std::vector<double> log_pi(static_cast<std::size_t>(C));
  for (Eigen::Index k = 0; k < C; ++k) log_pi[static_cast<std::size_t>(k)] = std::log(theta.weight(static_cast<std::size_t>(k)));
  PosteriorMatrix out;
  out.gamma.resize(logp.rows(), C);
  std::vector<double> terms(static_cast<std::size_t>(C));
  for (Eigen::Index i = 0; i < logp.rows(); ++i) {
    for (Eigen::Index k = 0; k < C; ++k) terms[static_cast<std::size_t>(k)] = log_pi[static_cast<std::size_t>(k)] + logp(i, k);
    const double lse = log_sum_exp(terms);
    if (lse == kNegInf) {
      throw AllComponentsZero("row " + std::to_string(i) + " has zero density under every component");
    }
    double total = 0.0;
    for (Eigen::Index k = 0; k < C; ++k) {
      const double g = std::exp(terms[static_cast<std::size_t>(k)] - lse);
      out.gamma(i, k) = g;
      total += g;
    }
    out.gamma.row(i) /= total;
  }
  return out;
}

Eigen::VectorXd m_step_lambda(const RowMatrix& v, const PosteriorMatrix& gamma,
                              const SupportSet& support, const Eigen::VectorXd& previous,
                              const std::vector<bool>& frozen) {
  const auto C = support.components();
  if (previous.size() != static_cast<Eigen::Index>(C)) throw InputError("lambda has the wrong length");
  const auto mask = frozen_or_none(frozen, C);
  Eigen::VectorXd out = previous;
  std::vector<double> excess(static_cast<std::size_t>(v.rows()), 0.0);
  for (Eigen::Index i = 0; i < v.rows(); ++i) excess[static_cast<std::size_t>(i)] = v.row(i).sum() - static_cast<double>(v.cols());
  for (std::size_t k = 0; k < C; ++k) {
    const auto mem = support.members(k);
    const auto n_noise = support.d - mem.size();
    if (n_noise == 0 || mask[k]) continue;
    const auto kk = static_cast<Eigen::Index>(k);
    double mass = 0.0;
    double weighted_excess = 0.0;
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const double g = gamma.gamma(i, kk);
      if (g == 0.0) continue;
      double face_excess = 0.0;
      for (int j : mem) face_excess += v(i, j) - 1.0;
      mass += g;
      weighted_excess += g * (excess[static_cast<std::size_t>(i)] - face_excess);
    }
    if (!(mass > 0.0)) {
      throw DeadComponent("component " + std::to_string(k) + " has no posterior mass");
    }
    if (!(weighted_excess > 0.0)) {
      throw DeadComponent("component " + std::to_string(k) + " has no noise excess");
    }
    out(kk) = static_cast<double>(n_noise) * mass / weighted_excess;
  }
  return out;
}

double q1_value(const RowMatrix& v, const PosteriorMatrix& gamma, const SupportSet& support,
                const Eigen::MatrixXd& rho, const Eigen::VectorXd& nu) {
  return q1_from_stats(dirichlet_stats(v, gamma, support), support, rho, nu);
}

RhoNuStep m_step_rho_nu(const RowMatrix& v, const PosteriorMatrix& gamma,
                        const ThetaParams& theta, const FitConfig& config,
                        const std::vector<bool>& frozen) {
  const auto& support = theta.support();
  const auto mask = frozen_or_none(frozen, support.components());
  const std::vector<bool> face_mask(mask.begin(), mask.begin() + static_cast<std::ptrdiff_t>(support.K()));
  const auto stats = dirichlet_stats(v, gamma, support);

  RhoNuStep step;
  step.rho = theta.rho();
  step.nu = theta.nu();
  step.q1_before = q1_from_stats(stats, support, step.rho, step.nu);
  step.q1_after = step.q1_before;
  if (!std::isfinite(step.q1_before)) throw OptimizerFailure("Q1 is not finite at the current point");
  if (support.K() == 0) return step;

  const RhoNuParametrization param(support, face_mask, config.nu_max);
  if (param.size() == 0) return step;
  const double scale = std::max(1.0, static_cast<double>(v.rows()));

  ceres::GradientProblemSolver::Options options;
  options.line_search_direction_type = ceres::LBFGS;
  options.max_num_iterations = config.optimizer_iterations;
  options.function_tolerance = 1e-13;
  options.gradient_tolerance = 1e-11;
  options.parameter_tolerance = 1e-13;
  options.logging_type = ceres::SILENT;

  // Restarting from the last accepted point resets the L-BFGS memory.
  for (int attempt = 0; attempt < config.optimizer_restarts; ++attempt) {
    auto x = param.encode(step.rho, step.nu);
    ceres::GradientProblem problem(
        new NegativeQ1(stats, support, param, step.rho, step.nu, scale));
    ceres::GradientProblemSolver::Summary summary;
    ceres::Solve(options, problem, x.data(), &summary);

    Eigen::MatrixXd rho = step.rho;
    Eigen::VectorXd nu = step.nu;
    param.decode(x.data(), rho, nu);
    const double q = q1_from_stats(stats, support, rho, nu);
    if (!std::isfinite(q) || q <= step.q1_after) break;
    const double gain = q - step.q1_after;
    step.rho = std::move(rho);
    step.nu = std::move(nu);
    step.q1_after = q;
    step.improved = true;
    if (gain <= 1e-12 * std::max(1.0, std::abs(q))) break;
  }
  return step;
}

QSplit q_split(const RowMatrix& v, const PosteriorMatrix& gamma, const ThetaParams& theta) {
  const auto& support = theta.support();
  QSplit out;
  for (std::size_t k = 0; k < theta.components(); ++k) {
    const auto kk = static_cast<Eigen::Index>(k);
    const auto mem = support.members(k);
    const double lam = theta.lambda()(kk);
    const double log_pi = std::log(theta.weight(k));
    std::vector<double> mean;
    if (k < support.K()) {
      for (int j : mem) mean.push_back(theta.rho()(kk, j) / theta.weight(k));
    }
    for (Eigen::Index i = 0; i < v.rows(); ++i) {
      const double g = gamma.gamma(i, kk);
      if (g == 0.0) continue;
      const auto p = polar(row_span(v, i), mem);
      double noise = 0.0;
      for (double x : p.noise) noise += noise_log_density(x, lam);
      out.q2 += g * noise;
      if (k < support.K()) {
        out.q1 += g * (log_pi + dirichlet_log_density(p.w, mean, theta.nu()(kk)));
        out.c += g * (-static_cast<double>(mem.size() + 1) * std::log(p.r));
      } else {
        out.c += g * (log_pi - 2.0 * std::log(p.r));
      }
    }
  }
  return out;
}

double q_value(const RowMatrix& v, const PosteriorMatrix& gamma, const ThetaParams& theta) {
  const Eigen::MatrixXd logp = conditional_log_matrix(v, theta);
  double q = 0.0;
  for (Eigen::Index k = 0; k < logp.cols(); ++k) {
    const double log_pi = std::log(theta.weight(static_cast<std::size_t>(k)));
    for (Eigen::Index i = 0; i < logp.rows(); ++i) {
      const double g = gamma.gamma(i, k);
      if (g != 0.0) q += g * (log_pi + logp(i, k));
    }
  }
  return q;
}

double posterior_entropy(const PosteriorMatrix& gamma) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < gamma.gamma.rows(); ++i) {
    for (Eigen::Index k = 0; k < gamma.gamma.cols(); ++k) {
      const double g = gamma.gamma(i, k);
      if (g > 0.0) h -= g * std::log(g);
    }
  }
  return h;
}

ThetaParams initial_theta(const SupportSet& support, double r0, const FitConfig& config) {
  Rng rng(derive_seed(config.seed, "init"));
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  Eigen::MatrixXd raw = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(support.K()),
                                              static_cast<Eigen::Index>(support.d));
  for (std::size_t k = 0; k < support.K(); ++k) {
    for (int j : support.faces[k].members()) {
      double u = 0.0;
      while (u <= 0.0) u = unif(rng);
      raw(static_cast<Eigen::Index>(k), j) = u;
    }
  }
  const double nu0 = std::min(config.nu_init, config.nu_max);
  return ThetaParams(support, project_rho(support, raw),
                     Eigen::VectorXd::Constant(static_cast<Eigen::Index>(support.K()), nu0),
                     Eigen::VectorXd::Constant(static_cast<Eigen::Index>(support.components()),
                                               config.lambda_init),
                     r0);
}

FitResult fit(const RowMatrix& v, const SupportSet& support, double r0, const FitConfig& config) {
  if (config.max_iter < 1) throw InputError("max_iter must be at least 1");
  if (config.tol && !(*config.tol > 0.0)) throw InputError("tol must be positive");
  if (!(config.nu_init > 0.0) || !(config.lambda_init > 0.0)) {
    throw InputError("initial nu and lambda must be positive");
  }
  if (static_cast<std::size_t>(v.cols()) != support.d) throw InputError("data dimension differs from the support");
  const double tol = config.tol.value_or(1e-6 * static_cast<double>(v.rows()));

  FitResult result{initial_theta(support, r0, config), {}, {}, {}, 0, false, {}, {}};
  if (static_cast<std::size_t>(v.rows()) < support.components()) {
    result.warnings.push_back("fewer extreme points than mixture components");
  }
  ThetaParams& theta = result.theta;
  const auto C = support.components();
  std::vector<bool> ever_frozen(C, false);
  if (config.on_iterate) config.on_iterate(0, theta);

  auto t0 = std::chrono::steady_clock::now();
  PosteriorMatrix gamma = e_step(v, theta);
  double e_ms = elapsed_ms(t0);

  for (int it = 1; it <= config.max_iter; ++it) {
    std::vector<bool> frozen(C, false);
    for (std::size_t k = 0; k < C; ++k) {
      if (gamma.gamma.col(static_cast<Eigen::Index>(k)).sum() < config.dead_mass) {
        frozen[k] = true;
        ever_frozen[k] = true;
      }
    }

    IterationRecord rec;
    rec.iteration = it;
    rec.e_step_ms = e_ms;
    t0 = std::chrono::steady_clock::now();
    theta = theta.with_lambda(m_step_lambda(v, gamma, support, theta.lambda(), frozen));
    rec.lambda_ms = elapsed_ms(t0);
    t0 = std::chrono::steady_clock::now();
    auto step = m_step_rho_nu(v, gamma, theta, config, frozen);
    theta = theta.with_rho_nu(std::move(step.rho), std::move(step.nu));
    rec.rho_nu_ms = elapsed_ms(t0);
    if (config.on_iterate) config.on_iterate(it, theta);

    rec.q = q_value(v, gamma, theta);
    rec.bound = rec.q + posterior_entropy(gamma);
    result.trace.push_back(rec);
    result.q_trace.push_back(rec.bound);
    result.iterations = it;
    if (it > 1 && rec.bound < result.q_trace[result.q_trace.size() - 2] + tol) {
      result.converged = true;
      break;
    }
    t0 = std::chrono::steady_clock::now();
    gamma = e_step(v, theta);
    e_ms = elapsed_ms(t0);
  }
  result.gamma = e_step(v, theta);
  for (std::size_t k = 0; k < C; ++k) {
    if (ever_frozen[k]) result.frozen_components.push_back(k);
  }
  if (!result.frozen_components.empty()) {
    result.warnings.push_back(std::to_string(result.frozen_components.size()) +
                              " component(s) lost all posterior mass and were frozen");
  }
  return result;
}

}  // namespace exmix
