#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "hvaq/error.hpp"
#include "hvaq/regressors/feature_matrix.hpp"

namespace hvaq {

struct SVRConfig {
  double c = 1.0;
  double epsilon = 0.1;
  std::optional<double> gamma;  // nullopt: 1 / (p * variance of standardized features)
  double tolerance = 1e-3;      // maximal KKT violation at termination
  std::size_t max_iterations = 10'000'000;
  bool standardize = true;
};

/// Per-column affine standardization fitted on training data.
struct Standardizer {
  std::vector<double> mean;
  std::vector<double> scale;  // 1 for constant columns

  static Standardizer fit(const FeatureMatrix& x) {
    Standardizer s;
    const std::size_t n = x.rows(), p = x.cols();
    s.mean.assign(p, 0.0);
    s.scale.assign(p, 1.0);
    for (std::size_t c = 0; c < p; ++c) {
      double m = 0.0;
      for (std::size_t r = 0; r < n; ++r) m += x(r, c);
      m /= static_cast<double>(n);
      double v = 0.0;
      for (std::size_t r = 0; r < n; ++r) v += (x(r, c) - m) * (x(r, c) - m);
      v /= static_cast<double>(n);
      s.mean[c] = m;
      s.scale[c] = v > 0.0 ? std::sqrt(v) : 1.0;
    }
    return s;
  }

  static Standardizer identity(std::size_t p) { return {std::vector<double>(p, 0.0), std::vector<double>(p, 1.0)}; }

  std::vector<double> apply(std::span<const double> row) const {
    std::vector<double> out(row.size());
    for (std::size_t c = 0; c < row.size(); ++c) out[c] = (row[c] - mean[c]) / scale[c];
    return out;
  }
};

inline double rbf_kernel(std::span<const double> a, std::span<const double> b, double gamma) {
  double d2 = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) d2 += (a[i] - b[i]) * (a[i] - b[i]);
  return std::exp(-gamma * d2);
}

struct SVRModel {
  std::vector<std::string> columns;
  Standardizer scaler;
  std::vector<std::vector<double>> support_vectors;  // standardized
  std::vector<double> dual_coef;                     // alpha_i - alpha_i^*, each in [-C, C]
  double bias = 0.0;
  double gamma = 1.0;
  double c = 1.0;
  double epsilon = 0.1;
  double objective = 0.0;  // dual objective at the solution (minimization form)
  std::size_t iterations = 0;

  double decision(std::span<const double> scaled) const {
    double f = bias;
    for (std::size_t i = 0; i < support_vectors.size(); ++i) f += dual_coef[i] * rbf_kernel(support_vectors[i], scaled, gamma);
    return f;
  }

  double predict_row(std::span<const double> x) const { return decision(scaler.apply(x)); }
};

/// Full solution of the epsilon-SVR dual over all training rows, kept for
/// KKT checks and tests.
struct SVRSolution {
  SVRModel model;
  std::vector<double> coef;  // per training row, including zeros
  std::vector<std::vector<double>> scaled_rows;
};

namespace detail {

// epsilon-SVR dual over 2n variables b = (alpha, alpha*):
//   min 1/2 b'Qb + p'b   s.t. y'b = 0, 0 <= b <= C
// with y = (+1.., -1..), p = (eps - z, eps + z), Q_st = y_s y_t K(s mod n, t mod n).
// Solved by SMO with second-order working-set selection.
class SmoSolver {
 public:
  SmoSolver(std::vector<double> kernel, std::span<const double> z, double c, double eps)
      : n_(z.size()), l_(2 * z.size()), k_(std::move(kernel)), c_(c) {
    y_.resize(l_);
    p_.resize(l_);
    for (std::size_t i = 0; i < n_; ++i) {
      y_[i] = 1;
      y_[i + n_] = -1;
      p_[i] = eps - z[i];
      p_[i + n_] = eps + z[i];
    }
    alpha_.assign(l_, 0.0);
    grad_ = p_;
  }

  double q(std::size_t s, std::size_t t) const { return y_[s] * y_[t] * k_[(s % n_) * n_ + (t % n_)]; }

  std::size_t solve(double tol, std::size_t max_iter) {
    constexpr double tau = 1e-12;
    std::size_t iter = 0;
    for (;;) {
      // i: maximal violating index in I_up.
      double gmax = -std::numeric_limits<double>::infinity();
      std::ptrdiff_t i = -1;
      for (std::size_t t = 0; t < l_; ++t) {
        if (y_[t] == 1) {
          if (alpha_[t] < c_ && -grad_[t] >= gmax) { gmax = -grad_[t]; i = static_cast<std::ptrdiff_t>(t); }
        } else {
          if (alpha_[t] > 0 && grad_[t] >= gmax) { gmax = grad_[t]; i = static_cast<std::ptrdiff_t>(t); }
        }
      }
      double gmax2 = -std::numeric_limits<double>::infinity();
      std::ptrdiff_t j = -1;
      double best = std::numeric_limits<double>::infinity();
      if (i >= 0) {
        const auto ui = static_cast<std::size_t>(i);
        for (std::size_t t = 0; t < l_; ++t) {
          if (y_[t] == 1) {
            if (alpha_[t] > 0) {
              const double diff = gmax + grad_[t];
              gmax2 = std::max(gmax2, grad_[t]);
              if (diff > 0) {
                double quad = q(ui, ui) + q(t, t) - 2.0 * y_[ui] * q(ui, t);
                const double obj = -(diff * diff) / (quad > 0 ? quad : tau);
                if (obj <= best) { best = obj; j = static_cast<std::ptrdiff_t>(t); }
              }
            }
          } else {
            if (alpha_[t] < c_) {
              const double diff = gmax - grad_[t];
              gmax2 = std::max(gmax2, -grad_[t]);
              if (diff > 0) {
                double quad = q(ui, ui) + q(t, t) + 2.0 * y_[ui] * q(ui, t);
                const double obj = -(diff * diff) / (quad > 0 ? quad : tau);
                if (obj <= best) { best = obj; j = static_cast<std::ptrdiff_t>(t); }
              }
            }
          }
        }
      }
      violation_ = gmax + gmax2;
      if (i < 0 || j < 0 || violation_ < tol) break;
      if (iter >= max_iter) {
        throw ConvergenceError("SVR solver did not converge in " + std::to_string(max_iter) +
                               " iterations (KKT violation " + std::to_string(violation_) + ", tolerance " +
                               std::to_string(tol) + ", " + std::to_string(n_) + " samples)");
      }
      ++iter;
      update(static_cast<std::size_t>(i), static_cast<std::size_t>(j), tau);
    }
    return iter;
  }

  /// rho such that f(x) = sum coef K - rho.
  double rho() const {
    double ub = std::numeric_limits<double>::infinity(), lb = -ub, sum_free = 0.0;
    std::size_t n_free = 0;
    for (std::size_t t = 0; t < l_; ++t) {
      const double yg = y_[t] * grad_[t];
      if (alpha_[t] >= c_) {
        if (y_[t] == -1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else if (alpha_[t] <= 0) {
        if (y_[t] == 1) ub = std::min(ub, yg); else lb = std::max(lb, yg);
      } else {
        ++n_free;
        sum_free += yg;
      }
    }
    return n_free > 0 ? sum_free / static_cast<double>(n_free) : (ub + lb) / 2.0;
  }

  double objective() const {
    double v = 0.0;
    for (std::size_t t = 0; t < l_; ++t) v += alpha_[t] * (grad_[t] + p_[t]);
    return v / 2.0;
  }

  std::vector<double> coefficients() const {
    std::vector<double> c(n_);
    for (std::size_t i = 0; i < n_; ++i) c[i] = alpha_[i] - alpha_[i + n_];
    return c;
  }

  double violation() const { return violation_; }

 private:
  void update(std::size_t i, std::size_t j, double tau) {
    const double old_i = alpha_[i], old_j = alpha_[j];
    double& ai = alpha_[i];
    double& aj = alpha_[j];
    if (y_[i] != y_[j]) {
      double quad = q(i, i) + q(j, j) + 2.0 * q(i, j);
      if (quad <= 0) quad = tau;
      const double delta = (-grad_[i] - grad_[j]) / quad;
      const double diff = ai - aj;
      ai += delta;
      aj += delta;
      if (diff > 0) {
        if (aj < 0) { aj = 0; ai = diff; }
      } else {
        if (ai < 0) { ai = 0; aj = -diff; }
      }
      if (diff > 0) {
        if (ai > c_) { ai = c_; aj = c_ - diff; }
      } else {
        if (aj > c_) { aj = c_; ai = c_ + diff; }
      }
    } else {
      double quad = q(i, i) + q(j, j) - 2.0 * q(i, j);
      if (quad <= 0) quad = tau;
      const double delta = (grad_[i] - grad_[j]) / quad;
      const double sum = ai + aj;
      ai -= delta;
      aj += delta;
      if (sum > c_) {
        if (ai > c_) { ai = c_; aj = sum - c_; }
      } else {
        if (aj < 0) { aj = 0; ai = sum; }
      }
      if (sum > c_) {
        if (aj > c_) { aj = c_; ai = sum - c_; }
      } else {
        if (ai < 0) { ai = 0; aj = sum; }
      }
    }
    const double di = ai - old_i, dj = aj - old_j;
    for (std::size_t t = 0; t < l_; ++t) grad_[t] += q(i, t) * di + q(j, t) * dj;
  }

  std::size_t n_, l_;
  std::vector<double> k_;
  double c_;
  std::vector<int> y_;
  std::vector<double> p_, alpha_, grad_;
  double violation_ = 0.0;
};

}  // namespace detail

inline SVRSolution fit_svr_full(const FeatureMatrix& x, std::span<const double> z, const SVRConfig& cfg = {}) {
  if (x.rows() < 2) throw SchemaError("fit_svr: need at least 2 samples");
  if (x.rows() != z.size()) throw SchemaError("fit_svr: feature rows and targets differ in length");
  if (!(cfg.c > 0.0) || !(cfg.epsilon >= 0.0) || !(cfg.tolerance > 0.0)) throw ConfigError("fit_svr: invalid C/epsilon/tolerance");
  const std::size_t n = x.rows(), p = x.cols();
  SVRSolution sol;
  auto& m = sol.model;
  m.columns = x.columns();
  m.c = cfg.c;
  m.epsilon = cfg.epsilon;
  m.scaler = cfg.standardize ? Standardizer::fit(x) : Standardizer::identity(p);
  sol.scaled_rows.reserve(n);
  for (std::size_t r = 0; r < n; ++r) sol.scaled_rows.push_back(m.scaler.apply(x.row(r)));
  if (cfg.gamma) {
    if (!(*cfg.gamma > 0.0)) throw ConfigError("fit_svr: gamma must be > 0");
    m.gamma = *cfg.gamma;
  } else {
    double mean = 0.0, sq = 0.0;
    for (const auto& row : sol.scaled_rows)
      for (double v : row) mean += v;
    mean /= static_cast<double>(n * p);
    for (const auto& row : sol.scaled_rows)
      for (double v : row) sq += (v - mean) * (v - mean);
    const double var = sq / static_cast<double>(n * p);
    m.gamma = var > 0.0 ? 1.0 / (static_cast<double>(p) * var) : 1.0;
  }
  std::vector<double> kernel(n * n);
  for (std::size_t a = 0; a < n; ++a) {
    kernel[a * n + a] = 1.0;
    for (std::size_t b = a + 1; b < n; ++b) {
      const double k = rbf_kernel(sol.scaled_rows[a], sol.scaled_rows[b], m.gamma);
      kernel[a * n + b] = k;
      kernel[b * n + a] = k;
    }
  }
  detail::SmoSolver smo(std::move(kernel), z, cfg.c, cfg.epsilon);
  m.iterations = smo.solve(cfg.tolerance, cfg.max_iterations);
  m.bias = -smo.rho();
  m.objective = smo.objective();
  sol.coef = smo.coefficients();
  for (std::size_t i = 0; i < n; ++i) {
    if (sol.coef[i] != 0.0) {
      m.support_vectors.push_back(sol.scaled_rows[i]);
      m.dual_coef.push_back(sol.coef[i]);
    }
  }
  return sol;
}

inline SVRModel fit_svr(const FeatureMatrix& x, std::span<const double> z, const SVRConfig& cfg = {}) {
  return fit_svr_full(x, z, cfg).model;
}

/// Largest KKT residual over the training rows: for each row the decision
/// residual r = z - f must satisfy |r| <= eps when coef = 0, r = +-eps when
/// 0 < |coef| < C, and |r| >= eps (matching sign) when |coef| = C.
inline double svr_kkt_violation(const SVRSolution& sol, std::span<const double> z) {
  const auto& m = sol.model;
  double worst = 0.0;
  for (std::size_t i = 0; i < z.size(); ++i) {
    const double r = z[i] - m.decision(sol.scaled_rows[i]);
    const double a = sol.coef[i];
    double v = 0.0;
    if (a == 0.0) {
      v = std::max(0.0, std::abs(r) - m.epsilon);
    } else if (std::abs(a) < m.c) {
      v = std::abs(r - (a > 0 ? m.epsilon : -m.epsilon));
    } else {
      v = a > 0 ? std::max(0.0, m.epsilon - r) : std::max(0.0, r + m.epsilon);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

}  // namespace hvaq
