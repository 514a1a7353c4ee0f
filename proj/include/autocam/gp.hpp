// SPDX-License-Identifier: Apache-2.0
// Copyright Contributors to the autocam Project.

// Gaussian-process surrogate over the normalized (exposure, gain) square with
// a squared-exponential kernel, grid-search hyperparameter selection and a
// maximum-variance acquisition rule.

#pragma once

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Cholesky>
#include <Eigen/Dense>

#include "autocam/error.hpp"
#include "autocam/image.hpp"

namespace autocam {

/// Point in the unit square: x[0] is exposure, x[1] is gain.
using UnitPoint = std::array<double, 2>;

struct AttributePoint {
  CameraAttributes attrs;
  UnitPoint normalized{};
};

inline UnitPoint normalize(const CameraAttributes& a, const AttributeBounds& b) {
  const double gspan = b.g_max - b.g_min;
  return {(a.exposure_ms - b.t_min) / (b.t_max - b.t_min),
          gspan > 0.0 ? (a.gain_db - b.g_min) / gspan : 0.0};
}

inline CameraAttributes denormalize(const UnitPoint& u, const AttributeBounds& b) {
  return {b.t_min + u[0] * (b.t_max - b.t_min), b.g_min + u[1] * (b.g_max - b.g_min)};
}

inline AttributePoint make_point(const CameraAttributes& a, const AttributeBounds& b) {
  return {a, normalize(a, b)};
}

struct GpHyperParams {
  std::array<double, 2> length_scales{0.2, 0.2};
  double signal_var = 1.0;
  double noise_var = 1e-3;

  void validate() const {
    if (!(length_scales[0] > 0.0) || !(length_scales[1] > 0.0) || !(signal_var > 0.0) ||
        !(noise_var >= 1e-8)) {
      throw Error(Errc::InvalidArgument, "GP hyperparameters must be positive with noise_var >= 1e-8");
    }
  }

  friend bool operator==(const GpHyperParams&, const GpHyperParams&) = default;
};

inline double se_kernel(const UnitPoint& a, const UnitPoint& b, const GpHyperParams& h) {
  double r2 = 0.0;
  for (int d = 0; d < 2; ++d) {
    const double z = (a[d] - b[d]) / h.length_scales[d];
    r2 += z * z;
  }
  return h.signal_var * std::exp(-0.5 * r2);
}

struct Posterior {
  double mean = 0.0;
  double var = 0.0;
};

namespace detail {

inline constexpr double kMaxJitter = 1e-4;
inline constexpr double kDuplicateTolerance = 1e-9;

inline void check_training_set(std::span<const UnitPoint> x, std::span<const double> y) {
  if (x.empty()) throw Error(Errc::InvalidArgument, "GP fit needs at least one observation");
  if (x.size() != y.size()) throw Error(Errc::InvalidArgument, "GP inputs and targets differ in length");
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!std::isfinite(y[i])) throw Error(Errc::InvalidArgument, "GP targets must be finite");
    for (std::size_t j = 0; j < i; ++j) {
      if (std::hypot(x[i][0] - x[j][0], x[i][1] - x[j][1]) < kDuplicateTolerance) {
        throw Error(Errc::InvalidArgument, "duplicate GP training points");
      }
    }
  }
}

inline Eigen::MatrixXd gram(std::span<const UnitPoint> x, const GpHyperParams& h) {
  const auto n = static_cast<Eigen::Index>(x.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j <= i; ++j) {
      k(i, j) = k(j, i) = se_kernel(x[i], x[j], h);
    }
  }
  return k;
}

/// Cholesky of K + noise*I, adding diagonal jitter from 1e-10 up to 1e-4
/// when the plain factorization fails.
inline Eigen::LLT<Eigen::MatrixXd> factorize(const Eigen::MatrixXd& k, double noise_var) {
  Eigen::MatrixXd a = k;
  a.diagonal().array() += noise_var;
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  for (double jitter = 1e-10; llt.info() != Eigen::Success; jitter *= 10.0) {
    if (jitter > kMaxJitter) {
      throw Error(Errc::SingularKernel, "kernel matrix is not positive definite after jitter");
    }
    Eigen::MatrixXd b = a;
    b.diagonal().array() += jitter;
    llt.compute(b);
  }
  return llt;
}

struct Standardized {
  std::vector<double> z;
  double mean = 0.0;
  double scale = 1.0;
};

/// Zero mean, unit (population) variance. A constant target keeps scale 1.
inline Standardized standardize(std::span<const double> y) {
  Standardized s;
  for (double v : y) s.mean += v;
  s.mean /= static_cast<double>(y.size());
  double ss = 0.0;
  for (double v : y) ss += (v - s.mean) * (v - s.mean);
  const double sd = std::sqrt(ss / static_cast<double>(y.size()));
  s.scale = sd > 0.0 ? sd : 1.0;
  for (double v : y) s.z.push_back((v - s.mean) / s.scale);
  return s;
}

}  // namespace detail

/// Log marginal likelihood of targets `y` taken as given (no standardization).
inline double log_marginal_likelihood_raw(std::span<const UnitPoint> x, std::span<const double> y,
                                          const GpHyperParams& h) {
  h.validate();
  detail::check_training_set(x, y);
  const auto llt = detail::factorize(detail::gram(x, h), h.noise_var);
  const Eigen::Map<const Eigen::VectorXd> yv(y.data(), static_cast<Eigen::Index>(y.size()));
  const Eigen::VectorXd alpha = llt.solve(yv);
  const Eigen::MatrixXd l = llt.matrixL();
  const double log_det_half = l.diagonal().array().log().sum();
  const double n = static_cast<double>(y.size());
  return -0.5 * yv.dot(alpha) - log_det_half - 0.5 * n * std::log(2.0 * std::numbers::pi);
}

/// Log marginal likelihood of the standardized targets.
inline double log_marginal_likelihood(std::span<const UnitPoint> x, std::span<const double> y,
                                      const GpHyperParams& h) {
  detail::check_training_set(x, y);
  const auto s = detail::standardize(y);
  return log_marginal_likelihood_raw(x, s.z, h);
}

class GpModel {
 public:
  static GpModel fit(std::vector<UnitPoint> x, std::span<const double> y, const GpHyperParams& h) {
    h.validate();
    detail::check_training_set(x, y);
    GpModel m;
    m.hyper_ = h;
    m.x_ = std::move(x);
    m.y_.assign(y.begin(), y.end());
    auto s = detail::standardize(y);
    m.y_mean_ = s.mean;
    m.y_scale_ = s.scale;
    m.llt_ = detail::factorize(detail::gram(m.x_, h), h.noise_var);
    const Eigen::Map<const Eigen::VectorXd> z(s.z.data(), static_cast<Eigen::Index>(s.z.size()));
    m.alpha_ = m.llt_.solve(z);
    return m;
  }

  /// Latent posterior in standardized units; variance excludes observation noise.
  Posterior posterior_standardized(const UnitPoint& q) const {
    const auto n = static_cast<Eigen::Index>(x_.size());
    Eigen::VectorXd ks(n);
    for (Eigen::Index i = 0; i < n; ++i) ks(i) = se_kernel(x_[i], q, hyper_);
    const Eigen::VectorXd v = llt_.matrixL().solve(ks);
    return {ks.dot(alpha_), std::max(0.0, hyper_.signal_var - v.squaredNorm())};
  }

  /// Latent posterior in score units.
  Posterior posterior(const UnitPoint& q) const {
    const auto p = posterior_standardized(q);
    return {y_mean_ + y_scale_ * p.mean, y_scale_ * y_scale_ * p.var};
  }

  const std::vector<UnitPoint>& train_x() const noexcept { return x_; }
  const std::vector<double>& train_y() const noexcept { return y_; }
  const GpHyperParams& hyper() const noexcept { return hyper_; }
  double y_mean() const noexcept { return y_mean_; }
  double y_scale() const noexcept { return y_scale_; }

 private:
  GpModel() = default;

  GpHyperParams hyper_;
  std::vector<UnitPoint> x_;
  std::vector<double> y_;
  double y_mean_ = 0.0;
  double y_scale_ = 1.0;
  Eigen::LLT<Eigen::MatrixXd> llt_;
  Eigen::VectorXd alpha_;
};

inline constexpr std::array<double, 5> kLengthScaleGrid{0.05, 0.1, 0.2, 0.4, 0.8};
inline constexpr std::array<double, 3> kSignalVarGrid{0.5, 1.0, 2.0};
inline constexpr std::array<double, 3> kNoiseVarGrid{1e-4, 1e-3, 1e-2};

/// Grid search over length scales (exposure outermost), signal and noise
/// variance, maximizing the log marginal likelihood. The first maximum in
/// loop order wins; constant targets return the first grid point.
inline GpHyperParams select_hyperparams(std::span<const UnitPoint> x, std::span<const double> y) {
  if (x.size() < 3) throw Error(Errc::InvalidArgument, "hyperparameter selection needs >= 3 observations");
  detail::check_training_set(x, y);
  const GpHyperParams first{{kLengthScaleGrid[0], kLengthScaleGrid[0]}, kSignalVarGrid[0], kNoiseVarGrid[0]};
  const auto s = detail::standardize(y);
  bool constant = true;
  for (double v : s.z) constant = constant && v == 0.0;
  if (constant) return first;

  GpHyperParams best = first;
  double best_lml = -std::numeric_limits<double>::infinity();
  for (double lt : kLengthScaleGrid) {
    for (double lg : kLengthScaleGrid) {
      for (double sv : kSignalVarGrid) {
        for (double nv : kNoiseVarGrid) {
          const GpHyperParams h{{lt, lg}, sv, nv};
          double lml;
          try {
            lml = log_marginal_likelihood_raw(x, s.z, h);
          } catch (const Error& e) {
            if (e.code() != Errc::SingularKernel) throw;
            continue;
          }
          if (lml > best_lml) {
            best_lml = lml;
            best = h;
          }
        }
      }
    }
  }
  return best;
}

/// Uniform candidate grid, exposure-major: index = i_t * n_gain + i_g.
struct CandidateGrid {
  int n_exposure = 40;
  int n_gain = 25;
  std::vector<AttributePoint> points;

  std::size_t index(int i_t, int i_g) const { return static_cast<std::size_t>(i_t) * n_gain + i_g; }
};

inline CandidateGrid make_candidate_grid(const AttributeBounds& b, int n_exposure = 40, int n_gain = 25) {
  if (n_exposure < 1 || n_gain < 1) throw Error(Errc::InvalidArgument, "candidate grid needs >= 1 point per axis");
  b.validate();
  CandidateGrid g{n_exposure, n_gain, {}};
  g.points.reserve(static_cast<std::size_t>(n_exposure) * n_gain);
  for (int i = 0; i < n_exposure; ++i) {
    const double u = n_exposure == 1 ? 0.0 : static_cast<double>(i) / (n_exposure - 1);
    for (int j = 0; j < n_gain; ++j) {
      const double v = n_gain == 1 ? 0.0 : static_cast<double>(j) / (n_gain - 1);
      const UnitPoint p{u, v};
      g.points.push_back({denormalize(p, b), p});
    }
  }
  return g;
}

/// Index of the candidate with the largest latent posterior variance. With no
/// model every candidate has the prior variance and the first one is chosen.
/// Ties resolve to the lowest index, i.e. lexicographically by (exposure, gain).
inline std::size_t acquire_max_variance(const GpModel* model, std::span<const AttributePoint> candidates,
                                        std::span<const std::uint8_t> excluded = {}) {
  if (candidates.empty()) throw Error(Errc::InvalidArgument, "candidate grid is empty");
  std::optional<std::size_t> best;
  double best_var = -1.0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    if (!excluded.empty() && excluded[i]) continue;
    const double v = model ? model->posterior_standardized(candidates[i].normalized).var : 1.0;
    if (v > best_var) {
      best_var = v;
      best = i;
    }
  }
  if (!best) throw Error(Errc::InvalidArgument, "every candidate is excluded");
  return *best;
}

}  // namespace autocam
