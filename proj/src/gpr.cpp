#include "biasmap/gpr.hpp"

#include <cmath>
#include <random>
#include <stdexcept>

namespace biasmap {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

void validate(const Hyperparams& h) {
  if (!(h.lengthscale > 0.0) || !(h.signal_variance > 0.0) ||
      !(h.noise_variance > 0.0))
    throw std::invalid_argument("Hyperparams: all values must be strictly positive");
}

// Averages training points closer than 1e-9 into one.
void deduplicate(std::vector<Vec2>& x, std::vector<Vec2>& y) {
  std::vector<Vec2> xs, ys;
  std::vector<int> counts;
  for (std::size_t i = 0; i < x.size(); ++i) {
    bool merged = false;
    for (std::size_t j = 0; j < xs.size(); ++j) {
      if ((xs[j] - x[i]).norm() < 1e-9) {
        ys[j] += y[i];
        ++counts[j];
        merged = true;
        break;
      }
    }
    if (!merged) {
      xs.push_back(x[i]);
      ys.push_back(y[i]);
      counts.push_back(1);
    }
  }
  for (std::size_t j = 0; j < xs.size(); ++j) ys[j] /= counts[j];
  x = std::move(xs);
  y = std::move(ys);
}

}  // namespace

double rbf(const Vec2& x1, const Vec2& x2, const Hyperparams& h) {
  validate(h);
  const double d2 = (x1 - x2).squaredNorm();
  return h.signal_variance * std::exp(-d2 / (2.0 * h.lengthscale * h.lengthscale));
}

GpModel GpModel::fit(const std::vector<Vec2>& inputs,
                     const std::vector<Vec2>& targets, const Hyperparams& h) {
  validate(h);
  if (inputs.empty()) throw std::invalid_argument("GpModel::fit: need >= 1 point");
  if (inputs.size() != targets.size())
    throw std::invalid_argument("GpModel::fit: inputs/targets size mismatch");

  std::vector<Vec2> x = inputs, y = targets;
  deduplicate(x, y);
  const int n = static_cast<int>(x.size());

  GpModel m(h);
  m.X_.resize(n, 2);
  m.Y_.resize(n, 2);
  for (int i = 0; i < n; ++i) {
    m.X_.row(i) = x[i].transpose();
    m.Y_.row(i) = y[i].transpose();
  }

  Eigen::MatrixXd K(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double v = rbf(x[i], x[j], h);
      K(i, j) = v;
      K(j, i) = v;
    }
  }

  double jitter = 0.0;
  for (;;) {
    Eigen::MatrixXd Kn = K;
    Kn.diagonal().array() += h.noise_variance + jitter;
    Eigen::LLT<Eigen::MatrixXd> llt(Kn);
    if (llt.info() == Eigen::Success) {
      m.L_ = llt.matrixL();
      m.alpha_ = llt.solve(m.Y_);
      m.jitter_ = jitter;
      break;
    }
    jitter = jitter == 0.0 ? 1e-12 * h.signal_variance : jitter * 10.0;
    if (jitter > 1e-6 * h.signal_variance)
      throw std::runtime_error("GpModel::fit: factorization failed after jitter escalation");
  }

  double logdet = 0.0;
  for (int i = 0; i < n; ++i) logdet += std::log(m.L_(i, i));
  m.lml_ = -0.5 * (m.Y_.col(0).dot(m.alpha_.col(0)) + m.Y_.col(1).dot(m.alpha_.col(1))) -
           2.0 * logdet - n * kLog2Pi;
  return m;
}

void GpModel::predict(const std::vector<Vec2>& queries, std::vector<Vec2>* means,
                      std::vector<double>* variances) const {
  if (means) {
    means->assign(queries.size(), Vec2::Zero());
  }
  if (variances) {
    variances->assign(queries.size(), h_.signal_variance);
  }
  if (size() == 0) return;

  for (std::size_t q = 0; q < queries.size(); ++q) {
    const Eigen::VectorXd ks = kernel_vector(queries[q]);
    if (means) {
      (*means)[q] = Vec2(ks.dot(alpha_.col(0)), ks.dot(alpha_.col(1)));
    }
    if (variances) {
      const Eigen::VectorXd v = whiten(ks);
      (*variances)[q] = std::max(h_.signal_variance - v.squaredNorm(), 1e-15);
    }
  }
}

std::vector<Vec2> GpModel::train_inputs() const {
  std::vector<Vec2> out(size());
  for (int i = 0; i < size(); ++i) out[i] = X_.row(i).transpose();
  return out;
}

std::vector<Vec2> GpModel::train_targets() const {
  std::vector<Vec2> out(size());
  for (int i = 0; i < size(); ++i) out[i] = Y_.row(i).transpose();
  return out;
}

Eigen::VectorXd GpModel::kernel_vector(const Vec2& q) const {
  Eigen::VectorXd ks(size());
  for (int i = 0; i < size(); ++i)
    ks(i) = rbf(Vec2(X_.row(i).transpose()), q, h_);
  return ks;
}

Eigen::VectorXd GpModel::whiten(const Eigen::VectorXd& v) const {
  return L_.triangularView<Eigen::Lower>().solve(v);
}

namespace {

using Vec3 = Eigen::Vector3d;

Vec3 to_log(const Hyperparams& h) {
  return {std::log(h.lengthscale), std::log(h.signal_variance),
          std::log(h.noise_variance)};
}

Hyperparams from_log(const Vec3& t) {
  return {std::exp(t(0)), std::exp(t(1)), std::exp(t(2))};
}

struct LmlObjective {
  const std::vector<Vec2>& x;
  const std::vector<Vec2>& y;
  Vec3 lo, hi;

  // Negative log marginal likelihood with a quadratic out-of-bounds penalty.
  double operator()(const Vec3& theta) const {
    Vec3 c = theta.cwiseMax(lo).cwiseMin(hi);
    const double penalty = 1e3 * (theta - c).squaredNorm();
    try {
      return -GpModel::fit(x, y, from_log(c)).log_marginal_likelihood() + penalty;
    } catch (const std::exception&) {
      return 1e100;
    }
  }
};

// Standard Nelder-Mead on R^3.
Vec3 nelder_mead(const LmlObjective& f, const Vec3& start, double scale,
                 int max_iters, double* best_value) {
  constexpr int dim = 3;
  std::vector<Vec3> pts(dim + 1, start);
  for (int i = 0; i < dim; ++i) pts[i + 1](i) += scale;
  std::vector<double> vals(dim + 1);
  for (int i = 0; i <= dim; ++i) vals[i] = f(pts[i]);

  auto order = [&] {
    for (int i = 0; i <= dim; ++i)
      for (int j = i + 1; j <= dim; ++j)
        if (vals[j] < vals[i]) {
          std::swap(vals[i], vals[j]);
          std::swap(pts[i], pts[j]);
        }
  };

  for (int it = 0; it < max_iters; ++it) {
    order();
    if (std::abs(vals[dim] - vals[0]) < 1e-9 * (1.0 + std::abs(vals[0]))) break;
    Vec3 centroid = Vec3::Zero();
    for (int i = 0; i < dim; ++i) centroid += pts[i];
    centroid /= dim;

    const Vec3 refl = centroid + (centroid - pts[dim]);
    const double frefl = f(refl);
    if (frefl < vals[0]) {
      const Vec3 expd = centroid + 2.0 * (centroid - pts[dim]);
      const double fexpd = f(expd);
      if (fexpd < frefl) {
        pts[dim] = expd;
        vals[dim] = fexpd;
      } else {
        pts[dim] = refl;
        vals[dim] = frefl;
      }
    } else if (frefl < vals[dim - 1]) {
      pts[dim] = refl;
      vals[dim] = frefl;
    } else {
      const Vec3 contr = centroid + 0.5 * (pts[dim] - centroid);
      const double fcontr = f(contr);
      if (fcontr < vals[dim]) {
        pts[dim] = contr;
        vals[dim] = fcontr;
      } else {
        for (int i = 1; i <= dim; ++i) {
          pts[i] = pts[0] + 0.5 * (pts[i] - pts[0]);
          vals[i] = f(pts[i]);
        }
      }
    }
  }
  order();
  *best_value = vals[0];
  return pts[0];
}

}  // namespace

HyperOptResult optimize_hyperparams(const std::vector<Vec2>& inputs,
                                    const std::vector<Vec2>& targets,
                                    const Hyperparams& init,
                                    const HyperBounds& bounds, std::uint64_t seed) {
  validate(init);
  if (inputs.size() < 3)
    throw std::invalid_argument("optimize_hyperparams: need >= 3 training points");

  const Vec3 lo = to_log(bounds.lo);
  const Vec3 hi = to_log(bounds.hi);
  LmlObjective obj{inputs, targets, lo, hi};

  const Vec3 init_theta = to_log(init).cwiseMax(lo).cwiseMin(hi);
  const double init_neg = obj(init_theta);

  std::vector<Vec3> starts{init_theta};
  std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int s = 0; s < 4; ++s) {
    Vec3 t;
    for (int i = 0; i < 3; ++i) t(i) = lo(i) + unit(rng) * (hi(i) - lo(i));
    starts.push_back(t);
  }

  double best = init_neg;
  Vec3 best_theta = init_theta;
  for (const Vec3& s : starts) {
    double v = 0.0;
    const Vec3 t = nelder_mead(obj, s, 0.3, 200, &v);
    if (v < best) {
      best = v;
      best_theta = t;
    }
  }

  HyperOptResult res;
  res.improved = best < init_neg - 1e-12;
  res.params = res.improved ? from_log(best_theta.cwiseMax(lo).cwiseMin(hi)) : init;
  res.log_likelihood = -(res.improved ? best : init_neg);
  return res;
}

}  // namespace biasmap
