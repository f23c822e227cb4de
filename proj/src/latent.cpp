#include "hgs/latent.hpp"

#include <algorithm>
#include <cmath>
#include <random>
#include <string>

#include "hgs/errors.hpp"

namespace hgs::latent {
namespace {

void apply_activation(Matrix& a, Activation act) {
  if (act == Activation::kRelu) a = a.cwiseMax(0.0);
}

Matrix pre_activation(const Matrix& z, const LatentModel& m) {
  Matrix a = z * m.w1;
  a.rowwise() += m.b1.transpose();
  return a;
}

void check_shapes(const Matrix& z, const LatentModel& m) {
  if (z.cols() != m.w1.rows() || m.b1.size() != m.w1.cols() || m.w2.rows() != m.w1.cols() ||
      m.b2.size() != m.w2.cols()) {
    throw ShapeError("latent width " + std::to_string(z.cols()) + " does not match decoder " +
                     std::to_string(m.w1.rows()) + "x" + std::to_string(m.w1.cols()) + "x" +
                     std::to_string(m.w2.cols()));
  }
}

}  // namespace

void LatentModel::round_to_float() {
  auto round = [](auto& m) { m = m.template cast<float>().template cast<double>(); };
  round(w1);
  round(b1);
  round(w2);
  round(b2);
}

bool LatentModel::operator==(const LatentModel& o) const {
  auto same = [](const auto& a, const auto& b) {
    return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
  };
  return activation == o.activation && same(w1, o.w1) && same(b1, o.b1) && same(w2, o.w2) &&
         same(b2, o.b2);
}

Matrix PcaResult::project(const Matrix& x) const {
  return (x.rowwise() - mean.transpose()) * components;
}

Matrix PcaResult::reconstruct(const Matrix& z) const {
  Matrix x = z * components.transpose();
  x.rowwise() += mean.transpose();
  return x;
}

PcaResult pca_fit(const Matrix& x, int q) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (n < 2) throw InsufficientDataError("PCA needs at least 2 rows, got " + std::to_string(n));
  if (q < 1 || q > std::min(n, d)) {
    throw ShapeError("component count " + std::to_string(q) + " outside [1, min(n, d)]");
  }
  PcaResult out;
  out.mean = x.colwise().mean().transpose();
  const Matrix centered = x.rowwise() - out.mean.transpose();
  Eigen::BDCSVD<Matrix> svd(centered, Eigen::ComputeThinV);
  out.singular_values = svd.singularValues();
  out.components = svd.matrixV().leftCols(q);
  return out;
}

std::vector<double> energy_spectrum(const Matrix& x) {
  const PcaResult pca = pca_fit(x, 1);
  std::vector<double> energy(static_cast<std::size_t>(x.cols()), 0.0);
  double total = 0.0;
  for (Eigen::Index i = 0; i < pca.singular_values.size(); ++i) {
    energy[static_cast<std::size_t>(i)] = pca.singular_values[i] * pca.singular_values[i];
    total += energy[static_cast<std::size_t>(i)];
  }
  if (total > 0.0) {
    for (double& e : energy) e /= total;
  } else if (!energy.empty()) {
    energy[0] = 1.0;  // constant data: all (zero) energy sits in one direction
  }
  return energy;
}

Matrix decode_latent(const Matrix& z, const LatentModel& model) {
  check_shapes(z, model);
  Matrix h = pre_activation(z, model);
  apply_activation(h, model.activation);
  Matrix y = h * model.w2;
  y.rowwise() += model.b2.transpose();
  return y;
}

double latent_loss(const Matrix& x, const Matrix& z, const LatentModel& model) {
  return 0.5 * (decode_latent(z, model) - x).squaredNorm() / static_cast<double>(x.rows());
}

LossGradient loss_and_gradient(const Matrix& x, const Matrix& z, const LatentModel& model) {
  check_shapes(z, model);
  if (x.rows() != z.rows() || x.cols() != model.w2.cols()) {
    throw ShapeError("data is " + std::to_string(x.rows()) + "x" + std::to_string(x.cols()) +
                     ", latents have " + std::to_string(z.rows()) + " rows");
  }
  const double inv_n = 1.0 / static_cast<double>(x.rows());
  const Matrix a = pre_activation(z, model);
  Matrix h = a;
  apply_activation(h, model.activation);
  Matrix r = h * model.w2;
  r.rowwise() += model.b2.transpose();
  r -= x;

  LossGradient g;
  g.loss = 0.5 * r.squaredNorm() * inv_n;
  const Matrix dy = r * inv_n;
  g.d_w2 = h.transpose() * dy;
  g.d_b2 = dy.colwise().sum().transpose();
  Matrix da = dy * model.w2.transpose();
  if (model.activation == Activation::kRelu) {
    da = da.cwiseProduct((a.array() > 0.0).cast<double>().matrix());
  }
  g.d_w1 = z.transpose() * da;
  g.d_b1 = da.colwise().sum().transpose();
  g.d_latents = da * model.w1.transpose();
  return g;
}

LatentFit init_latent_model(const Matrix& x, int k, const FitConfig& config) {
  const auto n = x.rows();
  const auto d = x.cols();
  if (n < 2) throw InsufficientDataError("latent fit needs at least 2 rows");
  if (k < 1 || k > n) throw ShapeError("latent width " + std::to_string(k) + " outside [1, n]");
  if (config.hidden < k) {
    throw ShapeError("hidden width " + std::to_string(config.hidden) +
                     " is smaller than latent width " + std::to_string(k));
  }
  const int q = static_cast<int>(std::min<Eigen::Index>(k, d));
  const PcaResult pca = pca_fit(x, q);
  const Matrix proj = pca.project(x);

  LatentFit fit;
  LatentModel& m = fit.model;
  m.activation = config.activation;
  m.w1 = Matrix::Zero(k, config.hidden);
  m.b1 = Vector::Zero(config.hidden);
  m.w2 = Matrix::Zero(config.hidden, d);
  m.b2 = pca.mean;
  fit.latents = Matrix::Zero(n, k);

  const double sqrt_n = std::sqrt(static_cast<double>(n));
  const double top = pca.singular_values.size() > 0 ? pca.singular_values[0] / sqrt_n : 0.0;
  for (int j = 0; j < k; ++j) {
    double s = 1.0;
    if (j < q) {
      const double spread = pca.singular_values[j] / sqrt_n;
      if (spread > 1e-12 * top && spread > 0.0) s = spread;
      fit.latents.col(j) = proj.col(j) / s;
    }
    // Unit j carries latent j shifted into the positive range of the ReLU.
    const double offset = 1.0 - fit.latents.col(j).minCoeff();
    m.w1(j, j) = 1.0;
    m.b1[j] = offset;
    if (j < q) {
      m.w2.row(j) = s * pca.components.col(j).transpose();
      m.b2 -= offset * s * pca.components.col(j);
    }
  }

  std::mt19937_64 rng(config.seed);
  std::normal_distribution<double> noise(0.0, 1e-2);
  for (int h = k; h < config.hidden; ++h) {
    for (int j = 0; j < k; ++j) m.w1(j, h) = noise(rng);
  }
  fit.loss = latent_loss(x, fit.latents, m);
  return fit;
}

LatentFit train_latent_model(const Matrix& x, LatentFit fit, const FitConfig& config) {
  const double n = static_cast<double>(x.rows());
  const double step = config.step_size;
  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    const LossGradient g = loss_and_gradient(x, fit.latents, fit.model);
    if (!std::isfinite(g.loss)) {
      throw DivergenceError("loss became non-finite at epoch " + std::to_string(epoch) +
                            "; try a smaller step size than " + std::to_string(step));
    }
    fit.model.w1 -= step * g.d_w1;
    fit.model.b1 -= step * g.d_b1;
    fit.model.w2 -= step * g.d_w2;
    fit.model.b2 -= step * g.d_b2;
    // n * dL/dZ is the gradient of each row's own half squared error.
    fit.latents -= (step * n) * g.d_latents;
  }
  fit.loss = latent_loss(x, fit.latents, fit.model);
  if (!std::isfinite(fit.loss)) {
    throw DivergenceError("final loss is non-finite; try a smaller step size");
  }
  return fit;
}

LatentFit fit_latent_decoder(const Matrix& x, int k, const FitConfig& config) {
  return train_latent_model(x, init_latent_model(x, k, config), config);
}

Matrix refine_latents(const Matrix& x, const LatentModel& model, Matrix z, int steps,
                      double step_size) {
  check_shapes(z, model);
  for (int s = 0; s < steps; ++s) {
    const Matrix a = pre_activation(z, model);
    Matrix h = a;
    apply_activation(h, model.activation);
    Matrix r = h * model.w2;
    r.rowwise() += model.b2.transpose();
    r -= x;
    Matrix da = r * model.w2.transpose();
    if (model.activation == Activation::kRelu) {
      da = da.cwiseProduct((a.array() > 0.0).cast<double>().matrix());
    }
    z -= step_size * (da * model.w1.transpose());
    if (!z.allFinite()) throw DivergenceError("latent refinement diverged");
  }
  return z;
}

}  // namespace hgs::latent
