#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

namespace hgs::latent {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

enum class Activation : std::uint8_t { kRelu = 0, kIdentity = 1 };

/// One-hidden-layer decoder: activation(Z W1 + b1) W2 + b2, row per primitive.
struct LatentModel {
  Activation activation = Activation::kRelu;
  Matrix w1;  // k x hidden
  Vector b1;  // hidden
  Matrix w2;  // hidden x d_out
  Vector b2;  // d_out

  int latent_dim() const { return static_cast<int>(w1.rows()); }
  int hidden() const { return static_cast<int>(w1.cols()); }
  int output_dim() const { return static_cast<int>(w2.cols()); }

  /// Rounds every weight to the nearest float, as stored in the bitstream.
  void round_to_float();
  bool operator==(const LatentModel& other) const;
};

struct PcaResult {
  Vector mean;                   // d
  Matrix components;             // d x q, orthonormal columns
  Vector singular_values;        // min(n, d), non-increasing

  /// Z = (X - mean) U1
  Matrix project(const Matrix& x) const;
  /// X_hat = Z U1^T + mean
  Matrix reconstruct(const Matrix& z) const;
};

/// SVD of the centered data; keeps the q leading right singular vectors.
PcaResult pca_fit(const Matrix& x, int q);

/// Squared singular values normalized to sum to one, padded to length d.
std::vector<double> energy_spectrum(const Matrix& x);

struct FitConfig {
  int hidden = 50;
  Activation activation = Activation::kRelu;
  int epochs = 2000;
  double step_size = 1e-2;
  std::uint64_t seed = 0;
};

struct LatentFit {
  Matrix latents;  // n x k
  LatentModel model;
  double loss = 0.0;  // (1/2n) ||decode(Z) - X||_F^2
};

/// Warm start: PCA latents (whitened) and a decoder that reproduces the PCA
/// reconstruction exactly. Spare hidden units get small seeded input weights.
LatentFit init_latent_model(const Matrix& x, int k, const FitConfig& config);

/// Full-batch gradient descent on latents and decoder jointly, starting from
/// `start`. Latent rows step along the gradient of their own squared error.
LatentFit train_latent_model(const Matrix& x, LatentFit start, const FitConfig& config);

/// init_latent_model followed by train_latent_model.
LatentFit fit_latent_decoder(const Matrix& x, int k, const FitConfig& config);

/// Gradient steps on the latents only, decoder held fixed.
Matrix refine_latents(const Matrix& x, const LatentModel& model, Matrix z, int steps,
                      double step_size);

Matrix decode_latent(const Matrix& z, const LatentModel& model);

struct LossGradient {
  double loss = 0.0;
  Matrix d_latents;
  Matrix d_w1;
  Vector d_b1;
  Matrix d_w2;
  Vector d_b2;
};

/// Loss (1/2n) ||decode(Z) - X||_F^2 and its exact gradient.
LossGradient loss_and_gradient(const Matrix& x, const Matrix& z, const LatentModel& model);

double latent_loss(const Matrix& x, const Matrix& z, const LatentModel& model);

}  // namespace hgs::latent
