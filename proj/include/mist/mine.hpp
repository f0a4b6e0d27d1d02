#pragma once

// Donsker-Varadhan lower bound on mutual information with within-batch
// permutation marginals:
//
//   I(Y;Z) >= mean_i T(y_i, z_i) - log mean_i exp T(y_perm(i), z_i)
//
// The log-mean-exp is evaluated through the shift-stable log_sum_exp op.

#include <cstdint>
#include <vector>

#include "mist/models.hpp"
#include "mist/rng.hpp"
#include "mist/tensor.hpp"

namespace mist {

struct MineBatch {
  Tensor y;           // [b, d_y] joint content vectors
  Tensor z;           // [b, d_z]
  Tensor y_shuffled;  // [b, d_y] rows of y in permuted order
  std::vector<std::size_t> permutation;

  std::size_t size() const { return permutation.size(); }
};

/// Pairs each z_i with y_i and with y_perm(i); one Fisher-Yates permutation.
/// Fixed points are kept as drawn.
MineBatch make_mine_batch(const Tensor& y, const Tensor& z, Rng& permutation_rng);
MineBatch make_mine_batch(const Tensor& y, const Tensor& z, std::vector<std::size_t> permutation);

struct MineEstimate {
  Tensor raw;      // scalar, differentiable
  Tensor clipped;  // max(0, raw), differentiable (zero gradient when raw <= 0)

  double raw_value() const { return raw.item(); }
  double clipped_value() const { return clipped.item(); }
};

/// Bound from precomputed statistics: mean(joint) - (lse(marginal) - log b).
MineEstimate dv_from_statistics(const Tensor& joint, const Tensor& marginal);
MineEstimate dv_lower_bound(const StatisticsNetwork& statistics, const MineBatch& batch);

/// Index of the content vector used for the MI term; exactly one draw.
std::size_t sample_content_index(std::size_t length, Rng& rng);
/// Row `sample_content_index(L)` of an [L, d_c] sequence, as [1, d_c].
Tensor sample_content_vector(const Tensor& y_seq, Rng& rng);

/// Biased-gradient correction for the statistics network: replaces the
/// log-mean-exp gradient by its moving-average-normalized form. The returned
/// surrogate has the same gradient direction MINE's bias-corrected update uses;
/// its value is not an MI estimate.
class EmaDenominator {
 public:
  explicit EmaDenominator(double decay = 0.99) : decay_(decay) {}
  Tensor surrogate(const Tensor& joint, const Tensor& marginal);
  double value() const { return ema_; }

 private:
  double decay_;
  double ema_ = 0.0;
  bool initialized_ = false;
};

struct GaussianMiOptions {
  std::size_t batch_size = 512;
  std::size_t hidden = 64;
  double learning_rate = 1e-3;
  std::size_t eval_samples = 20000;
};

/// Trains a fresh statistics network on correlated unit Gaussians (y, z) with
/// correlation rho and returns the bound evaluated on a fresh large sample, in nats.
double estimate_gaussian_mi(double rho, std::size_t steps, Rng& rng, const GaussianMiOptions& opts = {});

}  // namespace mist
