#include "mist/mine.hpp"

#include <algorithm>

#include <cmath>
#include <stdexcept>

#include "mist/optim.hpp"

namespace mist {

MineBatch make_mine_batch(const Tensor& y, const Tensor& z, Rng& permutation_rng) {
  if (y.rank() != 2) throw ShapeError("mine batch: y must be [b, d], got " + shape_str(y.shape()));
  return make_mine_batch(y, z, permutation_rng.permutation(y.rows()));
}

MineBatch make_mine_batch(const Tensor& y, const Tensor& z, std::vector<std::size_t> permutation) {
  if (y.rank() != 2 || z.rank() != 2 || y.rows() != z.rows() || y.rows() == 0)
    throw ShapeError("mine batch: shape mismatch " + shape_str(y.shape()) + " vs " + shape_str(z.shape()));
  if (permutation.size() != y.rows()) throw std::invalid_argument("mine batch: permutation length != batch size");
  std::vector<bool> seen(permutation.size(), false);
  for (std::size_t p : permutation) {
    if (p >= seen.size() || seen[p]) throw std::invalid_argument("mine batch: not a permutation");
    seen[p] = true;
  }
  Tensor shuffled = gather_rows(y, permutation);
  return MineBatch{y, z, std::move(shuffled), std::move(permutation)};
}

MineEstimate dv_from_statistics(const Tensor& joint, const Tensor& marginal) {
  if (joint.numel() == 0 || marginal.numel() == 0) throw ShapeError("dv bound: empty statistics");
  // mean(J) - log(mean(exp(M))), both sides shifted by the constant m = max(M):
  // overflow-safe, and exactly zero when every statistic is the same value.
  const auto mv = marginal.values();
  const double m = *std::max_element(mv.begin(), mv.end());
  Tensor raw = sub(mean(add_scalar(joint, -m)), log(mean(exp(add_scalar(marginal, -m)))));
  return MineEstimate{raw, relu(raw)};
}

MineEstimate dv_lower_bound(const StatisticsNetwork& statistics, const MineBatch& batch) {
  return dv_from_statistics(statistics(batch.y, batch.z), statistics(batch.y_shuffled, batch.z));
}

std::size_t sample_content_index(std::size_t length, Rng& rng) {
  if (length == 0) throw std::invalid_argument("sample_content_vector: empty content sequence");
  return rng.index(length);
}

Tensor sample_content_vector(const Tensor& y_seq, Rng& rng) {
  if (y_seq.rank() != 2) throw ShapeError("sample_content_vector: expected [L, d_c], got " + shape_str(y_seq.shape()));
  const std::size_t u = sample_content_index(y_seq.rows(), rng);
  return gather_rows(y_seq, std::vector<std::size_t>{u});
}

Tensor EmaDenominator::surrogate(const Tensor& joint, const Tensor& marginal) {
  Tensor mexp = mean(exp(marginal));
  ema_ = initialized_ ? decay_ * ema_ + (1.0 - decay_) * mexp.item() : mexp.item();
  initialized_ = true;
  return sub(mean(joint), scale(mexp, 1.0 / ema_));
}

double estimate_gaussian_mi(double rho, std::size_t steps, Rng& rng, const GaussianMiOptions& opts) {
  if (!(std::fabs(rho) < 1.0)) throw std::invalid_argument("estimate_gaussian_mi: |rho| must be < 1");
  const double s = std::sqrt(1.0 - rho * rho);
  auto draw = [&](std::size_t n) {
    std::vector<double> y(n), z(n);
    for (std::size_t i = 0; i < n; ++i) {
      y[i] = rng.normal();
      z[i] = rho * y[i] + s * rng.normal();
    }
    return std::pair{Tensor::from({n, 1}, std::move(y)), Tensor::from({n, 1}, std::move(z))};
  };

  StatisticsNetwork net(1, 1, opts.hidden, rng);
  Optimizer opt(net.params(), opts.learning_rate);
  for (std::size_t step = 0; step < steps; ++step) {
    auto [y, z] = draw(opts.batch_size);
    MineEstimate est = dv_lower_bound(net, make_mine_batch(y, z, rng));
    opt.zero_grad();
    backward(est.raw);
    opt.ascend();
  }
  auto [y, z] = draw(opts.eval_samples);
  return dv_lower_bound(net, make_mine_batch(y, z, rng)).raw_value();
}

}  // namespace mist
