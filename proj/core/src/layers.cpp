#include "fgnn/layers.hpp"

#include <Eigen/Dense>

#include "fgnn/errors.hpp"

namespace fgnn {

ad::Tensor embed_lookup(ad::Tape& tape, const EmbeddingTable& table,
                        std::span<const std::size_t> items) {
  return ad::gather_rows(tape, table.weights, items);
}

ad::Tensor gru_cell(ad::Tape& tape, const GruCellParams& params,
                    const ad::Tensor& input, const ad::Tensor& hidden) {
  const std::size_t h = params.hidden_dim();
  if (params.input_weights.rows() != 3 * h ||
      params.hidden_weights.rows() != 3 * h ||
      params.input_bias.size() != 3 * h || params.hidden_bias.size() != 3 * h) {
    throw DimensionError("gru_cell: inconsistent parameter shapes " +
                         ad::to_string(params.input_weights.shape()) + ", " +
                         ad::to_string(params.hidden_weights.shape()));
  }
  if (input.rank() != 1 || input.size() != params.input_dim()) {
    throw DimensionError("gru_cell: input " + ad::to_string(input.shape()) +
                         " does not match input size " +
                         std::to_string(params.input_dim()));
  }
  if (hidden.rank() != 1 || hidden.size() != h) {
    throw DimensionError("gru_cell: hidden " + ad::to_string(hidden.shape()) +
                         " does not match hidden size " + std::to_string(h));
  }

  const auto gx = ad::add(tape, ad::matmul(tape, params.input_weights, input),
                          params.input_bias);
  const auto u_rz = ad::slice_rows(tape, params.hidden_weights, 0, 2 * h);
  const auto u_c = ad::slice_rows(tape, params.hidden_weights, 2 * h, 3 * h);
  const auto b_rz = ad::slice_rows(tape, params.hidden_bias, 0, 2 * h);
  const auto b_c = ad::slice_rows(tape, params.hidden_bias, 2 * h, 3 * h);

  const auto gh_rz = ad::add(tape, ad::matmul(tape, u_rz, hidden), b_rz);
  const auto rz = ad::sigmoid(
      tape, ad::add(tape, ad::slice_rows(tape, gx, 0, 2 * h), gh_rz));
  const auto reset = ad::slice_rows(tape, rz, 0, h);
  const auto update = ad::slice_rows(tape, rz, h, 2 * h);

  const auto gated = ad::mul(tape, reset, hidden);
  const auto candidate = ad::tanh(
      tape, ad::add(tape, ad::slice_rows(tape, gx, 2 * h, 3 * h),
                    ad::add(tape, ad::matmul(tape, u_c, gated), b_c)));

  // (1 - z) * h + z * c  ==  h + z * (c - h)
  return ad::add(tape, hidden,
                 ad::mul(tape, update, ad::sub(tape, candidate, hidden)));
}

ad::Tensor init_gaussian(const ad::Shape& shape, double mean, double stddev,
                         Rng& rng) {
  for (const auto d : shape) {
    if (d == 0) throw UsageError("init_gaussian: zero-sized dimension");
  }
  std::vector<double> values(ad::shape_size(shape));
  if (stddev == 0.0) {
    std::fill(values.begin(), values.end(), mean);
  } else {
    std::normal_distribution<double> dist(mean, stddev);
    for (auto& v : values) v = dist(rng);
  }
  return ad::Tensor::from(shape, std::move(values));
}

ad::Tensor init_orthogonal(std::size_t rows, std::size_t cols, Rng& rng) {
  if (rows == 0 || cols == 0) {
    throw UsageError("init_orthogonal: zero-sized dimension");
  }
  // QR of a tall Gaussian matrix; Q columns are orthonormal. Signs follow the
  // diagonal of R so the result is uniformly distributed.
  const auto tall = static_cast<Eigen::Index>(std::max(rows, cols));
  const auto narrow = static_cast<Eigen::Index>(std::min(rows, cols));
  std::normal_distribution<double> dist(0.0, 1.0);
  Eigen::MatrixXd a(tall, narrow);
  for (Eigen::Index j = 0; j < narrow; ++j) {
    for (Eigen::Index i = 0; i < tall; ++i) a(i, j) = dist(rng);
  }
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(tall, narrow);
  const Eigen::MatrixXd r = qr.matrixQR().topRows(narrow).triangularView<Eigen::Upper>();
  for (Eigen::Index j = 0; j < narrow; ++j) {
    if (r(j, j) < 0.0) q.col(j) *= -1.0;
  }
  std::vector<double> values(rows * cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      values[i * cols + j] = rows >= cols
                                 ? q(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j))
                                 : q(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(i));
    }
  }
  return ad::Tensor::from({rows, cols}, std::move(values));
}

GruCellParams make_gru_cell(std::size_t input_dim, std::size_t hidden_dim,
                            double stddev, Rng& rng) {
  GruCellParams p;
  p.input_weights = init_gaussian({3 * hidden_dim, input_dim}, 0.0, stddev, rng);
  std::vector<double> hidden;
  hidden.reserve(3 * hidden_dim * hidden_dim);
  for (int gate = 0; gate < 3; ++gate) {
    const auto block = init_orthogonal(hidden_dim, hidden_dim, rng);
    hidden.insert(hidden.end(), block.values().begin(), block.values().end());
  }
  p.hidden_weights = ad::Tensor::from({3 * hidden_dim, hidden_dim}, std::move(hidden));
  p.input_bias = init_gaussian({3 * hidden_dim}, 0.0, stddev, rng);
  p.hidden_bias = init_gaussian({3 * hidden_dim}, 0.0, stddev, rng);
  for (auto* t : {&p.input_weights, &p.hidden_weights, &p.input_bias, &p.hidden_bias}) {
    t->set_requires_grad(true);
  }
  return p;
}

}  // namespace fgnn
