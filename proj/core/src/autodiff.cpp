#include "fgnn/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#include "fgnn/errors.hpp"

namespace fgnn::ad {

std::string to_string(const Shape& shape) {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out << 'x';
    out << shape[i];
  }
  out << ']';
  return out.str();
}

std::size_t shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1},
                         std::multiplies<>());
}

// ---------------------------------------------------------------------------
// Tensor

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  return filled(std::move(shape), 0.0, requires_grad);
}

Tensor Tensor::filled(Shape shape, double value, bool requires_grad) {
  const std::size_t n = shape_size(shape);
  return from(std::move(shape), std::vector<double>(n, value), requires_grad);
}

Tensor Tensor::from(Shape shape, std::vector<double> values,
                    bool requires_grad) {
  if (shape.size() > 2) {
    throw DimensionError("tensors of rank > 2 are not supported: " +
                         to_string(shape));
  }
  if (shape_size(shape) != values.size()) {
    throw DimensionError("shape " + to_string(shape) + " needs " +
                         std::to_string(shape_size(shape)) + " values, got " +
                         std::to_string(values.size()));
  }
  Tensor t;
  t.impl_ = std::make_shared<Impl>();
  t.impl_->shape = std::move(shape);
  t.impl_->values = std::move(values);
  t.impl_->requires_grad = requires_grad;
  return t;
}

Tensor Tensor::scalar(double value, bool requires_grad) {
  return from({}, {value}, requires_grad);
}

const Shape& Tensor::shape() const { return impl_->shape; }
std::size_t Tensor::size() const { return impl_->values.size(); }

std::size_t Tensor::rows() const {
  return impl_->shape.empty() ? 1 : impl_->shape[0];
}

std::size_t Tensor::cols() const {
  return impl_->shape.size() < 2 ? 1 : impl_->shape[1];
}

std::span<const double> Tensor::values() const { return impl_->values; }
std::span<double> Tensor::mutable_values() { return impl_->values; }

double Tensor::at(std::size_t row, std::size_t col) const {
  return impl_->values[row * cols() + col];
}

double Tensor::item() const {
  if (size() != 1) {
    throw ContractError("item() on tensor of shape " + to_string(shape()));
  }
  return impl_->values[0];
}

bool Tensor::requires_grad() const { return impl_->requires_grad; }
void Tensor::set_requires_grad(bool flag) { impl_->requires_grad = flag; }

bool Tensor::has_grad() const { return !impl_->grad.empty(); }
std::span<const double> Tensor::grad() const { return impl_->grad; }

std::span<double> Tensor::mutable_grad() const {
  if (impl_->grad.size() != impl_->values.size()) {
    impl_->grad.assign(impl_->values.size(), 0.0);
  }
  return impl_->grad;
}

void Tensor::zero_grad() const {
  impl_->grad.assign(impl_->values.size(), 0.0);
}

void Tensor::clear_grad() const { impl_->grad.clear(); }

Tensor Tensor::clone() const {
  return from(impl_->shape, impl_->values, impl_->requires_grad);
}

// ---------------------------------------------------------------------------
// Tape

const char* op_name(OpKind kind) {
  switch (kind) {
    case OpKind::kMatmul: return "matmul";
    case OpKind::kTranspose: return "transpose";
    case OpKind::kAdd: return "add";
    case OpKind::kSub: return "sub";
    case OpKind::kMul: return "mul";
    case OpKind::kScale: return "scale";
    case OpKind::kRelu: return "relu";
    case OpKind::kLeakyRelu: return "leaky_relu";
    case OpKind::kSigmoid: return "sigmoid";
    case OpKind::kTanh: return "tanh";
    case OpKind::kConcatRows: return "concat_rows";
    case OpKind::kConcatCols: return "concat_cols";
    case OpKind::kGatherRows: return "gather_rows";
    case OpKind::kSliceRows: return "slice_rows";
    case OpKind::kReshape: return "reshape";
    case OpKind::kSum: return "sum";
    case OpKind::kReduceRows: return "reduce_rows";
    case OpKind::kSegmentSoftmax: return "segment_softmax";
    case OpKind::kScatterMatrix: return "scatter_matrix";
    case OpKind::kSoftmaxCrossEntropy: return "softmax_cross_entropy";
  }
  return "?";
}

bool Tape::wants_grad(std::initializer_list<const Tensor*> inputs) const {
  if (!recording_) return false;
  return std::any_of(inputs.begin(), inputs.end(),
                     [](const Tensor* t) { return t->requires_grad(); });
}

void Tape::record(OpKind kind, Tensor output, BackwardFn backward) {
  nodes_.push_back(Node{kind, std::move(output), std::move(backward)});
}

void Tape::backward(const Tensor& loss) {
  if (!loss.defined() || loss.size() != 1) {
    throw ContractError("backward() needs a scalar loss, got shape " +
                        (loss.defined() ? to_string(loss.shape()) : "<none>"));
  }
  const auto it = std::find_if(nodes_.rbegin(), nodes_.rend(), [&](const Node& n) {
    return n.output.same_as(loss);
  });
  if (it == nodes_.rend()) {
    throw ContractError("backward() on a tensor not recorded on this tape");
  }
  for (auto& node : nodes_) {
    if (node.output.has_grad()) node.output.zero_grad();
  }
  Tensor seed = loss;
  seed.mutable_grad()[0] = 1.0;
  for (auto node = nodes_.rbegin(); node != nodes_.rend(); ++node) {
    if (!node->output.has_grad()) continue;
    node->backward(node->output.grad());
  }
}

// ---------------------------------------------------------------------------
// Operations

namespace {

void require_matrix(const Tensor& t, const char* op) {
  if (t.rank() != 2) {
    throw DimensionError(std::string(op) + " expects a matrix, got " +
                         to_string(t.shape()));
  }
}

void require_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape() != b.shape()) {
    throw DimensionError(std::string(op) + ": shape mismatch " +
                         to_string(a.shape()) + " vs " + to_string(b.shape()));
  }
}

// Applies f elementwise and records g(x, y) * out_grad as the local derivative.
template <typename Forward, typename Derivative>
Tensor unary(Tape& tape, OpKind kind, const Tensor& a, Forward f,
             Derivative df) {
  std::vector<double> out(a.size());
  const auto in = a.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  const bool grad = tape.wants_grad({&a});
  Tensor result = Tensor::from(a.shape(), std::move(out), grad);
  if (grad) {
    tape.record(kind, result,
                [a, result, df](std::span<const double> g) mutable {
                  auto ga = a.mutable_grad();
                  const auto x = a.values();
                  const auto y = result.values();
                  for (std::size_t i = 0; i < g.size(); ++i) {
                    ga[i] += g[i] * df(x[i], y[i]);
                  }
                });
  }
  return result;
}

}  // namespace

Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  if (b.rank() == 0 || a.cols() != b.rows()) {
    throw DimensionError("matmul: cannot multiply " + to_string(a.shape()) +
                         " by " + to_string(b.shape()));
  }
  const std::size_t m = a.rows(), k = a.cols(), n = b.cols();
  std::vector<double> out(m * n, 0.0);
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t p = 0; p < k; ++p) {
      const double aip = av[i * k + p];
      if (aip == 0.0) continue;
      const double* brow = bv.data() + p * n;
      double* orow = out.data() + i * n;
      for (std::size_t j = 0; j < n; ++j) orow[j] += aip * brow[j];
    }
  }
  Shape shape = b.rank() == 1 ? Shape{m} : Shape{m, n};
  const bool grad = tape.wants_grad({&a, &b});
  Tensor result = Tensor::from(std::move(shape), std::move(out), grad);
  if (grad) {
    tape.record(OpKind::kMatmul, result,
                [a, b, m, k, n](std::span<const double> g) mutable {
                  const auto av = a.values();
                  const auto bv = b.values();
                  if (a.requires_grad()) {
                    auto ga = a.mutable_grad();
                    for (std::size_t i = 0; i < m; ++i) {
                      for (std::size_t p = 0; p < k; ++p) {
                        double acc = 0.0;
                        for (std::size_t j = 0; j < n; ++j) {
                          acc += g[i * n + j] * bv[p * n + j];
                        }
                        ga[i * k + p] += acc;
                      }
                    }
                  }
                  if (b.requires_grad()) {
                    auto gb = b.mutable_grad();
                    for (std::size_t i = 0; i < m; ++i) {
                      for (std::size_t p = 0; p < k; ++p) {
                        const double aip = av[i * k + p];
                        for (std::size_t j = 0; j < n; ++j) {
                          gb[p * n + j] += aip * g[i * n + j];
                        }
                      }
                    }
                  }
                });
  }
  return result;
}

Tensor transpose(Tape& tape, const Tensor& a) {
  require_matrix(a, "transpose");
  const std::size_t r = a.rows(), c = a.cols();
  std::vector<double> out(r * c);
  const auto av = a.values();
  for (std::size_t i = 0; i < r; ++i) {
    for (std::size_t j = 0; j < c; ++j) out[j * r + i] = av[i * c + j];
  }
  const bool grad = tape.wants_grad({&a});
  Tensor result = Tensor::from({c, r}, std::move(out), grad);
  if (grad) {
    tape.record(OpKind::kTranspose, result,
                [a, r, c](std::span<const double> g) mutable {
                  auto ga = a.mutable_grad();
                  for (std::size_t i = 0; i < r; ++i) {
                    for (std::size_t j = 0; j < c; ++j) {
                      ga[i * c + j] += g[j * r + i];
                    }
                  }
                });
  }
  return result;
}

namespace {

template <typename Combine, typename DA, typename DB>
Tensor binary(Tape& tape, OpKind kind, const Tensor& a, const Tensor& b,
              Combine f, DA da, DB db) {
  require_same_shape(a, b, op_name(kind));
  std::vector<double> out(a.size());
  const auto av = a.values();
  const auto bv = b.values();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(av[i], bv[i]);
  const bool grad = tape.wants_grad({&a, &b});
  Tensor result = Tensor::from(a.shape(), std::move(out), grad);
  if (grad) {
    tape.record(kind, result, [a, b, da, db](std::span<const double> g) mutable {
      const auto av = a.values();
      const auto bv = b.values();
      if (a.requires_grad()) {
        auto ga = a.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i] * da(av[i], bv[i]);
      }
      if (b.requires_grad()) {
        auto gb = b.mutable_grad();
        for (std::size_t i = 0; i < g.size(); ++i) gb[i] += g[i] * db(av[i], bv[i]);
      }
    });
  }
  return result;
}

}  // namespace

Tensor add(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary(
      tape, OpKind::kAdd, a, b, [](double x, double y) { return x + y; },
      [](double, double) { return 1.0; }, [](double, double) { return 1.0; });
}

Tensor sub(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary(
      tape, OpKind::kSub, a, b, [](double x, double y) { return x - y; },
      [](double, double) { return 1.0; }, [](double, double) { return -1.0; });
}

Tensor mul(Tape& tape, const Tensor& a, const Tensor& b) {
  return binary(
      tape, OpKind::kMul, a, b, [](double x, double y) { return x * y; },
      [](double, double y) { return y; }, [](double x, double) { return x; });
}

Tensor scale(Tape& tape, const Tensor& a, double factor) {
  return unary(
      tape, OpKind::kScale, a, [factor](double x) { return factor * x; },
      [factor](double, double) { return factor; });
}

Tensor relu(Tape& tape, const Tensor& a) {
  return unary(
      tape, OpKind::kRelu, a, [](double x) { return x > 0.0 ? x : 0.0; },
      [](double x, double) { return x > 0.0 ? 1.0 : 0.0; });
}

Tensor leaky_relu(Tape& tape, const Tensor& a, double negative_slope) {
  return unary(
      tape, OpKind::kLeakyRelu, a,
      [negative_slope](double x) { return x > 0.0 ? x : negative_slope * x; },
      [negative_slope](double x, double) {
        return x > 0.0 ? 1.0 : negative_slope;
      });
}

Tensor sigmoid(Tape& tape, const Tensor& a) {
  return unary(
      tape, OpKind::kSigmoid, a,
      [](double x) {
        if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
        const double e = std::exp(x);
        return e / (1.0 + e);
      },
      [](double, double y) { return y * (1.0 - y); });
}

Tensor tanh(Tape& tape, const Tensor& a) {
  return unary(
      tape, OpKind::kTanh, a, [](double x) { return std::tanh(x); },
      [](double, double y) { return 1.0 - y * y; });
}

Tensor concat_rows(Tape& tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_rows: no inputs");
  const std::size_t rank = parts[0].rank();
  const std::size_t cols = parts[0].cols();
  std::size_t rows = 0;
  bool grad = false;
  for (const auto& p : parts) {
    if (p.rank() != rank || p.rank() == 0 || p.cols() != cols) {
      throw DimensionError("concat_rows: incompatible shapes " +
                           to_string(parts[0].shape()) + " and " +
                           to_string(p.shape()));
    }
    rows += p.rows();
    grad = grad || tape.wants_grad({&p});
  }
  std::vector<double> out;
  out.reserve(rows * cols);
  for (const auto& p : parts) {
    out.insert(out.end(), p.values().begin(), p.values().end());
  }
  Shape shape = rank == 1 ? Shape{rows} : Shape{rows, cols};
  Tensor result = Tensor::from(std::move(shape), std::move(out), grad);
  if (grad) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    tape.record(OpKind::kConcatRows, result,
                [inputs](std::span<const double> g) mutable {
                  std::size_t offset = 0;
                  for (auto& p : inputs) {
                    if (p.requires_grad()) {
                      auto gp = p.mutable_grad();
                      for (std::size_t i = 0; i < gp.size(); ++i) {
                        gp[i] += g[offset + i];
                      }
                    }
                    offset += p.size();
                  }
                });
  }
  return result;
}

Tensor concat_cols(Tape& tape, std::span<const Tensor> parts) {
  if (parts.empty()) throw DimensionError("concat_cols: no inputs");
  const std::size_t rows = parts[0].rows();
  std::size_t cols = 0;
  bool grad = false;
  for (const auto& p : parts) {
    require_matrix(p, "concat_cols");
    if (p.rows() != rows) {
      throw DimensionError("concat_cols: incompatible shapes " +
                           to_string(parts[0].shape()) + " and " +
                           to_string(p.shape()));
    }
    cols += p.cols();
    grad = grad || tape.wants_grad({&p});
  }
  std::vector<double> out(rows * cols);
  std::size_t offset = 0;
  for (const auto& p : parts) {
    const auto pv = p.values();
    const std::size_t pc = p.cols();
    for (std::size_t i = 0; i < rows; ++i) {
      std::copy_n(pv.data() + i * pc, pc, out.data() + i * cols + offset);
    }
    offset += pc;
  }
  Tensor result = Tensor::from({rows, cols}, std::move(out), grad);
  if (grad) {
    std::vector<Tensor> inputs(parts.begin(), parts.end());
    tape.record(OpKind::kConcatCols, result,
                [inputs, rows, cols](std::span<const double> g) mutable {
                  std::size_t offset = 0;
                  for (auto& p : inputs) {
                    const std::size_t pc = p.cols();
                    if (p.requires_grad()) {
                      auto gp = p.mutable_grad();
                      for (std::size_t i = 0; i < rows; ++i) {
                        for (std::size_t j = 0; j < pc; ++j) {
                          gp[i * pc + j] += g[i * cols + offset + j];
                        }
                      }
                    }
                    offset += pc;
                  }
                });
  }
  return result;
}

Tensor gather_rows(Tape& tape, const Tensor& table,
                   std::span<const std::size_t> indices) {
  if (table.rank() == 0) throw DimensionError("gather_rows on a scalar");
  const std::size_t n_rows = table.rows();
  const std::size_t width = table.cols();
  std::vector<double> out;
  out.reserve(indices.size() * width);
  const auto tv = table.values();
  for (const std::size_t idx : indices) {
    if (idx >= n_rows) {
      throw IndexError("gather_rows: index " + std::to_string(idx) +
                       " out of range for " + std::to_string(n_rows) + " rows");
    }
    out.insert(out.end(), tv.begin() + idx * width,
               tv.begin() + (idx + 1) * width);
  }
  Shape shape = table.rank() == 1 ? Shape{indices.size()}
                                  : Shape{indices.size(), width};
  const bool grad = tape.wants_grad({&table});
  Tensor result = Tensor::from(std::move(shape), std::move(out), grad);
  if (grad) {
    std::vector<std::size_t> idx(indices.begin(), indices.end());
    tape.record(OpKind::kGatherRows, result,
                [table, idx, width](std::span<const double> g) mutable {
                  auto gt = table.mutable_grad();
                  for (std::size_t r = 0; r < idx.size(); ++r) {
                    for (std::size_t j = 0; j < width; ++j) {
                      gt[idx[r] * width + j] += g[r * width + j];
                    }
                  }
                });
  }
  return result;
}

Tensor slice_rows(Tape& tape, const Tensor& a, std::size_t begin,
                  std::size_t end) {
  if (a.rank() == 0 || begin > end || end > a.rows()) {
    throw IndexError("slice_rows: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") invalid for " +
                     to_string(a.shape()));
  }
  const std::size_t width = a.cols();
  const auto av = a.values();
  std::vector<double> out(av.begin() + begin * width, av.begin() + end * width);
  Shape shape = a.rank() == 1 ? Shape{end - begin} : Shape{end - begin, width};
  const bool grad = tape.wants_grad({&a});
  Tensor result = Tensor::from(std::move(shape), std::move(out), grad);
  if (grad) {
    const std::size_t offset = begin * width;
    tape.record(OpKind::kSliceRows, result,
                [a, offset](std::span<const double> g) mutable {
                  auto ga = a.mutable_grad();
                  for (std::size_t i = 0; i < g.size(); ++i) ga[offset + i] += g[i];
                });
  }
  return result;
}

Tensor reshape(Tape& tape, const Tensor& a, Shape shape) {
  if (shape_size(shape) != a.size()) {
    throw DimensionError("reshape: cannot view " + to_string(a.shape()) +
                         " as " + to_string(shape));
  }
  const bool grad = tape.wants_grad({&a});
  Tensor result = Tensor::from(std::move(shape),
                               std::vector<double>(a.values().begin(),
                                                   a.values().end()),
                               grad);
  if (grad) {
    tape.record(OpKind::kReshape, result,
                [a](std::span<const double> g) mutable {
                  auto ga = a.mutable_grad();
                  for (std::size_t i = 0; i < g.size(); ++i) ga[i] += g[i];
                });
  }
  return result;
}

Tensor sum(Tape& tape, const Tensor& a) {
  double total = 0.0;
  for (const double v : a.values()) total += v;
  const bool grad = tape.wants_grad({&a});
  Tensor result = Tensor::scalar(total, grad);
  if (grad) {
    tape.record(OpKind::kSum, result, [a](std::span<const double> g) mutable {
      auto ga = a.mutable_grad();
      for (auto& v : ga) v += g[0];
    });
  }
  return result;
}

Tensor reduce_rows(Tape& tape, const Tensor& a, Reduction mode) {
  require_matrix(a, "reduce_rows");
  const std::size_t n = a.rows(), d = a.cols();
  if (n == 0) throw DimensionError("reduce_rows over zero rows");
  const auto av = a.values();
  std::vector<double> out(d, 0.0);
  std::vector<std::size_t> argmax;
  if (mode == Reduction::kMax) {
    argmax.assign(d, 0);
    for (std::size_t j = 0; j < d; ++j) out[j] = av[j];
    for (std::size_t i = 1; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) {
        if (av[i * d + j] > out[j]) {
          out[j] = av[i * d + j];
          argmax[j] = i;
        }
      }
    }
  } else {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < d; ++j) out[j] += av[i * d + j];
    }
    if (mode == Reduction::kMean) {
      for (auto& v : out) v /= static_cast<double>(n);
    }
  }
  const bool grad = tape.wants_grad({&a});
  Tensor result = Tensor::from({d}, std::move(out), grad);
  if (grad) {
    tape.record(OpKind::kReduceRows, result,
                [a, n, d, mode, argmax](std::span<const double> g) mutable {
                  auto ga = a.mutable_grad();
                  if (mode == Reduction::kMax) {
                    for (std::size_t j = 0; j < d; ++j) ga[argmax[j] * d + j] += g[j];
                    return;
                  }
                  const double f =
                      mode == Reduction::kMean ? 1.0 / static_cast<double>(n) : 1.0;
                  for (std::size_t i = 0; i < n; ++i) {
                    for (std::size_t j = 0; j < d; ++j) ga[i * d + j] += f * g[j];
                  }
                });
  }
  return result;
}

Tensor segment_softmax(Tape& tape, const Tensor& scores,
                       const Segments& segments) {
  if (scores.rank() != 1) {
    throw DimensionError("segment_softmax expects a vector, got " +
                         to_string(scores.shape()));
  }
  const std::size_t n = scores.size();
  std::vector<char> seen(n, 0);
  std::size_t covered = 0;
  for (const auto& seg : segments) {
    if (seg.empty()) throw ContractError("invalid segmentation: empty segment");
    for (const std::size_t i : seg) {
      if (i >= n || seen[i]) {
        throw ContractError("invalid segmentation: index " + std::to_string(i) +
                            (i >= n ? " out of range" : " appears twice"));
      }
      seen[i] = 1;
      ++covered;
    }
  }
  if (covered != n) {
    throw ContractError("invalid segmentation: " + std::to_string(n - covered) +
                        " positions belong to no segment");
  }
  const auto sv = scores.values();
  std::vector<double> out(n);
  for (const auto& seg : segments) {
    double mx = -std::numeric_limits<double>::infinity();
    for (const std::size_t i : seg) mx = std::max(mx, sv[i]);
    double z = 0.0;
    for (const std::size_t i : seg) {
      out[i] = std::exp(sv[i] - mx);
      z += out[i];
    }
    for (const std::size_t i : seg) out[i] /= z;
  }
  const bool grad = tape.wants_grad({&scores});
  Tensor result = Tensor::from({n}, std::move(out), grad);
  if (grad) {
    tape.record(OpKind::kSegmentSoftmax, result,
                [scores, result, segments](std::span<const double> g) mutable {
                  auto gs = scores.mutable_grad();
                  const auto y = result.values();
                  for (const auto& seg : segments) {
                    double dot = 0.0;
                    for (const std::size_t i : seg) dot += g[i] * y[i];
                    for (const std::size_t i : seg) gs[i] += y[i] * (g[i] - dot);
                  }
                });
  }
  return result;
}

Tensor scatter_matrix(Tape& tape, const Tensor& values,
                      std::span<const std::size_t> rows,
                      std::span<const std::size_t> cols, std::size_t n_rows,
                      std::size_t n_cols) {
  if (values.rank() != 1 || rows.size() != values.size() ||
      cols.size() != values.size()) {
    throw DimensionError("scatter_matrix: " + std::to_string(values.size()) +
                         " values with " + std::to_string(rows.size()) +
                         " rows and " + std::to_string(cols.size()) + " cols");
  }
  std::vector<double> out(n_rows * n_cols, 0.0);
  const auto vv = values.values();
  for (std::size_t e = 0; e < vv.size(); ++e) {
    if (rows[e] >= n_rows || cols[e] >= n_cols) {
      throw IndexError("scatter_matrix: position (" + std::to_string(rows[e]) +
                       ", " + std::to_string(cols[e]) + ") outside " +
                       std::to_string(n_rows) + "x" + std::to_string(n_cols));
    }
    out[rows[e] * n_cols + cols[e]] += vv[e];
  }
  const bool grad = tape.wants_grad({&values});
  Tensor result = Tensor::from({n_rows, n_cols}, std::move(out), grad);
  if (grad) {
    std::vector<std::size_t> flat(vv.size());
    for (std::size_t e = 0; e < vv.size(); ++e) flat[e] = rows[e] * n_cols + cols[e];
    tape.record(OpKind::kScatterMatrix, result,
                [values, flat](std::span<const double> g) mutable {
                  auto gv = values.mutable_grad();
                  for (std::size_t e = 0; e < flat.size(); ++e) gv[e] += g[flat[e]];
                });
  }
  return result;
}

Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits,
                             std::size_t label) {
  if (logits.rank() != 1 || logits.size() == 0) {
    throw DimensionError("softmax_cross_entropy expects a non-empty vector, got " +
                         to_string(logits.shape()));
  }
  if (label >= logits.size()) {
    throw IndexError("label " + std::to_string(label) + " out of range for " +
                     std::to_string(logits.size()) + " classes");
  }
  const auto z = logits.values();
  const double mx = *std::max_element(z.begin(), z.end());
  double total = 0.0;
  for (const double v : z) total += std::exp(v - mx);
  const double lse = mx + std::log(total);
  const bool grad = tape.wants_grad({&logits});
  Tensor result = Tensor::scalar(lse - z[label], grad);
  if (grad) {
    tape.record(OpKind::kSoftmaxCrossEntropy, result,
                [logits, label, lse](std::span<const double> g) mutable {
                  auto gz = logits.mutable_grad();
                  const auto z = logits.values();
                  for (std::size_t i = 0; i < z.size(); ++i) {
                    gz[i] += g[0] * std::exp(z[i] - lse);
                  }
                  gz[label] -= g[0];
                });
  }
  return result;
}

std::vector<double> softmax(std::span<const double> logits) {
  std::vector<double> out(logits.size());
  if (logits.empty()) return out;
  const double mx = *std::max_element(logits.begin(), logits.end());
  double z = 0.0;
  for (std::size_t i = 0; i < logits.size(); ++i) {
    out[i] = std::exp(logits[i] - mx);
    z += out[i];
  }
  for (auto& v : out) v /= z;
  return out;
}

}  // namespace fgnn::ad
