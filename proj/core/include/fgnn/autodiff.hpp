#pragma once

// Minimal define-by-run reverse-mode automatic differentiation over dense
// row-major float64 tensors of rank 0, 1 or 2.
//
// Every differentiable operation takes the Tape it records onto. A node is
// recorded only when at least one input requires a gradient, so running the
// model on a non-recording tape costs nothing beyond the forward arithmetic.

#include <cstddef>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

namespace fgnn::ad {

using Shape = std::vector<std::size_t>;

std::string to_string(const Shape& shape);
std::size_t shape_size(const Shape& shape);

class Tensor {
 public:
  Tensor() = default;

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor filled(Shape shape, double value, bool requires_grad = false);
  static Tensor from(Shape shape, std::vector<double> values,
                     bool requires_grad = false);
  static Tensor scalar(double value, bool requires_grad = false);

  bool defined() const { return impl_ != nullptr; }

  const Shape& shape() const;
  std::size_t rank() const { return shape().size(); }
  std::size_t size() const;
  // Rank-1 tensors count as n rows of width 1.
  std::size_t rows() const;
  std::size_t cols() const;

  std::span<const double> values() const;
  std::span<double> mutable_values();
  double operator[](std::size_t i) const { return values()[i]; }
  double at(std::size_t row, std::size_t col) const;
  double item() const;

  bool requires_grad() const;
  void set_requires_grad(bool flag);

  // Gradient storage is allocated lazily; has_grad() is false until the first
  // accumulation (or an explicit mutable_grad() / zero_grad()).
  bool has_grad() const;
  std::span<const double> grad() const;
  // Gradient bookkeeping is shared by every handle to the same tensor, so
  // it is available through const handles.
  std::span<double> mutable_grad() const;
  void zero_grad() const;
  void clear_grad() const;

  // Deep copy of values (no gradient, same requires_grad flag).
  Tensor clone() const;

  bool same_as(const Tensor& other) const { return impl_ == other.impl_; }

 private:
  struct Impl {
    Shape shape;
    std::vector<double> values;
    std::vector<double> grad;
    bool requires_grad = false;
  };
  std::shared_ptr<Impl> impl_;
};

enum class OpKind {
  kMatmul,
  kTranspose,
  kAdd,
  kSub,
  kMul,
  kScale,
  kRelu,
  kLeakyRelu,
  kSigmoid,
  kTanh,
  kConcatRows,
  kConcatCols,
  kGatherRows,
  kSliceRows,
  kReshape,
  kSum,
  kReduceRows,
  kSegmentSoftmax,
  kScatterMatrix,
  kSoftmaxCrossEntropy,
};

const char* op_name(OpKind kind);

// Receives the gradient of the node's output and accumulates into inputs.
using BackwardFn = std::function<void(std::span<const double> out_grad)>;

class Tape {
 public:
  explicit Tape(bool recording = true) : recording_(recording) {}

  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  bool recording() const { return recording_; }
  std::size_t size() const { return nodes_.size(); }
  OpKind kind_at(std::size_t i) const { return nodes_[i].kind; }

  // True when `inputs` demand a gradient and this tape records.
  bool wants_grad(std::initializer_list<const Tensor*> inputs) const;

  void record(OpKind kind, Tensor output, BackwardFn backward);

  // Seeds d(loss)/d(loss) = 1 and sweeps the recorded nodes in reverse order.
  // Gradients of intermediates are reset first; leaf gradients accumulate
  // across calls until zero_grad().
  void backward(const Tensor& loss);

  void clear() { nodes_.clear(); }

 private:
  struct Node {
    OpKind kind;
    Tensor output;
    BackwardFn backward;
  };
  bool recording_;
  std::vector<Node> nodes_;
};

// Matrix product. `b` may be rank 1, in which case it is treated as a column
// and the result is rank 1.
Tensor matmul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor transpose(Tape& tape, const Tensor& a);

Tensor add(Tape& tape, const Tensor& a, const Tensor& b);
Tensor sub(Tape& tape, const Tensor& a, const Tensor& b);
Tensor mul(Tape& tape, const Tensor& a, const Tensor& b);
Tensor scale(Tape& tape, const Tensor& a, double factor);

Tensor relu(Tape& tape, const Tensor& a);
Tensor leaky_relu(Tape& tape, const Tensor& a, double negative_slope = 0.2);
Tensor sigmoid(Tape& tape, const Tensor& a);
Tensor tanh(Tape& tape, const Tensor& a);

// Stacks along the first dimension. Rank-1 parts concatenate into a longer
// vector; rank-2 parts must share their column count.
Tensor concat_rows(Tape& tape, std::span<const Tensor> parts);
// Side-by-side concatenation of rank-2 parts with equal row counts.
Tensor concat_cols(Tape& tape, std::span<const Tensor> parts);

// Selects rows of `table` (elements, for rank 1). Repeated indices scatter
// their gradients back additively; this is the embedding lookup primitive.
Tensor gather_rows(Tape& tape, const Tensor& table,
                   std::span<const std::size_t> indices);
Tensor slice_rows(Tape& tape, const Tensor& a, std::size_t begin,
                  std::size_t end);
Tensor reshape(Tape& tape, const Tensor& a, Shape shape);

// Sum of all entries, as a rank-0 tensor.
Tensor sum(Tape& tape, const Tensor& a);

enum class Reduction { kSum, kMean, kMax };
// Column-wise reduction of a [n x d] matrix over its rows, giving [d].
Tensor reduce_rows(Tape& tape, const Tensor& a, Reduction mode);

// Softmax applied independently within each segment of a rank-1 tensor.
// Every position must belong to exactly one non-empty segment.
using Segments = std::vector<std::vector<std::size_t>>;
Tensor segment_softmax(Tape& tape, const Tensor& scores,
                       const Segments& segments);

// Dense [n_rows x n_cols] matrix with values[e] added at (rows[e], cols[e]).
Tensor scatter_matrix(Tape& tape, const Tensor& values,
                      std::span<const std::size_t> rows,
                      std::span<const std::size_t> cols, std::size_t n_rows,
                      std::size_t n_cols);

// -log softmax(logits)[label], fused through log-sum-exp. Rank-0 result.
Tensor softmax_cross_entropy(Tape& tape, const Tensor& logits,
                             std::size_t label);

// Plain, non-differentiable, max-shifted softmax.
std::vector<double> softmax(std::span<const double> logits);

}  // namespace fgnn::ad
