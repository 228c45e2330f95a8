#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "waveformer/errors.hpp"

namespace wf {

using Shape = std::vector<int64_t>;

int64_t shape_numel(const Shape& s);
std::string shape_str(const Shape& s);

class Tape;

struct TensorData {
  Shape shape;
  std::vector<double> data;
  bool requires_grad = false;
  std::vector<double> grad;      // allocated lazily, same length as data
  const Tape* produced_by = nullptr;

  void ensure_grad();
};

/// Dense row-major 64-bit tensor. Value semantics over a shared buffer:
/// copies are cheap handles; the buffer is treated as immutable once it has
/// entered a computation (gradient accumulation is the only mutation).
class Tensor {
 public:
  Tensor() = default;
  explicit Tensor(std::shared_ptr<TensorData> impl) : impl_(std::move(impl)) {}

  static Tensor zeros(Shape shape, bool requires_grad = false);
  static Tensor full(Shape shape, double value);
  static Tensor from(Shape shape, std::vector<double> data,
                     bool requires_grad = false);
  static Tensor scalar(double value);

  bool defined() const { return impl_ != nullptr; }
  const Shape& shape() const { return impl_->shape; }
  int64_t rank() const { return static_cast<int64_t>(impl_->shape.size()); }
  int64_t numel() const { return static_cast<int64_t>(impl_->data.size()); }
  int64_t extent(int64_t axis) const;

  std::span<const double> data() const { return impl_->data; }
  std::span<double> mutable_data() { return impl_->data; }

  bool requires_grad() const { return impl_->requires_grad; }
  Tensor& set_requires_grad(bool b);

  bool has_grad() const { return !impl_->grad.empty(); }
  std::span<const double> grad() const;
  void zero_grad();

  /// Scalar read; requires numel() == 1.
  double item() const;
  double at(std::initializer_list<int64_t> idx) const;

  /// Deep copy of values (fresh buffer, no tape link, no grad).
  Tensor clone_detached() const;

  TensorData* node() const { return impl_.get(); }
  const std::shared_ptr<TensorData>& ptr() const { return impl_; }

 private:
  std::shared_ptr<TensorData> impl_;
};

/// Reverse-mode tape. Forward ops append one record per op in execution
/// order; backward() replays them in reverse exactly once. A tape is bound
/// to at most one thread at a time; independent tapes may run concurrently.
class Tape {
 public:
  Tape();
  ~Tape();
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  /// Seeds d(root)/d(root) = 1 and propagates to every requires_grad leaf.
  /// root must be a scalar produced on this tape.
  void backward(const Tensor& root);

  size_t size() const { return records_.size(); }

  /// RAII activation: ops executed in scope record onto this tape.
  class Scope {
   public:
    explicit Scope(Tape& tape);
    ~Scope();
    Scope(const Scope&) = delete;

   private:
    Tape* prev_;
  };

  // engine internals
  static Tape* active();
  void record(std::function<void()> backward_fn);

 private:
  std::vector<std::function<void()>> records_;
};

// ---- forward ops -----------------------------------------------------------
// Each op validates shapes, checks outputs for NaN/Inf where overflow is
// possible, and records itself on the active tape when an input requires
// grad.

Tensor add(const Tensor& a, const Tensor& b);       // suffix broadcast
Tensor subtract(const Tensor& a, const Tensor& b);  // suffix broadcast
Tensor multiply(const Tensor& a, const Tensor& b);  // elementwise, suffix broadcast
Tensor scalar_multiply(const Tensor& a, double s);
Tensor matmul(const Tensor& a, const Tensor& b);    // batched over leading axes
Tensor reshape(const Tensor& a, Shape shape);
Tensor transpose_last2(const Tensor& a);
Tensor slice(const Tensor& a, int64_t axis, int64_t start, int64_t stop);
Tensor concat(const std::vector<Tensor>& parts, int64_t axis);
Tensor softmax_last(const Tensor& a);
Tensor gelu(const Tensor& a);
Tensor relu(const Tensor& a);
Tensor mean_all(const Tensor& a);
Tensor sum_all(const Tensor& a);
Tensor layer_norm_last(const Tensor& x, const Tensor& gamma, const Tensor& beta);

// fused affine: x @ w + b (b broadcast over leading axes); w rank 2
Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b);

// axis moves used to put channels first for spatial transforms
Tensor move_last_axis_front(const Tensor& a);
Tensor move_first_axis_back(const Tensor& a);

// strided spatial subsampling over the leading `spatial_dims` axes and its
// nearest-neighbour inverse (duplication)
Tensor downsample_stride(const Tensor& a, int64_t stride, int spatial_dims);
Tensor upsample_nn(const Tensor& a, int64_t stride, int spatial_dims,
                   const std::vector<int64_t>& full_extents);

// ---- optimizer --------------------------------------------------------------

/// Adam with bias correction and decoupled weight decay.
struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
  double weight_decay = 0.0;
  int64_t step = 0;
  std::vector<std::vector<double>> m;
  std::vector<std::vector<double>> v;

  void init(const std::vector<Tensor>& params);
};

void adam_step(std::vector<Tensor>& params,
               const std::vector<std::span<const double>>& grads,
               AdamState& state);

// ---- verification ------------------------------------------------------------

/// Max over components of |autodiff - central difference| /
/// (|central difference| + 1e-12) for a scalar-valued f at x.
double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& x, double h);

void check_finite(std::span<const double> v, const char* what);

}  // namespace wf
