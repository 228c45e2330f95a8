#include "waveformer/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <sstream>

namespace wf {

namespace {

thread_local Tape* g_active_tape = nullptr;

constexpr double kInvSqrt2 = 0.7071067811865475244;
constexpr double kInvSqrt2Pi = 0.3989422804014326779;

inline void accumulate(std::vector<double>& dst, const double* src, size_t n) {
  for (size_t i = 0; i < n; ++i) dst[i] += src[i];
}

// C[m,n] += or = A[m,k] @ B[k,n]
void mm_nn(const double* a, const double* b, double* c, int64_t m, int64_t k,
           int64_t n, bool accum) {
  if (!accum) std::fill(c, c + m * n, 0.0);
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (int64_t l = 0; l < k; ++l) {
      const double ail = arow[l];
      const double* brow = b + l * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += ail * brow[j];
    }
  }
}

// C[m,n] += A[m,k] @ B^T where B is [n,k]
void mm_nt(const double* a, const double* b, double* c, int64_t m, int64_t k,
           int64_t n, bool accum) {
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    double* crow = c + i * n;
    for (int64_t j = 0; j < n; ++j) {
      const double* brow = b + j * k;
      double s = 0.0;
      for (int64_t l = 0; l < k; ++l) s += arow[l] * brow[l];
      crow[j] = accum ? crow[j] + s : s;
    }
  }
}

// C[k,n] += A^T @ B where A is [m,k], B is [m,n]
void mm_tn(const double* a, const double* b, double* c, int64_t m, int64_t k,
           int64_t n, bool accum) {
  if (!accum) std::fill(c, c + k * n, 0.0);
  for (int64_t i = 0; i < m; ++i) {
    const double* arow = a + i * k;
    const double* brow = b + i * n;
    for (int64_t l = 0; l < k; ++l) {
      const double ail = arow[l];
      double* crow = c + l * n;
      for (int64_t j = 0; j < n; ++j) crow[j] += ail * brow[j];
    }
  }
}

bool is_suffix(const Shape& suffix, const Shape& full) {
  if (suffix.size() > full.size()) return false;
  return std::equal(suffix.rbegin(), suffix.rend(), full.rbegin());
}

Shape leading_of(const Shape& full, size_t suffix_rank) {
  return Shape(full.begin(), full.end() - suffix_rank);
}

}  // namespace

int64_t shape_numel(const Shape& s) {
  int64_t n = 1;
  for (int64_t e : s) n *= e;
  return n;
}

std::string shape_str(const Shape& s) {
  std::ostringstream os;
  os << '(';
  for (size_t i = 0; i < s.size(); ++i) os << (i ? "," : "") << s[i];
  os << ')';
  return os.str();
}

void TensorData::ensure_grad() {
  if (grad.empty()) grad.assign(data.size(), 0.0);
}

Tensor Tensor::zeros(Shape shape, bool requires_grad) {
  auto d = std::make_shared<TensorData>();
  d->data.assign(shape_numel(shape), 0.0);
  d->shape = std::move(shape);
  d->requires_grad = requires_grad;
  return Tensor(std::move(d));
}

Tensor Tensor::full(Shape shape, double value) {
  auto d = std::make_shared<TensorData>();
  d->data.assign(shape_numel(shape), value);
  d->shape = std::move(shape);
  return Tensor(std::move(d));
}

Tensor Tensor::from(Shape shape, std::vector<double> data, bool requires_grad) {
  if (shape_numel(shape) != static_cast<int64_t>(data.size()))
    raise(errc::shape_mismatch, "tensor data length " +
                                    std::to_string(data.size()) +
                                    " does not match shape " + shape_str(shape));
  auto d = std::make_shared<TensorData>();
  d->shape = std::move(shape);
  d->data = std::move(data);
  d->requires_grad = requires_grad;
  return Tensor(std::move(d));
}

Tensor Tensor::scalar(double value) { return from({}, {value}); }

int64_t Tensor::extent(int64_t axis) const {
  const auto& s = impl_->shape;
  if (axis < 0) axis += static_cast<int64_t>(s.size());
  if (axis < 0 || axis >= static_cast<int64_t>(s.size()))
    raise(errc::shape_mismatch, "axis out of range for " + shape_str(s));
  return s[axis];
}

Tensor& Tensor::set_requires_grad(bool b) {
  impl_->requires_grad = b;
  return *this;
}

std::span<const double> Tensor::grad() const {
  impl_->ensure_grad();
  return impl_->grad;
}

void Tensor::zero_grad() {
  if (!impl_->grad.empty()) std::fill(impl_->grad.begin(), impl_->grad.end(), 0.0);
}

double Tensor::item() const {
  if (numel() != 1) raise(errc::not_scalar, "item() on tensor of shape " + shape_str(shape()));
  return impl_->data[0];
}

double Tensor::at(std::initializer_list<int64_t> idx) const {
  const Shape& s = impl_->shape;
  if (idx.size() != s.size())
    raise(errc::shape_mismatch, "index rank mismatch");
  int64_t flat = 0;
  size_t d = 0;
  for (int64_t i : idx) {
    flat = flat * s[d] + i;
    ++d;
  }
  return impl_->data[flat];
}

Tensor Tensor::clone_detached() const {
  auto d = std::make_shared<TensorData>();
  d->shape = impl_->shape;
  d->data = impl_->data;
  return Tensor(std::move(d));
}

// ---- tape -------------------------------------------------------------------

Tape::Tape() = default;
Tape::~Tape() = default;

Tape* Tape::active() { return g_active_tape; }

Tape::Scope::Scope(Tape& tape) : prev_(g_active_tape) { g_active_tape = &tape; }
Tape::Scope::~Scope() { g_active_tape = prev_; }

void Tape::record(std::function<void()> backward_fn) {
  records_.push_back(std::move(backward_fn));
}

void Tape::backward(const Tensor& root) {
  if (root.numel() != 1)
    raise(errc::not_scalar, "backward root has shape " + shape_str(root.shape()));
  if (root.node()->produced_by != this)
    raise(errc::detached_root, "backward root was not produced on this tape");
  root.node()->ensure_grad();
  root.node()->grad[0] = 1.0;
  for (auto it = records_.rbegin(); it != records_.rend(); ++it) (*it)();
}

void check_finite(std::span<const double> v, const char* what) {
  for (double x : v)
    if (!std::isfinite(x))
      raise(errc::non_finite, std::string(what) + " produced a non-finite value");
}

namespace {

/// Marks `out` as tape-produced and records the closure, when recording is on.
template <typename Fn>
void maybe_record(bool any_grad, Tensor& out, Fn&& fn) {
  Tape* t = Tape::active();
  if (!t || !any_grad) return;
  out.set_requires_grad(true);
  out.node()->produced_by = t;
  t->record(std::forward<Fn>(fn));
}

enum class EwKind { Add, Sub, Mul };

Tensor elementwise(const Tensor& a, const Tensor& b, EwKind kind, const char* name) {
  // equal shapes, or one operand's shape a suffix of the other's
  const bool b_small = is_suffix(b.shape(), a.shape());
  const bool a_small = !b_small && is_suffix(a.shape(), b.shape());
  if (!b_small && !a_small)
    raise(errc::shape_mismatch, std::string(name) + ": incompatible shapes " +
                                    shape_str(a.shape()) + " vs " + shape_str(b.shape()));
  const Tensor& big = b_small ? a : b;
  const Tensor& small = b_small ? b : a;
  const int64_t tail = small.numel();
  const int64_t total = big.numel();
  const int64_t lead = tail == 0 ? 0 : total / tail;

  Tensor out = Tensor::zeros(big.shape());
  double* o = out.mutable_data().data();
  const double* pa = a.data().data();
  const double* pb = b.data().data();
  if (a.shape() == b.shape()) {
    switch (kind) {
      case EwKind::Add: for (int64_t i = 0; i < total; ++i) o[i] = pa[i] + pb[i]; break;
      case EwKind::Sub: for (int64_t i = 0; i < total; ++i) o[i] = pa[i] - pb[i]; break;
      case EwKind::Mul: for (int64_t i = 0; i < total; ++i) o[i] = pa[i] * pb[i]; break;
    }
  } else {
    const double* pbig = big.data().data();
    const double* psmall = small.data().data();
    for (int64_t l = 0; l < lead; ++l) {
      double* orow = o + l * tail;
      const double* brow = pbig + l * tail;
      for (int64_t i = 0; i < tail; ++i) {
        double x = b_small ? brow[i] : psmall[i];   // value of a
        double y = b_small ? psmall[i] : brow[i];   // value of b
        switch (kind) {
          case EwKind::Add: orow[i] = x + y; break;
          case EwKind::Sub: orow[i] = x - y; break;
          case EwKind::Mul: orow[i] = x * y; break;
        }
      }
    }
  }
  check_finite(out.data(), name);

  Tensor ac = a, bc = b, oc = out;
  maybe_record(a.requires_grad() || b.requires_grad(), out,
               [ac, bc, oc, kind, b_small, a_small, lead, tail]() {
    if (oc.node()->grad.empty()) return;
    const std::vector<double>& dy = oc.node()->grad;
    auto backprop_into = [&](const Tensor& t, bool is_a) {
      if (!t.requires_grad()) return;
      t.node()->ensure_grad();
      std::vector<double>& g = t.node()->grad;
      const bool small_side = (is_a && a_small) || (!is_a && b_small);
      const double sgn = (kind == EwKind::Sub && !is_a) ? -1.0 : 1.0;
      if (kind != EwKind::Mul) {
        if (!small_side) {
          for (size_t i = 0; i < dy.size(); ++i) g[i] += sgn * dy[i];
        } else {
          for (int64_t l = 0; l < lead; ++l)
            for (int64_t i = 0; i < tail; ++i) g[i] += sgn * dy[l * tail + i];
        }
      } else {
        const Tensor& other = is_a ? bc : ac;
        const double* po = other.data().data();
        const bool other_small = (is_a && b_small && ac.shape() != bc.shape()) ||
                                 (!is_a && a_small);
        const bool self_small = small_side && ac.shape() != bc.shape();
        if (!self_small) {
          if (!other_small || ac.shape() == bc.shape()) {
            for (size_t i = 0; i < dy.size(); ++i) g[i] += dy[i] * po[i];
          } else {
            for (int64_t l = 0; l < lead; ++l)
              for (int64_t i = 0; i < tail; ++i)
                g[l * tail + i] += dy[l * tail + i] * po[i];
          }
        } else {
          for (int64_t l = 0; l < lead; ++l)
            for (int64_t i = 0; i < tail; ++i)
              g[i] += dy[l * tail + i] * po[l * tail + i];
        }
      }
    };
    backprop_into(ac, true);
    backprop_into(bc, false);
  });
  return out;
}

}  // namespace

Tensor add(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::Add, "add"); }
Tensor subtract(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::Sub, "subtract"); }
Tensor multiply(const Tensor& a, const Tensor& b) { return elementwise(a, b, EwKind::Mul, "multiply"); }

Tensor scalar_multiply(const Tensor& a, double s) {
  Tensor out = Tensor::zeros(a.shape());
  const double* pa = a.data().data();
  double* o = out.mutable_data().data();
  for (int64_t i = 0; i < a.numel(); ++i) o[i] = pa[i] * s;
  check_finite(out.data(), "scalar_multiply");
  Tensor ac = a, oc = out;
  maybe_record(a.requires_grad(), out, [ac, oc, s]() {
    if (oc.node()->grad.empty() || !ac.requires_grad()) return;
    ac.node()->ensure_grad();
    const std::vector<double>& dy = oc.node()->grad;
    std::vector<double>& g = ac.node()->grad;
    for (size_t i = 0; i < dy.size(); ++i) g[i] += dy[i] * s;
  });
  return out;
}

Tensor matmul(const Tensor& a, const Tensor& b) {
  if (a.rank() < 2 || b.rank() < 2)
    raise(errc::shape_mismatch, "matmul needs rank >= 2");
  const Shape& sa = a.shape();
  const Shape& sb = b.shape();
  const int64_t m = sa[sa.size() - 2], k = sa[sa.size() - 1];
  const int64_t k2 = sb[sb.size() - 2], n = sb[sb.size() - 1];
  if (k != k2)
    raise(errc::shape_mismatch, "matmul inner extents " + shape_str(sa) + " @ " + shape_str(sb));
  Shape lead_a = leading_of(sa, 2), lead_b = leading_of(sb, 2);
  bool bcast_b = false, bcast_a = false;
  Shape lead;
  if (lead_a == lead_b) {
    lead = lead_a;
  } else if (lead_b.empty()) {
    lead = lead_a;
    bcast_b = true;
  } else if (lead_a.empty()) {
    lead = lead_b;
    bcast_a = true;
  } else {
    raise(errc::shape_mismatch, "matmul batch axes " + shape_str(sa) + " @ " + shape_str(sb));
  }
  const int64_t batches = shape_numel(lead);
  Shape out_shape = lead;
  out_shape.push_back(m);
  out_shape.push_back(n);
  Tensor out = Tensor::zeros(out_shape);

  const double* pa = a.data().data();
  const double* pb = b.data().data();
  double* po = out.mutable_data().data();
  for (int64_t t = 0; t < batches; ++t) {
    const double* ap = pa + (bcast_a ? 0 : t * m * k);
    const double* bp = pb + (bcast_b ? 0 : t * k * n);
    mm_nn(ap, bp, po + t * m * n, m, k, n, false);
  }
  check_finite(out.data(), "matmul");

  Tensor ac = a, bc = b, oc = out;
  maybe_record(a.requires_grad() || b.requires_grad(), out,
               [ac, bc, oc, m, k, n, batches, bcast_a, bcast_b]() {
    if (oc.node()->grad.empty()) return;
    const double* dy = oc.node()->grad.data();
    const double* pa = ac.data().data();
    const double* pb = bc.data().data();
    if (ac.requires_grad()) {
      ac.node()->ensure_grad();
      double* ga = ac.node()->grad.data();
      for (int64_t t = 0; t < batches; ++t)
        mm_nt(dy + t * m * n, pb + (bcast_b ? 0 : t * k * n),
              ga + (bcast_a ? 0 : t * m * k), m, n, k, true);
    }
    if (bc.requires_grad()) {
      bc.node()->ensure_grad();
      double* gb = bc.node()->grad.data();
      for (int64_t t = 0; t < batches; ++t)
        mm_tn(pa + (bcast_a ? 0 : t * m * k), dy + t * m * n,
              gb + (bcast_b ? 0 : t * k * n), m, k, n, true);
    }
  });
  return out;
}

Tensor reshape(const Tensor& a, Shape shape) {
  if (shape_numel(shape) != a.numel())
    raise(errc::shape_mismatch, "reshape " + shape_str(a.shape()) + " -> " + shape_str(shape));
  Tensor out = Tensor::from(std::move(shape), std::vector<double>(a.data().begin(), a.data().end()));
  Tensor ac = a, oc = out;
  maybe_record(a.requires_grad(), out, [ac, oc]() {
    if (oc.node()->grad.empty() || !ac.requires_grad()) return;
    ac.node()->ensure_grad();
    accumulate(ac.node()->grad, oc.node()->grad.data(), oc.node()->grad.size());
  });
  return out;
}

namespace {
void transpose2d(const double* src, double* dst, int64_t rows, int64_t cols) {
  for (int64_t i = 0; i < rows; ++i)
    for (int64_t j = 0; j < cols; ++j) dst[j * rows + i] = src[i * cols + j];
}
}  // namespace

Tensor transpose_last2(const Tensor& a) {
  if (a.rank() < 2) raise(errc::shape_mismatch, "transpose_last2 needs rank >= 2");
  Shape s = a.shape();
  const int64_t rows = s[s.size() - 2], cols = s[s.size() - 1];
  std::swap(s[s.size() - 2], s[s.size() - 1]);
  const int64_t batches = a.numel() / (rows * cols);
  Tensor out = Tensor::zeros(s);
  const double* pa = a.data().data();
  double* po = out.mutable_data().data();
  for (int64_t t = 0; t < batches; ++t)
    transpose2d(pa + t * rows * cols, po + t * rows * cols, rows, cols);
  Tensor ac = a, oc = out;
  maybe_record(a.requires_grad(), out, [ac, oc, rows, cols, batches]() {
    if (oc.node()->grad.empty() || !ac.requires_grad()) return;
    ac.node()->ensure_grad();
    const double* dy = oc.node()->grad.data();
    double* g = ac.node()->grad.data();
    for (int64_t t = 0; t < batches; ++t) {
      const double* dyt = dy + t * rows * cols;
      double* gt = g + t * rows * cols;
      for (int64_t j = 0; j < cols; ++j)
        for (int64_t i = 0; i < rows; ++i) gt[i * cols + j] += dyt[j * rows + i];
    }
  });
  return out;
}

Tensor slice(const Tensor& a, int64_t axis, int64_t start, int64_t stop) {
  Shape s = a.shape();
  const int64_t r = a.rank();
  if (axis < 0) axis += r;
  if (axis < 0 || axis >= r) raise(errc::shape_mismatch, "slice axis out of range");
  if (start < 0 || stop > s[axis] || start >= stop)
    raise(errc::shape_mismatch, "slice [" + std::to_string(start) + "," +
                                    std::to_string(stop) + ") on extent " +
                                    std::to_string(s[axis]));
  int64_t outer = 1, inner = 1;
  for (int64_t i = 0; i < axis; ++i) outer *= s[i];
  for (int64_t i = axis + 1; i < r; ++i) inner *= s[i];
  const int64_t len = stop - start, full = s[axis];
  Shape os = s;
  os[axis] = len;
  Tensor out = Tensor::zeros(os);
  const double* pa = a.data().data();
  double* po = out.mutable_data().data();
  for (int64_t o = 0; o < outer; ++o)
    std::memcpy(po + o * len * inner, pa + (o * full + start) * inner,
                sizeof(double) * len * inner);
  Tensor ac = a, oc = out;
  maybe_record(a.requires_grad(), out, [ac, oc, outer, inner, len, full, start]() {
    if (oc.node()->grad.empty() || !ac.requires_grad()) return;
    ac.node()->ensure_grad();
    const double* dy = oc.node()->grad.data();
    double* g = ac.node()->grad.data();
    for (int64_t o = 0; o < outer; ++o) {
      double* grow = g + (o * full + start) * inner;
      const double* dyrow = dy + o * len * inner;
      for (int64_t i = 0; i < len * inner; ++i) grow[i] += dyrow[i];
    }
  });
  return out;
}

Tensor concat(const std::vector<Tensor>& parts, int64_t axis) {
  if (parts.empty()) raise(errc::shape_mismatch, "concat of zero tensors");
  const int64_t r = parts[0].rank();
  int64_t ax = axis < 0 ? axis + r : axis;
  if (ax < 0 || ax >= r) raise(errc::shape_mismatch, "concat axis out of range");
  Shape os = parts[0].shape();
  int64_t total_axis = 0;
  for (const Tensor& p : parts) {
    if (p.rank() != r) raise(errc::shape_mismatch, "concat rank mismatch");
    for (int64_t i = 0; i < r; ++i)
      if (i != ax && p.shape()[i] != os[i])
        raise(errc::shape_mismatch, "concat extent mismatch at axis " + std::to_string(i));
    total_axis += p.shape()[ax];
  }
  os[ax] = total_axis;
  int64_t outer = 1, inner = 1;
  for (int64_t i = 0; i < ax; ++i) outer *= os[i];
  for (int64_t i = ax + 1; i < r; ++i) inner *= os[i];
  Tensor out = Tensor::zeros(os);
  double* po = out.mutable_data().data();
  int64_t offset = 0;
  bool any_grad = false;
  for (const Tensor& p : parts) {
    any_grad = any_grad || p.requires_grad();
    const int64_t len = p.shape()[ax];
    const double* pp = p.data().data();
    for (int64_t o = 0; o < outer; ++o)
      std::memcpy(po + (o * total_axis + offset) * inner, pp + o * len * inner,
                  sizeof(double) * len * inner);
    offset += len;
  }
  std::vector<Tensor> pc = parts;
  Tensor oc = out;
  maybe_record(any_grad, out, [pc, oc, outer, inner, total_axis, ax]() {
    if (oc.node()->grad.empty()) return;
    const double* dy = oc.node()->grad.data();
    int64_t offset = 0;
    for (const Tensor& p : pc) {
      const int64_t len = p.shape()[ax];
      if (p.requires_grad()) {
        p.node()->ensure_grad();
        double* g = p.node()->grad.data();
        for (int64_t o = 0; o < outer; ++o) {
          const double* src = dy + (o * total_axis + offset) * inner;
          double* dst = g + o * len * inner;
          for (int64_t i = 0; i < len * inner; ++i) dst[i] += src[i];
        }
      }
      offset += len;
    }
  });
  return out;
}

Tensor softmax_last(const Tensor& a) {
  if (a.rank() < 1 || a.extent(-1) == 0)
    raise(errc::shape_mismatch, "softmax on empty axis");
  const int64_t d = a.extent(-1);
  const int64_t rows = a.numel() / d;
  Tensor out = Tensor::zeros(a.shape());
  const double* pa = a.data().data();
  double* po = out.mutable_data().data();
  for (int64_t rix = 0; rix < rows; ++rix) {
    const double* x = pa + rix * d;
    double* y = po + rix * d;
    double mx = x[0];
    for (int64_t i = 1; i < d; ++i) mx = std::max(mx, x[i]);
    double sum = 0.0;
    for (int64_t i = 0; i < d; ++i) {
      y[i] = std::exp(x[i] - mx);
      sum += y[i];
    }
    const double inv = 1.0 / sum;
    for (int64_t i = 0; i < d; ++i) y[i] *= inv;
  }
  check_finite(out.data(), "softmax");
  Tensor ac = a, oc = out;
  maybe_record(a.requires_grad(), out, [ac, oc, rows, d]() {
    if (oc.node()->grad.empty() || !ac.requires_grad()) return;
    ac.node()->ensure_grad();
    const double* y = oc.node()->data.data();
    const double* dy = oc.node()->grad.data();
    double* g = ac.node()->grad.data();
    for (int64_t rix = 0; rix < rows; ++rix) {
      const double* yr = y + rix * d;
      const double* dyr = dy + rix * d;
      double* gr = g + rix * d;
      double dot = 0.0;
      for (int64_t i = 0; i < d; ++i) dot += yr[i] * dyr[i];
      for (int64_t i = 0; i < d; ++i) gr[i] += yr[i] * (dyr[i] - dot);
    }
  });
  return out;
}

Tensor gelu(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  const double* pa = a.data().data();
  double* po = out.mutable_data().data();
  for (int64_t i = 0; i < a.numel(); ++i) {
    const double x = pa[i];
    po[i] = 0.5 * x * (1.0 + std::erf(x * kInvSqrt2));
  }
  check_finite(out.data(), "gelu");
  Tensor ac = a, oc = out;
  maybe_record(a.requires_grad(), out, [ac, oc]() {
    if (oc.node()->grad.empty() || !ac.requires_grad()) return;
    ac.node()->ensure_grad();
    const double* x = ac.data().data();
    const double* dy = oc.node()->grad.data();
    double* g = ac.node()->grad.data();
    for (size_t i = 0; i < oc.node()->grad.size(); ++i) {
      const double xi = x[i];
      const double phi = 0.5 * (1.0 + std::erf(xi * kInvSqrt2));
      const double pdf = kInvSqrt2Pi * std::exp(-0.5 * xi * xi);
      g[i] += dy[i] * (phi + xi * pdf);
    }
  });
  return out;
}

Tensor relu(const Tensor& a) {
  Tensor out = Tensor::zeros(a.shape());
  const double* pa = a.data().data();
  double* po = out.mutable_data().data();
  for (int64_t i = 0; i < a.numel(); ++i) po[i] = pa[i] > 0.0 ? pa[i] : 0.0;
  Tensor ac = a, oc = out;
  maybe_record(a.requires_grad(), out, [ac, oc]() {
    if (oc.node()->grad.empty() || !ac.requires_grad()) return;
    ac.node()->ensure_grad();
    const double* x = ac.data().data();
    const double* dy = oc.node()->grad.data();
    double* g = ac.node()->grad.data();
    for (size_t i = 0; i < oc.node()->grad.size(); ++i)
      if (x[i] > 0.0) g[i] += dy[i];
  });
  return out;
}

namespace {
Tensor reduce_all(const Tensor& a, bool mean) {
  const int64_t n = a.numel();
  double s = 0.0;
  for (double x : a.data()) s += x;
  if (mean) s /= static_cast<double>(n);
  Tensor out = Tensor::scalar(s);
  check_finite(out.data(), mean ? "mean" : "sum");
  Tensor ac = a, oc = out;
  maybe_record(a.requires_grad(), out, [ac, oc, n, mean]() {
    if (oc.node()->grad.empty() || !ac.requires_grad()) return;
    ac.node()->ensure_grad();
    const double dy = oc.node()->grad[0] * (mean ? 1.0 / static_cast<double>(n) : 1.0);
    for (double& g : ac.node()->grad) g += dy;
  });
  return out;
}
}  // namespace

Tensor mean_all(const Tensor& a) { return reduce_all(a, true); }
Tensor sum_all(const Tensor& a) { return reduce_all(a, false); }

Tensor layer_norm_last(const Tensor& x, const Tensor& gamma, const Tensor& beta) {
  const int64_t d = x.extent(-1);
  if (d == 0) raise(errc::shape_mismatch, "layer_norm on empty axis");
  if (gamma.numel() != d || beta.numel() != d)
    raise(errc::shape_mismatch, "layer_norm parameter width mismatch");
  const int64_t rows = x.numel() / d;
  constexpr double kEps = 1e-5;
  Tensor out = Tensor::zeros(x.shape());
  auto xhat = std::make_shared<std::vector<double>>(x.numel());
  auto inv_std = std::make_shared<std::vector<double>>(rows);
  const double* px = x.data().data();
  const double* pg = gamma.data().data();
  const double* pb = beta.data().data();
  double* po = out.mutable_data().data();
  for (int64_t rix = 0; rix < rows; ++rix) {
    const double* xr = px + rix * d;
    double mu = 0.0;
    for (int64_t i = 0; i < d; ++i) mu += xr[i];
    mu /= d;
    double var = 0.0;
    for (int64_t i = 0; i < d; ++i) {
      const double c = xr[i] - mu;
      var += c * c;
    }
    var /= d;
    const double is = 1.0 / std::sqrt(var + kEps);
    (*inv_std)[rix] = is;
    double* xh = xhat->data() + rix * d;
    double* yr = po + rix * d;
    for (int64_t i = 0; i < d; ++i) {
      xh[i] = (xr[i] - mu) * is;
      yr[i] = xh[i] * pg[i] + pb[i];
    }
  }
  check_finite(out.data(), "layer_norm");
  Tensor xc = x, gc = gamma, bc = beta, oc = out;
  maybe_record(x.requires_grad() || gamma.requires_grad() || beta.requires_grad(), out,
               [xc, gc, bc, oc, xhat, inv_std, rows, d]() {
    if (oc.node()->grad.empty()) return;
    const double* dy = oc.node()->grad.data();
    const double* pg = gc.data().data();
    if (gc.requires_grad()) {
      gc.node()->ensure_grad();
      double* gg = gc.node()->grad.data();
      for (int64_t rix = 0; rix < rows; ++rix) {
        const double* dyr = dy + rix * d;
        const double* xh = xhat->data() + rix * d;
        for (int64_t i = 0; i < d; ++i) gg[i] += dyr[i] * xh[i];
      }
    }
    if (bc.requires_grad()) {
      bc.node()->ensure_grad();
      double* gb = bc.node()->grad.data();
      for (int64_t rix = 0; rix < rows; ++rix) {
        const double* dyr = dy + rix * d;
        for (int64_t i = 0; i < d; ++i) gb[i] += dyr[i];
      }
    }
    if (xc.requires_grad()) {
      xc.node()->ensure_grad();
      double* gx = xc.node()->grad.data();
      for (int64_t rix = 0; rix < rows; ++rix) {
        const double* dyr = dy + rix * d;
        const double* xh = xhat->data() + rix * d;
        const double is = (*inv_std)[rix];
        double mean_dxh = 0.0, mean_dxh_xh = 0.0;
        for (int64_t i = 0; i < d; ++i) {
          const double dxh = dyr[i] * pg[i];
          mean_dxh += dxh;
          mean_dxh_xh += dxh * xh[i];
        }
        mean_dxh /= d;
        mean_dxh_xh /= d;
        double* gxr = gx + rix * d;
        for (int64_t i = 0; i < d; ++i) {
          const double dxh = dyr[i] * pg[i];
          gxr[i] += is * (dxh - mean_dxh - xh[i] * mean_dxh_xh);
        }
      }
    }
  });
  return out;
}

Tensor linear(const Tensor& x, const Tensor& w, const Tensor& b) {
  if (w.rank() != 2) raise(errc::shape_mismatch, "linear weight must be rank 2");
  const int64_t in = w.extent(0), out_w = w.extent(1);
  if (x.extent(-1) != in)
    raise(errc::shape_mismatch, "linear input width " + std::to_string(x.extent(-1)) +
                                    " vs weight " + shape_str(w.shape()));
  if (b.numel() != out_w) raise(errc::shape_mismatch, "linear bias width mismatch");
  const int64_t rows = x.numel() / in;
  Shape os = x.shape();
  os.back() = out_w;
  Tensor out = Tensor::zeros(os);
  const double* px = x.data().data();
  const double* pw = w.data().data();
  const double* pb = b.data().data();
  double* po = out.mutable_data().data();
  mm_nn(px, pw, po, rows, in, out_w, false);
  for (int64_t rix = 0; rix < rows; ++rix) {
    double* orow = po + rix * out_w;
    for (int64_t j = 0; j < out_w; ++j) orow[j] += pb[j];
  }
  check_finite(out.data(), "linear");
  Tensor xc = x, wc = w, bc = b, oc = out;
  maybe_record(x.requires_grad() || w.requires_grad() || b.requires_grad(), out,
               [xc, wc, bc, oc, rows, in, out_w]() {
    if (oc.node()->grad.empty()) return;
    const double* dy = oc.node()->grad.data();
    if (xc.requires_grad()) {
      xc.node()->ensure_grad();
      mm_nt(dy, wc.data().data(), xc.node()->grad.data(), rows, out_w, in, true);
    }
    if (wc.requires_grad()) {
      wc.node()->ensure_grad();
      mm_tn(xc.data().data(), dy, wc.node()->grad.data(), rows, in, out_w, true);
    }
    if (bc.requires_grad()) {
      bc.node()->ensure_grad();
      double* gb = bc.node()->grad.data();
      for (int64_t rix = 0; rix < rows; ++rix) {
        const double* dyr = dy + rix * out_w;
        for (int64_t j = 0; j < out_w; ++j) gb[j] += dyr[j];
      }
    }
  });
  return out;
}

Tensor move_last_axis_front(const Tensor& a) {
  if (a.rank() < 2) raise(errc::shape_mismatch, "move_last_axis_front needs rank >= 2");
  const Shape& s = a.shape();
  const int64_t last = s.back();
  const int64_t rest = a.numel() / last;
  Shape os;
  os.push_back(last);
  os.insert(os.end(), s.begin(), s.end() - 1);
  Tensor out = Tensor::zeros(os);
  transpose2d(a.data().data(), out.mutable_data().data(), rest, last);
  Tensor ac = a, oc = out;
  maybe_record(a.requires_grad(), out, [ac, oc, rest, last]() {
    if (oc.node()->grad.empty() || !ac.requires_grad()) return;
    ac.node()->ensure_grad();
    const double* dy = oc.node()->grad.data();
    double* g = ac.node()->grad.data();
    for (int64_t j = 0; j < last; ++j)
      for (int64_t i = 0; i < rest; ++i) g[i * last + j] += dy[j * rest + i];
  });
  return out;
}

Tensor move_first_axis_back(const Tensor& a) {
  if (a.rank() < 2) raise(errc::shape_mismatch, "move_first_axis_back needs rank >= 2");
  const Shape& s = a.shape();
  const int64_t first = s.front();
  const int64_t rest = a.numel() / first;
  Shape os(s.begin() + 1, s.end());
  os.push_back(first);
  Tensor out = Tensor::zeros(os);
  transpose2d(a.data().data(), out.mutable_data().data(), first, rest);
  Tensor ac = a, oc = out;
  maybe_record(a.requires_grad(), out, [ac, oc, first, rest]() {
    if (oc.node()->grad.empty() || !ac.requires_grad()) return;
    ac.node()->ensure_grad();
    const double* dy = oc.node()->grad.data();
    double* g = ac.node()->grad.data();
    for (int64_t i = 0; i < rest; ++i)
      for (int64_t j = 0; j < first; ++j) g[j * rest + i] += dy[i * first + j];
  });
  return out;
}

Tensor downsample_stride(const Tensor& a, int64_t stride, int spatial_dims) {
  if (stride == 1) return a;
  if (stride < 1) raise(errc::bad_value, "stride must be >= 1");
  const Shape& s = a.shape();
  if (static_cast<int64_t>(s.size()) < spatial_dims)
    raise(errc::shape_mismatch, "downsample rank too small");
  for (int d = 0; d < spatial_dims; ++d)
    if (s[d] % stride != 0)
      raise(errc::shape_mismatch, "extent not divisible by stride");
  Shape os = s;
  for (int d = 0; d < spatial_dims; ++d) os[d] = s[d] / stride;
  int64_t inner = 1;
  for (size_t d = spatial_dims; d < s.size(); ++d) inner *= s[d];
  Tensor out = Tensor::zeros(os);
  const double* pa = a.data().data();
  double* po = out.mutable_data().data();
  if (spatial_dims == 1) {
    for (int64_t i = 0; i < os[0]; ++i)
      std::memcpy(po + i * inner, pa + i * stride * inner, sizeof(double) * inner);
  } else {
    const int64_t n2 = s[1];
    for (int64_t i = 0; i < os[0]; ++i)
      for (int64_t j = 0; j < os[1]; ++j)
        std::memcpy(po + (i * os[1] + j) * inner,
                    pa + (i * stride * n2 + j * stride) * inner,
                    sizeof(double) * inner);
  }
  Tensor ac = a, oc = out;
  Shape in_shape = s, out_shape = os;
  maybe_record(a.requires_grad(), out,
               [ac, oc, stride, spatial_dims, inner, in_shape, out_shape]() {
    if (oc.node()->grad.empty() || !ac.requires_grad()) return;
    ac.node()->ensure_grad();
    const double* dy = oc.node()->grad.data();
    double* g = ac.node()->grad.data();
    if (spatial_dims == 1) {
      for (int64_t i = 0; i < out_shape[0]; ++i)
        for (int64_t c = 0; c < inner; ++c)
          g[i * stride * inner + c] += dy[i * inner + c];
    } else {
      const int64_t n2 = in_shape[1];
      for (int64_t i = 0; i < out_shape[0]; ++i)
        for (int64_t j = 0; j < out_shape[1]; ++j)
          for (int64_t c = 0; c < inner; ++c)
            g[(i * stride * n2 + j * stride) * inner + c] +=
                dy[(i * out_shape[1] + j) * inner + c];
    }
  });
  return out;
}

Tensor upsample_nn(const Tensor& a, int64_t stride, int spatial_dims,
                   const std::vector<int64_t>& full_extents) {
  if (stride == 1) return a;
  const Shape& s = a.shape();
  if (static_cast<int64_t>(full_extents.size()) != spatial_dims)
    raise(errc::shape_mismatch, "upsample extent list mismatch");
  for (int d = 0; d < spatial_dims; ++d)
    if (s[d] * stride != full_extents[d])
      raise(errc::shape_mismatch, "upsample extents incompatible with stride");
  Shape os = s;
  for (int d = 0; d < spatial_dims; ++d) os[d] = full_extents[d];
  int64_t inner = 1;
  for (size_t d = spatial_dims; d < s.size(); ++d) inner *= s[d];
  Tensor out = Tensor::zeros(os);
  const double* pa = a.data().data();
  double* po = out.mutable_data().data();
  if (spatial_dims == 1) {
    for (int64_t i = 0; i < os[0]; ++i)
      std::memcpy(po + i * inner, pa + (i / stride) * inner, sizeof(double) * inner);
  } else {
    for (int64_t i = 0; i < os[0]; ++i)
      for (int64_t j = 0; j < os[1]; ++j)
        std::memcpy(po + (i * os[1] + j) * inner,
                    pa + ((i / stride) * s[1] + (j / stride)) * inner,
                    sizeof(double) * inner);
  }
  Tensor ac = a, oc = out;
  Shape in_shape = s, out_shape = os;
  maybe_record(a.requires_grad(), out,
               [ac, oc, stride, spatial_dims, inner, in_shape, out_shape]() {
    if (oc.node()->grad.empty() || !ac.requires_grad()) return;
    ac.node()->ensure_grad();
    const double* dy = oc.node()->grad.data();
    double* g = ac.node()->grad.data();
    if (spatial_dims == 1) {
      for (int64_t i = 0; i < out_shape[0]; ++i)
        for (int64_t c = 0; c < inner; ++c)
          g[(i / stride) * inner + c] += dy[i * inner + c];
    } else {
      for (int64_t i = 0; i < out_shape[0]; ++i)
        for (int64_t j = 0; j < out_shape[1]; ++j)
          for (int64_t c = 0; c < inner; ++c)
            g[((i / stride) * in_shape[1] + (j / stride)) * inner + c] +=
                dy[(i * out_shape[1] + j) * inner + c];
    }
  });
  return out;
}

// ---- optimizer ----------------------------------------------------------------

void AdamState::init(const std::vector<Tensor>& params) {
  m.clear();
  v.clear();
  for (const Tensor& p : params) {
    m.emplace_back(p.numel(), 0.0);
    v.emplace_back(p.numel(), 0.0);
  }
  step = 0;
}

void adam_step(std::vector<Tensor>& params,
               const std::vector<std::span<const double>>& grads,
               AdamState& state) {
  if (params.size() != grads.size() || params.size() != state.m.size())
    raise(errc::shape_mismatch, "adam_step: parameter/gradient/state count mismatch");
  state.step += 1;
  const double bc1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double bc2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  for (size_t p = 0; p < params.size(); ++p) {
    if (static_cast<int64_t>(grads[p].size()) != params[p].numel())
      raise(errc::shape_mismatch, "adam_step: gradient length mismatch");
    double* w = params[p].mutable_data().data();
    const double* g = grads[p].data();
    double* mp = state.m[p].data();
    double* vp = state.v[p].data();
    const int64_t n = params[p].numel();
    for (int64_t i = 0; i < n; ++i) {
      mp[i] = state.beta1 * mp[i] + (1.0 - state.beta1) * g[i];
      vp[i] = state.beta2 * vp[i] + (1.0 - state.beta2) * g[i] * g[i];
      const double mhat = mp[i] / bc1;
      const double vhat = vp[i] / bc2;
      w[i] -= state.lr * (mhat / (std::sqrt(vhat) + state.eps) +
                          state.weight_decay * w[i]);
    }
  }
}

// ---- gradient verification -----------------------------------------------------

double grad_check(const std::function<Tensor(const Tensor&)>& f,
                  const Tensor& x, double h) {
  Tensor xg = x.clone_detached();
  xg.set_requires_grad(true);
  std::vector<double> ad(x.numel(), 0.0);
  {
    Tape tape;
    Tape::Scope scope(tape);
    Tensor y = f(xg);
    tape.backward(y);
    if (xg.has_grad()) {
      auto g = xg.grad();
      std::copy(g.begin(), g.end(), ad.begin());
    }
  }
  Tensor xp = x.clone_detached();
  double* px = xp.mutable_data().data();
  double max_rel = 0.0;
  for (int64_t i = 0; i < x.numel(); ++i) {
    const double x0 = px[i];
    px[i] = x0 + h;
    const double fp = f(xp).item();
    px[i] = x0 - h;
    const double fm = f(xp).item();
    px[i] = x0;
    if (!std::isfinite(fp) || !std::isfinite(fm))
      raise(errc::non_finite, "grad_check: function not finite at perturbed point");
    const double fd = (fp - fm) / (2.0 * h);
    const double rel = std::abs(ad[i] - fd) / (std::abs(fd) + 1e-12);
    max_rel = std::max(max_rel, rel);
  }
  return max_rel;
}

}  // namespace wf
