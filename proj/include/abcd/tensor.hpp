// Minimal rank-3 feature-map kernel: exactly the dense operations needed by
// the attention and fusion modules (convolution, pooling, a two-layer
// bottleneck, activations, nearest resampling, broadcast arithmetic).
//
// Everything is templated on the scalar type; the library instantiates with
// double. Storage is an Eigen row-major matrix of shape channels x (h * w),
// so the flat layout is (c, h, w) row-major.
#ifndef ABCD_TENSOR_HPP
#define ABCD_TENSOR_HPP

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <span>
#include <string>
#include <vector>

#include "abcd/errors.hpp"

namespace abcd {

using Index = Eigen::Index;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;

template <typename Scalar>
using RowMajorMatrix =
    Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

namespace detail {

inline std::string dims_string(Index c, Index h, Index w) {
  return std::to_string(c) + "x" + std::to_string(h) + "x" + std::to_string(w);
}

inline void require_positive_dims(Index c, Index h, Index w) {
  if (c <= 0 || h <= 0 || w <= 0) {
    throw ShapeError("feature map dims must be positive, got " +
                     dims_string(c, h, w));
  }
}

}  // namespace detail

template <typename Scalar = double>
class FeatureMap {
 public:
  using Storage = RowMajorMatrix<Scalar>;

  FeatureMap() = default;

  FeatureMap(Index channels, Index height, Index width, Scalar fill = Scalar(0))
      : height_(height), width_(width) {
    detail::require_positive_dims(channels, height, width);
    data_ = Storage::Constant(channels, height * width, fill);
  }

  // Values in (c, h, w) row-major order. Rejects wrong length or non-finite
  // entries.
  FeatureMap(Index channels, Index height, Index width,
             std::span<const Scalar> values)
      : FeatureMap(channels, height, width) {
    if (static_cast<Index>(values.size()) != channels * height * width) {
      throw ShapeError("feature map " +
                       detail::dims_string(channels, height, width) +
                       " needs " + std::to_string(channels * height * width) +
                       " values, got " + std::to_string(values.size()));
    }
    std::copy(values.begin(), values.end(), data_.data());
    if (!all_finite()) throw InputError("feature map values must be finite");
  }

  FeatureMap(Index channels, Index height, Index width,
             std::initializer_list<Scalar> values)
      : FeatureMap(channels, height, width,
                   std::span<const Scalar>(values.begin(), values.size())) {}

  Index channels() const { return data_.rows(); }
  Index height() const { return height_; }
  Index width() const { return width_; }
  Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Scalar& operator()(Index c, Index y, Index x) {
    return data_(c, y * width_ + x);
  }
  Scalar operator()(Index c, Index y, Index x) const {
    return data_(c, y * width_ + x);
  }

  const Storage& data() const { return data_; }
  Storage& data() { return data_; }

  std::span<const Scalar> values() const {
    return {data_.data(), static_cast<std::size_t>(data_.size())};
  }

  // One channel viewed as an h x w row-major matrix.
  Eigen::Map<const RowMajorMatrix<Scalar>> plane(Index c) const {
    return {data_.row(c).data(), height_, width_};
  }

  bool same_shape(const FeatureMap& other) const {
    return channels() == other.channels() && height_ == other.height_ &&
           width_ == other.width_;
  }

  bool all_finite() const { return data_.allFinite(); }

  std::string shape_string() const {
    return detail::dims_string(channels(), height_, width_);
  }

  friend bool operator==(const FeatureMap& a, const FeatureMap& b) {
    return a.same_shape(b) && a.data_ == b.data_;
  }

 private:
  Index height_ = 0;
  Index width_ = 0;
  Storage data_;
};

// Convolution weights laid out [out][in][ky][kx], one bias per output channel.
template <typename Scalar = double>
class Kernel2D {
 public:
  Kernel2D() = default;

  Kernel2D(Index out_channels, Index in_channels, Index size)
      : out_(out_channels), in_(in_channels), size_(size) {
    validate_dims();
    weights_ = Vector<Scalar>::Zero(out_ * in_ * size_ * size_);
    bias_ = Vector<Scalar>::Zero(out_);
  }

  Kernel2D(Index out_channels, Index in_channels, Index size,
           Vector<Scalar> weights, Vector<Scalar> bias)
      : out_(out_channels),
        in_(in_channels),
        size_(size),
        weights_(std::move(weights)),
        bias_(std::move(bias)) {
    validate_dims();
    if (weights_.size() != out_ * in_ * size_ * size_) {
      throw ShapeError("kernel weights need " +
                       std::to_string(out_ * in_ * size_ * size_) +
                       " values, got " + std::to_string(weights_.size()));
    }
    if (bias_.size() != out_) {
      throw ShapeError("kernel bias needs " + std::to_string(out_) +
                       " values, got " + std::to_string(bias_.size()));
    }
  }

  Index out_channels() const { return out_; }
  Index in_channels() const { return in_; }
  Index size() const { return size_; }

  Scalar& weight(Index o, Index i, Index ky, Index kx) {
    return weights_(((o * in_ + i) * size_ + ky) * size_ + kx);
  }
  Scalar weight(Index o, Index i, Index ky, Index kx) const {
    return weights_(((o * in_ + i) * size_ + ky) * size_ + kx);
  }

  const Vector<Scalar>& weights() const { return weights_; }
  Vector<Scalar>& weights() { return weights_; }
  const Vector<Scalar>& bias() const { return bias_; }
  Vector<Scalar>& bias() { return bias_; }

 private:
  void validate_dims() const {
    if (out_ <= 0 || in_ <= 0 || size_ <= 0) {
      throw ShapeError("kernel dims must be positive");
    }
    if (size_ % 2 == 0) {
      throw ConfigError("kernel size must be odd, got " +
                        std::to_string(size_));
    }
  }

  Index out_ = 0;
  Index in_ = 0;
  Index size_ = 0;
  Vector<Scalar> weights_;
  Vector<Scalar> bias_;
};

// Two-layer bottleneck W1 * relu(W0 * v + b0) + b1 with hidden width
// max(1, in_dim / reduction).
template <typename Scalar = double>
class Mlp2 {
 public:
  static Index hidden_dim(Index in_dim, Index reduction) {
    if (in_dim <= 0 || reduction <= 0) {
      throw ConfigError("mlp in_dim and reduction must be positive");
    }
    return std::max<Index>(1, in_dim / reduction);
  }

  Mlp2() = default;

  // Zero-initialised.
  Mlp2(Index in_dim, Index reduction)
      : in_dim_(in_dim), reduction_(reduction) {
    const Index hidden = hidden_dim(in_dim, reduction);
    w0_ = Matrix<Scalar>::Zero(hidden, in_dim);
    b0_ = Vector<Scalar>::Zero(hidden);
    w1_ = Matrix<Scalar>::Zero(in_dim, hidden);
    b1_ = Vector<Scalar>::Zero(in_dim);
  }

  Mlp2(Index in_dim, Index reduction, Matrix<Scalar> w0, Vector<Scalar> b0,
       Matrix<Scalar> w1, Vector<Scalar> b1)
      : in_dim_(in_dim),
        reduction_(reduction),
        w0_(std::move(w0)),
        b0_(std::move(b0)),
        w1_(std::move(w1)),
        b1_(std::move(b1)) {
    const Index hidden = hidden_dim(in_dim, reduction);
    if (w0_.rows() != hidden || w0_.cols() != in_dim || b0_.size() != hidden ||
        w1_.rows() != in_dim || w1_.cols() != hidden || b1_.size() != in_dim) {
      throw ShapeError("mlp weight shapes inconsistent with in_dim " +
                       std::to_string(in_dim) + ", hidden " +
                       std::to_string(hidden));
    }
  }

  Index in_dim() const { return in_dim_; }
  Index reduction() const { return reduction_; }
  Index hidden() const { return w0_.rows(); }

  const Matrix<Scalar>& w0() const { return w0_; }
  const Vector<Scalar>& b0() const { return b0_; }
  const Matrix<Scalar>& w1() const { return w1_; }
  const Vector<Scalar>& b1() const { return b1_; }
  Matrix<Scalar>& w0() { return w0_; }
  Vector<Scalar>& b0() { return b0_; }
  Matrix<Scalar>& w1() { return w1_; }
  Vector<Scalar>& b1() { return b1_; }

 private:
  Index in_dim_ = 0;
  Index reduction_ = 1;
  Matrix<Scalar> w0_;
  Vector<Scalar> b0_;
  Matrix<Scalar> w1_;
  Vector<Scalar> b1_;
};

enum class PoolMode { kAvg, kMax };
enum class Activation { kSigmoid, kRelu };
enum class BinaryOp { kMul, kAdd };

// Branch form: never evaluates exp of a large positive argument.
template <typename Scalar>
Scalar sigmoid(Scalar x) {
  using std::exp;
  if (x >= Scalar(0)) return Scalar(1) / (Scalar(1) + exp(-x));
  const Scalar e = exp(x);
  return e / (Scalar(1) + e);
}

template <typename Scalar>
Scalar relu(Scalar x) {
  return x > Scalar(0) ? x : Scalar(0);
}

// Zero-padded cross-correlation, (size - 1) / 2 padding, stride 1.
template <typename Scalar>
FeatureMap<Scalar> conv2d(const FeatureMap<Scalar>& input,
                          const Kernel2D<Scalar>& kernel) {
  if (kernel.in_channels() != input.channels()) {
    throw ShapeError("conv2d: kernel expects " +
                     std::to_string(kernel.in_channels()) +
                     " input channels, map has " +
                     std::to_string(input.channels()));
  }
  const Index h = input.height();
  const Index w = input.width();
  const Index k = kernel.size();
  const Index pad = (k - 1) / 2;
  FeatureMap<Scalar> out(kernel.out_channels(), h, w);
  for (Index o = 0; o < kernel.out_channels(); ++o) {
    for (Index y = 0; y < h; ++y) {
      for (Index x = 0; x < w; ++x) {
        Scalar acc = kernel.bias()(o);
        for (Index i = 0; i < kernel.in_channels(); ++i) {
          for (Index ky = 0; ky < k; ++ky) {
            const Index sy = y + ky - pad;
            if (sy < 0 || sy >= h) continue;
            for (Index kx = 0; kx < k; ++kx) {
              const Index sx = x + kx - pad;
              if (sx < 0 || sx >= w) continue;
              acc += kernel.weight(o, i, ky, kx) * input(i, sy, sx);
            }
          }
        }
        out(o, y, x) = acc;
      }
    }
  }
  return out;
}

// Per-channel mean or maximum over all spatial locations.
template <typename Scalar>
Vector<Scalar> global_pool(const FeatureMap<Scalar>& input, PoolMode mode) {
  if (input.empty()) throw ShapeError("global_pool: empty feature map");
  if (mode == PoolMode::kAvg) return input.data().rowwise().mean();
  return input.data().rowwise().maxCoeff();
}

// Channel 0: per-pixel mean across channels. Channel 1: per-pixel max.
template <typename Scalar>
FeatureMap<Scalar> channel_stat_pool(const FeatureMap<Scalar>& input) {
  if (input.empty()) throw ShapeError("channel_stat_pool: empty feature map");
  FeatureMap<Scalar> out(2, input.height(), input.width());
  out.data().row(0) = input.data().colwise().mean();
  out.data().row(1) = input.data().colwise().maxCoeff();
  return out;
}

template <typename Scalar>
Vector<Scalar> dense2(const Vector<Scalar>& v, const Mlp2<Scalar>& mlp) {
  if (v.size() != mlp.in_dim()) {
    throw ShapeError("dense2: vector length " + std::to_string(v.size()) +
                     " does not match mlp in_dim " +
                     std::to_string(mlp.in_dim()));
  }
  const Vector<Scalar> hidden =
      (mlp.w0() * v + mlp.b0()).cwiseMax(Scalar(0));
  return mlp.w1() * hidden + mlp.b1();
}

template <typename Scalar>
Vector<Scalar> activate(const Vector<Scalar>& v, Activation kind) {
  if (kind == Activation::kRelu) return v.cwiseMax(Scalar(0));
  return v.unaryExpr([](Scalar x) { return sigmoid(x); });
}

template <typename Scalar>
FeatureMap<Scalar> activate(const FeatureMap<Scalar>& input, Activation kind) {
  FeatureMap<Scalar> out = input;
  if (kind == Activation::kRelu) {
    out.data() = input.data().cwiseMax(Scalar(0));
  } else {
    out.data() = input.data().unaryExpr([](Scalar x) { return sigmoid(x); });
  }
  return out;
}

// Nearest-neighbour resampling; source index = floor(dst * src_dim / dst_dim).
template <typename Scalar>
FeatureMap<Scalar> resize_nearest(const FeatureMap<Scalar>& input, Index new_h,
                                  Index new_w) {
  if (new_h <= 0 || new_w <= 0) {
    throw ShapeError("resize_nearest: target dims must be positive");
  }
  if (new_h == input.height() && new_w == input.width()) return input;
  FeatureMap<Scalar> out(input.channels(), new_h, new_w);
  std::vector<Index> src_x(static_cast<std::size_t>(new_w));
  for (Index x = 0; x < new_w; ++x) src_x[x] = x * input.width() / new_w;
  for (Index c = 0; c < input.channels(); ++c) {
    for (Index y = 0; y < new_h; ++y) {
      const Index sy = y * input.height() / new_h;
      for (Index x = 0; x < new_w; ++x) out(c, y, x) = input(c, sy, src_x[x]);
    }
  }
  return out;
}

// Broadcast rules for b, checked in this order:
//   same shape as a           -> plain elementwise,
//   a.channels x 1 x 1        -> one value per channel, spread over h x w,
//   1 x a.height x a.width    -> one value per location, spread over channels.
// Anything else is a ShapeError.
template <typename Scalar>
FeatureMap<Scalar> elementwise(BinaryOp op, const FeatureMap<Scalar>& a,
                               const FeatureMap<Scalar>& b) {
  FeatureMap<Scalar> out = a;
  auto& d = out.data();
  if (a.same_shape(b)) {
    if (op == BinaryOp::kMul) {
      d = d.cwiseProduct(b.data());
    } else {
      d += b.data();
    }
  } else if (b.channels() == a.channels() && b.height() == 1 &&
             b.width() == 1) {
    const Vector<Scalar> per_channel = b.data().col(0);
    if (op == BinaryOp::kMul) {
      d = per_channel.asDiagonal() * d;
    } else {
      d.colwise() += per_channel;
    }
  } else if (b.channels() == 1 && b.height() == a.height() &&
             b.width() == a.width()) {
    const auto per_location = b.data().row(0);
    if (op == BinaryOp::kMul) {
      d.array().rowwise() *= per_location.array();
    } else {
      d.rowwise() += per_location;
    }
  } else {
    throw ShapeError("elementwise: cannot broadcast " + b.shape_string() +
                     " onto " + a.shape_string());
  }
  return out;
}

// Per-channel vector broadcast over every spatial location.
template <typename Scalar>
FeatureMap<Scalar> elementwise(BinaryOp op, const FeatureMap<Scalar>& a,
                               const Vector<Scalar>& per_channel) {
  if (per_channel.size() != a.channels()) {
    throw ShapeError("elementwise: per-channel vector of length " +
                     std::to_string(per_channel.size()) + " vs " +
                     std::to_string(a.channels()) + " channels");
  }
  FeatureMap<Scalar> b(a.channels(), 1, 1);
  b.data().col(0) = per_channel;
  return elementwise(op, a, b);
}

}  // namespace abcd

#endif  // ABCD_TENSOR_HPP
