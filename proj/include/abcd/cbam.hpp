// Convolutional block attention: a channel gate followed by a spatial gate,
// each multiplied into the feature map it was computed from.
#ifndef ABCD_CBAM_HPP
#define ABCD_CBAM_HPP

#include <cmath>

#include "abcd/random.hpp"
#include "abcd/tensor.hpp"

namespace abcd {

inline constexpr Index kDefaultReduction = 16;
inline constexpr Index kSpatialKernelSize = 7;

template <typename Scalar = double>
class CbamParams {
 public:
  CbamParams() = default;

  // The bottleneck is shared by the average- and max-pooled branches. The
  // spatial kernel maps the two stat-pooled channels to one logit map.
  CbamParams(Mlp2<Scalar> mlp, Kernel2D<Scalar> spatial_kernel)
      : mlp_(std::move(mlp)), spatial_(std::move(spatial_kernel)) {
    if (spatial_.size() != kSpatialKernelSize || spatial_.in_channels() != 2 ||
        spatial_.out_channels() != 1) {
      throw ConfigError("cbam spatial kernel must be 1x2x7x7");
    }
  }

  static CbamParams zeros(Index channels, Index reduction = kDefaultReduction) {
    return {Mlp2<Scalar>(channels, reduction),
            Kernel2D<Scalar>(1, 2, kSpatialKernelSize)};
  }

  // Every weight and bias uniform on [-1/sqrt(fan_in), 1/sqrt(fan_in)].
  static CbamParams random(Index channels, Rng& rng,
                           Index reduction = kDefaultReduction) {
    CbamParams p = zeros(channels, reduction);
    const auto fill = [&rng](auto& m, Index fan_in) {
      const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
      for (Index i = 0; i < m.size(); ++i) {
        m.data()[i] = static_cast<Scalar>(rng.uniform(-bound, bound));
      }
    };
    fill(p.mlp_.w0(), channels);
    fill(p.mlp_.b0(), channels);
    fill(p.mlp_.w1(), p.mlp_.hidden());
    fill(p.mlp_.b1(), p.mlp_.hidden());
    const Index spatial_fan_in = 2 * kSpatialKernelSize * kSpatialKernelSize;
    fill(p.spatial_.weights(), spatial_fan_in);
    fill(p.spatial_.bias(), spatial_fan_in);
    return p;
  }

  const Mlp2<Scalar>& mlp() const { return mlp_; }
  Mlp2<Scalar>& mlp() { return mlp_; }
  const Kernel2D<Scalar>& spatial_kernel() const { return spatial_; }
  Kernel2D<Scalar>& spatial_kernel() { return spatial_; }
  Index channels() const { return mlp_.in_dim(); }
  Index reduction() const { return mlp_.reduction(); }

 private:
  Mlp2<Scalar> mlp_;
  Kernel2D<Scalar> spatial_;
};

// sigma(mlp(avgpool F) + mlp(maxpool F)); one weight in (0, 1) per channel.
template <typename Scalar>
Vector<Scalar> channel_attention(const FeatureMap<Scalar>& features,
                                 const CbamParams<Scalar>& p) {
  if (features.channels() != p.channels()) {
    throw ShapeError("channel_attention: map has " +
                     std::to_string(features.channels()) +
                     " channels, params expect " +
                     std::to_string(p.channels()));
  }
  const Vector<Scalar> logits =
      dense2(global_pool(features, PoolMode::kAvg), p.mlp()) +
      dense2(global_pool(features, PoolMode::kMax), p.mlp());
  return activate(logits, Activation::kSigmoid);
}

// sigma(conv7x7([mean_c F; max_c F])); a 1 x H x W map.
template <typename Scalar>
FeatureMap<Scalar> spatial_attention(const FeatureMap<Scalar>& features,
                                     const CbamParams<Scalar>& p) {
  const auto& k = p.spatial_kernel();
  if (k.size() != kSpatialKernelSize || k.in_channels() != 2 ||
      k.out_channels() != 1) {
    throw ConfigError("spatial_attention: kernel must be 1x2x7x7");
  }
  return activate(conv2d(channel_stat_pool(features), k),
                  Activation::kSigmoid);
}

template <typename Scalar>
struct CbamTrace {
  Vector<Scalar> channel_weights;
  FeatureMap<Scalar> channel_refined;  // F'
  FeatureMap<Scalar> spatial_weights;
  FeatureMap<Scalar> output;           // F''
};

// Channel gate first, then the spatial gate computed on the gated map.
template <typename Scalar>
CbamTrace<Scalar> cbam_trace(const FeatureMap<Scalar>& features,
                             const CbamParams<Scalar>& p) {
  CbamTrace<Scalar> t;
  t.channel_weights = channel_attention(features, p);
  t.channel_refined = elementwise(BinaryOp::kMul, features, t.channel_weights);
  t.spatial_weights = spatial_attention(t.channel_refined, p);
  t.output = elementwise(BinaryOp::kMul, t.channel_refined, t.spatial_weights);
  return t;
}

template <typename Scalar>
FeatureMap<Scalar> cbam_apply(const FeatureMap<Scalar>& features,
                              const CbamParams<Scalar>& p) {
  return cbam_trace(features, p).output;
}

}  // namespace abcd

#endif  // ABCD_CBAM_HPP
