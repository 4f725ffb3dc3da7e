// Adaptive spatial feature fusion over a three-level pyramid: every level is
// resampled to the target level's grid, each gets a per-location weight from
// a 1x1 generator, weights are softmax-normalised across levels, and the
// weighted levels are summed.
//
// The softmax normalisation is an assumption of this library; it makes every
// fused value a convex combination of the resampled inputs.
#ifndef ABCD_ASFF_HPP
#define ABCD_ASFF_HPP

#include <array>
#include <cmath>

#include "abcd/random.hpp"
#include "abcd/tensor.hpp"

namespace abcd {

inline constexpr int kPyramidLevels = 3;

// x1 has the smallest grid (largest receptive field), x3 the largest grid.
template <typename Scalar = double>
class PyramidFeatures {
 public:
  PyramidFeatures(FeatureMap<Scalar> x1, FeatureMap<Scalar> x2,
                  FeatureMap<Scalar> x3)
      : levels_{std::move(x1), std::move(x2), std::move(x3)} {
    for (int i = 1; i < kPyramidLevels; ++i) {
      const auto& lo = levels_[i - 1];
      const auto& hi = levels_[i];
      if (lo.channels() != hi.channels()) {
        throw ShapeError("pyramid levels must share a channel count");
      }
      if (lo.height() > hi.height() || lo.width() > hi.width()) {
        throw ShapeError("pyramid levels must grow from x1 to x3, got " +
                         lo.shape_string() + " before " + hi.shape_string());
      }
    }
  }

  // 1-based, matching the level names.
  const FeatureMap<Scalar>& level(int l) const {
    if (l < 1 || l > kPyramidLevels) {
      throw ConfigError("pyramid level must be 1, 2 or 3");
    }
    return levels_[l - 1];
  }

  Index channels() const { return levels_[0].channels(); }

 private:
  std::array<FeatureMap<Scalar>, kPyramidLevels> levels_;
};

template <typename Scalar = double>
class AsffParams {
 public:
  using Generators = std::array<std::array<Kernel2D<Scalar>, kPyramidLevels>,
                                kPyramidLevels>;

  AsffParams() = default;

  explicit AsffParams(Generators generators)
      : generators_(std::move(generators)) {
    const Index c = generators_[0][0].in_channels();
    for (const auto& per_target : generators_) {
      for (const auto& g : per_target) {
        if (g.in_channels() != c || g.out_channels() != 1 || g.size() != 1) {
          throw ConfigError(
              "asff generators must all be 1x1 kernels with one output "
              "channel and a common input channel count");
        }
      }
    }
  }

  // All logits zero: equal weights 1/3 everywhere.
  static AsffParams zeros(Index channels) {
    Generators g;
    for (auto& per_target : g) {
      for (auto& k : per_target) k = Kernel2D<Scalar>(1, channels, 1);
    }
    return AsffParams(std::move(g));
  }

  // Weights and bias uniform on [-1/sqrt(C), 1/sqrt(C)].
  static AsffParams random(Index channels, Rng& rng) {
    AsffParams p = zeros(channels);
    const double bound = 1.0 / std::sqrt(static_cast<double>(channels));
    for (auto& per_target : p.generators_) {
      for (auto& k : per_target) {
        for (Index i = 0; i < k.weights().size(); ++i) {
          k.weights()(i) = static_cast<Scalar>(rng.uniform(-bound, bound));
        }
        k.bias()(0) = static_cast<Scalar>(rng.uniform(-bound, bound));
      }
    }
    return p;
  }

  // Generator turning source level `source` into a logit map for fusion at
  // `target`. Both 1-based.
  const Kernel2D<Scalar>& generator(int target, int source) const {
    check_level(target);
    check_level(source);
    return generators_[target - 1][source - 1];
  }
  Kernel2D<Scalar>& generator(int target, int source) {
    check_level(target);
    check_level(source);
    return generators_[target - 1][source - 1];
  }

  Index channels() const { return generators_[0][0].in_channels(); }

 private:
  static void check_level(int l) {
    if (l < 1 || l > kPyramidLevels) {
      throw ConfigError("asff level must be 1, 2 or 3, got " +
                        std::to_string(l));
    }
  }

  Generators generators_;
};

template <typename Scalar>
FeatureMap<Scalar> resize_level(const FeatureMap<Scalar>& src,
                                const FeatureMap<Scalar>& target) {
  if (src.channels() != target.channels()) {
    throw ShapeError("resize_level: channel mismatch " + src.shape_string() +
                     " vs " + target.shape_string());
  }
  return resize_nearest(src, target.height(), target.width());
}

// Softmax over the three generator logits at every location. The returned
// maps are 1 x H x W and sum to one pointwise.
template <typename Scalar>
std::array<FeatureMap<Scalar>, kPyramidLevels> fusion_weights(
    const std::array<FeatureMap<Scalar>, kPyramidLevels>& resized,
    const AsffParams<Scalar>& p, int target_level) {
  for (int s = 1; s < kPyramidLevels; ++s) {
    if (resized[s].height() != resized[0].height() ||
        resized[s].width() != resized[0].width()) {
      throw ShapeError("fusion_weights: resized levels must share dims");
    }
  }
  std::array<FeatureMap<Scalar>, kPyramidLevels> w;
  for (int s = 0; s < kPyramidLevels; ++s) {
    w[s] = conv2d(resized[s], p.generator(target_level, s + 1));
  }
  auto& l0 = w[0].data();
  auto& l1 = w[1].data();
  auto& l2 = w[2].data();
  const RowMajorMatrix<Scalar> peak = l0.cwiseMax(l1).cwiseMax(l2);
  l0 = (l0 - peak).array().exp().matrix();
  l1 = (l1 - peak).array().exp().matrix();
  l2 = (l2 - peak).array().exp().matrix();
  const RowMajorMatrix<Scalar> total = l0 + l1 + l2;
  l0 = l0.cwiseQuotient(total);
  l1 = l1.cwiseQuotient(total);
  l2 = l2.cwiseQuotient(total);
  return w;
}

template <typename Scalar>
struct AsffTrace {
  std::array<FeatureMap<Scalar>, kPyramidLevels> resized;
  std::array<FeatureMap<Scalar>, kPyramidLevels> weights;
  FeatureMap<Scalar> output;
};

template <typename Scalar>
AsffTrace<Scalar> asff_trace(const PyramidFeatures<Scalar>& pyr,
                             const AsffParams<Scalar>& p, int target_level) {
  if (pyr.channels() != p.channels()) {
    throw ShapeError("asff_fuse: pyramid has " +
                     std::to_string(pyr.channels()) +
                     " channels, params expect " + std::to_string(p.channels()));
  }
  const auto& target = pyr.level(target_level);
  AsffTrace<Scalar> t;
  for (int s = 0; s < kPyramidLevels; ++s) {
    t.resized[s] = resize_level(pyr.level(s + 1), target);
  }
  t.weights = fusion_weights(t.resized, p, target_level);
  t.output = FeatureMap<Scalar>(target.channels(), target.height(),
                                target.width());
  for (int s = 0; s < kPyramidLevels; ++s) {
    t.output.data().array() +=
        t.resized[s].data().array().rowwise() *
        t.weights[s].data().row(0).array();
  }
  return t;
}

template <typename Scalar>
FeatureMap<Scalar> asff_fuse(const PyramidFeatures<Scalar>& pyr,
                             const AsffParams<Scalar>& p, int target_level) {
  return asff_trace(pyr, p, target_level).output;
}

}  // namespace abcd

#endif  // ABCD_ASFF_HPP
