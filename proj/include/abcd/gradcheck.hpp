// Finite-difference verification of the CIoU gradient over seeded random box
// pairs.
#ifndef ABCD_GRADCHECK_HPP
#define ABCD_GRADCHECK_HPP

#include <array>
#include <cstdint>
#include <span>
#include <vector>

#include "abcd/box.hpp"

namespace abcd {

inline constexpr double kGradcheckStep = 1e-6;
inline constexpr double kGradcheckTolerance = 1e-4;
// Denominator floor of the relative error, for components that vanish.
inline constexpr double kGradcheckAbsFloor = 1e-5;

struct BoxPair {
  Box<double> pred;
  Box<double> gt;
};

// Pixel-scale pairs (sides 4..64, centres within a 128 px field, about half
// of them overlapping). Pairs within 1e-3 px of a min/max kink of the loss
// are redrawn.
std::vector<BoxPair> random_box_pairs(std::size_t n, std::uint64_t seed);

// |a - n| / max(|a|, |n|, kGradcheckAbsFloor).
double gradient_rel_error(double analytic, double numeric);

// Central differences of the loss with alpha frozen at its value at `pred`
// (kConstant) or re-evaluated at every probe (kFull).
BoxGradient<double> ciou_numeric_grad(const Box<double>& pred,
                                      const Box<double>& gt, AlphaMode mode,
                                      double step = kGradcheckStep);

struct GradcheckModeResult {
  double max_rel_error = 0.0;
  std::array<double, 4> worst_per_coord{};  // xmin, ymin, xmax, ymax
};

struct GradcheckReport {
  std::size_t pairs = 0;
  double step = kGradcheckStep;
  GradcheckModeResult alpha_constant;
  GradcheckModeResult alpha_full;
  double elapsed_s = 0.0;

  bool passed(double tol = kGradcheckTolerance) const {
    return alpha_constant.max_rel_error <= tol &&
           alpha_full.max_rel_error <= tol;
  }
};

// `corrupt` perturbs the analytic xmin component by 1e-2 (negative control).
GradcheckReport run_ciou_gradcheck(std::span<const BoxPair> pairs,
                                   double step = kGradcheckStep,
                                   bool corrupt = false);

}  // namespace abcd

#endif  // ABCD_GRADCHECK_HPP
