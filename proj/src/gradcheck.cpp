#include "abcd/gradcheck.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "abcd/random.hpp"

namespace abcd {
namespace {

constexpr double kKinkMargin = 1e-3;

Box<double> random_box(Rng& rng, double cx, double cy) {
  const double w = rng.uniform(4.0, 64.0);
  const double h = rng.uniform(4.0, 64.0);
  return {cx - w / 2, cy - h / 2, cx + w / 2, cy + h / 2};
}

bool near_kink(const BoxPair& p) {
  const auto& a = p.pred;
  const auto& b = p.gt;
  const double gaps[] = {
      a.xmin - b.xmin,
      a.ymin - b.ymin,
      a.xmax - b.xmax,
      a.ymax - b.ymax,
      std::min(a.xmax, b.xmax) - std::max(a.xmin, b.xmin),
      std::min(a.ymax, b.ymax) - std::max(a.ymin, b.ymin),
  };
  return std::any_of(std::begin(gaps), std::end(gaps),
                     [](double g) { return std::abs(g) < kKinkMargin; });
}

double frozen_alpha_loss(const Box<double>& pred, const Box<double>& gt,
                         double alpha) {
  const CiouTerms<double> t = ciou_terms(pred, gt);
  return 1.0 - t.iou + t.rho2 / t.c2 + alpha * t.v;
}

}  // namespace

std::vector<BoxPair> random_box_pairs(std::size_t n, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<BoxPair> out;
  out.reserve(n);
  while (out.size() < n) {
    const double cx = rng.uniform(0.0, 128.0);
    const double cy = rng.uniform(0.0, 128.0);
    BoxPair p;
    p.gt = random_box(rng, cx, cy);
    if (rng.uniform() < 0.5) {
      p.pred = random_box(rng, cx + rng.uniform(-16.0, 16.0),
                          cy + rng.uniform(-16.0, 16.0));
    } else {
      p.pred = random_box(rng, rng.uniform(0.0, 128.0), rng.uniform(0.0, 128.0));
    }
    if (!near_kink(p)) out.push_back(p);
  }
  return out;
}

double gradient_rel_error(double analytic, double numeric) {
  const double denom =
      std::max({std::abs(analytic), std::abs(numeric), kGradcheckAbsFloor});
  return std::abs(analytic - numeric) / denom;
}

BoxGradient<double> ciou_numeric_grad(const Box<double>& pred,
                                      const Box<double>& gt, AlphaMode mode,
                                      double step) {
  const double alpha = ciou_terms(pred, gt).alpha;
  const auto loss = [&](const Box<double>& b) {
    return mode == AlphaMode::kFull ? ciou_loss(b, gt)
                                    : frozen_alpha_loss(b, gt, alpha);
  };
  BoxGradient<double> g;
  for (int i = 0; i < 4; ++i) {
    Box<double> hi = pred;
    Box<double> lo = pred;
    double* const hi_c[] = {&hi.xmin, &hi.ymin, &hi.xmax, &hi.ymax};
    double* const lo_c[] = {&lo.xmin, &lo.ymin, &lo.xmax, &lo.ymax};
    *hi_c[i] += step;
    *lo_c[i] -= step;
    // Use the representable step actually taken.
    const double span = *hi_c[i] - *lo_c[i];
    g(i) = (loss(hi) - loss(lo)) / span;
  }
  return g;
}

GradcheckReport run_ciou_gradcheck(std::span<const BoxPair> pairs, double step,
                                   bool corrupt) {
  const auto start = std::chrono::steady_clock::now();
  GradcheckReport report;
  report.pairs = pairs.size();
  report.step = step;
  for (const auto& p : pairs) {
    for (const AlphaMode mode : {AlphaMode::kConstant, AlphaMode::kFull}) {
      BoxGradient<double> analytic = ciou_grad(p.pred, p.gt, mode);
      if (corrupt) analytic(0) += 1e-2;
      const BoxGradient<double> numeric =
          ciou_numeric_grad(p.pred, p.gt, mode, step);
      auto& res = mode == AlphaMode::kConstant ? report.alpha_constant
                                               : report.alpha_full;
      for (int i = 0; i < 4; ++i) {
        const double e = gradient_rel_error(analytic(i), numeric(i));
        res.worst_per_coord[i] = std::max(res.worst_per_coord[i], e);
        res.max_rel_error = std::max(res.max_rel_error, e);
      }
    }
  }
  report.elapsed_s = std::chrono::duration<double>(
                         std::chrono::steady_clock::now() - start)
                         .count();
  return report;
}

}  // namespace abcd
