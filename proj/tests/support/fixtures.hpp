// Synthetic detection fixtures shared by the unit and acceptance tests.
#ifndef ABCD_TESTS_FIXTURES_HPP
#define ABCD_TESTS_FIXTURES_HPP

#include <string>
#include <vector>

#include "abcd/eval.hpp"
#include "abcd/random.hpp"

namespace abcd::fixture {

struct Instance {
  std::vector<Detection> dets;
  std::vector<GroundTruth> gts;
};

// Small instances for oracle comparison: two images, two classes, at most
// four detections and three ground truths per class. Coordinates and scores
// are drawn from coarse grids so IoU and score ties occur.
inline Instance random_small_instance(Rng& rng) {
  Instance in;
  const auto box = [&rng] {
    const double x = static_cast<double>(rng.below(6));
    const double y = static_cast<double>(rng.below(6));
    const double w = 1.0 + static_cast<double>(rng.below(4));
    const double h = 1.0 + static_cast<double>(rng.below(4));
    return Box<double>{x, y, x + w, y + h};
  };
  const auto image = [&rng] { return rng.below(2) ? std::string("a") : std::string("b"); };
  for (int cls = 0; cls < 2; ++cls) {
    const auto ngt = rng.below(4);
    for (std::uint64_t g = 0; g < ngt; ++g) in.gts.push_back({image(), cls, box()});
    const auto ndet = rng.below(5);
    for (std::uint64_t d = 0; d < ndet; ++d) {
      Detection det{image(), cls, static_cast<double>(1 + rng.below(5)) / 5.0, box()};
      // Some detections copy a ground truth so true positives are common.
      if (!in.gts.empty() && rng.below(2)) {
        const auto& g = in.gts[rng.below(in.gts.size())];
        det.image_id = g.image_id;
        det.box = g.box.translated(static_cast<double>(rng.below(2)) * 0.5, 0.0);
      }
      in.dets.push_back(det);
    }
  }
  // Interleave classes so ranking is not grouped by class.
  for (std::size_t i = in.dets.size(); i > 1; --i) {
    std::swap(in.dets[i - 1], in.dets[rng.below(i)]);
  }
  return in;
}

// Per-class composition (RBC = 0, WBC = 1, Platelets = 2) and the number of
// correctly recognised cells of each class.
struct Composition {
  int gt[3];
  int correct[3];
};

inline constexpr Composition kReferenceComposition{{57, 13, 17}, {51, 12, 15}};

// Each cell is a 20x20 box on its own grid slot. Correct cells get an exact
// detection; the rest are either missed or detected as the next class, so the
// diagonal equals `correct`. A few background detections are added too.
inline Instance confusion_instance(const Composition& comp) {
  Instance in;
  int slot = 0;
  for (int cls = 0; cls < 3; ++cls) {
    for (int k = 0; k < comp.gt[cls]; ++k, ++slot) {
      const std::string image = "img" + std::to_string(slot / 20);
      const double x = 25.0 * (slot % 20), y = 25.0 * ((slot / 20) % 20);
      const Box<double> b{x, y, x + 20, y + 20};
      in.gts.push_back({image, cls, b});
      if (k < comp.correct[cls]) {
        in.dets.push_back({image, cls, 0.9, b});
      } else if (k % 2 == 0) {
        in.dets.push_back({image, (cls + 1) % 3, 0.8, b.translated(1, 1)});
      }
    }
  }
  in.dets.push_back({"img0", 0, 0.6, {600, 400, 620, 420}});
  return in;
}

}  // namespace abcd::fixture

#endif  // ABCD_TESTS_FIXTURES_HPP
