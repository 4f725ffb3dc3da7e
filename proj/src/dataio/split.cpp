#include <algorithm>
#include <cmath>

#include "abcd/dataio.hpp"
#include "abcd/errors.hpp"

namespace abcd {

void SplitSpec::validate() const {
  if (!(train > 0.0 && val > 0.0 && test > 0.0)) {
    throw ConfigError("split ratios must be positive");
  }
  if (std::abs(train + val + test - 1.0) > 1e-9) {
    throw ConfigError("split ratios must sum to 1");
  }
}

DatasetSplit split_dataset(std::vector<std::string> ids, const SplitSpec& spec) {
  spec.validate();
  if (ids.empty()) throw ConfigError("split_dataset: no ids");
  std::sort(ids.begin(), ids.end());
  Rng rng(spec.seed);
  for (std::size_t i = ids.size() - 1; i > 0; --i) {
    std::swap(ids[i], ids[rng.below(i + 1)]);
  }
  const double n = static_cast<double>(ids.size());
  const auto first = static_cast<std::size_t>(std::lround(spec.train * n));
  const auto second =
      static_cast<std::size_t>(std::lround((spec.train + spec.val) * n));
  DatasetSplit out;
  out.train.assign(ids.begin(), ids.begin() + first);
  out.val.assign(ids.begin() + first, ids.begin() + second);
  out.test.assign(ids.begin() + second, ids.end());
  return out;
}

}  // namespace abcd
