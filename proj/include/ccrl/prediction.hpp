#pragma once

#include <vector>

#include "ccrl/core_data.hpp"

namespace ccrl {

// A relevance score for one (segment, class) pair.
struct Prediction {
  ClassId class_id = 0;
  SegmentRef segment;
  double score = 0.0;

  bool operator==(const Prediction&) const = default;
};

using Predictions = std::vector<Prediction>;

}  // namespace ccrl
