#pragma once

#include <map>
#include <string>
#include <vector>

#include "drifts/error.hpp"

namespace drifts {

/// Closed interval [lo, hi] used for every randomization bound.
struct Range {
  double lo = 0.0;
  double hi = 0.0;

  bool contains(double v) const { return v >= lo && v <= hi; }
  bool degenerate() const { return lo == hi; }

  void validate(const char* what) const {
    if (!(lo <= hi)) {
      throw Error(ErrorCode::InvalidRange,
                  std::string(what) + ": empty range [" + std::to_string(lo) +
                      ", " + std::to_string(hi) + "]");
    }
  }

  friend bool operator==(const Range&, const Range&) = default;
};

/// Inclusive integer range, e.g. the number of subclasses per class.
struct CountRange {
  int lo = 1;
  int hi = 1;

  friend bool operator==(const CountRange&, const CountRange&) = default;
};

/// Named numeric record of everything drawn while producing one sample.
using ParamRecord = std::map<std::string, std::vector<double>>;

}  // namespace drifts
