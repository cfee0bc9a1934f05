#pragma once

#include <cstdint>
#include <string>

#include "drifts/synthgen.hpp"

namespace drifts {

/// Synthetic fetal-brain-like subject: nested ellipsoids carrying all seven
/// FeTA labels, a T2-like intensity image with mild texture, and a labelled-
/// background shell of nonzero intensity (maternal tissue).
Subject make_phantom(const Eigen::Vector3i& dims, const Eigen::Vector3d& spacing,
                     std::uint64_t seed = 0, const std::string& id = "phantom");

}  // namespace drifts
