#pragma once

#include <vector>

#include "eosc/bary_poly.hpp"

namespace eosc {

struct QuadPoint {
  Bary bary;
  double weight;  // weights sum to 1, multiply by the measure
};

/// Collapsed Gauss-Legendre rule on a triangle, exact for degree 2n - 2.
/// The default n = 5 integrates degree 8 exactly.
const std::vector<QuadPoint>& triangle_rule(int n = 5);

/// Gauss-Legendre on a segment in barycentric form (third entry unused),
/// exact for degree 2n - 1. The default n = 5 integrates degree 9 exactly.
const std::vector<QuadPoint>& segment_rule(int n = 5);

inline constexpr int kTriangleExactDegree = 8;
inline constexpr int kSegmentExactDegree = 9;

}  // namespace eosc
