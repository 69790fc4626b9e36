#include "eosc/quadrature.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace eosc {

namespace {

// Gauss-Legendre nodes/weights on [-1, 1] via Newton on the Legendre recurrence.
std::pair<std::vector<double>, std::vector<double>> gauss_legendre(int n) {
  std::vector<double> x(static_cast<std::size_t>(n)), w(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    double t = std::cos(M_PI * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p0 = 1.0, p1 = t;
      for (int k = 2; k <= n; ++k) {
        const double p2 = ((2.0 * k - 1.0) * t * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
      }
      if (n == 1) p1 = t, p0 = 1.0;
      dp = n * (t * p1 - p0) / (t * t - 1.0);
      const double dt = p1 / dp;
      t -= dt;
      if (std::abs(dt) < 1e-16) break;
    }
    x[static_cast<std::size_t>(i)] = t;
    w[static_cast<std::size_t>(i)] = 2.0 / ((1.0 - t * t) * dp * dp);
  }
  return {x, w};
}

std::mutex cache_mutex;

}  // namespace

const std::vector<QuadPoint>& triangle_rule(int n) {
  static std::map<int, std::vector<QuadPoint>> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  if (n < 1) throw std::invalid_argument("triangle_rule: n must be positive");
  const auto [x, w] = gauss_legendre(n);
  std::vector<QuadPoint> rule;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < x.size(); ++j) {
      // (u, v) in the unit square mapped to the triangle by l1 = u(1 - v), l2 = v.
      const double u = 0.5 * (x[i] + 1.0);
      const double v = 0.5 * (x[j] + 1.0);
      const double l1 = u * (1.0 - v);
      const double l2 = v;
      // Reference area 1/2, Jacobian (1 - v), square weights 1/4 each side.
      const double wt = 0.25 * w[i] * w[j] * (1.0 - v) * 2.0;
      rule.push_back({{1.0 - l1 - l2, l1, l2}, wt});
    }
  return cache.emplace(n, std::move(rule)).first->second;
}

const std::vector<QuadPoint>& segment_rule(int n) {
  static std::map<int, std::vector<QuadPoint>> cache;
  std::lock_guard<std::mutex> lock(cache_mutex);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  if (n < 1) throw std::invalid_argument("segment_rule: n must be positive");
  const auto [x, w] = gauss_legendre(n);
  std::vector<QuadPoint> rule;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = 0.5 * (x[i] + 1.0);
    rule.push_back({{1.0 - s, s, 0.0}, 0.5 * w[i]});
  }
  return cache.emplace(n, std::move(rule)).first->second;
}

}  // namespace eosc
