#include "eosc/bary_poly.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace eosc {

namespace {

bool exp_less(const Exponent& a, const Exponent& b) { return a < b; }

constexpr int kMaxPower = 24;

}  // namespace

double factorial(int n) {
  static const auto table = [] {
    std::array<double, 40> t{};
    t[0] = 1.0;
    for (std::size_t i = 1; i < t.size(); ++i) t[i] = t[i - 1] * static_cast<double>(i);
    return t;
  }();
  if (n < 0 || n >= static_cast<int>(table.size())) throw std::out_of_range("factorial");
  return table[static_cast<std::size_t>(n)];
}

double integrate_barycentric(double area, const Exponent& alpha) {
  const int sum = alpha[0] + alpha[1] + alpha[2];
  return factorial(kDim) * factorial(alpha[0]) * factorial(alpha[1]) * factorial(alpha[2]) /
         factorial(sum + kDim) * area;
}

double integrate_barycentric_segment(double length, int a0, int a1) {
  return factorial(kDim - 1) * factorial(a0) * factorial(a1) / factorial(a0 + a1 + kDim - 1) *
         length;
}

BaryPoly BaryPoly::constant(double c) {
  BaryPoly p;
  p.add_term({0, 0, 0}, c);
  return p;
}

BaryPoly BaryPoly::coordinate(int i) {
  Exponent e{0, 0, 0};
  e[static_cast<std::size_t>(i)] = 1;
  return monomial(e);
}

BaryPoly BaryPoly::monomial(Exponent e, double c) {
  BaryPoly p;
  p.add_term(e, c);
  return p;
}

void BaryPoly::add_term(Exponent e, double c) {
  if (c == 0.0) return;
  auto it = std::lower_bound(terms_.begin(), terms_.end(), e,
                             [](const Monomial& m, const Exponent& x) { return exp_less(m.exp, x); });
  if (it != terms_.end() && it->exp == e) {
    it->coef += c;
    if (it->coef == 0.0) terms_.erase(it);
  } else {
    terms_.insert(it, Monomial{e, c});
  }
}

int BaryPoly::degree() const {
  int d = 0;
  for (const auto& m : terms_) d = std::max(d, m.exp[0] + m.exp[1] + m.exp[2]);
  return d;
}

double BaryPoly::operator()(const Bary& l) const {
  if (terms_.empty()) return 0.0;
  int maxp = 0;
  for (const auto& m : terms_) maxp = std::max({maxp, int(m.exp[0]), int(m.exp[1]), int(m.exp[2])});
  std::array<std::array<double, kMaxPower + 1>, 3> pw{};
  for (std::size_t i = 0; i < 3; ++i) {
    pw[i][0] = 1.0;
    for (int k = 1; k <= maxp; ++k) pw[i][static_cast<std::size_t>(k)] = pw[i][static_cast<std::size_t>(k - 1)] * l[i];
  }
  double v = 0.0;
  for (const auto& m : terms_) v += m.coef * pw[0][m.exp[0]] * pw[1][m.exp[1]] * pw[2][m.exp[2]];
  return v;
}

BaryPoly BaryPoly::derivative(int i) const {
  BaryPoly d;
  const auto k = static_cast<std::size_t>(i);
  for (const auto& m : terms_) {
    if (m.exp[k] == 0) continue;
    Exponent e = m.exp;
    const double c = m.coef * e[k];
    e[k] = static_cast<std::uint8_t>(e[k] - 1);
    d.add_term(e, c);
  }
  return d;
}

BaryPoly& BaryPoly::operator+=(const BaryPoly& o) {
  for (const auto& m : o.terms_) add_term(m.exp, m.coef);
  return *this;
}

BaryPoly& BaryPoly::operator-=(const BaryPoly& o) {
  for (const auto& m : o.terms_) add_term(m.exp, -m.coef);
  return *this;
}

BaryPoly& BaryPoly::operator*=(double s) {
  if (s == 0.0) {
    terms_.clear();
    return *this;
  }
  for (auto& m : terms_) m.coef *= s;
  return *this;
}

BaryPoly BaryPoly::from_pairs(std::vector<std::pair<Key, double>>& items) {
  std::sort(items.begin(), items.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
  BaryPoly r;
  r.terms_.reserve(items.size());
  for (std::size_t i = 0; i < items.size();) {
    const Key k = items[i].first;
    double c = 0.0;
    for (; i < items.size() && items[i].first == k; ++i) c += items[i].second;
    if (c != 0.0) r.terms_.push_back({exp_of(k), c});
  }
  return r;
}

BaryPoly operator*(const BaryPoly& a, const BaryPoly& b) {
  std::vector<std::pair<BaryPoly::Key, double>> items;
  items.reserve(a.terms_.size() * b.terms_.size());
  for (const auto& x : a.terms_) {
    const auto kx = BaryPoly::key_of(x.exp);
    for (const auto& y : b.terms_) items.emplace_back(kx + BaryPoly::key_of(y.exp), x.coef * y.coef);
  }
  return BaryPoly::from_pairs(items);
}

double BaryPoly::triangle_mean() const {
  double s = 0.0;
  for (const auto& m : terms_) s += m.coef * integrate_barycentric(1.0, m.exp);
  return s;
}

double BaryPoly::edge_mean(int i) const {
  const auto k = static_cast<std::size_t>(i);
  const std::size_t a = (k + 1) % 3;
  const std::size_t b = (k + 2) % 3;
  double s = 0.0;
  for (const auto& m : terms_) {
    if (m.exp[k] != 0) continue;
    s += m.coef * integrate_barycentric_segment(1.0, m.exp[a], m.exp[b]);
  }
  return s;
}

double BaryPoly::segment_mean() const {
  double s = 0.0;
  for (const auto& m : terms_) {
    if (m.exp[2] != 0) throw std::invalid_argument("segment polynomial uses a third coordinate");
    s += m.coef * integrate_barycentric_segment(1.0, m.exp[0], m.exp[1]);
  }
  return s;
}

BaryPoly BaryPoly::compose(const std::array<Bary, 3>& columns) const {
  // l_i = Σ_j A_ij m_j, so each l_i is a linear form in m.
  int maxp = 0;
  for (const auto& m : terms_) maxp = std::max({maxp, int(m.exp[0]), int(m.exp[1]), int(m.exp[2])});
  std::array<std::vector<BaryPoly>, 3> pw;
  for (std::size_t i = 0; i < 3; ++i) {
    BaryPoly form;
    for (std::size_t j = 0; j < 3; ++j) {
      Exponent e{0, 0, 0};
      e[j] = 1;
      form.add_term(e, columns[j][i]);
    }
    pw[i].push_back(BaryPoly::constant(1.0));
    for (int p = 1; p <= maxp; ++p) pw[i].push_back(pw[i].back() * form);
  }
  std::vector<std::pair<Key, double>> items;
  for (const auto& m : terms_) {
    const BaryPoly ab = pw[0][m.exp[0]] * pw[1][m.exp[1]];
    for (const auto& x : ab.terms_) {
      const Key kx = key_of(x.exp);
      for (const auto& y : pw[2][m.exp[2]].terms_) items.emplace_back(kx + key_of(y.exp), m.coef * x.coef * y.coef);
    }
  }
  return from_pairs(items);
}

}  // namespace eosc
