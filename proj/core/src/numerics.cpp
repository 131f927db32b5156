#include "unrn/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unrn {

namespace {
constexpr double kNormFloor = 1e-12;
constexpr double kProbFloor = 1e-300;
constexpr double kKlQFloor = 1e-12;
}  // namespace

double dot(const Vec& a, const Vec& b) {
  if (a.size() != b.size()) throw std::invalid_argument("dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

double l2_norm(const Vec& v) { return std::sqrt(dot(v, v)); }

Vec l2_normalized(const Vec& v) {
  const double n = l2_norm(v);
  if (!(n > kNormFloor)) throw std::runtime_error("degenerate vector");
  Vec out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) out[i] = v[i] / n;
  return out;
}

Vec softmax(const Vec& scores, double temperature) {
  if (scores.empty()) throw std::invalid_argument("empty score vector");
  if (!(temperature > 0.0)) throw std::invalid_argument("temperature must be positive");
  for (double s : scores) {
    if (!std::isfinite(s)) throw std::invalid_argument("non-finite score");
  }
  const double max_score = *std::max_element(scores.begin(), scores.end());
  Vec out(scores.size());
  double sum = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    out[i] = std::max(std::exp((scores[i] - max_score) / temperature), kProbFloor);
    sum += out[i];
  }
  for (double& p : out) p /= sum;
  return out;
}

double kl_div(const Vec& p, const Vec& q) {
  if (p.size() != q.size()) throw std::invalid_argument("dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if (p[i] <= 0.0) continue;
    s += p[i] * std::log(p[i] / std::max(q[i], kKlQFloor));
  }
  return std::max(s, 0.0);
}

double cosine_sim(const Vec& a, const Vec& b) {
  const double d = dot(a, b);
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (!(na > kNormFloor) || !(nb > kNormFloor)) {
    throw std::runtime_error("degenerate vector");
  }
  return std::clamp(d / (na * nb), -1.0, 1.0);
}

CosineSimGrad cosine_sim_grad(const Vec& a, const Vec& b) {
  const double d = dot(a, b);
  const double na = l2_norm(a);
  const double nb = l2_norm(b);
  if (!(na > kNormFloor) || !(nb > kNormFloor)) {
    throw std::runtime_error("degenerate vector");
  }
  const double c = d / (na * nb);
  CosineSimGrad out;
  out.value = std::clamp(c, -1.0, 1.0);
  out.grad_a.resize(a.size());
  out.grad_b.resize(b.size());
  // d cos / d a = b / (|a||b|) - cos * a / |a|^2, symmetrically for b.
  for (std::size_t i = 0; i < a.size(); ++i) {
    out.grad_a[i] = b[i] / (na * nb) - c * a[i] / (na * na);
    out.grad_b[i] = a[i] / (na * nb) - c * b[i] / (nb * nb);
  }
  return out;
}

}  // namespace unrn
