#pragma once

#include <vector>

namespace unrn {

using Vec = std::vector<double>;
using Matrix = std::vector<Vec>;

double dot(const Vec& a, const Vec& b);
double l2_norm(const Vec& v);

// Unit-length copy of v. Throws std::runtime_error("degenerate vector") when
// the norm is at or below 1e-12.
Vec l2_normalized(const Vec& v);

// Probability vector from scores/temperature. Max-subtracted so large scores
// cannot overflow; every entry is floored at 1e-300 before normalization so
// downstream log/ratio code never sees an exact zero. Entries sum to 1
// within 1e-12. Throws on an empty input ("empty score vector"), a
// non-finite score ("non-finite score") or temperature <= 0.
Vec softmax(const Vec& scores, double temperature = 1.0);

// sum_k p_k * log(p_k / q_k) with the conventions 0 * log(0) = 0 and q
// floored at 1e-12. Result is clamped at 0 so it never goes negative by
// rounding. Throws std::invalid_argument("dimension mismatch") on unequal
// lengths.
double kl_div(const Vec& p, const Vec& q);

// dot(a, b) / (|a| |b|), clamped into [-1, 1]. Throws on a dimension
// mismatch or when either norm is at or below 1e-12 ("degenerate vector").
double cosine_sim(const Vec& a, const Vec& b);

struct CosineSimGrad {
  double value = 0.0;
  Vec grad_a;
  Vec grad_b;
};

// cosine_sim together with its exact gradient with respect to both inputs.
// The clamp is inactive except at |cos| = 1 where the gradient of the
// underlying ratio is still returned.
CosineSimGrad cosine_sim_grad(const Vec& a, const Vec& b);

}  // namespace unrn
