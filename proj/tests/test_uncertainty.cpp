#include <cmath>
#include <stdexcept>
#include <vector>

#include "doctest.h"
#include "support/grad_check.hpp"
#include "unrn/numerics.hpp"
#include "unrn/rng.hpp"
#include "unrn/uncertainty.hpp"

namespace {

using unrn::Matrix;
using unrn::ReferenceBank;
using unrn::ReferenceMode;
using unrn::Vec;

Vec random_unit(unrn::Xoshiro256& rng, int dim) {
  Vec v(dim);
  for (double& x : v) x = rng.normal();
  return unrn::l2_normalized(v);
}

Matrix random_bank_rows(unrn::Xoshiro256& rng, int n, int dim) {
  Matrix rows;
  for (int i = 0; i < n; ++i) rows.push_back(random_unit(rng, dim));
  return rows;
}

// 2x2 or 3x3 rotation applied to a vector. For 3x3 the rotation is around
// the z axis followed by one around x, which is orthogonal by construction.
Vec rotate(const Vec& v, double a, double b) {
  if (v.size() == 2) {
    return {std::cos(a) * v[0] - std::sin(a) * v[1],
            std::sin(a) * v[0] + std::cos(a) * v[1]};
  }
  const Vec z = {std::cos(a) * v[0] - std::sin(a) * v[1],
                 std::sin(a) * v[0] + std::cos(a) * v[1], v[2]};
  return {z[0], std::cos(b) * z[1] - std::sin(b) * z[2],
          std::sin(b) * z[1] + std::cos(b) * z[2]};
}

}  // namespace

TEST_SUITE_BEGIN("uncertainty");

TEST_CASE("bank stacks target rows before source rows") {
  unrn::Xoshiro256 rng(unrn::mix_seed(500));
  const Matrix target = random_bank_rows(rng, 5, 4);
  const Matrix source = random_bank_rows(rng, 7, 4);
  const ReferenceBank bank =
      unrn::build_reference_bank(target, source, ReferenceMode::kBoth);
  CHECK(bank.target_rows == 5);
  CHECK(bank.source_rows == 7);
  REQUIRE(bank.total_rows() == 12);
  for (int k = 0; k < 5; ++k) {
    for (int i = 0; i < 4; ++i) {
      CHECK(bank.rows[k][i] == doctest::Approx(target[k][i]).epsilon(1e-12));
    }
  }
  for (int k = 0; k < 7; ++k) {
    for (int i = 0; i < 4; ++i) {
      CHECK(bank.rows[5 + k][i] == doctest::Approx(source[k][i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("target-only mode reproduces the target centers exactly") {
  unrn::Xoshiro256 rng(unrn::mix_seed(501));
  const Matrix target = random_bank_rows(rng, 3, 5);
  const Matrix source = random_bank_rows(rng, 4, 5);
  const ReferenceBank bank =
      unrn::build_reference_bank(target, source, ReferenceMode::kTargetOnly);
  CHECK(bank.target_rows == 3);
  CHECK(bank.source_rows == 0);
  REQUIRE(bank.total_rows() == 3);
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < 5; ++i) {
      CHECK(bank.rows[k][i] == doctest::Approx(target[k][i]).epsilon(1e-12));
    }
  }
}

TEST_CASE("bank rows are re-normalized to unit length") {
  const Matrix target = {{3.0, 4.0}};
  const Matrix source = {{0.0, 0.5}};
  const ReferenceBank bank =
      unrn::build_reference_bank(target, source, ReferenceMode::kBoth);
  CHECK(bank.rows[0][0] == doctest::Approx(0.6).epsilon(1e-12));
  CHECK(bank.rows[0][1] == doctest::Approx(0.8).epsilon(1e-12));
  CHECK(bank.rows[1][1] == doctest::Approx(1.0).epsilon(1e-12));
  for (const Vec& row : bank.rows) {
    CHECK(unrn::l2_norm(row) == doctest::Approx(1.0).epsilon(1e-9));
  }
}

TEST_CASE("empty selection is rejected") {
  const Matrix some = {{1.0, 0.0}};
  CHECK_THROWS_WITH_AS(
      unrn::build_reference_bank({}, some, ReferenceMode::kTargetOnly),
      "empty reference bank", std::invalid_argument);
  CHECK_THROWS_WITH_AS(
      unrn::build_reference_bank(some, {}, ReferenceMode::kSourceOnly),
      "empty reference bank", std::invalid_argument);
  CHECK_THROWS_WITH_AS(unrn::build_reference_bank({}, {}, ReferenceMode::kBoth),
                       "empty reference bank", std::invalid_argument);
  const Matrix other_dim = {{1.0, 0.0, 0.0}};
  CHECK_THROWS_WITH_AS(
      unrn::build_reference_bank(some, other_dim, ReferenceMode::kBoth),
      "dimension mismatch", std::invalid_argument);
}

TEST_CASE("feature equidistant from all references gets a uniform multilabel") {
  // Three bank rows at equal angles from the probe direction.
  const double c = std::cos(0.7);
  const double s = std::sin(0.7);
  const Matrix target = {{c, s, 0.0}, {c, -s, 0.0}, {c, 0.0, s}};
  const ReferenceBank bank =
      unrn::build_reference_bank(target, {}, ReferenceMode::kTargetOnly);
  const Vec p = unrn::soft_multilabel(bank, {1.0, 0.0, 0.0}, 1.0);
  REQUIRE(p.size() == 3);
  for (double v : p) CHECK(v == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("two-axis bank reproduces the hand softmax of scores (1, 0)") {
  const Matrix target = {{1.0, 0.0}, {0.0, 1.0}};
  const ReferenceBank bank =
      unrn::build_reference_bank(target, {}, ReferenceMode::kTargetOnly);
  const Vec p = unrn::soft_multilabel(bank, {1.0, 0.0}, 1.0);
  CHECK(p[0] == doctest::Approx(0.7310585786300049).epsilon(1e-12));
  CHECK(p[1] == doctest::Approx(0.2689414213699951).epsilon(1e-12));
}

TEST_CASE("multilabels sum to one on random banks and features") {
  unrn::Xoshiro256 rng(unrn::mix_seed(502));
  for (int instance = 0; instance < 200; ++instance) {
    const int dim = 2 + static_cast<int>(rng.uniform_index(6));
    const int rows = 1 + static_cast<int>(rng.uniform_index(10));
    const ReferenceBank bank = unrn::build_reference_bank(
        random_bank_rows(rng, rows, dim), {}, ReferenceMode::kTargetOnly);
    const double tau = 0.05 + rng.uniform() * 2.0;
    const Vec p = unrn::soft_multilabel(bank, random_unit(rng, dim), tau);
    double sum = 0.0;
    for (double v : p) {
      CHECK(v > 0.0);
      sum += v;
    }
    CHECK(sum == doctest::Approx(1.0).epsilon(1e-12));
  }
}

TEST_CASE("multilabel is invariant under a joint rotation of bank and feature") {
  unrn::Xoshiro256 rng(unrn::mix_seed(503));
  for (int instance = 0; instance < 50; ++instance) {
    const int dim = 2 + static_cast<int>(rng.uniform_index(2));
    const int rows = 2 + static_cast<int>(rng.uniform_index(4));
    const Matrix raw = random_bank_rows(rng, rows, dim);
    const Vec f = random_unit(rng, dim);
    const double a = rng.uniform(0.0, 6.28);
    const double b = rng.uniform(0.0, 6.28);

    Matrix rotated;
    for (const Vec& row : raw) rotated.push_back(rotate(row, a, b));
    const ReferenceBank bank =
        unrn::build_reference_bank(raw, {}, ReferenceMode::kTargetOnly);
    const ReferenceBank bank_rot =
        unrn::build_reference_bank(rotated, {}, ReferenceMode::kTargetOnly);

    const Vec p = unrn::soft_multilabel(bank, f, 0.5);
    const Vec p_rot = unrn::soft_multilabel(bank_rot, rotate(f, a, b), 0.5);
    for (std::size_t k = 0; k < p.size(); ++k) {
      CHECK(p_rot[k] == doctest::Approx(p[k]).epsilon(1e-9));
    }
  }
}

TEST_CASE("agreeing student and teacher have zero uncertainty") {
  unrn::Xoshiro256 rng(unrn::mix_seed(504));
  const ReferenceBank bank = unrn::build_reference_bank(
      random_bank_rows(rng, 6, 4), {}, ReferenceMode::kTargetOnly);
  const Vec f = random_unit(rng, 4);
  const unrn::Credibility c = unrn::sample_uncertainty(bank, f, f, 0.5);
  CHECK(c.u == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(c.omega == doctest::Approx(1.0).epsilon(1e-15));
}

TEST_CASE("orthogonal disagreement on a two-axis bank gives u = tanh(1/2)") {
  // Teacher scores (1, 0), student scores (0, 1); the KL between the two
  // mirrored softmaxes collapses to (p1 - p2) * 1 = tanh(1/2).
  const Matrix target = {{1.0, 0.0}, {0.0, 1.0}};
  const ReferenceBank bank =
      unrn::build_reference_bank(target, {}, ReferenceMode::kTargetOnly);
  const unrn::Credibility c =
      unrn::sample_uncertainty(bank, {0.0, 1.0}, {1.0, 0.0}, 1.0);
  CHECK(c.u == doctest::Approx(0.46211715726000976).epsilon(1e-12));
  CHECK(c.omega == doctest::Approx(std::exp(-0.46211715726000976)).epsilon(1e-12));
}

TEST_CASE("hand-built distributions confirm omega = exp(-u) at u = ln 2") {
  // KL((1,0) || (1/2,1/2)) = ln 2 without going through softmax.
  const double u = unrn::kl_div({1.0, 0.0}, {0.5, 0.5});
  CHECK(u == doctest::Approx(0.6931471805599453).epsilon(1e-12));
  CHECK(std::exp(-u) == doctest::Approx(0.5).epsilon(1e-9));
}

TEST_CASE("uncertainty is asymmetric in the feature arguments") {
  // Needs three bank rows: with two rows the mirrored softmaxes make the KL
  // accidentally symmetric.
  const Matrix target = {{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}};
  const ReferenceBank bank =
      unrn::build_reference_bank(target, {}, ReferenceMode::kTargetOnly);
  const Vec f_teacher = {1.0, 0.0, 0.0};
  const Vec f_student = {0.6, 0.8, 0.0};
  const double u_ts = unrn::sample_uncertainty(bank, f_student, f_teacher, 1.0).u;
  const double u_st = unrn::sample_uncertainty(bank, f_teacher, f_student, 1.0).u;
  CHECK(std::abs(u_ts - u_st) > 1e-4);
}

TEST_CASE("omega stays in (0, 1] and matches exp(-u) on random inputs") {
  unrn::Xoshiro256 rng(unrn::mix_seed(505));
  for (int instance = 0; instance < 200; ++instance) {
    const int dim = 2 + static_cast<int>(rng.uniform_index(5));
    const ReferenceBank bank = unrn::build_reference_bank(
        random_bank_rows(rng, 2 + rng.uniform_index(8), dim), {},
        ReferenceMode::kTargetOnly);
    const unrn::Credibility c = unrn::sample_uncertainty(
        bank, random_unit(rng, dim), random_unit(rng, dim),
        0.05 + rng.uniform());
    CHECK(c.u >= 0.0);
    CHECK(c.omega > 0.0);
    CHECK(c.omega <= 1.0);
    CHECK(c.omega == doctest::Approx(std::exp(-c.u)).epsilon(1e-12));
  }
}

TEST_CASE("analytic du/df_student matches finite differences") {
  unrn::Xoshiro256 rng(unrn::mix_seed(506));
  for (int instance = 0; instance < 30; ++instance) {
    const int dim = 3 + static_cast<int>(rng.uniform_index(3));
    const ReferenceBank bank = unrn::build_reference_bank(
        random_bank_rows(rng, 3 + rng.uniform_index(5), dim), {},
        ReferenceMode::kTargetOnly);
    const Vec f_teacher = random_unit(rng, dim);
    const Vec f_student = random_unit(rng, dim);
    const double tau = 0.2 + rng.uniform();

    const unrn::CredibilityGrad g =
        unrn::sample_uncertainty_grad(bank, f_student, f_teacher, tau);
    CHECK(g.cred.u ==
          doctest::Approx(unrn::sample_uncertainty(bank, f_student, f_teacher, tau).u)
              .epsilon(1e-15));

    // The gradient is with respect to the raw student entries; no internal
    // re-normalization happens in soft_multilabel.
    const std::vector<double> fd = unrn::testing::fd_gradient(
        [&](const std::vector<double>& x) {
          return unrn::sample_uncertainty(bank, x, f_teacher, tau).u;
        },
        f_student);
    CHECK(unrn::testing::rel_error(g.du_dstudent, fd) < 1e-5);
  }
}

TEST_CASE("pair credibility boundary and frozen values") {
  CHECK(unrn::pair_credibility(0.0, 0.0) == 2.0);
  const double ln2 = 0.6931471805599453;
  CHECK(unrn::pair_credibility(ln2, ln2) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(unrn::pair_credibility(ln2, 0.0) == doctest::Approx(1.5).epsilon(1e-9));
}

TEST_CASE("pair credibility strictly decreases in each argument") {
  unrn::Xoshiro256 rng(unrn::mix_seed(507));
  for (int instance = 0; instance < 200; ++instance) {
    const double u_a = rng.uniform(0.0, 3.0);
    const double u_b = rng.uniform(0.0, 3.0);
    const double bump = rng.uniform(1e-6, 1.0);
    const double base = unrn::pair_credibility(u_a, u_b);
    CHECK(unrn::pair_credibility(u_a + bump, u_b) < base);
    CHECK(unrn::pair_credibility(u_a, u_b + bump) < base);
    CHECK(base > 0.0);
    CHECK(base <= 2.0);
  }
}

TEST_CASE("pair credibility rejects negative uncertainty") {
  CHECK_THROWS_WITH_AS(unrn::pair_credibility(-0.1, 0.0),
                       "uncertainty must be nonnegative", std::invalid_argument);
  CHECK_THROWS_WITH_AS(unrn::pair_credibility(0.0, -1e-9),
                       "uncertainty must be nonnegative", std::invalid_argument);
}

TEST_CASE("feature consistency variant tracks 1 - cosine") {
  const Vec e1 = {1.0, 0.0};
  const Vec e2 = {0.0, 1.0};
  const Vec neg_e1 = {-1.0, 0.0};

  const unrn::Credibility same = unrn::feature_consistency_uncertainty(e1, e1);
  CHECK(same.u == doctest::Approx(0.0).epsilon(1e-15));
  CHECK(same.omega == doctest::Approx(1.0).epsilon(1e-15));

  const unrn::Credibility ortho = unrn::feature_consistency_uncertainty(e1, e2);
  CHECK(ortho.u == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(ortho.omega == doctest::Approx(0.36787944117144233).epsilon(1e-12));

  const unrn::Credibility anti = unrn::feature_consistency_uncertainty(e1, neg_e1);
  CHECK(anti.u == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("feature consistency gradient matches finite differences") {
  unrn::Xoshiro256 rng(unrn::mix_seed(508));
  for (int instance = 0; instance < 30; ++instance) {
    const int dim = 2 + static_cast<int>(rng.uniform_index(4));
    const Vec f_student = random_unit(rng, dim);
    const Vec f_teacher = random_unit(rng, dim);
    const unrn::CredibilityGrad g =
        unrn::feature_consistency_uncertainty_grad(f_student, f_teacher);
    const std::vector<double> fd = unrn::testing::fd_gradient(
        [&](const std::vector<double>& x) {
          return unrn::feature_consistency_uncertainty(x, f_teacher).u;
        },
        f_student);
    CHECK(unrn::testing::rel_error(g.du_dstudent, fd) < 1e-5);
  }
}

TEST_SUITE_END();
