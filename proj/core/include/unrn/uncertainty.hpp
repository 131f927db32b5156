#pragma once

#include "unrn/numerics.hpp"

namespace unrn {

// Which reference rows the soft multilabels are computed against.
enum class ReferenceMode { kTargetOnly, kSourceOnly, kBoth };

// Stacked reference centers, target cluster centers first, then source class
// centers. Rows are defensively re-normalized at construction.
struct ReferenceBank {
  Matrix rows;
  int target_rows = 0;
  int source_rows = 0;
  int total_rows() const { return static_cast<int>(rows.size()); }
};

// Throws std::invalid_argument("empty reference bank") when the selected
// mode ends up with zero rows, and on inconsistent row dimensions.
ReferenceBank build_reference_bank(const Matrix& target_centers,
                                   const Matrix& source_centers,
                                   ReferenceMode mode);

// Softmax over the raw dot products of f against every bank row.
Vec soft_multilabel(const ReferenceBank& bank, const Vec& f, double temperature);

struct Credibility {
  double u = 0.0;      // KL(teacher soft multilabel || student soft multilabel)
  double omega = 1.0;  // exp(-u), in (0, 1]
};

// Disagreement between the teacher's and the student's view of one sample.
Credibility sample_uncertainty(const ReferenceBank& bank, const Vec& f_student,
                               const Vec& f_teacher, double temperature);

struct CredibilityGrad {
  Credibility cred;
  Vec du_dstudent;  // gradient of u with respect to the student feature
};

// sample_uncertainty plus du/df_student = R^T (p_student - p_teacher) / tau.
// The teacher feature is treated as a constant.
CredibilityGrad sample_uncertainty_grad(const ReferenceBank& bank,
                                        const Vec& f_student,
                                        const Vec& f_teacher,
                                        double temperature);

// exp(-u_a) + exp(-u_b). Lives in (0, 2]; equals 2 exactly when both
// uncertainties are zero, which is what makes the unweighted losses a
// special case of the weighted ones. Negative inputs throw.
double pair_credibility(double u_a, double u_b);

// Ablation variant that needs no reference bank: u = 1 - cos(f_s, f_t).
Credibility feature_consistency_uncertainty(const Vec& f_student, const Vec& f_teacher);
CredibilityGrad feature_consistency_uncertainty_grad(const Vec& f_student,
                                                     const Vec& f_teacher);

}  // namespace unrn
