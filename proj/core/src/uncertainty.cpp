#include "unrn/uncertainty.hpp"

#include <cmath>
#include <stdexcept>

namespace unrn {

ReferenceBank build_reference_bank(const Matrix& target_centers,
                                   const Matrix& source_centers,
                                   ReferenceMode mode) {
  ReferenceBank bank;
  const bool use_target = mode != ReferenceMode::kSourceOnly;
  const bool use_source = mode != ReferenceMode::kTargetOnly;
  if (use_target) {
    for (const Vec& row : target_centers) bank.rows.push_back(l2_normalized(row));
    bank.target_rows = static_cast<int>(target_centers.size());
  }
  if (use_source) {
    for (const Vec& row : source_centers) bank.rows.push_back(l2_normalized(row));
    bank.source_rows = static_cast<int>(source_centers.size());
  }
  if (bank.rows.empty()) throw std::invalid_argument("empty reference bank");
  const std::size_t dim = bank.rows[0].size();
  for (const Vec& row : bank.rows) {
    if (row.size() != dim) throw std::invalid_argument("dimension mismatch");
  }
  return bank;
}

Vec soft_multilabel(const ReferenceBank& bank, const Vec& f, double temperature) {
  if (bank.rows.empty()) throw std::invalid_argument("empty reference bank");
  Vec scores(bank.rows.size());
  for (std::size_t k = 0; k < bank.rows.size(); ++k) scores[k] = dot(bank.rows[k], f);
  return softmax(scores, temperature);
}

Credibility sample_uncertainty(const ReferenceBank& bank, const Vec& f_student,
                               const Vec& f_teacher, double temperature) {
  const Vec p_student = soft_multilabel(bank, f_student, temperature);
  const Vec p_teacher = soft_multilabel(bank, f_teacher, temperature);
  Credibility c;
  c.u = kl_div(p_teacher, p_student);
  c.omega = std::exp(-c.u);
  return c;
}

CredibilityGrad sample_uncertainty_grad(const ReferenceBank& bank,
                                        const Vec& f_student,
                                        const Vec& f_teacher,
                                        double temperature) {
  const Vec p_student = soft_multilabel(bank, f_student, temperature);
  const Vec p_teacher = soft_multilabel(bank, f_teacher, temperature);
  CredibilityGrad out;
  out.cred.u = kl_div(p_teacher, p_student);
  out.cred.omega = std::exp(-out.cred.u);
  // d u / d f_s = R^T (p_s - p_t) / tau; exact while no probability floor is
  // active, which holds for unit features at any reasonable temperature.
  out.du_dstudent.assign(f_student.size(), 0.0);
  for (std::size_t k = 0; k < bank.rows.size(); ++k) {
    const double coeff = (p_student[k] - p_teacher[k]) / temperature;
    for (std::size_t i = 0; i < f_student.size(); ++i) {
      out.du_dstudent[i] += coeff * bank.rows[k][i];
    }
  }
  return out;
}

double pair_credibility(double u_a, double u_b) {
  if (u_a < 0.0 || u_b < 0.0) {
    throw std::invalid_argument("uncertainty must be nonnegative");
  }
  return std::exp(-u_a) + std::exp(-u_b);
}

Credibility feature_consistency_uncertainty(const Vec& f_student, const Vec& f_teacher) {
  Credibility c;
  c.u = 1.0 - cosine_sim(f_student, f_teacher);
  c.omega = std::exp(-c.u);
  return c;
}

CredibilityGrad feature_consistency_uncertainty_grad(const Vec& f_student,
                                                     const Vec& f_teacher) {
  const CosineSimGrad cg = cosine_sim_grad(f_student, f_teacher);
  CredibilityGrad out;
  out.cred.u = 1.0 - cg.value;
  out.cred.omega = std::exp(-out.cred.u);
  out.du_dstudent.resize(f_student.size());
  for (std::size_t i = 0; i < f_student.size(); ++i) {
    out.du_dstudent[i] = -cg.grad_a[i];
  }
  return out;
}

}  // namespace unrn
