#pragma once

namespace cstab {

// Regularized incomplete beta function I_x(a, b), continued-fraction
// evaluation (Lentz's method).
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided p-value for a Student-t statistic with df degrees of freedom:
// P(|T| >= |t|) = I_{df/(df + t^2)}(df/2, 1/2).
double student_t_two_sided_pvalue(double t, double df);

}  // namespace cstab
