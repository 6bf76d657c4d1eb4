#pragma once

namespace fxsv {

double norm_pdf(double x);
double norm_cdf(double x);

// Inverse of the standard normal CDF for p in (0, 1).
double norm_inv(double p);

}  // namespace fxsv
