#pragma once

namespace fgp {

// Standard normal CDF, pinned to N(z) = erfc(-z/sqrt(2))/2. glibc's erfc is
// correctly rounded to within a few ulp, well inside the 1e-12 budget the
// pricing identities assume.
double normal_cdf(double z);

double normal_pdf(double z);

// Inverse normal CDF, Wichura's algorithm AS 241 (PPND16). Relative error
// below 1e-15 over (0,1). Throws DomainError outside (0,1).
double normal_quantile(double p);

} // namespace fgp
