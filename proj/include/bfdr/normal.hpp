#pragma once

namespace bfdr::normal {

double pdf(double x);
double cdf(double x);
// Upper tail 1 - cdf(x), accurate for large x.
double sf(double x);
// Inverse of cdf on (0,1). Wichura's AS241 (PPND16), relative accuracy ~1e-16.
double quantile(double p);
// Inverse of sf: the z with sf(z) = p, computed without forming 1 - p.
double upper_quantile(double p);

}  // namespace bfdr::normal
