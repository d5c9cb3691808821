#pragma once

#include "svkit/model.hpp"

namespace svkit {

inline constexpr double kDefaultProductTol = 1e-16;

/// Infinite product prod_{j>=0} (1 - pi2 + pi2 exp{d^2 phi^(2j) / 2}),
/// truncated once the geometric bound on the remaining log-factors falls
/// below `tol`. This is the moment
/// generating function of the accumulated volatility jumps at d.
double product_P(double d, double pi2, double phi, double tol = kDefaultProductTol);

/// The same product over j = 0..k-1 (k >= 1 factors).
double finite_product_P(double d, double pi2, double phi, int k);

/// Unconditional return moments. m3 and m4 are central (the return mean is
/// zero for every family). Fields above the requested order are NaN.
struct MomentSummary {
  ModelId model = ModelId::M21;
  double m2 = 0.0;
  double m3 = 0.0;
  double m4 = 0.0;
  double skewness = 0.0;
  double kurtosis = 0.0;
  double mu = 0.0;
};

/// Variance, skewness and kurtosis as tabulated for each family. For the
/// skewed-t families orders 3 and 4 need nu > 3 and nu > 4 respectively;
/// requesting an order that does not exist throws Error{nonexistence}.
MomentSummary moments(const ModelSpec& spec, int max_order = 4);

}  // namespace svkit
