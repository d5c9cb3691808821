#include "svkit/leadlag.hpp"

#include <cmath>
#include <cstdlib>

#include "svkit/closed_form.hpp"
#include "svkit/error.hpp"

namespace svkit {

const char* source_name(ProfileSource s) noexcept {
  switch (s) {
    case ProfileSource::analytic: return "analytic";
    case ProfileSource::empirical: return "empirical";
    case ProfileSource::posterior: return "posterior";
  }
  return "?";
}

double var_exp_h(const ModelSpec& spec) {
  require_valid(spec);
  const SvParams& p = spec.params;
  const double v = stationary_h_variance(p);
  if (variant_of(spec.model) != Variant::jump) {
    return std::exp(2.0 * p.alpha + v) * std::expm1(v);
  }
  // E[e^{2h}] - E[e^h]^2 with the jump mgf folded in through P(2) and P(1).
  const double P1 = product_P(1.0, p.pi2, p.phi);
  const double P2 = product_P(2.0, p.pi2, p.phi);
  return std::exp(2.0 * p.alpha + v) * (std::exp(v) * P2 - P1 * P1);
}

double gamma_common_factor(const SvParams& p, int k) {
  const double phik = std::pow(p.phi, std::abs(k));
  return p.rho * p.sigma *
         std::exp(1.5 * p.alpha + stationary_h_variance(p) * (5.0 + 4.0 * phik) / 8.0);
}

namespace {

double skew_bracket(const SvParams& p) {
  const double delta = skew_delta(p.lambda);
  return omega_constant(p.nu, p.lambda) * std::sqrt(1.0 - delta * delta) * xi(p.nu, 0.5);
}

// Cells for the h_{t+1}-based families: zero unless k > 0.
double cell_ht1(const ModelSpec& spec, int k) {
  if (k <= 0) return 0.0;
  const SvParams& p = spec.params;
  const double lead = std::pow(p.phi, k - 1);
  switch (variant_of(spec.model)) {
    case Variant::base:
      return lead;
    case Variant::skewed_t:
      return lead * skew_bracket(p);
    case Variant::jump: {
      const double phik = std::pow(p.phi, k);
      return lead * product_P(phik + 0.5, p.pi2, p.phi) *
             finite_product_P(1.0, p.pi2, p.phi, k);
    }
  }
  return 0.0;
}

double cell_ht(const ModelSpec& spec, int k) {
  const SvParams& p = spec.params;
  const int n = std::abs(k);
  const double phik = std::pow(p.phi, n);
  const double v = stationary_h_variance(p);
  // exp(-sigma^2 phi^|k| / (2 (1 - phi^2))); at k = 0 this is exp(-v/2).
  const double damp = 0.5 * std::exp(-0.5 * v * phik);

  if (variant_of(spec.model) == Variant::jump) {
    const double correction =
        product_P(1.0, p.pi2, p.phi) * product_P(0.5, p.pi2, p.phi) * damp;
    if (k == 0) return 1.5 * product_P(1.5, p.pi2, p.phi) - correction;
    if (k > 0) {
      return (phik + 0.5) * product_P(phik + 0.5, p.pi2, p.phi) *
                 finite_product_P(1.0, p.pi2, p.phi, n) -
             correction;
    }
    return 0.5 * product_P(0.5 * phik + 1.0, p.pi2, p.phi) *
               finite_product_P(0.5, p.pi2, p.phi, n) -
           correction;
  }

  double cell;
  if (k == 0) {
    cell = 1.5 - damp;
  } else if (k > 0) {
    cell = (phik + 0.5) - damp;
  } else {
    cell = 0.5 - damp;
  }
  if (variant_of(spec.model) == Variant::skewed_t) cell *= skew_bracket(p);
  return cell;
}

}  // namespace

double gamma(const ModelSpec& spec, int k) {
  require_valid(spec);
  const double cell = is_ht_based(spec.model) ? cell_ht(spec, k) : cell_ht1(spec, k);
  if (cell == 0.0) return 0.0;
  return gamma_common_factor(spec.params, k) * cell;
}

LeadLagProfile leadlag_profile(const ModelSpec& spec, int max_lag) {
  if (max_lag < 0) throw Error(ErrorCategory::precondition, "max_lag must be >= 0");
  const double m2 = moments(spec, 2).m2;
  const double denom = std::sqrt(m2 * var_exp_h(spec));
  LeadLagProfile out;
  out.model = spec.model;
  out.max_lag = max_lag;
  out.source = ProfileSource::analytic;
  for (int k = -max_lag; k <= max_lag; ++k) {
    const double g = gamma(spec, k);
    out.gammas.push_back(g);
    out.rhos.push_back(g / denom);
  }
  return out;
}

}  // namespace svkit
