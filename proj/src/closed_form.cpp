#include "svkit/closed_form.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <sstream>

#include "svkit/error.hpp"

namespace svkit {

double product_P(double d, double pi2, double phi, double tol) {
  if (!(std::fabs(phi) < 1.0)) {
    throw Error(ErrorCategory::validation, "product_P requires |phi|<1");
  }
  if (!(tol > 0.0)) throw Error(ErrorCategory::precondition, "product_P requires tol > 0");
  if (pi2 == 0.0 || d == 0.0) return 1.0;
  double log_sum = 0.0;
  double phi_pow = 1.0;  // phi^(2j)
  const double phi2 = phi * phi;
  for (int j = 0; j < 1000000; ++j) {
    const double excess = pi2 * std::expm1(0.5 * d * d * phi_pow);  // factor - 1
    if (std::fabs(excess) < tol * (1.0 - phi2)) break;
    log_sum += std::log1p(excess);
    phi_pow *= phi2;
  }
  return std::exp(log_sum);
}

double finite_product_P(double d, double pi2, double phi, int k) {
  if (k < 1) throw Error(ErrorCategory::precondition, "finite_product_P requires k >= 1");
  if (!(std::fabs(phi) < 1.0)) {
    throw Error(ErrorCategory::validation, "finite_product_P requires |phi|<1");
  }
  double log_sum = 0.0;
  double phi_pow = 1.0;
  for (int j = 0; j < k; ++j) {
    log_sum += std::log1p(pi2 * std::expm1(0.5 * d * d * phi_pow));
    phi_pow *= phi * phi;
  }
  return std::exp(log_sum);
}

namespace {

constexpr double kPi = std::numbers::pi;
const double kSqrt2OverPi = std::sqrt(2.0 / kPi);

int max_existing_order(const ModelSpec& spec) {
  if (variant_of(spec.model) != Variant::skewed_t) return 4;
  const double nu = spec.params.nu;
  if (nu > 4.0) return 4;
  if (nu > 3.0) return 3;
  return 2;
}

struct Common {
  double alpha, phi, sigma, rho;
  double v;    // sigma^2 / (1 - phi^2)
  double rs2;  // rho^2 sigma^2
};

Common common_terms(const SvParams& p) {
  return {p.alpha, p.phi, p.sigma, p.rho, stationary_h_variance(p),
          p.rho * p.rho * p.sigma * p.sigma};
}

void base_ht1(const Common& c, MomentSummary& out) {
  out.m2 = std::exp(c.alpha + 0.5 * c.v);
  out.m3 = 0.0;
  out.skewness = 0.0;
  out.kurtosis = 3.0 * std::exp(c.v);
  out.m4 = out.kurtosis * out.m2 * out.m2;
}

void base_ht(const Common& c, MomentSummary& out) {
  const double rs2 = c.rs2;
  out.m2 = std::exp(c.alpha + 0.5 * c.v) * (1.0 + rs2 - 0.25 * rs2 * std::exp(-0.25 * c.v));
  const double bracket3 = -rs2 / 3.0 * std::exp(-0.75 * c.v) + 3.0 + 2.25 * rs2 -
                          (1.0 + rs2) * std::exp(-0.5 * c.v);
  out.m3 = 1.5 * c.rho * c.sigma * std::exp(1.5 * c.alpha + 1.125 * c.v) * bracket3;
  const double bracket4 = 3.0 + 16.0 * rs2 * rs2 -
                          9.0 * rs2 * (1.0 + 0.75 * rs2) * std::exp(-0.75 * c.v) -
                          3.0 * rs2 * rs2 / 16.0 * std::exp(-1.5 * c.v) + 24.0 * rs2 +
                          1.5 * rs2 * (1.0 + rs2) * std::exp(-1.25 * c.v);
  out.m4 = std::exp(2.0 * c.alpha + 2.0 * c.v) * bracket4;
  out.skewness = out.m3 / std::pow(out.m2, 1.5);
  out.kurtosis = out.m4 / (out.m2 * out.m2);
}

void skewt_ht1(const Common& c, const SvParams& p, int order, MomentSummary& out) {
  const double delta = skew_delta(p.lambda);
  const double d2 = delta * delta;
  const double omega = omega_constant(p.nu, p.lambda);
  const double xi1 = xi(p.nu, 1.0);
  const double shape = xi1 * (1.0 - 2.0 * d2 / kPi);
  out.m2 = std::exp(c.alpha + 0.5 * c.v) * omega * omega * shape;
  if (order >= 3) {
    out.skewness = std::exp(0.375 * c.v) * xi(p.nu, 1.5) * d2 * delta * kSqrt2OverPi *
                   (4.0 / kPi - 1.0) * std::pow(shape, -1.5);
    out.m3 = out.skewness * std::pow(out.m2, 1.5);
  }
  if (order >= 4) {
    const double d4 = d2 * d2;
    out.kurtosis = std::exp(c.v) *
                   (3.0 + 8.0 * d4 / kPi - 12.0 * d4 / (kPi * kPi) - 12.0 * d2 / kPi) *
                   xi(p.nu, 2.0) / (shape * shape);
    out.m4 = out.kurtosis * out.m2 * out.m2;
  }
}

void skewt_ht(const Common& c, const SvParams& p, double mu, int order, MomentSummary& out) {
  const double delta = skew_delta(p.lambda);
  const double d2 = delta * delta;
  const double cd = std::sqrt(1.0 - d2);  // sqrt(1 - delta^2)
  const double omega = omega_constant(p.nu, p.lambda);
  const double rs = c.rho * c.sigma;
  const double rs2 = c.rs2;
  out.m2 = std::exp(c.alpha + 0.5 * c.v) * omega * omega * xi(p.nu, 1.0) *
               ((1.0 - 2.0 * d2 / kPi) + rs2 * (1.0 - d2)) -
           mu * mu;
  if (order >= 3) {
    const double brace = d2 * delta * kSqrt2OverPi * (4.0 / kPi - 1.0) +
                         4.5 * rs * (1.0 - 2.0 / kPi) * d2 * cd +
                         4.5 * rs * cd * cd * cd * (1.0 + 0.75 * rs2);
    out.m3 = 3.0 * mu * out.m2 + mu * mu * mu +
             std::pow(omega, 3) * xi(p.nu, 1.5) * std::exp(1.5 * c.alpha + 1.125 * c.v) *
                 brace;
    out.skewness = out.m3 / std::pow(out.m2, 1.5);
  }
  if (order >= 4) {
    const double r2 = c.rho * c.rho;
    const double bracket =
        d2 * d2 * (3.0 - 4.0 / kPi - 12.0 / (kPi * kPi)) +
        8.0 * rs * d2 * delta * cd * kSqrt2OverPi * (4.0 / kPi - 1.0) +
        6.0 * d2 * (1.0 - d2) * (1.0 - 2.0 / kPi) * (1.0 + 4.0 * rs2) +
        (1.0 - d2) * (1.0 - d2) *
            (3.0 + 6.0 * r2 - 3.0 * r2 * r2 + 24.0 * rs2 + 16.0 * rs2 * rs2);
    out.m4 = 4.0 * mu * out.m3 - std::pow(mu, 4) - 6.0 * mu * mu * out.m2 +
             std::pow(omega, 4) * xi(p.nu, 2.0) * std::exp(2.0 * c.alpha + 2.0 * c.v) *
                 bracket;
    out.kurtosis = out.m4 / (out.m2 * out.m2);
  }
}

void jump_ht1(const Common& c, const SvParams& p, MomentSummary& out) {
  const double P1 = product_P(1.0, p.pi2, p.phi);
  const double P2 = product_P(2.0, p.pi2, p.phi);
  const double e1 = std::exp(c.alpha + 0.5 * c.v);
  out.m2 = p.pi1 + e1 * P1;
  out.m3 = 0.0;
  out.skewness = 0.0;
  out.m4 = 3.0 * p.pi1 + 6.0 * p.pi1 * e1 * P1 +
           3.0 * std::exp(2.0 * c.alpha + 2.0 * c.v) * P2;
  out.kurtosis = out.m4 / (out.m2 * out.m2);
}

void jump_ht(const Common& c, const SvParams& p, double mu, MomentSummary& out) {
  const double P_half = product_P(0.5, p.pi2, p.phi);
  const double P1 = product_P(1.0, p.pi2, p.phi);
  const double P_3half = product_P(1.5, p.pi2, p.phi);
  const double P2 = product_P(2.0, p.pi2, p.phi);
  const double rs = c.rho * c.sigma;
  const double rs2 = c.rs2;
  const double r2 = c.rho * c.rho;
  const double e1 = std::exp(c.alpha + 0.5 * c.v);
  out.m2 = p.pi1 + e1 * (1.0 + rs2) * P1 - mu * mu;
  out.m3 = 3.0 * out.m2 * mu + mu * mu * mu +
           1.5 * rs * p.pi1 * std::exp(0.5 * c.alpha + 0.125 * c.v) * P_half +
           4.5 * rs * (1.0 + 0.75 * rs2) * P_3half * std::exp(1.5 * c.alpha + 1.125 * c.v);
  out.skewness = out.m3 / std::pow(out.m2, 1.5);
  out.m4 = 4.0 * mu * out.m3 - std::pow(mu, 4) - 6.0 * mu * mu * out.m2 + 3.0 * p.pi1 +
           e1 * 6.0 * p.pi1 * P1 * (1.0 + rs2) +
           std::exp(2.0 * c.alpha + 2.0 * c.v) * P2 *
               (3.0 + 6.0 * r2 - 3.0 * r2 * r2 + 24.0 * rs2 + 16.0 * rs2 * rs2);
  out.kurtosis = out.m4 / (out.m2 * out.m2);
}

}  // namespace

MomentSummary moments(const ModelSpec& spec, int max_order) {
  require_valid(spec);
  if (max_order < 2 || max_order > 4) {
    throw Error(ErrorCategory::precondition, "moments: max_order must be 2, 3 or 4");
  }
  if (max_order > max_existing_order(spec)) {
    std::ostringstream os;
    os << model_name(spec.model) << ": return moment of order " << max_order
       << " does not exist for nu=" << spec.params.nu;
    throw Error(ErrorCategory::nonexistence, os.str());
  }
  const double nan = std::numeric_limits<double>::quiet_NaN();
  MomentSummary out;
  out.model = spec.model;
  out.m3 = out.m4 = out.skewness = out.kurtosis = nan;
  out.mu = mean_correction(spec);

  const Common c = common_terms(spec.params);
  switch (spec.model) {
    case ModelId::M21: base_ht1(c, out); break;
    case ModelId::M31: base_ht(c, out); break;
    case ModelId::M22: skewt_ht1(c, spec.params, max_order, out); break;
    case ModelId::M32: skewt_ht(c, spec.params, out.mu, max_order, out); break;
    case ModelId::M23: jump_ht1(c, spec.params, out); break;
    case ModelId::M33: jump_ht(c, spec.params, out.mu, out); break;
  }
  if (max_order < 4) out.m4 = out.kurtosis = nan;
  if (max_order < 3) out.m3 = out.skewness = nan;
  return out;
}

}  // namespace svkit
