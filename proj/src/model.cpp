#include "svkit/model.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "svkit/closed_form.hpp"
#include "svkit/error.hpp"

namespace svkit {

std::string_view category_name(ErrorCategory c) noexcept {
  switch (c) {
    case ErrorCategory::config: return "config";
    case ErrorCategory::validation: return "validation";
    case ErrorCategory::nonexistence: return "nonexistence";
    case ErrorCategory::numeric: return "numeric";
    case ErrorCategory::io: return "io";
    case ErrorCategory::precondition: return "precondition";
  }
  return "unknown";
}

std::string_view model_name(ModelId id) noexcept {
  switch (id) {
    case ModelId::M21: return "M2.1";
    case ModelId::M22: return "M2.2";
    case ModelId::M23: return "M2.3";
    case ModelId::M31: return "M3.1";
    case ModelId::M32: return "M3.2";
    case ModelId::M33: return "M3.3";
  }
  return "?";
}

std::optional<ModelId> parse_model(std::string_view name) {
  for (ModelId id : kAllModels) {
    if (model_name(id) == name) return id;
  }
  // Also accept the compact "M21" form.
  if (name.size() == 3 && (name[0] == 'M' || name[0] == 'm')) {
    const std::string dotted{name[0] == 'm' ? 'M' : name[0], name[1], '.', name[2]};
    for (ModelId id : kAllModels) {
      if (model_name(id) == dotted) return id;
    }
  }
  return std::nullopt;
}

ModelId counterpart(ModelId id) noexcept {
  switch (id) {
    case ModelId::M21: return ModelId::M31;
    case ModelId::M22: return ModelId::M32;
    case ModelId::M23: return ModelId::M33;
    case ModelId::M31: return ModelId::M21;
    case ModelId::M32: return ModelId::M22;
    case ModelId::M33: return ModelId::M23;
  }
  return id;
}

std::string describe(const ModelSpec& spec) {
  const SvParams& p = spec.params;
  std::ostringstream os;
  os.precision(17);
  os << model_name(spec.model) << " alpha=" << p.alpha << " phi=" << p.phi
     << " sigma=" << p.sigma << " rho=" << p.rho;
  switch (variant_of(spec.model)) {
    case Variant::skewed_t:
      os << " nu=" << p.nu << " lambda=" << p.lambda;
      break;
    case Variant::jump:
      os << " pi1=" << p.pi1 << " pi2=" << p.pi2;
      break;
    case Variant::base:
      break;
  }
  return os.str();
}

ValidationReport validate(const ModelSpec& spec) {
  ValidationReport report;
  const SvParams& p = spec.params;
  auto& v = report.violations;

  if (!std::isfinite(p.alpha)) v.emplace_back("alpha must be finite");
  if (!(std::fabs(p.phi) < 1.0)) v.emplace_back("persistence must satisfy |phi|<1");
  if (!(p.sigma > 0.0) || !std::isfinite(p.sigma)) v.emplace_back("sigma must be > 0");
  if (!(p.rho >= -1.0 && p.rho <= 1.0)) v.emplace_back("rho must lie in [-1, 1]");

  switch (variant_of(spec.model)) {
    case Variant::skewed_t:
      if (!std::isfinite(p.lambda)) v.emplace_back("lambda must be finite");
      if (!(p.nu > 2.0) || !std::isfinite(p.nu)) {
        v.emplace_back("nu must be > 2 (finite return variance)");
      }
      report.capabilities.m2 = p.nu > 2.0;
      report.capabilities.leadlag = p.nu > 2.0;
      report.capabilities.skewness = p.nu > 3.0;
      report.capabilities.kurtosis = p.nu > 4.0;
      break;
    case Variant::jump:
      if (!(p.pi1 >= 0.0 && p.pi1 <= 1.0)) v.emplace_back("pi1 must lie in [0, 1]");
      if (!(p.pi2 >= 0.0 && p.pi2 <= 1.0)) v.emplace_back("pi2 must lie in [0, 1]");
      if (p.nu1 != 0.0 || p.nu2 != 0.0 || p.tau1 != 1.0 || p.tau2 != 1.0) {
        v.emplace_back(
            "jump sizes must be N(0,1) (nu1=nu2=0, tau1=tau2=1); general jump-size "
            "means/scales are an unsupported extension");
      }
      break;
    case Variant::base:
      break;
  }
  if (!report.valid()) {
    report.capabilities = Capabilities{false, false, false, false};
  }
  return report;
}

void require_valid(const ModelSpec& spec) {
  const ValidationReport report = validate(spec);
  if (report.valid()) return;
  std::string msg = std::string(model_name(spec.model)) + ": ";
  for (std::size_t i = 0; i < report.violations.size(); ++i) {
    if (i) msg += "; ";
    msg += report.violations[i];
  }
  throw Error(ErrorCategory::validation, msg);
}

double xi(double nu, double k) {
  if (!(nu > 2.0 * k)) {
    std::ostringstream os;
    os << "inverse moment E[U^-" << k << "] does not exist for nu=" << nu
       << " (requires nu > " << 2.0 * k << ")";
    throw Error(ErrorCategory::nonexistence, os.str());
  }
  if (k == 0.0) return 1.0;
  const double a = 0.5 * nu;
  return std::exp(k * std::log(a) + std::lgamma(a - k) - std::lgamma(a));
}

double omega_constant(double nu, double lambda) {
  const double delta = skew_delta(lambda);
  const double bracket = 1.0 - 2.0 * delta * delta / std::numbers::pi;
  return 1.0 / std::sqrt(xi(nu, 1.0) * bracket);
}

namespace {

// exp{alpha/2 + sigma^2 / (8 (1 - phi^2))}, shared by all three corrections.
double half_vol_factor(const SvParams& p) {
  return std::exp(0.5 * p.alpha + stationary_h_variance(p) / 8.0);
}

}  // namespace

double mean_correction(const ModelSpec& spec) {
  require_valid(spec);
  const SvParams& p = spec.params;
  if (!is_ht_based(spec.model) || p.rho == 0.0) return 0.0;
  const double base = -0.5 * p.rho * p.sigma * half_vol_factor(p);
  switch (variant_of(spec.model)) {
    case Variant::base:
      return base;
    case Variant::skewed_t: {
      const double delta = skew_delta(p.lambda);
      return base * std::sqrt(1.0 - delta * delta) * omega_constant(p.nu, p.lambda) *
             xi(p.nu, 0.5);
    }
    case Variant::jump:
      return base * product_P(0.5, p.pi2, p.phi);
  }
  return 0.0;
}

DerivedConstants derive(const ModelSpec& spec) {
  require_valid(spec);
  DerivedConstants c;
  const SvParams& p = spec.params;
  if (variant_of(spec.model) == Variant::skewed_t) {
    const double nan = std::nan("");
    c.delta = skew_delta(p.lambda);
    c.omega = omega_constant(p.nu, p.lambda);
    c.xi_half = xi(p.nu, 0.5);
    c.xi_one = xi(p.nu, 1.0);
    c.xi_threehalf = p.nu > 3.0 ? xi(p.nu, 1.5) : nan;
    c.xi_two = p.nu > 4.0 ? xi(p.nu, 2.0) : nan;
  }
  c.mu = mean_correction(spec);
  return c;
}

}  // namespace svkit
