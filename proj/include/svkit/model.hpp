#pragma once

#include <cmath>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace svkit {

/// The six model families. M2.* are h_{t+1}-based (volatility innovation
/// eta_t drives the next period), M3.* are h_t-based and mean corrected.
enum class ModelId { M21, M22, M23, M31, M32, M33 };

inline constexpr ModelId kAllModels[] = {ModelId::M21, ModelId::M22, ModelId::M23,
                                         ModelId::M31, ModelId::M32, ModelId::M33};

enum class Variant { base, skewed_t, jump };

std::string_view model_name(ModelId id) noexcept;  // "M2.1" ...
std::optional<ModelId> parse_model(std::string_view name);

constexpr bool is_ht_based(ModelId id) noexcept {
  return id == ModelId::M31 || id == ModelId::M32 || id == ModelId::M33;
}

constexpr Variant variant_of(ModelId id) noexcept {
  switch (id) {
    case ModelId::M22:
    case ModelId::M32:
      return Variant::skewed_t;
    case ModelId::M23:
    case ModelId::M33:
      return Variant::jump;
    default:
      return Variant::base;
  }
}

/// The h_{t+1}-based counterpart of an h_t-based family (and vice versa).
ModelId counterpart(ModelId id) noexcept;

struct SvParams {
  double alpha = -8.0;  // long-run mean of log-volatility
  double phi = 0.95;    // AR(1) persistence
  double sigma = 0.2;   // volatility of log-volatility
  double rho = 0.0;     // Corr(eps_t, eta_t)
  double nu = 10.0;     // skewed-t degrees of freedom (*.2)
  double lambda = 0.0;  // skewness shape (*.2)
  double pi1 = 0.01;    // return jump probability (*.3)
  double pi2 = 0.01;    // volatility jump probability (*.3)
  double nu1 = 0.0, nu2 = 0.0;    // jump-size means
  double tau1 = 1.0, tau2 = 1.0;  // jump-size standard deviations
};

struct ModelSpec {
  ModelId model = ModelId::M21;
  SvParams params{};
};

std::string describe(const ModelSpec& spec);

/// Which analytics exist for a spec (all true except when nu is too small).
struct Capabilities {
  bool m2 = true;
  bool skewness = true;
  bool kurtosis = true;
  bool leadlag = true;
};

struct ValidationReport {
  std::vector<std::string> violations;
  Capabilities capabilities;

  bool valid() const noexcept { return violations.empty(); }
};

ValidationReport validate(const ModelSpec& spec);

/// Throws Error{validation} listing every violation.
void require_valid(const ModelSpec& spec);

/// E[U^-k] for U ~ Gamma(shape nu/2, rate nu/2). Requires nu > 2k.
double xi(double nu, double k);

/// Scale making Var(omega U^-1/2 [delta (W - sqrt(2/pi)) + sqrt(1-delta^2) eps]) = 1.
double omega_constant(double nu, double lambda);

inline double skew_delta(double lambda) noexcept {
  return lambda / std::sqrt(1.0 + lambda * lambda);
}

/// Mean correction mu_1 / mu_2 / mu_3; exactly 0 for the M2.* families.
double mean_correction(const ModelSpec& spec);

struct DerivedConstants {
  double delta = 0.0;
  double omega = 1.0;
  double mu = 0.0;
  // Inverse moments xi_nu(k); NaN where they do not exist or are not needed.
  double xi_half = 1.0;
  double xi_one = 1.0;
  double xi_threehalf = 1.0;
  double xi_two = 1.0;
};

/// Validates the spec and computes the constants once.
DerivedConstants derive(const ModelSpec& spec);

/// Stationary variance of the Gaussian part of h, sigma^2 / (1 - phi^2).
inline double stationary_h_variance(const SvParams& p) noexcept {
  return p.sigma * p.sigma / (1.0 - p.phi * p.phi);
}

}  // namespace svkit
