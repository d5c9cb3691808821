#pragma once

#include <vector>

#include "svkit/model.hpp"

namespace svkit {

enum class ProfileSource { analytic, empirical, posterior };

const char* source_name(ProfileSource s) noexcept;

/// Lead-lag covariances and correlations for k in [-max_lag, max_lag].
/// Element i of each array corresponds to lag k = i - max_lag.
struct LeadLagProfile {
  ModelId model = ModelId::M21;
  int max_lag = 0;
  std::vector<double> gammas;
  std::vector<double> rhos;
  ProfileSource source = ProfileSource::analytic;

  int lag_at(std::size_t i) const noexcept { return static_cast<int>(i) - max_lag; }
  double rho(int k) const { return rhos.at(static_cast<std::size_t>(k + max_lag)); }
  double gamma(int k) const { return gammas.at(static_cast<std::size_t>(k + max_lag)); }
};

/// Stationary Var(e^{h_t}).
double var_exp_h(const ModelSpec& spec);

/// E[r_t e^{h_{t+k}}]; k > 0 is a lead of volatility, k < 0 a lag.
double gamma(const ModelSpec& spec, int k);

/// The factor rho sigma exp{3 alpha/2 + sigma^2 (5 + 4 phi^|k|) / (8 (1 - phi^2))}
/// shared by every covariance cell.
double gamma_common_factor(const SvParams& p, int k);

LeadLagProfile leadlag_profile(const ModelSpec& spec, int max_lag);

}  // namespace svkit
