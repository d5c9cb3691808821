#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "svkit/empirical.hpp"
#include "svkit/leadlag.hpp"
#include "svkit/model.hpp"

namespace svkit {

struct PriorConfig {
  double alpha_mean = 0.0, alpha_sd = 1.0;          // alpha ~ N
  double phi_a = 20.0, phi_b = 1.5;                 // (phi + 1) / 2 ~ Beta
  double prec_shape = 2.5, prec_rate = 0.025;       // 1 / sigma^2 ~ Gamma(shape, rate)
  double nu_mean = 10.0;                            // nu ~ Exponential, truncated to (2, nu_max]
  double nu_max = 200.0;
  double lambda_mean = 0.0, lambda_sd = 1.0;        // lambda ~ N
  double jump_a = 2.0, jump_b = 100.0;              // pi1, pi2 ~ Beta
  // rho ~ Uniform(-1, 1) always.
};

/// Throws Error{config} if a hyperparameter is out of range.
void validate_priors(const PriorConfig& priors);

struct McmcConfig {
  int n_chains = 4;
  int burn_in = 10000;
  int n_keep = 30000;
  int thin = 1;
  std::uint64_t seed = 1;
  int adapt_window = 50;        // iterations between proposal-scale updates
  double target_accept = 0.3;
  int h_draws_per_chain = 100;  // latent paths retained per chain
  bool prior_only = false;      // switch the return likelihood off
  unsigned max_threads = 0;     // 0 = hardware concurrency
};

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double q025 = 0.0;
  double q975 = 0.0;
};

struct BlockAcceptance {
  std::string block;
  double rate = 0.0;  // post-burn-in, averaged over chains
};

struct PosteriorResult {
  ModelId model = ModelId::M21;
  std::size_t T = 0;
  std::vector<std::string> param_names;
  // chains[p][c][i]: draw i of parameter p in chain c (post burn-in).
  std::vector<std::vector<std::vector<double>>> chains;
  // Each row is one retained draw of (h_1, ..., h_T).
  std::vector<std::vector<double>> latent_h_draws;
  std::vector<ParamSummary> summaries;
  std::optional<std::vector<double>> psrf;
  std::string psrf_note;  // why psrf is unavailable, when it is
  std::vector<BlockAcceptance> acceptance;
  McmcConfig config;
  PriorConfig priors;

  /// Pooled post-burn-in draws of one parameter.
  std::vector<double> pooled(const std::string& name) const;
  std::size_t param_index(const std::string& name) const;
};

/// Parameter names estimated for a family, in reporting order.
std::vector<std::string> parameter_names(ModelId model);

/// Metropolis-within-Gibbs estimation; chains run concurrently.
PosteriorResult fit(const ReturnSeries& series, ModelId model, const PriorConfig& priors,
                    const McmcConfig& cfg);

/// Gelman-Rubin sqrt((W (n-1)/n + B/n) / W); chains[c][i].
double psrf(const std::vector<std::vector<double>>& chains, const std::string& name = "parameter");

/// Per-parameter psrf for PosteriorResult::chains layout.
std::vector<double> psrf_all(const std::vector<std::vector<std::vector<double>>>& chains,
                             const std::vector<std::string>& names);

/// Correlation of observed r_t with e^{h_{t+k}}, computed per posterior draw of
/// the h path and averaged across draws.
LeadLagProfile posterior_leadlag(const PosteriorResult& result, const ReturnSeries& series,
                                 int max_lag);

/// Sample quantile with linear interpolation between order statistics.
double quantile(std::vector<double> values, double q);

// Dumps.
void write_chain_csv(const PosteriorResult& result, int chain, std::ostream& os);
void write_h_draws_csv(const PosteriorResult& result, std::ostream& os);
void write_summary_csv(const PosteriorResult& result, std::ostream& os);
void write_fit_metadata(const PosteriorResult& result, std::ostream& os);

}  // namespace svkit
