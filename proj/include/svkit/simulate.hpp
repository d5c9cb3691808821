#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "svkit/model.hpp"
#include "svkit/rng.hpp"

namespace svkit {

/// Jointly simulated return / log-volatility trajectory. Index i holds
/// period t = i + 1. For the M2.* families eta[i] and jump_h[i] build the
/// *next* log-volatility h_{t+1}; for the M3.* families they built h_t.
struct SimPath {
  ModelSpec spec;
  std::uint64_t seed = 0;
  std::vector<double> returns;
  std::vector<double> logvols;
  std::vector<double> eps;  // return innovation (standard normal)
  std::vector<double> eta;  // log-volatility innovation, Corr(eps, eta) = rho
  // Jump families only.
  std::vector<std::uint8_t> jumps_r, jumps_h;
  std::vector<double> jump_size_r, jump_size_h;
  // Skewed-t families only.
  std::vector<double> mixing_u, mixing_w;

  std::size_t size() const noexcept { return returns.size(); }
};

/// Initial log-volatility: a stationary draw or a fixed value.
struct InitialH {
  std::optional<double> fixed;
  static InitialH stationary() { return {}; }
  static InitialH at(double h) { return {h}; }
};

struct SimOptions {
  InitialH h0 = InitialH::stationary();
  // Add the mean-correction constant to every return (M3.* only). Turning
  // it off exposes the drift the correction removes.
  bool apply_mean_correction = true;
};

SimPath simulate_path(const ModelSpec& spec, std::size_t T, RngPolicy rng,
                      const SimOptions& options = {});

/// Burn-in length used for non-Gaussian stationary starts: ceil(10 / (1 - phi)).
std::size_t burn_in_length(double phi);

/// Spacing used to decorrelate jump components: ceil(50 / (1 - phi)).
std::size_t decorrelation_spacing(double phi);

/// Skewed-t composite S = omega U^-1/2 [delta (W - sqrt(2/pi)) + sqrt(1 - delta^2) eps]
/// and its ingredients.
struct SkewedTDraw {
  double s, u, w, eps;
};

SkewedTDraw sample_skewed_t_component(double nu, double lambda, Rng& rng);

/// Same composite built from a given eps (used when eps must be correlated
/// with the log-volatility innovation).
SkewedTDraw skewed_t_with_eps(double omega, double delta, double nu, double eps, Rng& rng);

/// Independent draws of r_t with h at stationarity.
std::vector<double> draw_stationary_return(const ModelSpec& spec, std::size_t n, RngPolicy rng);

/// Generator of independent stationary windows (h_{t-K}, ..., h_{t+K}) together
/// with the centre return r_t. Each call is one independent draw.
class StationarySegmentSampler {
 public:
  StationarySegmentSampler(const ModelSpec& spec, int half_width, bool apply_mean_correction = true);

  /// Fills `h` (size 2K + 1) and returns r_t.
  double draw(Rng& rng, std::span<double> h) const;

  int half_width() const noexcept { return half_width_; }
  double mean_correction() const noexcept { return mu_; }

 private:
  double stationary_h(Rng& rng) const;
  double next_h(double prev, double eta, Rng& rng) const;
  double centre_noise(double eps, Rng& rng) const;

  ModelSpec spec_;
  int half_width_;
  double mu_ = 0.0;
  double omega_ = 1.0, delta_ = 0.0;
  double h_sd_ = 0.0, rho_c_ = 0.0;
  std::size_t jump_window_ = 0;
};

/// CSV dump: header `t,return,logvol[,jump_r,jump_h]`, one row per step.
/// Jump columns carry the realised jump contribution K * J.
void write_path_csv(const SimPath& path, std::ostream& os);

}  // namespace svkit
