#include "svkit/simulate.hpp"

#include <cmath>
#include <numbers>
#include <ostream>

#include "svkit/error.hpp"
#include "svkit/format.hpp"

namespace svkit {

namespace {

const double kSqrt2OverPi = std::sqrt(2.0 / std::numbers::pi);

}  // namespace

std::size_t burn_in_length(double phi) {
  return static_cast<std::size_t>(std::ceil(10.0 / (1.0 - phi)));
}

std::size_t decorrelation_spacing(double phi) {
  return static_cast<std::size_t>(std::ceil(50.0 / (1.0 - phi)));
}

SkewedTDraw skewed_t_with_eps(double omega, double delta, double nu, double eps, Rng& rng) {
  SkewedTDraw d;
  d.eps = eps;
  d.u = rng.gamma(0.5 * nu, 0.5 * nu);
  d.w = rng.half_normal();
  d.s = omega / std::sqrt(d.u) *
        (delta * (d.w - kSqrt2OverPi) + std::sqrt(1.0 - delta * delta) * eps);
  return d;
}

SkewedTDraw sample_skewed_t_component(double nu, double lambda, Rng& rng) {
  const double omega = omega_constant(nu, lambda);
  const double eps = rng.normal();
  return skewed_t_with_eps(omega, skew_delta(lambda), nu, eps, rng);
}

SimPath simulate_path(const ModelSpec& spec, std::size_t T, RngPolicy policy,
                      const SimOptions& options) {
  if (T < 1) throw Error(ErrorCategory::precondition, "simulate_path requires T >= 1");
  const DerivedConstants dc = derive(spec);
  const SvParams& p = spec.params;
  const Variant var = variant_of(spec.model);
  const bool ht = is_ht_based(spec.model);
  const double rho_c = std::sqrt(1.0 - p.rho * p.rho);
  const double mu = options.apply_mean_correction ? dc.mu : 0.0;

  Rng rng(policy);
  SimPath path;
  path.spec = spec;
  path.seed = policy.seed;
  path.returns.resize(T);
  path.logvols.resize(T);
  path.eps.resize(T);
  path.eta.resize(T);
  if (var == Variant::jump) {
    path.jumps_r.assign(T, 0);
    path.jumps_h.assign(T, 0);
    path.jump_size_r.assign(T, 0.0);
    path.jump_size_h.assign(T, 0.0);
  }
  if (var == Variant::skewed_t) {
    path.mixing_u.resize(T);
    path.mixing_w.resize(T);
  }

  auto vol_jump = [&](Rng& g, double& size) -> bool {
    size = 0.0;
    if (var != Variant::jump || !g.bernoulli(p.pi2)) return false;
    size = g.normal();
    return true;
  };

  // Starting state: h_1 for M2.*, h_0 for M3.*.
  double h;
  if (options.h0.fixed) {
    h = *options.h0.fixed;
  } else {
    h = p.alpha + std::sqrt(stationary_h_variance(p)) * rng.normal();
    if (var == Variant::jump) {
      const std::size_t burn = burn_in_length(p.phi);
      for (std::size_t i = 0; i < burn; ++i) {
        double k2 = 0.0;
        vol_jump(rng, k2);
        h = p.alpha + p.phi * (h - p.alpha) + p.sigma * rng.normal() + k2;
      }
    }
  }

  for (std::size_t i = 0; i < T; ++i) {
    const double eta = rng.normal();
    const double eps = p.rho * eta + rho_c * rng.normal();
    double k2 = 0.0;
    const bool j2 = vol_jump(rng, k2);

    if (ht) h = p.alpha + p.phi * (h - p.alpha) + p.sigma * eta + k2;

    double noise = eps;
    if (var == Variant::skewed_t) {
      const SkewedTDraw d = skewed_t_with_eps(dc.omega, dc.delta, p.nu, eps, rng);
      noise = d.s;
      path.mixing_u[i] = d.u;
      path.mixing_w[i] = d.w;
    }
    double r = mu + std::exp(0.5 * h) * noise;
    if (var == Variant::jump) {
      if (rng.bernoulli(p.pi1)) {
        path.jumps_r[i] = 1;
        path.jump_size_r[i] = rng.normal();
        r += path.jump_size_r[i];
      }
      path.jumps_h[i] = j2 ? 1 : 0;
      path.jump_size_h[i] = k2;
    }
    path.returns[i] = r;
    path.logvols[i] = h;
    path.eps[i] = eps;
    path.eta[i] = eta;

    if (!ht) h = p.alpha + p.phi * (h - p.alpha) + p.sigma * eta + k2;
  }
  return path;
}

StationarySegmentSampler::StationarySegmentSampler(const ModelSpec& spec, int half_width,
                                                   bool apply_mean_correction)
    : spec_(spec), half_width_(half_width) {
  if (half_width < 0) throw Error(ErrorCategory::precondition, "half_width must be >= 0");
  const DerivedConstants dc = derive(spec);
  mu_ = apply_mean_correction ? dc.mu : 0.0;
  omega_ = dc.omega;
  delta_ = dc.delta;
  h_sd_ = std::sqrt(stationary_h_variance(spec.params));
  rho_c_ = std::sqrt(1.0 - spec.params.rho * spec.params.rho);
  if (variant_of(spec.model) == Variant::jump) {
    jump_window_ = decorrelation_spacing(spec.params.phi);
  }
}

double StationarySegmentSampler::stationary_h(Rng& rng) const {
  const SvParams& p = spec_.params;
  double h = p.alpha + h_sd_ * rng.normal();
  if (jump_window_ > 0 && p.pi2 > 0.0) {
    // Accumulated jumps sum_j phi^j K_j J_j over the decorrelation window,
    // visiting only the periods that jump.
    std::uint64_t j = rng.geometric(p.pi2);
    while (j < jump_window_) {
      h += std::pow(p.phi, static_cast<double>(j)) * rng.normal();
      j += 1 + rng.geometric(p.pi2);
    }
  }
  return h;
}

double StationarySegmentSampler::next_h(double prev, double eta, Rng& rng) const {
  const SvParams& p = spec_.params;
  double h = p.alpha + p.phi * (prev - p.alpha) + p.sigma * eta;
  if (jump_window_ > 0 && rng.bernoulli(p.pi2)) h += rng.normal();
  return h;
}

double StationarySegmentSampler::centre_noise(double eps, Rng& rng) const {
  if (variant_of(spec_.model) == Variant::skewed_t) {
    return skewed_t_with_eps(omega_, delta_, spec_.params.nu, eps, rng).s;
  }
  return eps;
}

double StationarySegmentSampler::draw(Rng& rng, std::span<double> h) const {
  const int width = 2 * half_width_ + 1;
  const SvParams& p = spec_.params;
  const bool ht = is_ht_based(spec_.model);
  double r = 0.0;
  double prev = stationary_h(rng);
  for (int s = 0; s < width; ++s) {
    const double eta = rng.normal();
    if (ht) {
      prev = next_h(prev, eta, rng);
      h[s] = prev;
    } else {
      h[s] = prev;
    }
    if (s == half_width_) {
      const double eps = p.rho * eta + rho_c_ * rng.normal();
      r = mu_ + std::exp(0.5 * h[s]) * centre_noise(eps, rng);
      if (jump_window_ > 0 && rng.bernoulli(p.pi1)) r += rng.normal();
    }
    if (!ht && s + 1 < width) prev = next_h(prev, eta, rng);
  }
  return r;
}

std::vector<double> draw_stationary_return(const ModelSpec& spec, std::size_t n,
                                           RngPolicy policy) {
  if (n == 0) throw Error(ErrorCategory::precondition, "draw_stationary_return requires n >= 1");
  const StationarySegmentSampler sampler(spec, 0);
  Rng rng(policy);
  std::vector<double> out(n);
  double h = 0.0;
  for (auto& r : out) r = sampler.draw(rng, std::span<double>(&h, 1));
  return out;
}

void write_path_csv(const SimPath& path, std::ostream& os) {
  const bool jumps = !path.jumps_r.empty();
  os << (jumps ? "t,return,logvol,jump_r,jump_h\n" : "t,return,logvol\n");
  for (std::size_t i = 0; i < path.size(); ++i) {
    os << (i + 1) << ',' << fmt_double(path.returns[i]) << ',' << fmt_double(path.logvols[i]);
    if (jumps) {
      os << ',' << fmt_double(path.jumps_r[i] ? path.jump_size_r[i] : 0.0) << ','
         << fmt_double(path.jumps_h[i] ? path.jump_size_h[i] : 0.0);
    }
    os << '\n';
  }
}

}  // namespace svkit
