#include "svkit/inference.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <memory>
#include <numbers>
#include <numeric>
#include <ostream>
#include <sstream>
#include <thread>

#include "svkit/closed_form.hpp"
#include "svkit/error.hpp"
#include "svkit/format.hpp"
#include "svkit/rng.hpp"

namespace svkit {

namespace {

constexpr double kSqrt2OverPi = 0.79788456080286535588;
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

struct Theta {
  double alpha = 0.0, phi = 0.95, sigma = 0.2, rho = 0.0;
  double nu = 10.0, lambda = 0.0, pi1 = 0.01, pi2 = 0.01;
};

struct Derived {
  double mu = 0.0;
  double omega = 1.0, log_omega = 0.0;
  double delta = 0.0, sdelta = 1.0;
  double one_m_rho2 = 1.0, log_one_m_rho2 = 0.0;
  double log_sigma = 0.0;
};

// Adaptive random-walk block.
struct Block {
  std::string name;
  double log_scale = 0.0;
  long window_tries = 0, window_accepts = 0;
  long tries = 0, accepts = 0;  // post-burn-in
  int adaptations = 0;

  void record(bool accepted, bool burning) {
    if (burning) {
      ++window_tries;
      window_accepts += accepted;
    } else {
      ++tries;
      accepts += accepted;
    }
  }

  void adapt(double target) {
    if (window_tries == 0) return;
    const double rate = static_cast<double>(window_accepts) / static_cast<double>(window_tries);
    ++adaptations;
    const double step = std::min(1.0, 3.0 / std::sqrt(static_cast<double>(adaptations)));
    log_scale = std::clamp(log_scale + step * (rate - target), -12.0, 3.0);
    window_tries = window_accepts = 0;
  }

  double scale() const { return std::exp(log_scale); }
};

double log_beta_kernel(double x, double a, double b) {
  return (a - 1.0) * std::log(x) + (b - 1.0) * std::log1p(-x);
}

class Chain {
 public:
  Chain(const std::vector<double>& r, ModelId model, const PriorConfig& priors,
        const McmcConfig& cfg, int index)
      : r_(r),
        T_(r.size()),
        model_(model),
        variant_(variant_of(model)),
        ht_(is_ht_based(model)),
        priors_(priors),
        cfg_(cfg),
        use_lik_(!cfg.prior_only),
        rng_(RngPolicy{cfg.seed, static_cast<std::uint64_t>(index)}) {
    names_ = parameter_names(model);
    draws_.assign(names_.size(), {});
    for (auto& d : draws_) d.reserve(static_cast<std::size_t>(cfg.n_keep));
  }

  void run() {
    initialise();
    const long total = static_cast<long>(cfg_.burn_in) +
                       static_cast<long>(cfg_.n_keep) * static_cast<long>(cfg_.thin);
    const int h_every = std::max(1, cfg_.n_keep / std::max(1, cfg_.h_draws_per_chain));
    int kept = 0;
    for (long it = 0; it < total; ++it) {
      const bool burning = it < cfg_.burn_in;
      sweep(burning);
      if (burning && (it + 1) % std::max(1, cfg_.adapt_window) == 0) {
        for (auto& b : blocks_) b.adapt(cfg_.target_accept);
      }
      if (!burning && (it - cfg_.burn_in + 1) % cfg_.thin == 0) {
        store();
        if (kept % h_every == 0 &&
            static_cast<int>(h_draws_.size()) < cfg_.h_draws_per_chain) {
          store_h();
        }
        ++kept;
      }
    }
  }

  std::vector<std::vector<double>> draws_;
  std::vector<std::vector<double>> h_draws_;
  std::vector<Block> blocks_;

 private:
  enum BlockId { kH, kAlpha, kPhi, kSigma, kRho, kNu, kLambda, kNcAlpha, kNcPhi, kNcSigma, kU,
                 kPi2, kNumBlocks };

  // ---------------------------------------------------------------- setup

  void initialise() {
    static const char* block_names[kNumBlocks] = {
        "h", "alpha", "phi", "sigma", "rho", "nu", "lambda",
        "alpha_nc", "phi_nc", "sigma_nc", "u", "pi2"};
    static const double init_scale[kNumBlocks] = {0.5, 0.1, 0.1, 0.1, 0.1, 0.3, 0.1,
                                                  0.05, 0.05, 0.05, 0.5, 1.0};
    blocks_.resize(kNumBlocks);
    for (int b = 0; b < kNumBlocks; ++b) {
      blocks_[b].name = block_names[b];
      blocks_[b].log_scale = std::log(init_scale[b]);
    }

    theta_.alpha = priors_.alpha_mean + priors_.alpha_sd * rng_.normal();
    theta_.phi = 0.95;
    theta_.sigma = 1.0 / std::sqrt(rng_.gamma(priors_.prec_shape, priors_.prec_rate));
    theta_.rho = 2.0 * rng_.uniform() - 1.0;
    if (variant_ == Variant::skewed_t) {
      theta_.nu = draw_truncated_nu();
      theta_.lambda = priors_.lambda_mean + priors_.lambda_sd * rng_.normal();
    }
    if (variant_ == Variant::jump) {
      theta_.pi1 = rng_.beta(priors_.jump_a, priors_.jump_b);
      theta_.pi2 = rng_.beta(priors_.jump_a, priors_.jump_b);
    }
    if (!compute_derived(theta_, der_)) {
      throw Error(ErrorCategory::numeric, "fit: initial parameters are invalid: " + dump_state());
    }

    // Rolling log of squared returns, floored.
    x_.assign(T_ + 1, 0.0);
    double mean_sq = 0.0;
    for (double v : r_) mean_sq += v * v;
    mean_sq /= static_cast<double>(T_);
    const double floor = std::max(1e-3 * mean_sq, 1e-300);
    const long half = 5;
    std::vector<double> local(T_);
    for (long t = 0; t < static_cast<long>(T_); ++t) {
      const long lo = std::max(0L, t - half);
      const long hi = std::min(static_cast<long>(T_) - 1, t + half);
      double s = 0.0;
      for (long j = lo; j <= hi; ++j) s += r_[j] * r_[j];
      local[t] = std::log(std::max(s / static_cast<double>(hi - lo + 1), floor));
    }
    // x[i] is h_{i+1} for M2.* (vol of r index i is x[i]), h_i for M3.*.
    for (std::size_t i = 0; i <= T_; ++i) {
      if (ht_) {
        x_[i] = local[i == 0 ? 0 : i - 1];
      } else {
        x_[i] = local[std::min(i, T_ - 1)];
      }
    }
    eh_.resize(T_ + 1);
    for (std::size_t i = 0; i <= T_; ++i) eh_[i] = std::exp(-0.5 * x_[i]);

    if (variant_ == Variant::skewed_t) {
      u_.resize(T_);
      log_u_.resize(T_);
      w_.resize(T_);
      for (std::size_t t = 0; t < T_; ++t) {
        u_[t] = rng_.gamma(0.5 * theta_.nu, 0.5 * theta_.nu);
        log_u_[t] = std::log(u_[t]);
        w_[t] = rng_.half_normal();
      }
    }
    if (variant_ == Variant::jump) {
      j1_.assign(T_, 0);
      j2_.assign(T_, 0);
      k1_.resize(T_);
      k2_.resize(T_);
      for (std::size_t t = 0; t < T_; ++t) {
        k1_[t] = rng_.normal();
        k2_[t] = rng_.normal();
      }
    }
    nx_.resize(T_ + 1);
    neh_.resize(T_ + 1);
    check_finite("initial state");
  }

  double draw_truncated_nu() {
    // Exponential restricted to (2, nu_max], by inversion of its CDF.
    const double rate = 1.0 / priors_.nu_mean;
    const double lo = std::exp(-rate * 2.0);
    const double hi = std::exp(-rate * priors_.nu_max);
    const double u = rng_.uniform();
    return -std::log(lo - u * (lo - hi)) / rate;
  }

  bool compute_derived(const Theta& th, Derived& d) const {
    if (!(std::fabs(th.phi) < 1.0) || !(th.sigma > 0.0) || !(std::fabs(th.rho) < 1.0)) {
      return false;
    }
    d.one_m_rho2 = 1.0 - th.rho * th.rho;
    if (!(d.one_m_rho2 > 0.0)) return false;
    d.log_one_m_rho2 = std::log(d.one_m_rho2);
    d.log_sigma = std::log(th.sigma);
    d.mu = 0.0;
    d.omega = 1.0;
    d.log_omega = 0.0;
    d.delta = 0.0;
    d.sdelta = 1.0;
    if (variant_ == Variant::skewed_t) {
      if (!(th.nu > 2.0 && th.nu <= priors_.nu_max)) return false;
      d.delta = skew_delta(th.lambda);
      d.sdelta = std::sqrt(1.0 - d.delta * d.delta);
      d.omega = omega_constant(th.nu, th.lambda);
      d.log_omega = std::log(d.omega);
    }
    if (variant_ == Variant::jump) {
      if (!(th.pi1 > 0.0 && th.pi1 < 1.0 && th.pi2 > 0.0 && th.pi2 < 1.0)) return false;
    }
    if (ht_ && th.rho != 0.0) {
      const double base = -0.5 * th.rho * th.sigma *
                          std::exp(0.5 * th.alpha + th.sigma * th.sigma /
                                                        (8.0 * (1.0 - th.phi * th.phi)));
      switch (variant_) {
        case Variant::base:
          d.mu = base;
          break;
        case Variant::skewed_t:
          d.mu = base * d.sdelta * d.omega * xi(th.nu, 0.5);
          break;
        case Variant::jump:
          d.mu = base * product_P(0.5, th.pi2, th.phi);
          break;
      }
    }
    return std::isfinite(d.mu);
  }

  // ---------------------------------------------------------- log density

  double x0_log_prior(double x0, const Theta& th) const {
    const double s2 = th.sigma * th.sigma / (1.0 - th.phi * th.phi);
    const double d = x0 - th.alpha;
    return -0.5 * std::log(s2) - 0.5 * d * d / s2;
  }

  // Innovation D_t = h-increment net of the volatility jump.
  double innovation(std::size_t t, double xt, double xt1, const Theta& th) const {
    double d = xt1 - th.alpha - th.phi * (xt - th.alpha);
    if (variant_ == Variant::jump && j2_[t]) d -= k2_[t];
    return d;
  }

  double return_jump(std::size_t t) const {
    return (variant_ == Variant::jump && j1_[t]) ? k1_[t] : 0.0;
  }

  // Log density of r_t given the volatility (through eh = e^{-vol/2}) and eta.
  double obs_log(std::size_t t, double vol, double eh, double eta, const Theta& th,
                 const Derived& d) const {
    const double rr = r_[t] - d.mu - return_jump(t);
    if (variant_ == Variant::skewed_t) {
      // r = s (delta (W - c) + sdelta (rho eta + sqrt(1-rho^2) z)), s = e^{vol/2} omega U^{-1/2}.
      const double inv_s = eh * std::exp(0.5 * log_u_[t] - d.log_omega);
      const double z = rr * inv_s - d.delta * (w_[t] - kSqrt2OverPi) - d.sdelta * th.rho * eta;
      const double var = d.sdelta * d.sdelta * d.one_m_rho2;
      return std::log(inv_s) - 0.5 * std::log(var) - 0.5 * z * z / var;
    }
    const double z = rr * eh - th.rho * eta;
    return -0.5 * vol - 0.5 * d.log_one_m_rho2 - 0.5 * z * z / d.one_m_rho2;
  }

  // Transition plus observation term for period t, linking x[t] and x[t+1].
  double pair_log(std::size_t t, double xt, double xt1, double eht, double eht1, const Theta& th,
                  const Derived& d) const {
    const double eta = innovation(t, xt, xt1, th) / th.sigma;
    double lp = -d.log_sigma - 0.5 * eta * eta;
    if (use_lik_) {
      lp += ht_ ? obs_log(t, xt1, eht1, eta, th, d) : obs_log(t, xt, eht, eta, th, d);
    }
    return lp;
  }

  double obs_total(const std::vector<double>& x, const std::vector<double>& eh, const Theta& th,
                   const Derived& d) const {
    if (!use_lik_) return 0.0;
    double s = 0.0;
    for (std::size_t t = 0; t < T_; ++t) {
      const double eta = innovation(t, x[t], x[t + 1], th) / th.sigma;
      s += ht_ ? obs_log(t, x[t + 1], eh[t + 1], eta, th, d) : obs_log(t, x[t], eh[t], eta, th, d);
    }
    return s;
  }

  double path_log(const Theta& th, const Derived& d) const {
    double s = x0_log_prior(x_[0], th);
    for (std::size_t t = 0; t < T_; ++t) s += pair_log(t, x_[t], x_[t + 1], eh_[t], eh_[t + 1], th, d);
    return s;
  }

  // Prior on the transformed coordinates used by the random walks.
  double param_log_prior(const Theta& th) const {
    double lp = 0.0;
    const double za = (th.alpha - priors_.alpha_mean) / priors_.alpha_sd;
    lp += -0.5 * za * za;
    // u = atanh(phi); (phi+1)/2 ~ Beta; d phi / d u = 1 - phi^2.
    lp += log_beta_kernel(0.5 * (th.phi + 1.0), priors_.phi_a, priors_.phi_b) +
          std::log1p(-th.phi * th.phi);
    // v = log sigma^2; tau = e^{-v} ~ Gamma; |d tau / d v| = tau.
    const double tau = 1.0 / (th.sigma * th.sigma);
    lp += priors_.prec_shape * std::log(tau) - priors_.prec_rate * tau;
    // w = atanh(rho); rho ~ U(-1,1).
    lp += std::log1p(-th.rho * th.rho);
    if (variant_ == Variant::skewed_t) {
      if (!(th.nu > 2.0 && th.nu <= priors_.nu_max)) return kNegInf;
      lp += -th.nu / priors_.nu_mean + std::log(th.nu - 2.0);
      const double zl = (th.lambda - priors_.lambda_mean) / priors_.lambda_sd;
      lp += -0.5 * zl * zl;
    }
    return lp;
  }

  double u_prior_total(double nu) const {
    const double a = 0.5 * nu;
    double slog = 0.0, s = 0.0;
    for (std::size_t t = 0; t < T_; ++t) {
      slog += log_u_[t];
      s += u_[t];
    }
    return static_cast<double>(T_) * (a * std::log(a) - std::lgamma(a)) + (a - 1.0) * slog -
           a * s;
  }

  // ---------------------------------------------------------------- sweep

  void sweep(bool burning) {
    update_h(burning);
    if (variant_ == Variant::skewed_t) {
      update_u(burning);
      update_w();
    }
    if (variant_ == Variant::jump) {
      update_jumps();
      invalidate();
      update_pi(burning);
    }
    invalidate();
    update_param(kAlpha, burning);
    update_param(kPhi, burning);
    update_param(kSigma, burning);
    update_param(kRho, burning);
    if (variant_ == Variant::skewed_t) {
      update_param(kNu, burning);
      update_param(kLambda, burning);
    }
    update_noncentred(kNcAlpha, burning);
    update_noncentred(kNcPhi, burning);
    update_noncentred(kNcSigma, burning);
  }

  void update_h(bool burning) {
    Block& b = blocks_[kH];
    const double s = b.scale();
    pl_.resize(T_);
    for (std::size_t t = 0; t < T_; ++t) pl_[t] = pair_at(t);
    for (std::size_t i = 0; i <= T_; ++i) {
      double cur = 0.0, nl = 0.0, left = 0.0, right = 0.0;
      const double prop = x_[i] + s * rng_.normal();
      const double eprop = std::exp(-0.5 * prop);
      if (i == 0) {
        cur += x0_log_prior(x_[0], theta_);
        nl += x0_log_prior(prop, theta_);
      }
      if (i >= 1) {
        cur += pl_[i - 1];
        left = pair_log(i - 1, x_[i - 1], prop, eh_[i - 1], eprop, theta_, der_);
        nl += left;
      }
      if (i < T_) {
        cur += pl_[i];
        right = pair_log(i, prop, x_[i + 1], eprop, eh_[i + 1], theta_, der_);
        nl += right;
      }
      const bool acc = accept(nl - cur);
      if (acc) {
        x_[i] = prop;
        eh_[i] = eprop;
        if (i >= 1) pl_[i - 1] = left;
        if (i < T_) pl_[i] = right;
      }
      b.record(acc, burning);
    }
    invalidate();
  }

  std::size_t vol_index(std::size_t t) const { return ht_ ? t + 1 : t; }

  double pair_at(std::size_t t) const {
    return pair_log(t, x_[t], x_[t + 1], eh_[t], eh_[t + 1], theta_, der_);
  }

  void update_u(bool burning) {
    Block& b = blocks_[kU];
    const double s = b.scale();
    const double a = 0.5 * theta_.nu;
    for (std::size_t t = 0; t < T_; ++t) {
      if (!use_lik_) {
        u_[t] = rng_.gamma(a, a);
        log_u_[t] = std::log(u_[t]);
        b.record(true, burning);
        continue;
      }
      // Random walk on log U; the prior term includes the log-Jacobian.
      const double lu = log_u_[t];
      const double cur = a * lu - a * u_[t] + pl_[t];
      const double nlu = lu + s * rng_.normal();
      log_u_[t] = nlu;
      u_[t] = std::exp(nlu);
      const double np = pair_at(t);
      const bool acc = accept(a * nlu - a * u_[t] + np - cur);
      if (acc) {
        pl_[t] = np;
      } else {
        log_u_[t] = lu;
        u_[t] = std::exp(lu);
      }
      b.record(acc, burning);
    }
  }

  void update_w() {
    for (std::size_t t = 0; t < T_; ++t) {
      if (!use_lik_ || der_.delta == 0.0) {
        w_[t] = rng_.half_normal();
        continue;
      }
      const std::size_t v = vol_index(t);
      const double eta = innovation(t, x_[t], x_[t + 1], theta_) / theta_.sigma;
      const double inv_s = eh_[v] * std::exp(0.5 * log_u_[t] - der_.log_omega);
      const double rr = r_[t] - der_.mu;
      const double var = der_.sdelta * der_.sdelta * der_.one_m_rho2;
      const double y = rr * inv_s + der_.delta * kSqrt2OverPi - der_.sdelta * theta_.rho * eta;
      const double q = 1.0 + der_.delta * der_.delta / var;
      const double m = der_.delta * y / var / q;
      const double sd = 1.0 / std::sqrt(q);
      w_[t] = m + sd * rng_.truncated_normal_lower(-m / sd);
    }
  }

  void update_jumps() {
    const double lo1 = std::log(theta_.pi1) - std::log1p(-theta_.pi1);
    const double lo2 = std::log(theta_.pi2) - std::log1p(-theta_.pi2);
    for (std::size_t t = 0; t < T_; ++t) {
      // Return jump indicator, with K1 at its current value.
      {
        j1_[t] = 0;
        const double l0 = pair_at(t);
        j1_[t] = 1;
        const double l1 = pair_at(t);
        j1_[t] = rng_.uniform() < 1.0 / (1.0 + std::exp(-(lo1 + l1 - l0))) ? 1 : 0;
        if (j1_[t] && use_lik_) {
          const std::size_t v = vol_index(t);
          const double eta = innovation(t, x_[t], x_[t + 1], theta_) / theta_.sigma;
          const double ev = 1.0 / (eh_[v] * eh_[v]);
          const double y = r_[t] - der_.mu - theta_.rho * eta / eh_[v];
          const double V = ev * der_.one_m_rho2;
          const double prec = 1.0 + 1.0 / V;
          k1_[t] = (y / V) / prec + rng_.normal() / std::sqrt(prec);
        } else {
          k1_[t] = rng_.normal();
        }
      }
      // Volatility jump indicator.
      {
        j2_[t] = 0;
        const double l0 = pair_at(t);
        j2_[t] = 1;
        const double l1 = pair_at(t);
        j2_[t] = rng_.uniform() < 1.0 / (1.0 + std::exp(-(lo2 + l1 - l0))) ? 1 : 0;
        if (j2_[t]) {
          const std::size_t v = vol_index(t);
          const double d0 = x_[t + 1] - theta_.alpha - theta_.phi * (x_[t] - theta_.alpha);
          const double s2 = theta_.sigma * theta_.sigma;
          double prec = 1.0 / s2 + 1.0;
          double lin = d0 / s2;
          if (use_lik_) {
            const double a = theta_.rho / theta_.sigma;
            const double g = (r_[t] - der_.mu - return_jump(t)) * eh_[v] - a * d0;
            prec += a * a / der_.one_m_rho2;
            lin -= a * g / der_.one_m_rho2;
          }
          k2_[t] = lin / prec + rng_.normal() / std::sqrt(prec);
        } else {
          k2_[t] = rng_.normal();
        }
      }
    }
  }

  void update_pi(bool burning) {
    long n1 = 0, n2 = 0;
    for (std::size_t t = 0; t < T_; ++t) {
      n1 += j1_[t];
      n2 += j2_[t];
    }
    const double Td = static_cast<double>(T_);
    const double a1 = priors_.jump_a + static_cast<double>(n1);
    const double b1 = priors_.jump_b + Td - static_cast<double>(n1);
    const double a2 = priors_.jump_a + static_cast<double>(n2);
    const double b2 = priors_.jump_b + Td - static_cast<double>(n2);
    Theta prop = theta_;
    prop.pi1 = rng_.beta(a1, b1);
    prop.pi2 = rng_.beta(a2, b2);
    Derived pd;
    if (!ht_ || !use_lik_) {
      // pi1 and pi2 enter no other term: both draws are exact Gibbs steps.
      if (compute_derived(prop, pd)) {
        theta_ = prop;
        der_ = pd;
      }
      return;
    }
    // pi1 is conjugate; pi2 also moves the mean correction, so its Beta full
    // conditional serves as an independence proposal.
    Theta with_pi1 = theta_;
    with_pi1.pi1 = prop.pi1;
    Derived d1;
    if (compute_derived(with_pi1, d1)) {
      theta_ = with_pi1;
      der_ = d1;
    }
    Theta with_pi2 = theta_;
    with_pi2.pi2 = prop.pi2;
    Derived d2;
    bool acc = false;
    if (compute_derived(with_pi2, d2)) {
      const double prop_obs = obs_total(x_, eh_, with_pi2, d2);
      acc = accept(prop_obs - current_obs());
      if (acc) {
        theta_ = with_pi2;
        der_ = d2;
        invalidate();
        obs_lp_ = prop_obs;
        obs_valid_ = true;
      }
    }
    blocks_[kPi2].record(acc, burning);
  }

  // Centred random walk on one transformed parameter.
  void update_param(int id, bool burning) {
    Block& b = blocks_[id];
    Theta prop = theta_;
    const double step = b.scale() * rng_.normal();
    switch (id) {
      case kAlpha: prop.alpha += step; break;
      case kPhi: prop.phi = std::tanh(std::atanh(theta_.phi) + step); break;
      case kSigma: prop.sigma = theta_.sigma * std::exp(0.5 * step); break;
      case kRho: prop.rho = std::tanh(std::atanh(theta_.rho) + step); break;
      case kNu: prop.nu = 2.0 + (theta_.nu - 2.0) * std::exp(step); break;
      case kLambda: prop.lambda += step; break;
      default: break;
    }
    Derived pd;
    bool acc = false;
    double prop_lp = 0.0;
    if (compute_derived(prop, pd)) {
      double diff = param_log_prior(prop) - param_log_prior(theta_);
      if (std::isfinite(diff)) {
        if (id == kNu) diff += u_prior_total(prop.nu) - u_prior_total(theta_.nu);
        prop_lp = path_log(prop, pd);
        diff += prop_lp - current_path_log();
        acc = accept(diff);
      }
    }
    if (acc) {
      theta_ = prop;
      der_ = pd;
      invalidate();
      path_lp_ = prop_lp;
      path_valid_ = true;
    }
    b.record(acc, burning);
  }

  double current_path_log() {
    if (!path_valid_) {
      path_lp_ = path_log(theta_, der_);
      path_valid_ = true;
    }
    return path_lp_;
  }

  double current_obs() {
    if (!obs_valid_) {
      obs_lp_ = obs_total(x_, eh_, theta_, der_);
      obs_valid_ = true;
    }
    return obs_lp_;
  }

  void invalidate() { path_valid_ = obs_valid_ = false; }

  // Moves of (alpha, phi, sigma) that hold the standardised innovations of the
  // h path fixed. The transition densities and the Jacobian cancel, leaving
  // the parameter prior and the return likelihood.
  void update_noncentred(int id, bool burning) {
    Block& b = blocks_[id];
    Theta prop = theta_;
    const double step = b.scale() * rng_.normal();
    double prop_obs = 0.0;
    switch (id) {
      case kNcAlpha: prop.alpha += step; break;
      case kNcPhi: prop.phi = std::tanh(std::atanh(theta_.phi) + step); break;
      case kNcSigma: prop.sigma = theta_.sigma * std::exp(0.5 * step); break;
      default: break;
    }
    Derived pd;
    bool acc = false;
    if (compute_derived(prop, pd)) {
      double diff = param_log_prior(prop) - param_log_prior(theta_);
      if (std::isfinite(diff)) {
        const double s0 = theta_.sigma / std::sqrt(1.0 - theta_.phi * theta_.phi);
        const double s0p = prop.sigma / std::sqrt(1.0 - prop.phi * prop.phi);
        nx_[0] = prop.alpha + (x_[0] - theta_.alpha) * (s0p / s0);
        for (std::size_t t = 0; t < T_; ++t) {
          const double eta = innovation(t, x_[t], x_[t + 1], theta_) / theta_.sigma;
          double nxt = prop.alpha + prop.phi * (nx_[t] - prop.alpha) + prop.sigma * eta;
          if (variant_ == Variant::jump && j2_[t]) nxt += k2_[t];
          nx_[t + 1] = nxt;
        }
        if (id == kNcAlpha) {
          const double f = std::exp(-0.5 * step);
          for (std::size_t i = 0; i <= T_; ++i) neh_[i] = eh_[i] * f;
        } else {
          for (std::size_t i = 0; i <= T_; ++i) neh_[i] = std::exp(-0.5 * nx_[i]);
        }
        if (use_lik_) {
          prop_obs = obs_total(nx_, neh_, prop, pd);
          diff += prop_obs - current_obs();
        }
        acc = accept(diff);
      }
    }
    if (acc) {
      theta_ = prop;
      der_ = pd;
      x_.swap(nx_);
      eh_.swap(neh_);
      invalidate();
      obs_lp_ = prop_obs;
      obs_valid_ = true;
    }
    b.record(acc, burning);
  }

  bool accept(double log_ratio) {
    if (std::isnan(log_ratio)) return false;
    if (log_ratio >= 0.0) return true;
    return std::log(rng_.uniform()) < log_ratio;
  }

  // -------------------------------------------------------------- storage

  void store() {
    check_finite("kept draw");
    std::size_t p = 0;
    draws_[p++].push_back(theta_.alpha);
    draws_[p++].push_back(theta_.sigma);
    draws_[p++].push_back(theta_.phi);
    draws_[p++].push_back(theta_.rho);
    if (variant_ == Variant::skewed_t) {
      draws_[p++].push_back(theta_.nu);
      draws_[p++].push_back(theta_.lambda);
    }
    if (variant_ == Variant::jump) {
      draws_[p++].push_back(theta_.pi1);
      draws_[p++].push_back(theta_.pi2);
    }
  }

  void store_h() {
    // h_1..h_T: x[0..T-1] for M2.*, x[1..T] for M3.*.
    const std::size_t off = ht_ ? 1 : 0;
    h_draws_.emplace_back(x_.begin() + static_cast<long>(off),
                          x_.begin() + static_cast<long>(off + T_));
  }

  void check_finite(const char* where) {
    const double lp = param_log_prior(theta_) + current_path_log();
    if (!std::isfinite(lp)) {
      throw Error(ErrorCategory::numeric,
                  std::string("non-finite log posterior at ") + where + ": " + dump_state());
    }
  }

  std::string dump_state() const {
    std::ostringstream os;
    os << "model=" << model_name(model_) << " alpha=" << fmt_double(theta_.alpha)
       << " phi=" << fmt_double(theta_.phi) << " sigma=" << fmt_double(theta_.sigma)
       << " rho=" << fmt_double(theta_.rho);
    if (variant_ == Variant::skewed_t) {
      os << " nu=" << fmt_double(theta_.nu) << " lambda=" << fmt_double(theta_.lambda);
    }
    if (variant_ == Variant::jump) {
      os << " pi1=" << fmt_double(theta_.pi1) << " pi2=" << fmt_double(theta_.pi2);
    }
    os << " mu=" << fmt_double(der_.mu);
    if (!x_.empty()) {
      const auto [mn, mx] = std::minmax_element(x_.begin(), x_.end());
      os << " h_min=" << fmt_double(*mn) << " h_max=" << fmt_double(*mx);
    }
    return os.str();
  }

  const std::vector<double>& r_;
  std::size_t T_;
  ModelId model_;
  Variant variant_;
  bool ht_;
  const PriorConfig& priors_;
  const McmcConfig& cfg_;
  bool use_lik_;
  Rng rng_;
  std::vector<double> pl_;  // pair_log of every period at the current state
  double path_lp_ = 0.0, obs_lp_ = 0.0;
  bool path_valid_ = false, obs_valid_ = false;
  std::vector<std::string> names_;

  Theta theta_;
  Derived der_;
  std::vector<double> x_, eh_, nx_, neh_;
  std::vector<double> u_, log_u_, w_;
  std::vector<std::uint8_t> j1_, j2_;
  std::vector<double> k1_, k2_;
};

void validate_config(const McmcConfig& cfg) {
  if (cfg.n_chains < 1) throw Error(ErrorCategory::config, "n_chains must be >= 1");
  if (cfg.burn_in < 0) throw Error(ErrorCategory::config, "burn_in must be >= 0");
  if (cfg.n_keep < 1) throw Error(ErrorCategory::config, "n_keep must be >= 1");
  if (cfg.thin < 1) throw Error(ErrorCategory::config, "thin must be >= 1");
  if (cfg.adapt_window < 1) throw Error(ErrorCategory::config, "adapt_window must be >= 1");
  if (!(cfg.target_accept > 0.0 && cfg.target_accept < 1.0)) {
    throw Error(ErrorCategory::config, "target_accept must lie in (0, 1)");
  }
  if (cfg.h_draws_per_chain < 0) {
    throw Error(ErrorCategory::config, "h_draws_per_chain must be >= 0");
  }
}

double mean_of(const std::vector<double>& v) {
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

}  // namespace

void validate_priors(const PriorConfig& p) {
  const auto positive = [](double v, const char* name) {
    if (!(v > 0.0) || !std::isfinite(v)) {
      throw Error(ErrorCategory::config, std::string("prior hyperparameter ") + name +
                                             " must be positive and finite");
    }
  };
  if (!std::isfinite(p.alpha_mean) || !std::isfinite(p.lambda_mean)) {
    throw Error(ErrorCategory::config, "prior means must be finite");
  }
  positive(p.alpha_sd, "alpha_sd");
  positive(p.phi_a, "phi_a");
  positive(p.phi_b, "phi_b");
  positive(p.prec_shape, "prec_shape");
  positive(p.prec_rate, "prec_rate");
  positive(p.nu_mean, "nu_mean");
  positive(p.lambda_sd, "lambda_sd");
  positive(p.jump_a, "jump_a");
  positive(p.jump_b, "jump_b");
  if (!(p.nu_max > 2.0)) throw Error(ErrorCategory::config, "nu_max must exceed 2");
}

std::vector<std::string> parameter_names(ModelId model) {
  std::vector<std::string> names{"alpha", "sigma", "phi", "rho"};
  if (variant_of(model) == Variant::skewed_t) {
    names.emplace_back("nu");
    names.emplace_back("lambda");
  }
  if (variant_of(model) == Variant::jump) {
    names.emplace_back("pi1");
    names.emplace_back("pi2");
  }
  return names;
}

std::size_t PosteriorResult::param_index(const std::string& name) const {
  const auto it = std::find(param_names.begin(), param_names.end(), name);
  if (it == param_names.end()) {
    throw Error(ErrorCategory::precondition, "no parameter named '" + name + "' in this fit");
  }
  return static_cast<std::size_t>(it - param_names.begin());
}

std::vector<double> PosteriorResult::pooled(const std::string& name) const {
  std::vector<double> out;
  for (const auto& c : chains[param_index(name)]) out.insert(out.end(), c.begin(), c.end());
  return out;
}

double quantile(std::vector<double> v, double q) {
  if (v.empty()) throw Error(ErrorCategory::precondition, "quantile of an empty sample");
  if (!(q >= 0.0 && q <= 1.0)) throw Error(ErrorCategory::precondition, "quantile q outside [0,1]");
  std::sort(v.begin(), v.end());
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

double psrf(const std::vector<std::vector<double>>& chains, const std::string& name) {
  if (chains.size() < 2) {
    throw Error(ErrorCategory::precondition, "psrf needs at least 2 chains");
  }
  const std::size_t n = chains[0].size();
  if (n < 10) throw Error(ErrorCategory::precondition, "psrf needs chains of length >= 10");
  for (const auto& c : chains) {
    if (c.size() != n) throw Error(ErrorCategory::precondition, "psrf chains differ in length");
  }
  const double m = static_cast<double>(chains.size());
  const double nd = static_cast<double>(n);
  std::vector<double> means;
  double W = 0.0;
  for (const auto& c : chains) {
    const double mc = mean_of(c);
    means.push_back(mc);
    double s = 0.0;
    for (double v : c) s += (v - mc) * (v - mc);
    W += s / (nd - 1.0);
  }
  W /= m;
  if (!(W > 0.0)) {
    throw Error(ErrorCategory::numeric,
                "psrf: zero within-chain variance for parameter '" + name + "' (stuck chain)");
  }
  const double grand = mean_of(means);
  double B = 0.0;
  for (double mc : means) B += (mc - grand) * (mc - grand);
  B *= nd / (m - 1.0);
  return std::sqrt((W * (nd - 1.0) / nd + B / nd) / W);
}

std::vector<double> psrf_all(const std::vector<std::vector<std::vector<double>>>& chains,
                             const std::vector<std::string>& names) {
  std::vector<double> out;
  for (std::size_t p = 0; p < chains.size(); ++p) {
    out.push_back(psrf(chains[p], p < names.size() ? names[p] : "parameter"));
  }
  return out;
}

PosteriorResult fit(const ReturnSeries& series, ModelId model, const PriorConfig& priors,
                    const McmcConfig& cfg) {
  validate_priors(priors);
  validate_config(cfg);
  if (series.size() < 10) throw Error(ErrorCategory::precondition, "fit needs at least 10 returns");
  if (!series.mean_adjusted) {
    throw Error(ErrorCategory::config, "fit requires a mean-adjusted return series");
  }
  for (double v : series.returns) {
    if (!std::isfinite(v)) throw Error(ErrorCategory::precondition, "fit: non-finite return");
  }

  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const unsigned limit = cfg.max_threads == 0 ? hw : cfg.max_threads;
  std::vector<std::unique_ptr<Chain>> chains;
  for (int c = 0; c < cfg.n_chains; ++c) {
    chains.push_back(std::make_unique<Chain>(series.returns, model, priors, cfg, c));
  }
  // Chains are independent; run them in waves of at most `limit` threads.
  for (std::size_t start = 0; start < chains.size(); start += limit) {
    std::vector<std::future<void>> wave;
    const std::size_t end = std::min(chains.size(), start + limit);
    for (std::size_t c = start; c < end; ++c) {
      wave.push_back(std::async(std::launch::async, [&chains, c] { chains[c]->run(); }));
    }
    for (auto& f : wave) f.get();
  }

  PosteriorResult res;
  res.model = model;
  res.T = series.size();
  res.param_names = parameter_names(model);
  res.config = cfg;
  res.priors = priors;
  res.chains.assign(res.param_names.size(), {});
  for (std::size_t p = 0; p < res.param_names.size(); ++p) {
    for (auto& ch : chains) res.chains[p].push_back(std::move(ch->draws_[p]));
  }
  for (auto& ch : chains) {
    for (auto& h : ch->h_draws_) res.latent_h_draws.push_back(std::move(h));
  }
  for (std::size_t p = 0; p < res.param_names.size(); ++p) {
    const auto all = res.pooled(res.param_names[p]);
    res.summaries.push_back({res.param_names[p], mean_of(all), quantile(all, 0.025),
                             quantile(all, 0.975)});
  }

  // Acceptance of every Metropolis block this family uses.
  const Variant var = variant_of(model);
  for (std::size_t b = 0; b < chains[0]->blocks_.size(); ++b) {
    const std::string& name = chains[0]->blocks_[b].name;
    if ((name == "nu" || name == "lambda" || name == "u") && var != Variant::skewed_t) continue;
    if (name == "pi2" && !(var == Variant::jump && is_ht_based(model) && !cfg.prior_only)) {
      continue;
    }
    double rate = 0.0;
    for (auto& ch : chains) {
      const Block& blk = ch->blocks_[b];
      rate += blk.tries > 0 ? static_cast<double>(blk.accepts) / static_cast<double>(blk.tries)
                            : 0.0;
    }
    res.acceptance.push_back({name, rate / static_cast<double>(chains.size())});
  }

  if (cfg.n_chains < 2) {
    res.psrf_note = "psrf unavailable: fewer than 2 chains";
  } else if (cfg.n_keep < 10) {
    res.psrf_note = "psrf unavailable: fewer than 10 kept draws per chain";
  } else {
    try {
      res.psrf = psrf_all(res.chains, res.param_names);
    } catch (const Error& e) {
      res.psrf_note = std::string("psrf unavailable: ") + e.what();
    }
  }
  return res;
}

LeadLagProfile posterior_leadlag(const PosteriorResult& result, const ReturnSeries& series,
                                 int max_lag) {
  if (result.latent_h_draws.empty()) {
    throw Error(ErrorCategory::precondition, "posterior_leadlag: no latent h draws retained");
  }
  if (max_lag < 0) throw Error(ErrorCategory::precondition, "max_lag must be >= 0");
  const std::size_t T = series.size();
  if (T != result.T) {
    throw Error(ErrorCategory::precondition, "posterior_leadlag: series length differs from fit");
  }
  if (T <= static_cast<std::size_t>(max_lag) + 4) {
    throw Error(ErrorCategory::precondition, "posterior_leadlag requires T > max_lag + 4");
  }
  const auto& r = series.returns;
  LeadLagProfile out;
  out.model = result.model;
  out.max_lag = max_lag;
  out.source = ProfileSource::posterior;
  const std::size_t nlag = static_cast<std::size_t>(2 * max_lag + 1);
  out.rhos.assign(nlag, 0.0);
  out.gammas.assign(nlag, 0.0);
  std::vector<double> eh(T);
  for (const auto& h : result.latent_h_draws) {
    for (std::size_t t = 0; t < T; ++t) eh[t] = std::exp(h[t]);
    for (int k = -max_lag; k <= max_lag; ++k) {
      const std::size_t a = static_cast<std::size_t>(std::abs(k));
      const std::size_t n = T - a;
      double sx = 0, sy = 0;
      for (std::size_t t = 0; t < n; ++t) {
        sx += r[k >= 0 ? t : t + a];
        sy += eh[k >= 0 ? t + a : t];
      }
      const double mx = sx / static_cast<double>(n), my = sy / static_cast<double>(n);
      double cxy = 0, cxx = 0, cyy = 0;
      for (std::size_t t = 0; t < n; ++t) {
        const double dx = r[k >= 0 ? t : t + a] - mx;
        const double dy = eh[k >= 0 ? t + a : t] - my;
        cxy += dx * dy;
        cxx += dx * dx;
        cyy += dy * dy;
      }
      if (!(cxx > 0.0) || !(cyy > 0.0)) {
        throw Error(ErrorCategory::numeric,
                    "posterior_leadlag: degenerate variance at lag " + std::to_string(k));
      }
      const std::size_t i = static_cast<std::size_t>(k + max_lag);
      out.rhos[i] += std::clamp(cxy / std::sqrt(cxx * cyy), -1.0, 1.0);
      out.gammas[i] += cxy / static_cast<double>(n);
    }
  }
  const double nd = static_cast<double>(result.latent_h_draws.size());
  for (std::size_t i = 0; i < nlag; ++i) {
    out.rhos[i] /= nd;
    out.gammas[i] /= nd;
  }
  return out;
}

void write_chain_csv(const PosteriorResult& res, int chain, std::ostream& os) {
  if (chain < 0 || chain >= res.config.n_chains) {
    throw Error(ErrorCategory::precondition, "chain index out of range");
  }
  for (std::size_t p = 0; p < res.param_names.size(); ++p) {
    os << (p ? "," : "") << res.param_names[p];
  }
  os << '\n';
  const std::size_t n = res.chains[0][static_cast<std::size_t>(chain)].size();
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t p = 0; p < res.param_names.size(); ++p) {
      os << (p ? "," : "") << fmt_double(res.chains[p][static_cast<std::size_t>(chain)][i]);
    }
    os << '\n';
  }
}

void write_h_draws_csv(const PosteriorResult& res, std::ostream& os) {
  for (std::size_t t = 0; t < res.T; ++t) os << (t ? "," : "") << 't' << t;
  os << '\n';
  for (const auto& h : res.latent_h_draws) {
    for (std::size_t t = 0; t < h.size(); ++t) os << (t ? "," : "") << fmt_double(h[t]);
    os << '\n';
  }
}

void write_summary_csv(const PosteriorResult& res, std::ostream& os) {
  os << "parameter,mean,q2.5,q97.5\n";
  for (const auto& s : res.summaries) {
    os << s.name << ',' << fmt_double(s.mean) << ',' << fmt_double(s.q025) << ','
       << fmt_double(s.q975) << '\n';
  }
}

void write_fit_metadata(const PosteriorResult& res, std::ostream& os) {
  const auto& c = res.config;
  const auto& p = res.priors;
  os << "model=" << model_name(res.model) << '\n'
     << "T=" << res.T << '\n'
     << "seed=" << c.seed << '\n'
     << "n_chains=" << c.n_chains << '\n'
     << "burn_in=" << c.burn_in << '\n'
     << "n_keep=" << c.n_keep << '\n'
     << "thin=" << c.thin << '\n'
     << "adapt_window=" << c.adapt_window << '\n'
     << "target_accept=" << fmt_double(c.target_accept) << '\n'
     << "prior_only=" << (c.prior_only ? "true" : "false") << '\n'
     << "prior.alpha=normal(" << fmt_double(p.alpha_mean) << ',' << fmt_double(p.alpha_sd) << ")\n"
     << "prior.phi=beta(" << fmt_double(p.phi_a) << ',' << fmt_double(p.phi_b) << ")\n"
     << "prior.precision=gamma(" << fmt_double(p.prec_shape) << ',' << fmt_double(p.prec_rate)
     << ")\n"
     << "prior.rho=uniform(-1,1)\n";
  if (variant_of(res.model) == Variant::skewed_t) {
    os << "prior.nu=exponential(" << fmt_double(p.nu_mean) << ") on (2," << fmt_double(p.nu_max)
       << "]\n"
       << "prior.lambda=normal(" << fmt_double(p.lambda_mean) << ',' << fmt_double(p.lambda_sd)
       << ")\n";
  }
  if (variant_of(res.model) == Variant::jump) {
    os << "prior.jump=beta(" << fmt_double(p.jump_a) << ',' << fmt_double(p.jump_b) << ")\n";
  }
  for (const auto& a : res.acceptance) {
    os << "acceptance." << a.block << '=' << fmt_double(a.rate) << '\n';
  }
  if (res.psrf) {
    for (std::size_t i = 0; i < res.param_names.size(); ++i) {
      os << "psrf." << res.param_names[i] << '=' << fmt_double((*res.psrf)[i]) << '\n';
    }
  } else {
    os << "psrf=unavailable (" << res.psrf_note << ")\n";
  }
}

}  // namespace svkit
