#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

#include "svkit/closed_form.hpp"
#include "svkit/error.hpp"
#include "svkit/simulate.hpp"

using namespace svkit;

namespace {

ModelSpec make(ModelId id, double alpha, double phi, double sigma, double rho) {
  ModelSpec s;
  s.model = id;
  s.params.alpha = alpha;
  s.params.phi = phi;
  s.params.sigma = sigma;
  s.params.rho = rho;
  return s;
}

struct MeanSe {
  double mean, se;
};

// Batch means over 100 contiguous batches; robust to serial dependence.
MeanSe batch_mean(const std::vector<double>& x) {
  const std::size_t B = 100, len = x.size() / B;
  std::vector<double> means(B);
  for (std::size_t b = 0; b < B; ++b) {
    means[b] = std::accumulate(x.begin() + b * len, x.begin() + (b + 1) * len, 0.0) / len;
  }
  const double m = std::accumulate(means.begin(), means.end(), 0.0) / B;
  double v = 0.0;
  for (double bm : means) v += (bm - m) * (bm - m);
  return {m, std::sqrt(v / (B - 1) / B)};
}

double corr(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = a.size();
  const double ma = std::accumulate(a.begin(), a.end(), 0.0) / n;
  const double mb = std::accumulate(b.begin(), b.end(), 0.0) / n;
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("identical seeds give identical paths") {
  for (ModelId id : kAllModels) {
    ModelSpec s = make(id, -8, 0.95, 0.2, -0.4);
    s.params.pi1 = 0.05;
    s.params.pi2 = 0.05;
    s.params.lambda = 0.7;
    const auto a = simulate_path(s, 500, RngPolicy{42, 3});
    const auto b = simulate_path(s, 500, RngPolicy{42, 3});
    const auto c = simulate_path(s, 500, RngPolicy{42, 4});
    CHECK(a.returns == b.returns);
    CHECK(a.logvols == b.logvols);
    CHECK(a.returns != c.returns);
  }
}

TEST_CASE("base model returns have mean zero") {
  const auto p = simulate_path(make(ModelId::M21, -8, 0.9, 0.1, 0.0), 1000000, RngPolicy{1, 0});
  const auto m = batch_mean(p.returns);
  CHECK(std::fabs(m.mean) < 4.0 * m.se);
}

TEST_CASE("the mean correction removes the drift") {
  const ModelSpec s = make(ModelId::M31, -8, 0.95, 0.3, -0.5);
  const auto on = simulate_path(s, 1000000, RngPolicy{2, 0});
  const auto mon = batch_mean(on.returns);
  CHECK(std::fabs(mon.mean) < 4.0 * mon.se);

  SimOptions off;
  off.apply_mean_correction = false;
  const auto raw = simulate_path(s, 1000000, RngPolicy{2, 0}, off);
  const auto moff = batch_mean(raw.returns);
  const double mu = mean_correction(s);
  CHECK(std::fabs(moff.mean + mu) < 4.0 * moff.se);
  CHECK(std::fabs(moff.mean) > 4.0 * moff.se);
}

TEST_CASE("return jumps occur at the stated rate") {
  ModelSpec s = make(ModelId::M23, -8, 0.9, 0.2, 0.0);
  s.params.pi1 = 0.002;
  const auto p = simulate_path(s, 1000000, RngPolicy{3, 0});
  const long count = std::accumulate(p.jumps_r.begin(), p.jumps_r.end(), 0L);
  CHECK(std::fabs(count - 2000.0) < 4.0 * std::sqrt(2000.0 * 0.998));
  for (auto j : p.jumps_r) CHECK_FALSE(j > 1);
}

TEST_CASE("innovation correlation and timing") {
  for (ModelId id : kAllModels) {
    ModelSpec s = make(id, -8, 0.9, 0.3, -0.6);
    const auto p = simulate_path(s, 1000000, RngPolicy{4, static_cast<std::uint64_t>(id)});
    // eps and eta are i.i.d. across time, so the plain standard error applies.
    const double se = (1.0 - 0.36) / std::sqrt(1e6);
    CHECK(std::fabs(corr(p.eps, p.eta) + 0.6) < 4.0 * se);

    const double c = corr(p.eps, p.logvols);
    if (is_ht_based(id)) {
      CHECK(c < -0.1);
    } else {
      CHECK(std::fabs(c) < 4.0 / std::sqrt(1e6));
    }
  }
}

TEST_CASE("stationary log-volatility marginal") {
  for (ModelId id : kAllModels) {
    ModelSpec s = make(id, -8, 0.9, 0.3, -0.2);
    s.params.pi2 = 0.05;
    const auto p = simulate_path(s, 1000000, RngPolicy{5, static_cast<std::uint64_t>(id)});
    const auto m = batch_mean(p.logvols);
    CHECK(std::fabs(m.mean + 8.0) < 4.0 * m.se);

    std::vector<double> sq(p.logvols.size());
    for (std::size_t i = 0; i < sq.size(); ++i) sq[i] = (p.logvols[i] + 8.0) * (p.logvols[i] + 8.0);
    const auto v = batch_mean(sq);
    // Jump sizes are N(0, 1), so each jump adds pi2 to the innovation variance.
    const double extra = variant_of(id) == Variant::jump ? 0.05 : 0.0;
    const double target = (0.09 + extra) / (1.0 - 0.81);
    CHECK(std::fabs(v.mean - target) < 4.0 * v.se);
  }
}

TEST_CASE("stationary return draws") {
  const auto r = draw_stationary_return(make(ModelId::M21, 0, 0, 1, 0), 1000000, RngPolicy{6, 0});
  std::vector<double> sq(r.size());
  for (std::size_t i = 0; i < r.size(); ++i) sq[i] = r[i] * r[i];
  const auto m = batch_mean(sq);
  CHECK(std::fabs(m.mean - std::exp(0.5)) < 4.0 * m.se);
  CHECK_THROWS_AS(draw_stationary_return(make(ModelId::M21, 0, 0, 1, 0), 0, RngPolicy{}), Error);
}

TEST_CASE("skewed-t reduction at rho = 0 and lambda = 0") {
  ModelSpec s = make(ModelId::M32, -1.0, 0.5, 0.3, 0.0);
  s.params.nu = 12.0;
  const auto r = draw_stationary_return(s, 1000000, RngPolicy{7, 0});
  std::vector<double> c3(r.size());
  double m2 = 0.0;
  for (double v : r) m2 += v * v;
  m2 /= r.size();
  for (std::size_t i = 0; i < r.size(); ++i) c3[i] = r[i] * r[i] * r[i] / std::pow(m2, 1.5);
  const auto sk = batch_mean(c3);
  ModelSpec t = s;
  t.model = ModelId::M22;
  CHECK(std::fabs(sk.mean - moments(t).skewness) < 4.0 * sk.se);
}

TEST_CASE("skewed-t component") {
  const double nu = 12.0;
  Rng rng(8, 0);
  const int n = 1000000;
  std::vector<double> s(n), s2(n), s4(n);
  for (int i = 0; i < n; ++i) {
    const auto d = sample_skewed_t_component(nu, 0.0, rng);
    s[i] = d.s;
    s2[i] = d.s * d.s;
    s4[i] = s2[i] * s2[i];
    CHECK_FALSE(d.u <= 0.0);
    CHECK_FALSE(d.w < 0.0);
  }
  const auto mean = batch_mean(s);
  CHECK(std::fabs(mean.mean) < 4.0 * mean.se);
  const auto var = batch_mean(s2);
  CHECK(std::fabs(var.mean - 1.0) < 4.0 * var.se);

  // Unit-variance t: E[S^4] = 3 omega^4 xi(2) = 3 (nu - 2) / (nu - 4).
  const double w = omega_constant(nu, 0.0);
  const double target_m4 = 3.0 * std::pow(w, 4) * xi(nu, 2.0);
  CHECK(target_m4 == doctest::Approx(3.0 * (nu - 2.0) / (nu - 4.0)));
  const auto m4 = batch_mean(s4);
  CHECK(std::fabs(m4.mean - target_m4) < 4.0 * m4.se);

  Rng rng2(8, 1);
  std::vector<double> c3(n);
  for (int i = 0; i < n; ++i) {
    const double v = sample_skewed_t_component(nu, 1e6, rng2).s;
    c3[i] = v * v * v;
  }
  const auto sk = batch_mean(c3);
  CHECK(sk.mean > 4.0 * sk.se);
}

TEST_CASE("path CSV layout") {
  ModelSpec s = make(ModelId::M33, -8, 0.9, 0.2, -0.3);
  const auto p = simulate_path(s, 3, RngPolicy{9, 0});
  std::ostringstream os;
  write_path_csv(p, os);
  const std::string out = os.str();
  CHECK(out.rfind("t,return,logvol,jump_r,jump_h\n1,", 0) == 0);
  CHECK(std::count(out.begin(), out.end(), '\n') == 4);

  std::ostringstream base;
  write_path_csv(simulate_path(make(ModelId::M21, -8, 0.9, 0.2, 0), 2, RngPolicy{9, 0}), base);
  CHECK(base.str().rfind("t,return,logvol\n", 0) == 0);
}

TEST_CASE("burn-in and spacing lengths") {
  CHECK(burn_in_length(0.5) == 20u);
  CHECK(burn_in_length(0.0) == 10u);
  CHECK(decorrelation_spacing(0.75) == 200u);
}
