#include <doctest.h>

#include <cmath>

#include "svkit/error.hpp"
#include "svkit/leadlag.hpp"
#include "svkit/oracle.hpp"

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

}  // namespace

TEST_CASE("variance of exp(h)") {
  CHECK(var_exp_h(make(ModelId::M21, 0.0, 0.0, 1.0, 0.0)) ==
        doctest::Approx(4.6707742704716050).epsilon(1e-14));

  ModelSpec j = make(ModelId::M23, -7.0, 0.8, 0.3, 0.0);
  j.params.pi2 = 0.0;
  CHECK(var_exp_h(j) == doctest::Approx(var_exp_h(make(ModelId::M21, -7.0, 0.8, 0.3, 0.0))));

  const double s = 1e-4;
  CHECK(var_exp_h(make(ModelId::M31, 0.0, 0.0, s, 0.0)) == doctest::Approx(s * s).epsilon(1e-4));
}

TEST_CASE("h_{t+1}-based covariances vanish off the lead side") {
  for (ModelId id : {ModelId::M21, ModelId::M22, ModelId::M23}) {
    ModelSpec s = make(id, -8.0, 0.9, 0.2, -0.3);
    for (int k = 0; k <= 20; ++k) {
      CHECK(gamma(s, -k) == 0.0);
    }
    CHECK(gamma(s, 1) < 0.0);
  }
}

TEST_CASE("contemporaneous covariance is proportional to rho") {
  CHECK(gamma(make(ModelId::M31, -8.0, 0.9, 0.2, 0.0), 0) == 0.0);
  CHECK(gamma(make(ModelId::M31, -8.0, 0.9, 0.2, -0.3), 0) < 0.0);
}

TEST_CASE("lead covariance of the h_t-based base model") {
  const ModelSpec s = make(ModelId::M31, -8.0, 0.9, 0.2, -0.3);
  CHECK(gamma(s, 2) == doctest::Approx(-3.896290261923043e-7).epsilon(1e-12));
  const auto mc = mc_gamma(s, 2, 10000000, RngPolicy{77, 0});
  CHECK(std::fabs(mc.value - gamma(s, 2)) < 4.0 * mc.std_error);
}

TEST_CASE("covariances flip sign with rho") {
  for (ModelId id : {ModelId::M21, ModelId::M22, ModelId::M31, ModelId::M32}) {
    ModelSpec a = make(id, -7.5, 0.85, 0.3, 0.45);
    a.params.lambda = 0.8;
    ModelSpec b = a;
    b.params.rho = -0.45;
    for (int k = -6; k <= 6; ++k) {
      CHECK(gamma(a, k) == -gamma(b, k));
    }
  }
}

TEST_CASE("covariances decay with the lag") {
  for (ModelId id : kAllModels) {
    ModelSpec s = make(id, -8.0, 0.9, 0.25, -0.4);
    s.params.pi2 = 0.05;
    // phi^k < 1e-10 well before k = 300.
    CHECK(std::fabs(gamma(s, 300)) < 1e-10 * std::fabs(gamma_common_factor(s.params, 0)));
    CHECK(std::fabs(gamma(s, -300)) < 1e-10 * std::fabs(gamma_common_factor(s.params, 0)));
  }
}

TEST_CASE("skewed-t profile") {
  ModelSpec s = make(ModelId::M22, -8.0, 0.9, 0.2, -0.5);
  s.params.nu = 12.0;
  s.params.lambda = 0.4;
  const auto p = leadlag_profile(s, 5);
  REQUIRE(p.rhos.size() == 11u);
  for (int k = -5; k <= 0; ++k) CHECK(p.rho(k) == 0.0);
  for (int k = 1; k <= 5; ++k) {
    CHECK(p.rho(k) < 0.0);
    if (k > 1) CHECK(std::fabs(p.rho(k)) < std::fabs(p.rho(k - 1)));
  }
  CHECK(p.source == ProfileSource::analytic);
}

TEST_CASE("contemporaneous leverage only in the h_t-based class") {
  const auto p3 = leadlag_profile(make(ModelId::M31, -8.0, 0.95, 0.2, -0.4), 20);
  const auto p2 = leadlag_profile(make(ModelId::M21, -8.0, 0.95, 0.2, -0.4), 20);
  CHECK(p2.rho(0) == 0.0);
  CHECK(p3.rho(0) < 0.0);
  CHECK(std::fabs(p3.rho(0)) > std::fabs(p2.rho(0)));
}

TEST_CASE("long profiles shrink toward zero") {
  for (ModelId id : kAllModels) {
    ModelSpec s = make(id, -8.0, 0.9, 0.3, 0.6);
    const auto p = leadlag_profile(s, 50);
    for (double r : p.rhos) CHECK(std::fabs(r) <= 1.0);
    CHECK(std::fabs(p.rho(50)) < std::fabs(p.rho(10)));
    if (is_ht_based(id)) CHECK(std::fabs(p.rho(-50)) < std::fabs(p.rho(-10)));
  }
  CHECK_THROWS_AS(leadlag_profile(make(ModelId::M21, -8.0, 0.9, 0.3, 0.6), -1), Error);
}

TEST_CASE("analytic correlations agree with simulation") {
  for (ModelId id : {ModelId::M21, ModelId::M31}) {
    const ModelSpec s = make(id, -8.0, 0.9, 0.2, -0.3);
    for (int k = -1; k <= 2; ++k) {
      const auto mc = mc_gamma(s, k, 2000000, RngPolicy{31, static_cast<std::uint64_t>(k + 10)});
      CHECK(std::fabs(mc.value - gamma(s, k)) < 4.0 * mc.std_error);
    }
  }
}
