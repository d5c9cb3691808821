#include <doctest.h>

#include <cmath>

#include "svkit/error.hpp"
#include "svkit/model.hpp"
#include "svkit/rng.hpp"

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

ErrorCategory category_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.category();
  }
  FAIL("expected an Error");
  return ErrorCategory::config;
}

}  // namespace

TEST_CASE("model names round-trip") {
  for (ModelId id : kAllModels) {
    CHECK(parse_model(model_name(id)) == id);
  }
  CHECK(parse_model("M31") == ModelId::M31);
  CHECK_FALSE(parse_model("M4.1").has_value());
  CHECK(counterpart(ModelId::M22) == ModelId::M32);
  CHECK(counterpart(ModelId::M33) == ModelId::M23);
}

TEST_CASE("unit-root persistence is rejected") {
  const auto report = validate(make(ModelId::M31, -8, 1.0, 0.2, -0.3));
  REQUIRE_FALSE(report.valid());
  CHECK(report.violations.front() == "persistence must satisfy |phi|<1");
  CHECK(category_of([] { require_valid(make(ModelId::M31, -8, 1.0, 0.2, -0.3)); }) ==
        ErrorCategory::validation);
}

TEST_CASE("capability map follows the degrees of freedom") {
  ModelSpec s = make(ModelId::M22, -8, 0.9, 0.2, 0.0);
  s.params.nu = 3.5;
  auto report = validate(s);
  CHECK(report.valid());
  CHECK(report.capabilities.m2);
  CHECK(report.capabilities.skewness);
  CHECK_FALSE(report.capabilities.kurtosis);

  s.params.nu = 2.5;
  report = validate(s);
  CHECK(report.valid());
  CHECK_FALSE(report.capabilities.skewness);

  s.params.nu = 2.0;
  CHECK_FALSE(validate(s).valid());
}

TEST_CASE("estimated oil-returns parameters are a valid spec") {
  CHECK(validate(make(ModelId::M21, -7.88, 0.985, 0.19, -0.28)).valid());
}

TEST_CASE("jump-size extensions are refused by name") {
  ModelSpec s = make(ModelId::M33, -8, 0.9, 0.2, -0.3);
  s.params.tau2 = 2.0;
  const auto report = validate(s);
  REQUIRE_FALSE(report.valid());
  CHECK(report.violations.front().find("unsupported extension") != std::string::npos);
}

TEST_CASE("other parameter ranges") {
  CHECK_FALSE(validate(make(ModelId::M21, -8, 0.9, 0.0, 0.0)).valid());
  CHECK_FALSE(validate(make(ModelId::M21, -8, 0.9, 0.2, 1.5)).valid());
  CHECK(validate(make(ModelId::M21, -8, -0.9, 0.2, 1.0)).valid());
  ModelSpec j = make(ModelId::M23, -8, 0.9, 0.2, 0.0);
  j.params.pi1 = 1.2;
  CHECK_FALSE(validate(j).valid());
}

TEST_CASE("xi") {
  CHECK(xi(10.0, 1.0) == doctest::Approx(1.25).epsilon(1e-14));
  CHECK(xi(10.0, 0.0) == 1.0);
  CHECK(xi(10.0, 0.5) == doctest::Approx(1.0837223079391436).epsilon(1e-13));
  CHECK(category_of([] { xi(4.0, 2.0); }) == ErrorCategory::nonexistence);

  // Decreasing in nu for each fixed order.
  for (double k : {0.5, 1.0, 1.5, 2.0}) {
    double prev = xi(2.0 * k + 0.01, k);
    for (double nu = 2.0 * k + 0.5; nu < 200.0; nu *= 1.3) {
      const double cur = xi(nu, k);
      CHECK(cur < prev);
      prev = cur;
    }
  }
}

TEST_CASE("xi agrees with a Monte Carlo mean of 1/U") {
  Rng rng(11, 0);
  const int n = 1000000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double v = 1.0 / rng.gamma(5.0, 5.0);
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::fabs(mean - 1.25) < 4.0 * se);
}

TEST_CASE("omega normalisation") {
  CHECK(omega_constant(10.0, 0.0) == doctest::Approx(0.89442719099991588).epsilon(1e-14));
  CHECK(omega_constant(10.0, 5.0) == doctest::Approx(1.4361650701820424).epsilon(1e-13));
  for (double nu : {2.5, 4.0, 10.0, 57.0}) {
    const double w = omega_constant(nu, 0.0);
    CHECK(std::fabs(w * w * xi(nu, 1.0) - 1.0) < 1e-12);
  }
  CHECK(category_of([] { omega_constant(2.0, 1.0); }) == ErrorCategory::nonexistence);
}

TEST_CASE("skew delta stays inside (-1, 1)") {
  for (double l : {-1e6, -3.0, 0.0, 0.5, 1e6}) {
    CHECK(std::fabs(skew_delta(l)) < 1.0);
  }
  CHECK(skew_delta(0.0) == 0.0);
}

TEST_CASE("mean correction") {
  const ModelSpec m31 = make(ModelId::M31, -9.0, 0.9, 0.2, -0.5);
  CHECK(mean_correction(m31) == doctest::Approx(5.702609561585262e-4).epsilon(1e-13));

  for (ModelId id : {ModelId::M31, ModelId::M32, ModelId::M33}) {
    ModelSpec s = make(id, -7.0, 0.8, 0.4, 0.0);
    CHECK(mean_correction(s) == 0.0);
  }
  for (ModelId id : {ModelId::M21, ModelId::M22, ModelId::M23}) {
    CHECK(mean_correction(make(id, -7.0, 0.8, 0.4, -0.6)) == 0.0);
  }
  // The sign is opposite to rho.
  CHECK(mean_correction(make(ModelId::M31, -7.0, 0.8, 0.4, 0.6)) < 0.0);

  ModelSpec m33 = m31;
  m33.model = ModelId::M33;
  m33.params.pi2 = 0.0;
  CHECK(mean_correction(m33) == mean_correction(m31));
}

TEST_CASE("mean correction matches a simulated E[exp(h/2) eps]") {
  // mu_1 = -E[e^{h_t/2} eps_t] with h_t driven by eta_t, Corr(eps_t, eta_t) = rho.
  const double alpha = -9.0, phi = 0.9, sigma = 0.2, rho = -0.5;
  const double sd = sigma / std::sqrt(1.0 - phi * phi);
  Rng rng(5, 1);
  const int n = 1000000;
  double s = 0.0, s2 = 0.0;
  for (int i = 0; i < n; ++i) {
    const double hprev = alpha + sd * rng.normal();
    const double eta = rng.normal();
    const double eps = rho * eta + std::sqrt(1.0 - rho * rho) * rng.normal();
    const double h = alpha + phi * (hprev - alpha) + sigma * eta;
    const double v = -std::exp(0.5 * h) * eps;
    s += v;
    s2 += v * v;
  }
  const double mean = s / n;
  const double se = std::sqrt((s2 / n - mean * mean) / n);
  CHECK(std::fabs(mean - mean_correction(make(ModelId::M31, alpha, phi, sigma, rho))) < 4.0 * se);
}

TEST_CASE("derive bundles the constants") {
  ModelSpec s = make(ModelId::M32, -8, 0.9, 0.2, -0.4);
  s.params.nu = 3.5;
  s.params.lambda = 1.0;
  const auto d = derive(s);
  CHECK(d.delta == doctest::Approx(1.0 / std::sqrt(2.0)));
  CHECK(d.omega == doctest::Approx(omega_constant(3.5, 1.0)));
  CHECK(d.mu == doctest::Approx(mean_correction(s)));
  CHECK(std::isnan(d.xi_two));
  CHECK(d.xi_threehalf > 0.0);
}
