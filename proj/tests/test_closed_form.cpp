#include <doctest.h>

#include <cmath>

#include "svkit/closed_form.hpp"
#include "svkit/error.hpp"
#include "svkit/oracle.hpp"
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

bool rel_close(double a, double b, double tol) {
  if (a == b) return true;
  return std::fabs(a - b) <= tol * std::max(std::fabs(a), std::fabs(b));
}

}  // namespace

TEST_CASE("product P special cases") {
  CHECK(product_P(1.0, 0.0, 0.9) == 1.0);
  CHECK(product_P(1.0, 0.02, 0.0) == doctest::Approx(1.0129744254140026).epsilon(1e-15));
  CHECK(product_P(2.0, 0.02, 0.98) == doctest::Approx(6.2717354476741729).epsilon(1e-11));
  CHECK(product_P(1.0, 0.02, 0.9) == doctest::Approx(1.0625561345666890).epsilon(1e-12));
  CHECK(product_P(0.5, 0.3, -0.7) >= 1.0);
  CHECK_THROWS_AS(product_P(1.0, 0.1, 1.0), Error);
}

TEST_CASE("finite product") {
  const double one = finite_product_P(1.7, 0.05, 0.6, 1);
  CHECK(one == doctest::Approx(1.0 - 0.05 + 0.05 * std::exp(0.5 * 1.7 * 1.7)));
  CHECK(finite_product_P(1.0, 0.0, 0.5, 5) == 1.0);
  CHECK(finite_product_P(1.0, 0.02, 0.9, 200) ==
        doctest::Approx(product_P(1.0, 0.02, 0.9)).epsilon(1e-11));
  double prev = 1.0;
  for (int k = 1; k < 60; ++k) {
    const double cur = finite_product_P(1.0, 0.02, 0.9, k);
    CHECK(cur >= prev);
    prev = cur;
  }
  CHECK_THROWS_AS(finite_product_P(1.0, 0.02, 0.9, 0), Error);
}

TEST_CASE("lognormal variance of the base model") {
  const auto m = moments(make(ModelId::M21, 0.0, 0.0, 1.0, 0.0));
  CHECK(m.m2 == doctest::Approx(1.6487212707001282).epsilon(1e-14));
  CHECK(m.skewness == 0.0);
  CHECK(m.kurtosis == doctest::Approx(3.0 * std::exp(1.0)));
}

TEST_CASE("symmetric families have zero skewness") {
  Rng rng(3, 0);
  for (int i = 0; i < 200; ++i) {
    ModelSpec s = make(ModelId::M21, -10.0 + 10.0 * rng.uniform(), 2.0 * rng.uniform() - 1.0,
                       0.05 + rng.uniform(), 2.0 * rng.uniform() - 1.0);
    CHECK(moments(s).skewness == 0.0);
    s.model = ModelId::M23;
    s.params.pi1 = 0.2 * rng.uniform();
    s.params.pi2 = 0.2 * rng.uniform();
    CHECK(moments(s).skewness == 0.0);
  }
}

TEST_CASE("h_t-based families reduce to their counterparts at rho = 0") {
  for (ModelId id : {ModelId::M31, ModelId::M32, ModelId::M33}) {
    ModelSpec s = make(id, -6.5, 0.93, 0.35, 0.0);
    s.params.nu = 9.0;
    s.params.lambda = -0.7;
    s.params.pi1 = 0.03;
    s.params.pi2 = 0.05;
    ModelSpec t = s;
    t.model = counterpart(id);
    const auto a = moments(s), b = moments(t);
    CHECK(rel_close(a.m2, b.m2, 1e-10));
    CHECK(std::fabs(a.skewness - b.skewness) <= 1e-10 * (1.0 + std::fabs(b.skewness)));
    CHECK(rel_close(a.kurtosis, b.kurtosis, 1e-10));
    CHECK(a.mu == 0.0);
  }
}

TEST_CASE("h_{t+1}-based moments ignore rho") {
  for (ModelId id : {ModelId::M21, ModelId::M22, ModelId::M23}) {
    ModelSpec s = make(id, -8.0, 0.95, 0.2, -0.9);
    const auto a = moments(s);
    s.params.rho = 0.9;
    const auto b = moments(s);
    CHECK(a.m2 == b.m2);
    CHECK(a.m4 == b.m4);
    CHECK(a.kurtosis == b.kurtosis);
  }
}

TEST_CASE("moment orders that do not exist") {
  ModelSpec s = make(ModelId::M22, -8.0, 0.9, 0.2, 0.0);
  s.params.nu = 3.5;
  CHECK_THROWS_AS(moments(s, 4), Error);
  const auto m = moments(s, 3);
  CHECK(std::isnan(m.kurtosis));
  CHECK(std::isnan(m.m4));
  CHECK(std::isfinite(m.skewness));
  try {
    moments(s, 4);
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::nonexistence);
  }
}

TEST_CASE("moment invariants") {
  Rng rng(8, 0);
  for (ModelId id : kAllModels) {
    for (int i = 0; i < 50; ++i) {
      ModelSpec s = make(id, -10.0 + 10.0 * rng.uniform(), 0.98 * (2.0 * rng.uniform() - 1.0),
                         0.05 + 0.6 * rng.uniform(), 2.0 * rng.uniform() - 1.0);
      s.params.nu = 5.0 + 30.0 * rng.uniform();
      s.params.lambda = 4.0 * rng.uniform() - 2.0;
      s.params.pi1 = 0.1 * rng.uniform();
      s.params.pi2 = 0.1 * rng.uniform();
      const auto m = moments(s);
      CHECK(m.m2 > 0.0);
      CHECK(m.skewness == doctest::Approx(m.m3 / std::pow(m.m2, 1.5)));
      CHECK(m.kurtosis == doctest::Approx(m.m4 / (m.m2 * m.m2)));
    }
  }
}

TEST_CASE("closed-form moments agree with simulation for classical families") {
  const ModelSpec s = make(ModelId::M21, 0.0, 0.0, 1.0, 0.0);
  const auto m2 = mc_moment(s, 2, 1000000, RngPolicy{21, 0});
  CHECK(std::fabs(m2.value - moments(s).m2) < 4.0 * m2.std_error);
  const auto m3 = mc_moment(make(ModelId::M21, -8.0, 0.9, 0.3, -0.5), 3, 1000000, RngPolicy{21, 1});
  CHECK(std::fabs(m3.value) < 4.0 * m3.std_error);

  // m4 of M3.1 at rho = 0 matches the M2.1 closed form.
  const auto m4 = mc_moment(make(ModelId::M31, -8.0, 0.9, 0.3, 0.0), 4, 1000000, RngPolicy{21, 2});
  CHECK(std::fabs(m4.value - moments(make(ModelId::M21, -8.0, 0.9, 0.3, 0.0)).m4) <
        4.0 * m4.std_error);
}
