#include <doctest.h>

#include <cmath>
#include <sstream>

#include "svkit/closed_form.hpp"
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

TEST_CASE("moment oracle") {
  const auto m2 = mc_moment(make(ModelId::M21, 0, 0, 1, 0), 2, 1000000, RngPolicy{1, 0});
  CHECK(std::fabs(m2.value - std::exp(0.5)) < 4.0 * m2.std_error);
  CHECK(m2.n_samples == 1000000u);
  CHECK(m2.target == "m2");

  const auto m3 = mc_moment(make(ModelId::M21, -5, 0.7, 0.4, 0.8), 3, 1000000, RngPolicy{1, 1});
  CHECK(std::fabs(m3.value) < 4.0 * m3.std_error);

  const auto m4 = mc_moment(make(ModelId::M31, -2, 0.6, 0.3, 0.0), 4, 1000000, RngPolicy{1, 2});
  CHECK(std::fabs(m4.value - moments(make(ModelId::M21, -2, 0.6, 0.3, 0.0)).m4) <
        4.0 * m4.std_error);

  CHECK_THROWS_AS(mc_moment(make(ModelId::M21, 0, 0, 1, 0), 5, 1000, RngPolicy{}), Error);
  CHECK_THROWS_AS(mc_moment(make(ModelId::M21, 0, 0, 1, 0), 2, 99, RngPolicy{}), Error);
}

TEST_CASE("lead-lag oracle") {
  ModelSpec m22 = make(ModelId::M22, -8, 0.9, 0.2, -0.3);
  m22.params.nu = 10;
  m22.params.lambda = 0.5;
  const auto lag = mc_gamma(m22, -3, 1000000, RngPolicy{2, 0});
  CHECK(std::fabs(lag.value) < 4.0 * lag.std_error);

  const auto zero_rho = mc_gamma(make(ModelId::M31, -8, 0.9, 0.2, 0.0), 2, 1000000, RngPolicy{2, 1});
  CHECK(std::fabs(zero_rho.value) < 4.0 * zero_rho.std_error);

  const ModelSpec m21 = make(ModelId::M21, -8, 0.9, 0.2, -0.3);
  const auto lead = mc_gamma(m21, 1, 1000000, RngPolicy{2, 2});
  CHECK(std::fabs(lead.value - gamma(m21, 1)) < 4.0 * lead.std_error);
}

TEST_CASE("bundle agrees with the closed forms it covers") {
  ModelSpec s = make(ModelId::M33, -1.0, 0.5, 0.3, -0.4);
  s.params.pi1 = 0.05;
  s.params.pi2 = 0.1;
  const auto b = mc_bundle(s, 2, 1000000, RngPolicy{3, 0});
  REQUIRE(b.gammas.size() == 5u);
  CHECK(std::fabs(b.var_exp_h.value - var_exp_h(s)) < 4.0 * b.var_exp_h.std_error);
  CHECK(std::fabs(b.mean_correction.value - mean_correction(s)) < 4.0 * b.mean_correction.std_error);
  CHECK(std::fabs(b.m2.value - moments(s).m2) < 4.0 * b.m2.std_error);
}

TEST_CASE("discrepancy report on base-model grids") {
  std::vector<ModelSpec> grid{make(ModelId::M21, -8, 0.9, 0.3, -0.5),
                              make(ModelId::M21, -1, 0.5, 0.5, 0.4),
                              make(ModelId::M21, 0, 0.3, 0.7, -0.8)};
  const auto report = discrepancy_report(grid, 1000000, 11, 2);
  CHECK(report.entries.size() == 3u * 12u);
  CHECK(report.flagged_count() == 0u);
  for (const auto& e : report.entries) CHECK_FALSE(e.preregistered);

  std::vector<ModelSpec> m3;
  for (ModelId id : {ModelId::M31, ModelId::M32, ModelId::M33}) {
    ModelSpec s = make(id, -2, 0.7, 0.3, 0.0);
    s.params.nu = 20;
    s.params.pi1 = 0.05;
    s.params.pi2 = 0.05;
    m3.push_back(s);
  }
  const auto r3 = discrepancy_report(m3, 1000000, 12);
  CHECK(r3.flagged_count() == 0u);
  for (const auto& e : r3.entries) {
    CHECK(e.status != CellStatus::documented_discrepancy);
  }

  std::ostringstream os;
  write_report_csv(report, os);
  CHECK(os.str().rfind("model,quantity,analytic,oracle,se,z,flag\n# point=0 ", 0) == 0);
}

TEST_CASE("report preconditions") {
  CHECK_THROWS_AS(discrepancy_report({}, 1000, 1), Error);
  ModelSpec heavy = make(ModelId::M22, -8, 0.9, 0.2, 0.0);
  heavy.params.nu = 3.5;
  try {
    discrepancy_report({heavy}, 1000, 1);
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(e.category() == ErrorCategory::nonexistence);
  }
}

TEST_CASE("standard error shrinks like 1/sqrt(n)") {
  const ModelSpec s = make(ModelId::M21, -1, 0.5, 0.3, 0.0);
  double se_n = 0.0, se_2n = 0.0;
  for (std::uint64_t k = 0; k < 8; ++k) {
    se_n += mc_moment(s, 2, 200000, RngPolicy{4, k}).std_error;
    se_2n += mc_moment(s, 2, 400000, RngPolicy{4, 100 + k}).std_error;
  }
  const double ratio = se_2n / se_n;
  CHECK(ratio >= 0.6);
  CHECK(ratio <= 0.8);
}

TEST_CASE("status names") {
  CHECK(std::string(status_name(CellStatus::flagged)) == "FLAG");
  CHECK(std::string(status_name(CellStatus::confirmed_as_printed)) == "confirmed-as-printed");
  CHECK(is_preregistered(ModelId::M32, "kurtosis"));
  CHECK(is_preregistered(ModelId::M31, "skewness"));
  CHECK(is_preregistered(ModelId::M22, "gamma1"));
  CHECK_FALSE(is_preregistered(ModelId::M21, "kurtosis"));
}
