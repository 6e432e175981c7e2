#include <cmath>
#include <numbers>
#include <string>

#include "doctest.h"
#include "resonance_lab/bic.hpp"
#include "resonance_lab/model_io.hpp"
#include "resonance_lab/numerics.hpp"

using namespace resonance_lab;

namespace {

SystemModel one_channel(double a) {
  return parse_model(R"(levels: 2
params: {e2: -0.5, g: 0.3}
hb: {diagonal: [0.0, "$e2"]}
channels:
  - {kind: wideband, dos_scale: 0.31830988618379067, coupling: ["$g", ")" + std::to_string(a) + R"(*$g"]}
)");
}

SystemModel mirror(double a) {
  const std::string s = std::to_string(a);
  return parse_model(R"(levels: 2
params: {e2: -0.5, g: 0.2}
hb: {diagonal: [0.0, "$e2"]}
channels:
  - {kind: wideband, dos_scale: 0.31830988618379067, coupling: ["$g", ")" + s + R"(*$g"]}
  - {kind: wideband, dos_scale: 0.31830988618379067, coupling: [")" + s + R"(*$g", "$g"]}
)");
}

const BicCandidate* narrowest(const std::vector<BicCandidate>& c) {
  const BicCandidate* best = nullptr;
  for (const auto& x : c)
    if (!best || x.width_at_min < best->width_at_min) best = &x;
  return best;
}

}  // namespace

TEST_SUITE("bic") {

TEST_CASE("degenerate symmetric pair") {
  const auto sw = sweep(one_channel(1.0), "e2", numerics::linspace(-0.5, 0.5, 41));
  const auto found = find_bics(sw);
  const auto* c = narrowest(found);
  REQUIRE(c != nullptr);
  CHECK(c->true_bic);
  CHECK(std::abs(c->param_value) <= 1e-6);
  CHECK(c->width_at_min <= 1e-12);
  CHECK(c->width_at_min >= -1e-12);
  for (double r : c->decoupling_residuals) CHECK(r <= 1e-8);
  // single level width 2 pi rho g^2; the partner carries both
  const double single = 2.0 * 0.3 * 0.3;
  CHECK(c->partner_width == doctest::Approx(2.0 * single).epsilon(1e-9));
  CHECK(c->width_inequality);
  CHECK(c->coupling_pattern == "uniform");

  const auto report = verify_bic(*c, sw.model);
  for (const auto& chk : report.checks) CHECK_MESSAGE(chk.passed, chk.name << " " << chk.value);
  CHECK(std::abs(report.phase_jump - std::numbers::pi) <= 1e-3);
}

TEST_CASE("only one real candidate, no plateau noise") {
  const auto sw = sweep(one_channel(1.0), "e2", numerics::linspace(-0.5, 0.5, 41));
  int bics = 0;
  for (const auto& c : find_bics(sw)) bics += c.true_bic;
  CHECK(bics == 1);
}

TEST_CASE("broken reflection symmetry leaves a finite width") {
  const auto sw = sweep(mirror(0.9), "e2", numerics::linspace(-0.5, 0.5, 41));
  const auto found = find_bics(sw);
  const auto* c = narrowest(found);
  REQUIRE(c != nullptr);
  CHECK_FALSE(c->true_bic);
  CHECK(c->width_at_min > 1e-6);
  CHECK(c->coupling_pattern == "asymmetric");

  const auto sym = sweep(mirror(1.0), "e2", numerics::linspace(-0.5, 0.5, 41));
  const auto sym_found = find_bics(sym);
  const auto* b = narrowest(sym_found);
  REQUIRE(b != nullptr);
  CHECK(b->true_bic);
  CHECK(verify_bic(*b, sym.model).passed());
}

TEST_CASE("decoupling residual grows with the coupling perturbation") {
  const auto sw = sweep(mirror(1.0), "e2", numerics::linspace(-0.5, 0.5, 41));
  const auto found = find_bics(sw);
  const auto* c = narrowest(found);
  REQUIRE(c != nullptr);
  for (double eps : {1e-2, 1e-3}) {
    // reflection keeps phi = (1, -1)/sqrt 2, so |v_C . phi| = sqrt(rho) g eps / sqrt 2
    const auto report = verify_bic(*c, mirror(1.0 + eps));
    CHECK_FALSE(report.checks[0].passed);
    const double want = std::sqrt(1.0 / std::numbers::pi) * 0.2 * eps / std::sqrt(2.0);
    CHECK(report.checks[0].value == doctest::Approx(want).epsilon(1e-6));
  }
}

TEST_CASE("no coupling, no continuum, no BIC") {
  const auto sw = sweep(one_channel(1.0).with_param("g", 0.0), "e2", numerics::linspace(-0.5, 0.5, 41));
  CHECK(find_bics(sw).empty());
}

TEST_CASE("coupling patterns") {
  Eigen::MatrixXd u(3, 1), m(3, 1), a(3, 1);
  u << 1, 1, 1;
  m << 1, 2, 1;
  a << 1, 2, 3;
  CHECK(coupling_pattern(u) == "uniform");
  CHECK(coupling_pattern(m) == "mirror");
  CHECK(coupling_pattern(a) == "asymmetric");
}

}
