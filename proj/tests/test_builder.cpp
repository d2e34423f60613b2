#include <gtest/gtest.h>

#include <cmath>

#include "netcontest/builder.hpp"
#include "netcontest/three_node.hpp"
#include "support/generators.hpp"

namespace netcontest {
namespace {

void expect_matrix_near(const Matrix& got, const Matrix& want, double tol) {
  ASSERT_EQ(got.rows(), want.rows());
  ASSERT_EQ(got.cols(), want.cols());
  const double scale = std::max(1.0, want.cwiseAbs().maxCoeff());
  for (Eigen::Index i = 0; i < got.rows(); ++i)
    for (Eigen::Index j = 0; j < got.cols(); ++j)
      EXPECT_NEAR(got(i, j), want(i, j), tol * scale) << "entry (" << i << ", " << j << ")";
}

LineLadder ladder_of(const ContestInstance& inst) {
  return ladder_from_instance(inst, costs_from_budgets(inst, inst.budgets()));
}

void expect_consistent(const LineLadder& l) {
  const ContestInstance inst = l.instance();
  expect_matrix_near(l.jacobian(), budget_jacobian(inst, l.lambda), 1e-10);
  for (double k : l.K_fwd) EXPECT_GT(k, 0.0);
  for (double k : l.K_bwd) EXPECT_GT(k, 0.0);
  for (double a : l.jac_diag) EXPECT_LT(a, 0.0);
  for (std::size_t k = 0; k < l.edge_count(); ++k)
    EXPECT_NEAR(l.jac_off[k], l.K_fwd[k] - l.K_bwd[k], 1e-14 * (l.K_fwd[k] + l.K_bwd[k]));
}

TEST(LineLadder, ThreeLineMatchesJacobian) {
  const auto l = ladder_of(base_line_instances().line3.instance);
  EXPECT_EQ(l.n, 3u);
  EXPECT_FALSE(l.cyclic);
  expect_consistent(l);
  // a_1 = -2 (K_{0,1} + K_{2,1})
  EXPECT_NEAR(l.jac_diag[1], -2.0 * (l.K_fwd[0] + l.K_bwd[1]), 1e-14);
}

TEST(LineLadder, EqualCostsGiveZeroCoupling) {
  const auto pair = make_ladder(CostProfile{1.0, 1.0}, {3.0}, false);
  EXPECT_EQ(pair.jac_off[0], 0.0);
  const auto tri = make_ladder(CostProfile{2.0, 2.0, 2.0}, {1.0, 1.0, 1.0}, true);
  EXPECT_TRUE(tri.cyclic);
  for (double b : tri.jac_off) EXPECT_EQ(b, 0.0);
  expect_consistent(tri);
}

TEST(LineLadder, RejectsOtherTopologies) {
  const ContestInstance star({1, 1, 1, 1}, {{0, 1, 1.0}, {0, 2, 1.0}, {0, 3, 1.0}});
  EXPECT_THROW(ladder_from_instance(star, CostProfile{1, 1, 1, 1}), TopologyError);
  const ContestInstance shuffled({1, 1, 1}, {{0, 2, 1.0}, {1, 2, 1.0}});
  EXPECT_THROW(ladder_from_instance(shuffled, CostProfile{1, 1, 1}), TopologyError);
}

TEST(LineLadder, RandomPathsAndCycles) {
  testing::Rng rng(61);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t n = testing::uniform_index(rng, 3, 9);
    std::vector<double> lam(n), vals(trial % 2 ? n : n - 1);
    for (auto& x : lam) x = testing::log_uniform(rng, 0.1, 10);
    for (auto& x : vals) x = testing::log_uniform(rng, 0.1, 10);
    const auto l = make_ladder(CostProfile(lam), vals, trial % 2 == 1);
    expect_consistent(l);
    const auto again = ladder_from_instance(l.instance(), l.lambda);
    EXPECT_EQ(again.cyclic, l.cyclic);
    EXPECT_EQ(again.values, l.values);
  }
}

TEST(LineLadder, CoordinatesRecoverGaugeFixedInstance) {
  const auto l = ladder_of(base_line_instances().line4.instance);
  const auto r = ladder_from_coordinates(l.K_fwd, l.K_bwd);
  EXPECT_EQ(r.lambda[0], 1.0);
  for (std::size_t k = 0; k < l.edge_count(); ++k) {
    EXPECT_NEAR(r.K_fwd[k], l.K_fwd[k], 1e-12 * l.K_fwd[k]);
    EXPECT_NEAR(r.K_bwd[k], l.K_bwd[k], 1e-12 * l.K_bwd[k]);
  }
  for (std::size_t i = 1; i < l.n; ++i)
    EXPECT_NEAR(r.lambda[i] / r.lambda[0], l.lambda[i] / l.lambda[0], 1e-12 * l.lambda[i] / l.lambda[0]);
  EXPECT_THROW(ladder_from_coordinates({1.0}, {-1.0}), ControlError);
}

TEST(BaseLines, CertificatesHold) {
  const auto bases = base_line_instances();
  for (const auto* ci : {&bases.line3, &bases.line4}) {
    EXPECT_EQ(ci->certificate.donor, 0u);
    EXPECT_EQ(ci->certificate.recipient, ci->instance.size() - 1);
    EXPECT_GT(ci->certificate.dU_donor, 0.0);
    EXPECT_GT(ci->certificate.dU_recipient, 0.0);
    EXPECT_NO_THROW(verify_certificate(*ci, 1e-8));
  }
  EXPECT_EQ(bases.line3.instance, ContestInstance({6, 6, 1}, {{0, 1, 2.0}, {1, 2, 10.0}}));
  EXPECT_TRUE(three_node_feasible({6, 6, 1, 2, 10}).feasible);
}

TEST(BaseLines, DirectionMatters) {
  const auto bases = base_line_instances();
  EXPECT_THROW(certify(bases.line3.instance, 2, 0), CertificateError);
  EXPECT_THROW(certify(bases.line4.instance, 3, 0), CertificateError);
}

TEST(ExtensionControls, DefaultsOnBases) {
  const auto l = ladder_of(base_line_instances().line3.instance);
  const auto c = make_extension_controls(l);
  EXPECT_EQ(c.eta1, 1.0 - 1.0 / 64.0);
  EXPECT_EQ(c.eta2, 0.5);
  EXPECT_GT(c.alpha2, 0.0);
  EXPECT_TRUE(std::isfinite(c.r_b));
}

TEST(ExtensionControls, AlphaTendsToOneAsEtaOneApproachesOne) {
  const auto l = ladder_of(base_line_instances().line4.instance);
  double prev = std::abs(make_extension_controls(l, 0.9).alpha2 - 1.0);
  for (double gap : {1e-2, 1e-4, 1e-6, 1e-9}) {
    const double dev = std::abs(make_extension_controls(l, 1.0 - gap).alpha2 - 1.0);
    EXPECT_LE(dev, prev);
    prev = dev;
  }
  EXPECT_LT(prev, 1e-8);
}

TEST(ExtensionControls, Invalid) {
  const auto l = ladder_of(base_line_instances().line3.instance);
  EXPECT_THROW(make_extension_controls(l, 1.0), ControlError);
  EXPECT_THROW(make_extension_controls(l, 0.5, 0.0), ControlError);
  EXPECT_THROW(make_extension_controls(l, 0.5, 0.5, 0.0), ControlError);
  // Recipient far cheaper than its neighbor: b_n < 0 and a small eta1 flip alpha2's sign.
  const auto cheap_end = make_ladder(CostProfile{1.0, 1.0, 0.01}, {1e-3, 1.0}, false);
  EXPECT_THROW(make_extension_controls(cheap_end, 0.01, 0.01), ControlError);
}

TEST(ExtendLine, ThreeToFive) {
  const auto base = ladder_of(base_line_instances().line3.instance);
  const auto five = extend_line(base, make_extension_controls(base, 0.99, 0.5));
  EXPECT_EQ(five.n, 5u);
  expect_consistent(five);
  EXPECT_EQ(five.lambda[0], base.lambda[0]);
  EXPECT_EQ(five.lambda[1], base.lambda[1]);
  EXPECT_EQ(five.lambda[4], base.lambda[2]);
  EXPECT_EQ(five.values[0], base.values[0]);
  const auto cert = certify(five.instance(), 0, 4);
  EXPECT_GT(cert.dU_donor, 0.0);
  EXPECT_GT(cert.dU_recipient, 0.0);
}

TEST(ExtendLine, DeterministicPerSeed) {
  const auto base = ladder_of(base_line_instances().line4.instance);
  const auto c = make_extension_controls(base);
  EXPECT_EQ(extend_line(base, c, 7).values, extend_line(base, c, 7).values);
}

TEST(ExtendLine, RejectsUncertifiedInput) {
  // Reversed 3-line base: the recipient end is now the donor of the base.
  const auto lam = ladder_of(base_line_instances().line3.instance).lambda;
  const LineLadder flipped = make_ladder(CostProfile{lam[2], lam[1], lam[0]}, {10.0, 2.0}, false);
  EXPECT_THROW(extend_line(flipped, make_extension_controls(flipped)), CertificateError);
}

TEST(CertifiedLine, InductionSoundness) {
  for (std::size_t n : {5u, 6u, 7u, 8u, 9u}) {
    const auto ci = certified_line(n);
    ASSERT_EQ(ci.instance.size(), n);
    EXPECT_NO_THROW(verify_certificate(ci)) << "n = " << n;
    expect_consistent(ladder_of(ci.instance));
    EXPECT_GT(benefit_reach(ci.instance, 0, n - 1), 0.0) << "n = " << n;
  }
}

TEST(BenefitReach, BaseAndLoneNeighbor) {
  const auto& line3 = base_line_instances().line3;
  // The mutual interval is (0, 2.3409) with B_0 = 6, so tau = 1.5 is the first probe inside.
  EXPECT_DOUBLE_EQ(benefit_reach(three_node_instance({6, 6, 1, 2, 10}), 0, 2), 0.25);
  EXPECT_GT(benefit_reach(line3.instance, 0, 2), 0.0);
  EXPECT_EQ(benefit_reach(ContestInstance({2, 2}, {{0, 1, 3.0}}), 0, 1), 0.0);
}

TEST(CloseCycle, ZeroValueReproducesLine) {
  const auto& line = base_line_instances().line4;
  const auto l = ladder_of(line.instance);
  const auto check = closure_check(l, 0.0);
  EXPECT_NEAR(check.ds, line.certificate.dU_donor, 1e-10);
  EXPECT_NEAR(check.dt, line.certificate.dU_recipient, 1e-10);
}

TEST(CloseCycle, RankTwoUpdateMatchesDirectSolve) {
  const auto l = ladder_of(base_line_instances().line3.instance);
  for (double v : {0.01, 0.5, 3.0, 40.0}) {
    const auto check = closure_check(l, v);
    std::vector<double> values = l.values;
    values.push_back(v);
    const auto cyc = make_ladder(l.lambda, values, true);
    const auto direct = transfer_derivative_at(cyc.instance(), cyc.lambda, 0, 2);
    EXPECT_NEAR(check.ds, direct.dU_a, 1e-10 * std::max(1.0, std::abs(direct.dU_a))) << v;
    EXPECT_NEAR(check.dt, direct.dU_b, 1e-10 * std::max(1.0, std::abs(direct.dU_b))) << v;
  }
}

TEST(CloseCycle, CycleSoundness) {
  for (std::size_t n = 3; n <= 8; ++n) {
    const auto cyc = close_cycle(certified_line(n));
    ASSERT_EQ(cyc.instance.edges().size(), n);
    EXPECT_TRUE(cyc.instance.has_edge(0, n - 1));
    EXPECT_NO_THROW(verify_certificate(cyc)) << "n = " << n;
    EXPECT_GT(benefit_reach(cyc.instance, 0, n - 1), 0.0) << "n = " << n;
  }
}

TEST(CloseCycle, CertificateGate) {
  CertifiedInstance bogus = base_line_instances().line3;
  bogus.certificate.dU_donor = 5.0;
  EXPECT_THROW(close_cycle(bogus), CertificateError);
  // Budgets of the reversed base do not admit the 0 -> 2 transfer.
  const ContestInstance reversed({1, 6, 6}, {{0, 1, 10.0}, {1, 2, 2.0}});
  EXPECT_THROW(close_cycle({reversed, {0, 2, 0.1, 0.1, 0.0}}), CertificateError);
  EXPECT_THROW(ContestInstance({-6, -6, -1}, {{0, 1, 2.0}, {1, 2, 10.0}}), ValidationError);
}

TEST(ConstructForGraph, ThreeLineIsBase) {
  const auto ci = construct_for_graph(Topology(3, {{0, 1}, {1, 2}}), 0, 2);
  const auto& base = base_line_instances().line3.instance;
  ASSERT_EQ(ci.instance.edges().size(), 2u);
  for (std::size_t k = 0; k < 2; ++k) EXPECT_EQ(ci.instance.edges()[k], base.edges()[k]);
  for (Player i = 0; i < 3; ++i) EXPECT_NEAR(ci.instance.budget(i), base.budget(i), 1e-10);
  EXPECT_EQ(ci.certificate.epsilon, 0.0);
}

TEST(ConstructForGraph, PathRelabeled) {
  // Path 2 - 0 - 1 with the donor in the middle of the index range.
  const auto ci = construct_for_graph(Topology(3, {{0, 1}, {0, 2}}), 2, 1);
  EXPECT_EQ(ci.certificate.donor, 2u);
  EXPECT_EQ(ci.certificate.recipient, 1u);
  EXPECT_NO_THROW(verify_certificate(ci));
}

TEST(ConstructForGraph, TriangleAdjacentPair) {
  const auto ci = construct_for_graph(Topology(3, {{0, 1}, {1, 2}, {0, 2}}), 0, 2);
  EXPECT_TRUE(ci.instance.has_edge(0, 2));
  EXPECT_NO_THROW(verify_certificate(ci));
}

TEST(ConstructForGraph, StarLeafToCenterRefused) {
  const Topology star(5, {{0, 1}, {0, 2}, {0, 3}, {0, 4}});
  EXPECT_THROW(construct_for_graph(star, 1, 0), HypothesisError);
  EXPECT_NO_THROW(verify_certificate(construct_for_graph(star, 1, 2)));
}

TEST(ConstructForGraph, OffPathEdgesGetEpsilon) {
  const Topology g(6, {{0, 1}, {1, 2}, {2, 3}, {3, 4}, {4, 5}, {1, 5}, {2, 4}});
  const auto ci = construct_for_graph(g, 0, 3);
  EXPECT_GT(ci.certificate.epsilon, 0.0);
  EXPECT_EQ(ci.instance.value(4, 5), ci.certificate.epsilon);
  EXPECT_NO_THROW(verify_certificate(ci));
}

TEST(ConstructForGraph, RefusesExactlyWithoutAlternativePath) {
  testing::Rng rng(67);
  for (int trial = 0; trial < 25; ++trial) {
    const std::size_t n = testing::uniform_index(rng, 3, 6);
    const Topology g(n, testing::random_connected_pairs(rng, n, 0.25));
    for (Player a = 0; a < n; ++a) {
      for (Player b = 0; b < n; ++b) {
        if (a == b) continue;
        const bool lone = g.adjacent(a).size() == 1 && g.adjacent(a)[0] == b;
        if (connectivity_excluding(g, a, b)) {
          EXPECT_FALSE(lone);
          const auto ci = construct_for_graph(g, a, b);
          EXPECT_GT(ci.certificate.dU_donor, 0.0);
          EXPECT_GT(ci.certificate.dU_recipient, 0.0);
        } else {
          EXPECT_THROW(construct_for_graph(g, a, b), HypothesisError);
        }
      }
    }
  }
}

}  // namespace
}  // namespace netcontest
