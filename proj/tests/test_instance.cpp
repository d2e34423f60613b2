#include <gtest/gtest.h>

#include <sstream>

#include "netcontest/instance.hpp"
#include "netcontest/instance_io.hpp"
#include "support/generators.hpp"

namespace netcontest {
namespace {

ContestInstance line3() { return ContestInstance({6, 6, 1}, {{0, 1, 2.0}, {1, 2, 10.0}}); }

ContestInstance cycle(std::size_t n) {
  std::vector<Edge> edges;
  for (Player i = 0; i < n; ++i) edges.push_back({i, (i + 1) % n, 1.0});
  return ContestInstance(std::vector<double>(n, 1.0), edges);
}

TEST(LoadInstance, ThreeLine) {
  const auto inst = parse_instance(R"({"budgets":[6,6,1],"edges":[[0,1,2.0],[1,2,10.0]]})");
  EXPECT_EQ(inst.size(), 3u);
  EXPECT_DOUBLE_EQ(inst.value(0, 1), 2.0);
  EXPECT_DOUBLE_EQ(inst.value(2, 1), 10.0);
  EXPECT_DOUBLE_EQ(inst.value(0, 2), 0.0);
  EXPECT_EQ(inst, line3());
}

TEST(LoadInstance, MinimalTwoPlayer) {
  const auto inst = parse_instance(R"({"budgets":[1,1],"edges":[[0,1,4.0]]})");
  EXPECT_EQ(inst.size(), 2u);
  EXPECT_EQ(inst.edges().size(), 1u);
}

TEST(LoadInstance, NormalizesEdgeOrder) {
  const auto inst = parse_instance(R"({"budgets":[1,1,1],"edges":[[2,1,3.0],[1,0,4.0]]})");
  ASSERT_EQ(inst.edges().size(), 2u);
  EXPECT_EQ(inst.edges()[0], (Edge{0, 1, 4.0}));
  EXPECT_EQ(inst.edges()[1], (Edge{1, 2, 3.0}));
}

TEST(LoadInstance, DuplicateAfterNormalization) {
  try {
    parse_instance(R"({"budgets":[1,1],"edges":[[0,1,4.0],[1,0,3.0]]})");
    FAIL() << "expected ValidationError";
  } catch (const ValidationError& e) {
    EXPECT_EQ(e.field(), "edges[1]");
    EXPECT_NE(std::string(e.what()).find("duplicate"), std::string::npos);
  }
}

struct BadCase {
  const char* json;
  const char* field;
};

TEST(LoadInstance, ValidationErrorsNameTheField) {
  const BadCase cases[] = {
      {R"({"budgets":[1,0],"edges":[[0,1,1]]})", "budgets[1]"},
      {R"({"budgets":[1,1],"edges":[[0,1,-2]]})", "edges[0]"},
      {R"({"budgets":[1,1],"edges":[[0,0,1]]})", "edges[0]"},
      {R"({"budgets":[1,1],"edges":[[0,2,1]]})", "edges[0]"},
      {R"({"budgets":[1,1,1],"edges":[[0,1,1]]})", "players[2]"},
      {R"({"budgets":[1],"edges":[]})", "n"},
      {R"({"edges":[[0,1,1]]})", "budgets"},
      {R"({"budgets":[1,1],"edges":[[0,1]]})", "edges[0]"},
      {R"({"budgets":[1,"x"],"edges":[[0,1,1]]})", "budgets[1]"},
      {R"({"budgets":[1,1],"edges":[[0,1,1]],"donation_arcs":[[0,0]]})", "donation_arcs[0]"},
  };
  for (const auto& c : cases) {
    try {
      parse_instance(c.json);
      ADD_FAILURE() << "accepted " << c.json;
    } catch (const ValidationError& e) {
      EXPECT_EQ(e.field(), c.field) << c.json;
    }
  }
}

TEST(LoadInstance, MalformedJsonIsParseError) {
  EXPECT_THROW(parse_instance(R"({"budgets":[1,1],)"), ParseError);
  EXPECT_THROW(parse_instance(""), ParseError);
}

TEST(LoadInstance, DonationArcsAndCertificate) {
  std::istringstream in(R"({"budgets":[6,6,1],"edges":[[0,1,2],[1,2,10]],
    "donation_arcs":[[0,2]],
    "certificate":{"donor":0,"recipient":2,"dU_donor":0.19,"dU_recipient":1.12,"epsilon":0}})");
  const auto doc = load_instance_document(in);
  EXPECT_EQ(doc.instance.donations().arcs().size(), 1u);
  EXPECT_EQ(doc.instance.donations().options(0), (std::vector<Player>{0, 2}));
  EXPECT_EQ(doc.instance.donations().options(1), (std::vector<Player>{1}));
  ASSERT_TRUE(doc.certificate.has_value());
  EXPECT_EQ(doc.certificate->recipient, 2u);
  EXPECT_DOUBLE_EQ(doc.certificate->dU_recipient, 1.12);
}

TEST(DonationGraph, UndirectedEdgeExpandsToTwoArcs) {
  const auto g = DonationGraph::undirected({{0, 3}});
  EXPECT_EQ(g.arcs().size(), 2u);
  EXPECT_EQ(g.options(3), (std::vector<Player>{0, 3}));
}

TEST(SaveInstance, RoundTripRandom) {
  testing::Rng rng(11);
  for (int trial = 0; trial < 50; ++trial) {
    const auto inst = testing::random_connected_instance(rng, 2, 12);
    std::ostringstream out;
    save_instance(out, inst);
    EXPECT_EQ(parse_instance(out.str()), inst);
  }
}

TEST(SaveInstance, EdgesSortedAndCertificateKept) {
  const auto inst = ContestInstance({1, 1, 1}, {{2, 1, 3.0}, {1, 0, 4.0}});
  const Certificate cert{0, 2, 0.5, 0.25, 1e-3};
  std::ostringstream out;
  save_instance(out, inst, cert);
  const auto json = Json::parse(out.str());
  EXPECT_EQ(json["edges"][0][0], 0);
  EXPECT_EQ(json["edges"][1][1], 2);
  std::istringstream in(out.str());
  const auto doc = load_instance_document(in);
  EXPECT_EQ(doc.instance, inst);
  EXPECT_DOUBLE_EQ(doc.certificate->epsilon, 1e-3);
}

TEST(InstanceModel, EdgeSymmetryAndNeighborConsistency) {
  testing::Rng rng(5);
  for (int trial = 0; trial < 30; ++trial) {
    const auto inst = testing::random_connected_instance(rng, 2, 12);
    for (const Edge& e : inst.edges()) {
      EXPECT_LT(e.i, e.j);
      EXPECT_EQ(inst.value(e.i, e.j), inst.value(e.j, e.i));
    }
    for (Player i = 0; i < inst.size(); ++i) {
      for (const Neighbor& nb : inst.neighbors(i)) {
        EXPECT_TRUE(inst.has_edge(nb.player, i));
        EXPECT_GT(inst.value(nb.player, i), 0.0);
      }
    }
  }
}

TEST(ConnectivityExcluding, Examples) {
  EXPECT_TRUE(connectivity_excluding(line3(), 0, 2));
  EXPECT_FALSE(connectivity_excluding(ContestInstance({1, 1}, {{0, 1, 1.0}}), 0, 1));
  EXPECT_TRUE(connectivity_excluding(cycle(3), 0, 1));
  EXPECT_FALSE(connectivity_excluding(line3(), 0, 1));
}

TEST(ConnectivityExcluding, BadIndices) {
  EXPECT_THROW(connectivity_excluding(line3(), 0, 3), IndexError);
  EXPECT_THROW(connectivity_excluding(line3(), 1, 1), PreconditionError);
}

TEST(PathBetween, Examples) {
  EXPECT_EQ(path_between(line3(), 0, 2), (std::vector<Player>{0, 1, 2}));
  EXPECT_EQ(path_between(cycle(4), 0, 2), (std::vector<Player>{0, 1, 2}));
  EXPECT_FALSE(path_between(ContestInstance({1, 1}, {{0, 1, 1.0}}), 0, 1).has_value());
  EXPECT_EQ(path_between(cycle(5), 0, 1), (std::vector<Player>{0, 4, 3, 2, 1}));
}

TEST(LoadTopology, PairsAndOptionalValues) {
  std::istringstream in(R"({"edges":[[0,1],[1,2,5.0],[2,0]]})");
  const Topology g = load_topology(in);
  EXPECT_EQ(g.size(), 3u);
  EXPECT_TRUE(g.has_edge(2, 0));
  std::istringstream bad(R"({"n":4,"edges":[[0,1],[1,2]]})");
  EXPECT_THROW(load_topology(bad), ValidationError);
}

}  // namespace
}  // namespace netcontest
