#include <doctest.h>

#include "hetflow/cluster.hpp"
#include "hetflow/errors.hpp"

using namespace hetflow;

TEST_CASE("reference cluster shape") {
  ClusterSpec c = reference_cluster();
  REQUIRE(c.nodes.size() == 4);
  CHECK(c.total_cpus() == 128);
  CHECK(c.total_gpus() == 8);
  CHECK(c.homogeneous());
  for (const auto& n : c.nodes) {
    CHECK(n.cpu_cores == 32);
    CHECK(n.gpus == 2);
    CHECK(n.memory_gb == doctest::Approx(128.0));
  }
  CHECK_NOTHROW(validate(c, reference_caps()));
}

TEST_CASE("validation rejects bad configs") {
  ClusterSpec c = reference_cluster();
  ConcurrencyCaps caps = reference_caps();

  SUBCASE("more gpus than cores") {
    c.nodes[0].gpus = 64;
    CHECK_THROWS_AS(validate(c), ConfigError);
  }
  SUBCASE("caps below one") {
    caps.max_t1_per_node = 0;
    CHECK_THROWS_AS(validate(c, caps), ConfigError);
  }
  SUBCASE("more counting slots than gpus") {
    caps.max_t2_per_node = 3;
    CHECK_THROWS_AS(validate(c, caps), ConfigError);
  }
  SUBCASE("memory overcommit") {
    // 3*40 + 2*4 = 128 exactly fits; one more GB per tiling slot does not.
    caps.mem_per_t1_gb = 41.0;
    CHECK_THROWS_AS(validate(c, caps), ConfigError);
  }
  SUBCASE("duplicate node ids") {
    c.nodes[1].id = c.nodes[0].id;
    CHECK_THROWS_AS(validate(c), ConfigError);
  }
}

TEST_CASE("slot ledger") {
  ClusterSpec c = reference_cluster();
  SlotLedger ledger(c, reference_caps());
  for (int i = 0; i < 3; ++i)
    CHECK(ledger.try_acquire("node0", TaskKind::Tiling));
  CHECK_FALSE(ledger.try_acquire("node0", TaskKind::Tiling)); // cap 3 reached
  CHECK(ledger.busy("node0", TaskKind::Tiling) == 3);
  CHECK(ledger.try_acquire("node1", TaskKind::Tiling)); // other nodes unaffected
  ledger.release("node0", TaskKind::Tiling);
  CHECK(ledger.try_acquire("node0", TaskKind::Tiling));

  CHECK(ledger.try_acquire("node0", TaskKind::Counting));
  CHECK(ledger.try_acquire("node0", TaskKind::Counting));
  CHECK_FALSE(ledger.try_acquire("node0", TaskKind::Counting)); // cap 2

  CHECK_THROWS_AS(ledger.release("node2", TaskKind::Counting), std::logic_error);
  CHECK_THROWS_AS(ledger.try_acquire("ghost", TaskKind::Tiling), InputError);
}

TEST_CASE("theoretical max utilization") {
  auto [cpu, gpu] = theoretical_max_utilization(reference_cluster(), reference_caps());
  CHECK(cpu == doctest::Approx(3.0 / 32.0).epsilon(1e-12));
  CHECK(gpu == doctest::Approx(1.0).epsilon(1e-12));

  ClusterSpec hetero = reference_cluster();
  hetero.nodes[0].cpu_cores = 16;
  CHECK_THROWS_AS(theoretical_max_utilization(hetero, reference_caps()), ConfigError);
}

TEST_CASE("cluster json round trip") {
  ClusterSpec c = reference_cluster();
  ConcurrencyCaps caps = reference_caps();
  auto [c2, caps2] = cluster_from_json(cluster_to_json(c, caps));
  CHECK(c2.fingerprint() == c.fingerprint());
  CHECK(caps2.max_t1_per_node == caps.max_t1_per_node);
  CHECK(caps2.mem_per_t2_gb == doctest::Approx(caps.mem_per_t2_gb));

  CHECK_THROWS_AS(cluster_from_json("not json"), InputError);
  CHECK_THROWS_AS(cluster_from_json(R"({"nodes":[]})"), ConfigError);
}

TEST_CASE("fingerprint distinguishes clusters") {
  ClusterSpec a = reference_cluster();
  ClusterSpec b = reference_cluster();
  b.nodes[2].gpus = 1;
  CHECK(a.fingerprint() != b.fingerprint());
  CHECK(a.fingerprint() == reference_cluster().fingerprint());
}
