#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "pairforge/error.hpp"
#include "pairforge/memory_bank.hpp"

using namespace pairforge;

namespace {

MemoryEntry entry(std::vector<double> v, AgentPair p, double score, std::string id = "s") {
  return {std::move(v), p, score, std::move(id), 0};
}

}  // namespace

TEST_CASE("admission respects the threshold") {
  MemoryBank bank(2, 10, 0.5);
  CHECK(bank.admit(entry({1, 0}, {0, 1}, 0.5)));
  CHECK_FALSE(bank.admit(entry({1, 0}, {0, 1}, 0.49)));
  CHECK(bank.size() == 1);
  CHECK(bank.stats() == BankStats{1, 1, 0});
  CHECK_THROWS_AS(bank.admit(entry({1, 0, 0}, {0, 1}, 0.9)), IntegrityError);
}

TEST_CASE("threshold 0 admits everything, threshold 1 only perfect scores") {
  MemoryBank all(1, 5, 0.0), top(1, 5, 1.0);
  CHECK(all.admit(entry({1}, {0, 1}, 0.0)));
  CHECK_FALSE(top.admit(entry({1}, {0, 1}, 0.999)));
  CHECK(top.admit(entry({1}, {0, 1}, 1.0)));
}

TEST_CASE("FIFO eviction at capacity") {
  MemoryBank bank(1, 3, 0.0);
  for (int i = 0; i < 5; ++i) bank.admit(entry({1.0 + i}, {0, i}, 1.0, "s" + std::to_string(i)));
  CHECK(bank.size() == 3);
  CHECK(bank.stats().evicted == 2);
  auto es = bank.entries();
  CHECK(es[0].seed_id == "s2");
  CHECK(es[2].seed_id == "s4");
  CHECK(es[0].embedding == std::vector<double>{3.0});
}

TEST_CASE("query_pool: ranks by cosine, distinct pairs, older first on ties") {
  MemoryBank bank(2, 10, 0.0);
  bank.admit(entry({1, 0}, {0, 1}, 1.0));
  bank.admit(entry({0, 1}, {0, 2}, 1.0));
  bank.admit(entry({1, 0}, {0, 3}, 1.0));  // same direction as the first
  bank.admit(entry({1, 1}, {0, 1}, 1.0));
  std::vector<double> q{1, 0};
  CHECK(bank.query_entries(q, 2) == std::vector<std::size_t>{0, 2});
  CHECK(bank.query_pool(q, 2) == std::vector<AgentPair>{{0, 1}, {0, 3}});
  // entry 3 repeats pair (0,1), so n = 3 yields only two distinct pairs
  CHECK(bank.query_pool(q, 3) == std::vector<AgentPair>{{0, 1}, {0, 3}});
  CHECK(bank.query_pool(q, 10).size() == 3);
  CHECK_THROWS_AS(bank.query_pool(q, 0), PreconditionError);
  CHECK_THROWS_AS(bank.query_pool(std::vector<double>{1, 0, 0}, 1), IntegrityError);
}

TEST_CASE("empty bank gives an empty pool") {
  MemoryBank bank(2, 10, 0.0);
  CHECK(bank.query_pool(std::vector<double>{1, 0}, 5).empty());
}

TEST_CASE("zero query vector scores 0 against everything") {
  MemoryBank bank(2, 10, 0.0);
  bank.admit(entry({1, 0}, {0, 1}, 1.0));
  CHECK(bank.similarities(std::vector<double>{0, 0}) == std::vector<double>{0.0});
}

TEST_CASE("query_entries equals the brute-force oracle after wraparound") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> d;
  MemoryBank bank(8, 50, 0.3);
  std::vector<std::vector<double>> kept;
  for (int i = 0; i < 180; ++i) {
    std::vector<double> v(8);
    for (double& x : v) x = d(rng);
    double score = (rng() % 100) / 100.0;
    if (bank.admit(entry(v, {0, i % 7}, score))) {
      kept.push_back(v);
      if (kept.size() > 50) kept.erase(kept.begin());
    }
  }
  CHECK(bank.size() == kept.size());
  for (int t = 0; t < 50; ++t) {
    std::vector<double> q(8);
    for (double& x : q) x = d(rng);
    CHECK(bank.query_entries(q, 5) == oracle::top_n_cosine(q, kept, 5));
    CHECK(bank.similarities(q, true) == bank.similarities(q, false));
  }
}

TEST_CASE("json round trip keeps entries, order and stats") {
  MemoryBank bank(2, 3, 0.2);
  for (int i = 0; i < 5; ++i) bank.admit(entry({1.0, 0.5 * i}, {1, i}, 0.1 + 0.2 * i, "s" + std::to_string(i)));
  auto back = MemoryBank::from_json(bank.to_json());
  CHECK(back == bank);
  CHECK(back.stats() == bank.stats());
  CHECK(back.per_pair_counts() == bank.per_pair_counts());
  std::vector<double> q{0.3, 1.0};
  CHECK(back.query_pool(q, 3) == bank.query_pool(q, 3));
}

TEST_CASE("constructor preconditions") {
  CHECK_THROWS_AS(MemoryBank(0, 1, 0.5), ConfigError);
  CHECK_THROWS_AS(MemoryBank(1, 0, 0.5), ConfigError);
}
