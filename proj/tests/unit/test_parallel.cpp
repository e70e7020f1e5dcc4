#include <doctest.h>

#include "knnxkde/parallel.hpp"
#include "knnxkde/random.hpp"

#include <atomic>
#include <cstdlib>
#include <stdexcept>
#include <vector>

using namespace knnxkde;

TEST_SUITE("parallel") {

TEST_CASE("every index runs exactly once") {
  for (std::size_t threads : {1, 2, 7}) {
    std::vector<std::atomic<int>> hits(1000);
    parallel_for(hits.size(), threads, [&](std::size_t i) { hits[i].fetch_add(1); });
    for (const auto& h : hits) CHECK(h.load() == 1);
  }
  parallel_for(0, 4, [](std::size_t) { FAIL("no work expected"); });
}

TEST_CASE("exceptions reach the caller") {
  CHECK_THROWS_AS(parallel_for(50, 4,
                               [](std::size_t i) {
                                 if (i == 17) throw std::runtime_error("boom");
                               }),
                  std::runtime_error);
}

TEST_CASE("thread count from the environment") {
  setenv("IMPUTE_THREADS", "3", 1);
  CHECK(default_thread_count() == 3);
  setenv("IMPUTE_THREADS", "zero", 1);
  CHECK(default_thread_count() >= 1);
  unsetenv("IMPUTE_THREADS");
  CHECK(default_thread_count() >= 1);
}

TEST_CASE("seed derivation") {
  CHECK(derive_seed(1, {2, 3}) == derive_seed(1, {2, 3}));
  CHECK(derive_seed(1, {2, 3}) != derive_seed(1, {3, 2}));
  CHECK(derive_seed(1, {2}) != derive_seed(2, {2}));
  static_assert(hash_string("") == 0xcbf29ce484222325ULL);
  CHECK(hash_string("a") == 0xaf63dc4c8601ec8cULL);
}

} // TEST_SUITE
