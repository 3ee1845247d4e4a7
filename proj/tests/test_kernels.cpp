#include <doctest.h>

#include <atomic>
#include <cmath>
#include <stdexcept>

#include "ctb/kernels.hpp"

using namespace ctb::kernels;

TEST_CASE("serial and parallel tabulation are bit-identical") {
  const auto term = [](std::size_t i) { return std::sin(0.001 * double(i)) * std::exp(-1e-5 * double(i)); };
  const auto s = tabulate(100000, term, Execution::serial);
  const auto p = tabulate(100000, term, Execution::parallel);
  CHECK(s == p);
  CHECK(ordered_weighted_mean(s) == ordered_weighted_mean(p));
}

TEST_CASE("every index is visited exactly once") {
  std::vector<std::atomic<int>> hits(5000);
  for_each_index(hits.size(), [&](std::size_t i) { hits[i]++; }, Execution::parallel);
  for (auto& h : hits) CHECK(h.load() == 1);
  CHECK(max_threads() >= 1);
}

TEST_CASE("exceptions are rethrown after the loop") {
  for (auto exec : {Execution::serial, Execution::parallel}) {
    CHECK_THROWS_AS(for_each_index(
                        1000,
                        [](std::size_t i) {
                          if (i == 613) throw std::domain_error("bad item");
                        },
                        exec),
                    std::domain_error);
  }
  CHECK_THROWS_AS(tabulate(10, [](std::size_t) -> double { throw std::runtime_error("x"); }, Execution::parallel),
                  std::runtime_error);
}

TEST_CASE("ordered weighted mean") {
  const std::vector<double> f{1.0, 2.0, 3.0, 4.0};
  const std::vector<double> w{1.0, 0.0, 0.0, 3.0};
  CHECK(ordered_weighted_mean(f) == 2.5);
  CHECK(ordered_weighted_mean(f, w) == 3.25);
}
