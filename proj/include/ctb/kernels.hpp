#pragma once

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

// Data-parallel loops. Each has a serial reference and an OpenMP version that
// produce bit-identical results: work items are independent and any
// reduction is done afterwards, serially, in index order.

namespace ctb::kernels {

enum class Execution { serial, parallel };

// body(i) for i in [0, n). The first exception thrown by any item is
// rethrown after the loop.
void for_each_index_serial(std::size_t n, const std::function<void(std::size_t)>& body);
void for_each_index_parallel(std::size_t n, const std::function<void(std::size_t)>& body);
void for_each_index(std::size_t n, const std::function<void(std::size_t)>& body, Execution exec);

// values[i] = term(i).
std::vector<double> tabulate(std::size_t n, const std::function<double(std::size_t)>& term, Execution exec);

// sum(w[i] f[i]) / sum(w[i]) accumulated in index order; unit weights when w is empty.
double ordered_weighted_mean(std::span<const double> f, std::span<const double> w = {});

int max_threads();

}  // namespace ctb::kernels
