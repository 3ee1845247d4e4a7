#include "ctb/kernels.hpp"

#include <exception>
#include <mutex>

#include <omp.h>

#include "ctb/errors.hpp"

namespace ctb::kernels {

void for_each_index_serial(std::size_t n, const std::function<void(std::size_t)>& body) {
  for (std::size_t i = 0; i < n; ++i) body(i);
}

void for_each_index_parallel(std::size_t n, const std::function<void(std::size_t)>& body) {
  std::exception_ptr failure;
  std::mutex guard;
  const long count = static_cast<long>(n);
#pragma omp parallel for schedule(static)
  for (long i = 0; i < count; ++i) {
    try {
      body(static_cast<std::size_t>(i));
    } catch (...) {
      std::lock_guard lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
}

void for_each_index(std::size_t n, const std::function<void(std::size_t)>& body, Execution exec) {
  if (exec == Execution::parallel) for_each_index_parallel(n, body);
  else for_each_index_serial(n, body);
}

std::vector<double> tabulate(std::size_t n, const std::function<double(std::size_t)>& term, Execution exec) {
  std::vector<double> values(n);
  for_each_index(n, [&](std::size_t i) { values[i] = term(i); }, exec);
  return values;
}

double ordered_weighted_mean(std::span<const double> f, std::span<const double> w) {
  if (f.empty()) throw DomainError("mean of an empty sample");
  if (!w.empty() && w.size() != f.size()) throw DomainError("weights and values differ in length");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < f.size(); ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    num += wi * f[i];
    den += wi;
  }
  return num / den;
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace ctb::kernels
