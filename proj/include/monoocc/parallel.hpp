#pragma once

#include <cstddef>
#include <vector>

namespace monoocc::parallel {

/// Fixed reduction block; partial sums are combined in block order so the
/// result does not depend on the thread count.
inline constexpr std::size_t kReduceBlock = 4096;

/// Sum of term(i) for i in [0, n), blocked for bitwise-reproducible results.
template <typename Term>
double blocked_sum(std::size_t n, Term term) {
  const std::size_t blocks = (n + kReduceBlock - 1) / kReduceBlock;
  std::vector<double> partial(blocks, 0.0);
  const auto nb = static_cast<std::ptrdiff_t>(blocks);
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t b = 0; b < nb; ++b) {
    const std::size_t begin = static_cast<std::size_t>(b) * kReduceBlock;
    const std::size_t end = begin + kReduceBlock < n ? begin + kReduceBlock : n;
    double s = 0.0;
    for (std::size_t i = begin; i < end; ++i) s += term(i);
    partial[static_cast<std::size_t>(b)] = s;
  }
  double total = 0.0;
  for (double s : partial) total += s;
  return total;
}

/// Integer count of pred(i) over [0, n).
template <typename Pred>
std::size_t count_if(std::size_t n, Pred pred) {
  std::size_t total = 0;
  const auto ni = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(static) reduction(+ : total)
  for (std::ptrdiff_t i = 0; i < ni; ++i) total += pred(static_cast<std::size_t>(i)) ? 1 : 0;
  return total;
}

}  // namespace monoocc::parallel
