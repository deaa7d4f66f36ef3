#include "pairforge/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#ifdef PAIRFORGE_OPENMP
#include <omp.h>
#endif

namespace pairforge::kernels {

int parallel_threads() {
#ifdef PAIRFORGE_OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

bool openmp_enabled() {
#ifdef PAIRFORGE_OPENMP
  return true;
#else
  return false;
#endif
}

double cosine(std::span<const double> a, std::span<const double> b) {
  double dot = 0.0, na = 0.0, nb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    dot += a[i] * b[i];
    na += a[i] * a[i];
    nb += b[i] * b[i];
  }
  if (na == 0.0 || nb == 0.0) return 0.0;
  return dot / (std::sqrt(na) * std::sqrt(nb));
}

std::vector<double> cosine_scan_serial(std::span<const double> query, std::span<const double> rows, std::size_t dim) {
  const std::size_t count = dim ? rows.size() / dim : 0;
  std::vector<double> out(count);
  for (std::size_t r = 0; r < count; ++r) out[r] = cosine(query, rows.subspan(r * dim, dim));
  return out;
}

std::vector<double> cosine_scan_parallel(std::span<const double> query, std::span<const double> rows,
                                         std::size_t dim) {
  const std::size_t count = dim ? rows.size() / dim : 0;
  std::vector<double> out(count);
  const auto n = static_cast<std::ptrdiff_t>(count);
#pragma omp parallel for schedule(static) if (n > 256)
  for (std::ptrdiff_t r = 0; r < n; ++r) {
    const auto row = static_cast<std::size_t>(r);
    out[row] = cosine(query, rows.subspan(row * dim, dim));
  }
  return out;
}

std::vector<std::size_t> top_n(std::span<const double> scores, std::size_t n) {
  std::vector<std::size_t> idx(scores.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  n = std::min(n, idx.size());
  std::partial_sort(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(n), idx.end(),
                    [&](std::size_t a, std::size_t b) { return scores[a] > scores[b] || (scores[a] == scores[b] && a < b); });
  idx.resize(n);
  return idx;
}

double ifd(std::span<const double> conditioned, std::span<const double> unconditioned) {
  double cond = 0.0, uncond = 0.0;
  for (double x : conditioned) cond += x;
  for (double x : unconditioned) uncond += x;
  cond /= static_cast<double>(conditioned.size());
  uncond /= static_cast<double>(unconditioned.size());
  return std::exp(uncond - cond);
}

std::vector<double> ifd_batch_serial(std::span<const LogprobPair> items) {
  std::vector<double> out(items.size());
  for (std::size_t i = 0; i < items.size(); ++i) out[i] = ifd(items[i].conditioned, items[i].unconditioned);
  return out;
}

std::vector<double> ifd_batch_parallel(std::span<const LogprobPair> items) {
  std::vector<double> out(items.size());
  const auto n = static_cast<std::ptrdiff_t>(items.size());
#pragma omp parallel for schedule(static) if (n > 64)
  for (std::ptrdiff_t i = 0; i < n; ++i) {
    const auto& item = items[static_cast<std::size_t>(i)];
    out[static_cast<std::size_t>(i)] = ifd(item.conditioned, item.unconditioned);
  }
  return out;
}

}  // namespace pairforge::kernels
