#pragma once

// Data-parallel inner loops. Each kernel has a serial reference and an
// OpenMP version; the two must agree bit for bit (every output element is
// computed independently, no reductions cross elements). Without OpenMP the
// parallel versions run serially.

#include <cstddef>
#include <span>
#include <vector>

namespace pairforge::kernels {

/// Number of threads the parallel kernels will use.
int parallel_threads();
bool openmp_enabled();

/// Cosine similarity of two equal-length vectors; 0 when either has zero norm.
double cosine(std::span<const double> a, std::span<const double> b);

/// Cosine similarity of `query` against each row of a row-major matrix with
/// `dim` columns.
std::vector<double> cosine_scan_serial(std::span<const double> query, std::span<const double> rows, std::size_t dim);
std::vector<double> cosine_scan_parallel(std::span<const double> query, std::span<const double> rows, std::size_t dim);

/// Indices of the n largest scores, best first. Equal scores keep index order.
std::vector<std::size_t> top_n(std::span<const double> scores, std::size_t n);

/// Instruction-following difficulty of one response under one scorer:
/// exp(mean(unconditioned) - mean(conditioned)), i.e. the ratio of the
/// conditioned to the unconditioned perplexity over the same tokens.
/// Requires equal, non-zero lengths (checked by callers).
double ifd(std::span<const double> conditioned, std::span<const double> unconditioned);

struct LogprobPair {
  std::span<const double> conditioned;
  std::span<const double> unconditioned;
};

std::vector<double> ifd_batch_serial(std::span<const LogprobPair> items);
std::vector<double> ifd_batch_parallel(std::span<const LogprobPair> items);

}  // namespace pairforge::kernels
